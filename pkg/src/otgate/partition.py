"""Distances between clusters and between whole partitions.

The similarity distance between two summaries is the optimal transport cost
divided by the cost of the independent coupling. It lies in [0, 1]; 0 means
the two partitions share clusters and weights.
"""

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateDistanceWarning, PairwiseDistanceError
from .transport import gaussian_w2, gaussian_w2_squared, solve_discrete_ot

SUBSAMPLE_CAP = 10000
SUBSAMPLE_SEED = 0


def symmetric_kl(a, b):
    """Mean of the two Kullback-Leibler divergences between the Gaussians."""
    d = a.dim
    if b.dim != d:
        raise ArgumentError("Gaussians have different dimensions")
    try:
        np.linalg.cholesky(a.cov)
        np.linalg.cholesky(b.cov)
    except np.linalg.LinAlgError as exc:
        raise ArgumentError("symmetric KL needs nonsingular covariances") from exc
    inv_a = np.linalg.inv(a.cov)
    inv_b = np.linalg.inv(b.cov)
    diff = a.mean - b.mean
    # log-determinants cancel in the symmetrized sum
    trace_terms = np.trace(inv_b @ a.cov) + np.trace(inv_a @ b.cov) - 2 * d
    quad = diff @ (inv_a + inv_b) @ diff
    return max(0.25 * float(trace_terms + quad), 0.0)


def empirical_cluster_distance(a, b, subsample_cap=SUBSAMPLE_CAP, seed=SUBSAMPLE_SEED):
    """Mean squared Euclidean distance over all pairs of events from ``a`` and ``b``.

    Sets larger than ``subsample_cap`` are replaced by a uniform subsample of
    that size drawn with a fixed seed. The double sum is evaluated through
    first and second moments, which is exact.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[0] == 0 or b.shape[0] == 0 or a.size == 0 or b.size == 0:
        raise ArgumentError("empirical cluster distance needs nonempty event sets")
    if a.shape[1] != b.shape[1]:
        raise ArgumentError("event sets have different dimensions")
    rng = np.random.default_rng(seed)
    if a.shape[0] > subsample_cap:
        a = a[np.sort(rng.choice(a.shape[0], subsample_cap, replace=False))]
    if b.shape[0] > subsample_cap:
        b = b[np.sort(rng.choice(b.shape[0], subsample_cap, replace=False))]
    mean_a, mean_b = a.mean(axis=0), b.mean(axis=0)
    sq_a = float(np.mean(np.einsum("ij,ij->i", a, a)))
    sq_b = float(np.mean(np.einsum("ij,ij->i", b, b)))
    return max(sq_a + sq_b - 2.0 * float(mean_a @ mean_b), 0.0)


def _empirical(a, b):
    if a.events is None or b.events is None:
        raise ArgumentError("the empirical metric needs clusters that keep their events")
    return empirical_cluster_distance(a.events, b.events)


CLUSTER_METRICS = {
    "gaussian_w2": gaussian_w2,
    "gaussian_w2_squared": gaussian_w2_squared,
    "symmetric_kl": symmetric_kl,
    "empirical": _empirical,
}


def resolve_cluster_metric(metric):
    if callable(metric):
        return metric
    try:
        return CLUSTER_METRICS[metric]
    except KeyError:
        raise ArgumentError(
            f"unknown cluster metric {metric!r}; choose from {sorted(CLUSTER_METRICS)}"
        ) from None


def cost_matrix(a, b, metric="gaussian_w2"):
    """Matrix of cluster distances between the clusters of two summaries."""
    if a.dim != b.dim:
        raise ArgumentError(f"summaries have dimensions {a.dim} and {b.dim}")
    fn = resolve_cluster_metric(metric)
    return np.array([[fn(x, y) for y in b.clusters] for x in a.clusters], dtype=float)


def d_ot(a, b, metric="gaussian_w2"):
    """Optimal transport cost between two partitions."""
    return solve_discrete_ot(a.weights, b.weights, cost_matrix(a, b, metric)).cost


def d_nt(a, b, metric="gaussian_w2"):
    """Cost of the independent (naive) coupling between two partitions."""
    return float(a.weights @ cost_matrix(a, b, metric) @ b.weights)


def similarity_distance(a, b, metric="gaussian_w2"):
    """Ratio of the optimal to the naive transport cost, in [0, 1].

    When the naive cost is zero (identical single clusters) the distance is
    0 by convention and a :class:`DegenerateDistanceWarning` is emitted.
    """
    costs = cost_matrix(a, b, metric)
    naive = float(a.weights @ costs @ b.weights)
    if naive <= 0.0:
        warnings.warn("naive transport cost is zero; similarity distance set to 0",
                      DegenerateDistanceWarning, stacklevel=2)
        return 0.0
    optimal = solve_discrete_ot(a.weights, b.weights, costs).cost
    return min(max(optimal / naive, 0.0), 1.0)


def mean_kl_partition_distance(a, b):
    """Unweighted mean of symmetric KL over all cluster pairs."""
    return float(cost_matrix(a, b, symmetric_kl).mean())


PARTITION_DISTANCES = {
    "similarity": similarity_distance,
    "d_ot": d_ot,
    "d_nt": d_nt,
}


@dataclass
class DistanceMatrix:
    """Symmetric, zero-diagonal matrix of distances between named items."""

    entries: np.ndarray
    ids: list

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        n = len(self.ids)
        if self.entries.shape != (n, n):
            raise ArgumentError(f"distance matrix shape {self.entries.shape} does not match {n} ids")
        if not np.allclose(self.entries, self.entries.T, rtol=0, atol=1e-12):
            raise ArgumentError("distance matrix is not symmetric")
        if np.any(np.diag(self.entries) != 0) or np.any(self.entries < 0):
            raise ArgumentError("distance matrix needs a zero diagonal and nonnegative entries")

    def __len__(self):
        return len(self.ids)


def thread_count():
    value = os.environ.get("OTGATE_THREADS", "")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def pairwise_distance_matrix(db, metric="similarity", cluster_metric="gaussian_w2", threads=None):
    """Distances between all pairs of summaries in ``db``.

    ``metric`` is ``"similarity"``, ``"d_ot"``, ``"d_nt"``, ``"mean_kl"`` or a
    callable on two summaries. Pairs may be evaluated on ``OTGATE_THREADS``
    worker threads; the result does not depend on the thread count.
    """
    db = list(db)
    if len(db) < 2:
        raise ArgumentError("pairwise distances need at least two summaries")
    if len({s.dim for s in db}) != 1:
        raise ArgumentError("summaries have different dimensions")
    if callable(metric):
        fn = metric
    elif metric == "mean_kl":
        fn = mean_kl_partition_distance
    elif metric in PARTITION_DISTANCES:
        base = PARTITION_DISTANCES[metric]

        def fn(x, y):
            return base(x, y, cluster_metric)
    else:
        raise ArgumentError(f"unknown partition distance {metric!r}")

    ids = [s.source_id or str(i) for i, s in enumerate(db)]
    pairs = [(i, j) for i in range(len(db)) for j in range(i + 1, len(db))]

    def one(pair):
        i, j = pair
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateDistanceWarning)
                return fn(db[i], db[j])
        except Exception as exc:
            raise PairwiseDistanceError(f"distance failed for pair ({ids[i]}, {ids[j]}): {exc}",
                                        (ids[i], ids[j])) from exc

    workers = threads or thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, pairs))
    else:
        values = [one(p) for p in pairs]

    out = np.zeros((len(db), len(db)))
    for (i, j), value in zip(pairs, values):
        out[i, j] = out[j, i] = value
    return DistanceMatrix(out, ids)
