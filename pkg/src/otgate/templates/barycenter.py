"""Wasserstein barycenters of Gaussian cluster models.

The barycenter of Gaussians is Gaussian. Its mean is the weighted mean of
the means; its covariance is the fixed point of

    S -> S^{-1/2} (sum_i l_i (S^{1/2} S_i S^{1/2})^{1/2})^2 S^{-1/2}

which is iterated from the covariance of the weighted mixture.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import ArgumentError, ConvergenceError
from ..summary import ClusterModel
from ..transport import gaussian_w2_squared, spd_inv_sqrt, spd_sqrt

MONOTONE_SLACK = 1e-12


@dataclass
class BarycenterOptions:
    """Settings for the fixed point and for k-barycenter clustering."""

    max_iter: int = 200
    tol: float = 1e-8
    trim_alpha: float = 0.0
    restarts: int = 10
    seed: int = 0
    debug: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ArgumentError("tol must be positive")
        if not 0.0 <= self.trim_alpha < 1.0:
            raise ArgumentError("trim_alpha must lie in [0, 1)")
        if self.max_iter < 1 or self.restarts < 1:
            raise ArgumentError("max_iter and restarts must be at least 1")


class BarycenterInfo(NamedTuple):
    iterations: int
    residual: float


def _check_lambdas(lambdas, n):
    if lambdas is None:
        return np.full(n, 1.0 / n)
    lam = np.asarray(lambdas, dtype=float)
    if lam.shape != (n,) or np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ArgumentError(f"expected {n} nonnegative barycentric weights")
    if abs(lam.sum() - 1.0) > 1e-9:
        raise ArgumentError(f"barycentric weights must sum to 1 (got {lam.sum():.12g})")
    return lam


def mixture_covariance(means, covs, lambdas):
    """Covariance of the weighted mixture of the Gaussians."""
    center = sum(l * m for l, m in zip(lambdas, means))
    cov = sum(l * (c + np.outer(m - center, m - center)) for l, m, c in zip(lambdas, means, covs))
    return 0.5 * (cov + cov.T)


def barycenter_covariance(covs, lambdas, tol=1e-8, max_iter=200, init=None):
    """Fixed-point covariance of the Gaussian barycenter.

    Returns ``(cov, iterations, residual)`` where the residual is the relative
    Frobenius change of the last step.
    """
    first = covs[0]
    if all(np.array_equal(c, first) for c in covs[1:]):
        return first.copy(), 0, 0.0
    cov = sum(l * c for l, c in zip(lambdas, covs)) if init is None else init
    residual = np.inf
    for it in range(1, max_iter + 1):
        root = spd_sqrt(cov)
        inv_root = spd_inv_sqrt(cov)
        mid = sum(l * spd_sqrt(root @ c @ root) for l, c in zip(lambdas, covs) if l > 0)
        new = inv_root @ mid @ mid @ inv_root
        new = 0.5 * (new + new.T)
        residual = float(np.linalg.norm(new - cov) / np.linalg.norm(cov))
        cov = new
        if residual < tol:
            return cov, it, residual
    raise ConvergenceError(
        f"barycenter fixed point did not reach tol={tol:g} in {max_iter} iterations",
        residual=residual, iterations=max_iter,
    )


def gaussian_barycenter(models, lambdas=None, opts=None, return_info=False):
    """2-Wasserstein barycenter of Gaussian cluster models.

    The output weight is ``sum(lambda_i * weight_i)``; the label is kept when
    every input carries the same one.
    """
    models = list(models)
    if not models:
        raise ArgumentError("barycenter of an empty set")
    opts = opts or BarycenterOptions()
    d = models[0].dim
    if any(m.dim != d for m in models):
        raise ArgumentError("models have different dimensions")
    lam = _check_lambdas(lambdas, len(models))

    means = [m.mean for m in models]
    covs = [m.cov for m in models]
    if all(np.array_equal(x, means[0]) for x in means[1:]):
        mean = means[0].copy()
    else:
        mean = sum(l * x for l, x in zip(lam, means))
    cov, iterations, residual = barycenter_covariance(
        covs, lam, opts.tol, opts.max_iter, init=mixture_covariance(means, covs, lam)
    )
    weight = float(sum(l * m.weight for l, m in zip(lam, models)))
    labels = {m.label for m in models}
    label = labels.pop() if len(labels) == 1 else None
    out = ClusterModel(mean, cov, min(weight, 1.0), label)
    if return_info:
        return out, BarycenterInfo(iterations, residual)
    return out


class KBarycenterResult(NamedTuple):
    barycenters: list
    assignment: np.ndarray
    objective: float
    history: list


def n_trimmed(n, alpha):
    """Number of items removed at trimming level ``alpha``: ceil(n * alpha)."""
    return int(math.ceil(n * alpha - 1e-12)) if alpha > 0 else 0


def _seed_centers(models, lam, k, rng):
    # k-means++ in squared W2, weighted by the barycentric weights
    n = len(models)
    chosen = [int(rng.choice(n, p=lam))]
    nearest = np.array([gaussian_w2_squared(m, models[chosen[0]]) for m in models])
    while len(chosen) < k:
        score = lam * nearest
        score[chosen] = 0.0
        if score.sum() > 0:
            pick = int(rng.choice(n, p=score / score.sum()))
        else:
            pick = min(set(range(n)) - set(chosen))
        chosen.append(pick)
        nearest = np.minimum(nearest, [gaussian_w2_squared(m, models[pick]) for m in models])
    return [models[i] for i in chosen]


def _kbarycenter_run(models, lam, k, n_trim, opts, rng):
    n = len(models)
    centers = _seed_centers(models, lam, k, rng)
    history = []
    previous = None
    for _ in range(opts.max_iter):
        dist = np.array([[gaussian_w2_squared(m, c) for c in centers] for m in models])
        forced = {}
        while True:
            assign = np.argmin(dist, axis=1)
            for i, j in forced.items():
                assign[i] = j
            cost = lam * dist[np.arange(n), assign]
            order = np.argsort(cost, kind="stable")
            kept = np.zeros(n, dtype=bool)
            kept[order[: n - n_trim]] = True
            counts = np.bincount(assign[kept], minlength=k)
            empty = np.flatnonzero(counts == 0)
            if empty.size == 0:
                break
            # move an unused center onto the worst retained model whose own
            # cluster keeps other members; no retained cost goes up
            candidates = np.flatnonzero(kept & (counts[assign] > 1))
            far = candidates[np.argmax(cost[candidates])]
            j = empty[0]
            centers[j] = models[far]
            dist[:, j] = [gaussian_w2_squared(m, models[far]) for m in models]
            forced[far] = j

        objective = float(cost[kept].sum())
        if history and objective > history[-1] * (1 + MONOTONE_SLACK) + MONOTONE_SLACK:
            if opts.debug:
                raise AssertionError(f"k-barycenter objective rose from {history[-1]} to {objective}")
        history.append(objective)
        state = (tuple(assign), tuple(kept))
        if state == previous:
            break
        previous = state
        for j in range(k):
            members = np.flatnonzero(kept & (assign == j))
            weights = lam[members]
            weights = weights / weights.sum() if weights.sum() > 0 else np.full(members.size, 1.0 / members.size)
            centers[j] = gaussian_barycenter([models[i] for i in members], weights, opts)
    labels = np.where(kept, assign, -1)
    return KBarycenterResult(centers, labels, history[-1], history)


def k_barycenter(models, k, opts=None, lambdas=None):
    """Trimmed k-barycenter clustering of Gaussian models.

    Lloyd-style alternation in squared W2: assign each model to its nearest
    barycenter, drop the ``ceil(n * trim_alpha)`` models with the largest
    weighted cost, and recompute each barycenter from its members. ``lambdas``
    defaults to the models' own weights, renormalized. The best of
    ``opts.restarts`` seeded runs is returned; trimmed models get ``-1``.
    """
    models = list(models)
    opts = opts or BarycenterOptions()
    n = len(models)
    if n == 0:
        raise ArgumentError("k-barycenter of an empty set")
    if lambdas is None:
        w = np.array([m.weight for m in models])
        lam = w / w.sum()
    else:
        lam = _check_lambdas(lambdas, n)
    n_trim = n_trimmed(n, opts.trim_alpha)
    if not 1 <= k <= n - n_trim:
        raise ArgumentError(f"k must be in [1, {n - n_trim}] for {n} models with {n_trim} trimmed")

    rng = np.random.default_rng(opts.seed)
    best = None
    for _ in range(opts.restarts):
        run = _kbarycenter_run(models, lam, k, n_trim, opts, rng)
        if best is None or run.objective < best.objective:
            best = run
    return best
