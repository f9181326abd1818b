"""Matching the clusters of a new partition to reference labels."""

from dataclasses import dataclass

import numpy as np

from .. import _backend
from ..errors import ArgumentError
from ..partition import cost_matrix
from ..transport import solve_discrete_ot

DUMMY_FACTOR = 10.0


def linear_assignment(cost):
    """Minimum-cost one-to-one matching of rows to columns.

    Rectangular matrices are padded to square with a dummy cost of ten times
    the largest real entry. Returns ``(rows, cols, total)`` for the real
    matched pairs only.
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.size == 0 or not np.all(np.isfinite(c)):
        raise ArgumentError("cost must be a nonempty finite matrix")
    m, n = c.shape
    size = max(m, n)
    top = float(np.abs(c).max())
    padded = np.full((size, size), DUMMY_FACTOR * top if top > 0 else 1.0)
    padded[:m, :n] = c
    match = _backend.hungarian(np.ascontiguousarray(padded))
    rows = np.array([i for i in range(m) if match[i] < n], dtype=int)
    cols = np.array([int(match[i]) for i in rows], dtype=int)
    return rows, cols, float(c[rows, cols].sum()) if rows.size else 0.0


@dataclass
class Matching:
    """Hungarian label map from the clusters of ``u`` to reference labels.

    ``labels[k]`` is the reference label of cluster ``k`` of ``u``, or
    ``"unmatched-<k+1>"`` when it was paired with a dummy.
    """

    pairs: list
    labels: list
    cost: float


def _ref_label(ref, j):
    label = ref.clusters[j].label
    return label if label is not None else str(j + 1)


def hungarian_relabel(u, ref, metric="gaussian_w2"):
    costs = cost_matrix(u, ref, metric)
    rows, cols, total = linear_assignment(costs)
    matched = dict(zip(rows.tolist(), cols.tolist()))
    pairs = [(k, matched.get(k)) for k in range(len(u))]
    labels = [_ref_label(ref, j) if j is not None else f"unmatched-{k + 1}" for k, j in pairs]
    return Matching(pairs, labels, total)


@dataclass
class FuzzyRelabelling:
    """Scores derived from the optimal plan between ``ref`` (rows) and ``u`` (columns).

    ``scores[k, l]`` is the share of cluster ``l`` of ``u`` that comes from
    reference cluster ``k``; ``weighted_scores`` multiplies it by the share
    of cluster ``k`` that goes to ``l``, which damps small pieces of big
    clusters.
    """

    scores: np.ndarray
    weighted_scores: np.ndarray
    plan: np.ndarray
    ref_labels: list

    def hard_labels(self):
        """Reference label per cluster of ``u`` by the largest weighted score."""
        best = np.argmax(self.weighted_scores, axis=0)
        return [self.ref_labels[k] for k in best]


def fuzzy_relabel(u, ref, metric="gaussian_w2"):
    p_ref, p_u = ref.weights, u.weights
    p_ref, p_u = p_ref / p_ref.sum(), p_u / p_u.sum()
    plan = solve_discrete_ot(p_ref, p_u, cost_matrix(ref, u, metric)).plan
    scores = np.clip(plan / plan.sum(axis=0, keepdims=True), 0.0, 1.0)
    weighted = scores * plan / p_ref[:, None]
    return FuzzyRelabelling(scores, np.minimum(weighted, scores), plan,
                            [_ref_label(ref, k) for k in range(len(ref))])
