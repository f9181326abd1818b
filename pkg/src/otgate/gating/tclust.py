"""Trimmed Gaussian clustering with an eigenvalue-ratio restriction.

Concentration steps maximize the trimmed classification likelihood

    sum over retained x of  max_j log(p_j phi(x; m_j, S_j))

with ``ceil(n * alpha)`` events left out and every covariance eigenvalue
forced into ``[t, c * t]`` for a common threshold ``t``.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError
from ..summary import ClusterModel
from ..templates.barycenter import n_trimmed

LOG_2PI = np.log(2 * np.pi)


@dataclass
class TclustParams:
    k: int = 2
    alpha: float = 0.05
    restriction_c: float = 1e6
    max_iter: int = 100
    n_restarts: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ArgumentError("k must be at least 1")
        if not 0.0 <= self.alpha < 1.0:
            raise ArgumentError("alpha must lie in [0, 1)")
        if not self.restriction_c >= 1.0:
            raise ArgumentError("restriction_c must be at least 1")
        if self.max_iter < 1 or self.n_restarts < 1:
            raise ArgumentError("max_iter and n_restarts must be at least 1")


@dataclass
class TclustResult:
    """Fitted models, per-event group (1..k, 0 = trimmed) and objective.

    ``history`` holds the objective after every assignment step;
    ``segments`` lists the history indices where a run restarted its
    monotone sequence after reseeding an emptied cluster. ``nearest`` is the
    best cluster of every event, trimmed ones included (0-based).
    """

    models: list
    assignment: np.ndarray
    objective: float
    history: list = field(default_factory=list)
    segments: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    nearest: np.ndarray | None = field(default=None, repr=False)

    @property
    def trimmed(self):
        return self.assignment == 0


def restrict_eigenvalues(eigvals, counts, c):
    """Clamp all eigenvalues into ``[t, c t]`` with the likelihood-optimal ``t``.

    ``eigvals`` is ``k x d``; ``counts`` weights each cluster's terms. The
    threshold minimizes ``sum_j n_j sum_l (log e'_jl + e_jl / e'_jl)`` where
    ``e'`` is the clamped value. On every interval between consecutive
    breakpoints ``e`` and ``e / c`` the minimizer has a closed form; all of
    them are evaluated and the best kept.
    """
    e = np.maximum(np.asarray(eigvals, dtype=float), 0.0)
    n = np.asarray(counts, dtype=float)
    top, low = e.max(), e.min()
    if top <= 0:
        return np.full_like(e, np.finfo(float).tiny)
    if low > 0 and top <= c * low:
        return e
    weights = np.broadcast_to(n[:, None], e.shape).ravel()
    flat = e.ravel()
    use = weights > 0
    flat, weights = flat[use], weights[use]

    def objective(t):
        clamped = np.clip(flat, t, c * t)
        return float(np.sum(weights * (np.log(clamped) + flat / clamped)))

    points = np.unique(np.concatenate([flat, flat / c]))
    points = points[points > 0]
    edges = np.concatenate([[points[0] / 2], points, [points[-1] * 2]])
    candidates = list(points)
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        below = flat < mid
        above = flat > c * mid
        mass = weights[below].sum() + weights[above].sum()
        if mass > 0:
            t = (np.sum(weights[below] * flat[below]) + np.sum(weights[above] * flat[above]) / c) / mass
            candidates.append(min(max(t, lo), hi))
    candidates = [t for t in candidates if t > 0]
    best = min(candidates, key=lambda t: (objective(t), t))
    return np.clip(e, best, c * best)


class _Mixture:
    """Parameters stored through eigendecompositions of the covariances."""

    def __init__(self, weights, means, eigvals, eigvecs):
        self.weights = np.asarray(weights, dtype=float)
        self.means = np.asarray(means, dtype=float)
        self.eigvals = np.asarray(eigvals, dtype=float)
        self.eigvecs = np.asarray(eigvecs, dtype=float)

    @classmethod
    def from_covariances(cls, weights, means, covs, counts, c):
        vals, vecs = [], []
        for s in covs:
            w, v = np.linalg.eigh(0.5 * (s + s.T))
            vals.append(w)
            vecs.append(v)
        vals = restrict_eigenvalues(np.array(vals), counts, c)
        return cls(weights, means, vals, np.array(vecs))

    def covariances(self):
        covs = []
        for w, v in zip(self.eigvals, self.eigvecs):
            s = (v * w) @ v.T
            covs.append(0.5 * (s + s.T))
        return covs

    def log_scores(self, x):
        d = x.shape[1]
        out = np.empty((x.shape[0], self.weights.size))
        with np.errstate(divide="ignore"):
            log_w = np.log(self.weights)
        for j in range(self.weights.size):
            z = (x - self.means[j]) @ self.eigvecs[j] / np.sqrt(self.eigvals[j])
            out[:, j] = (log_w[j] - 0.5 * (d * LOG_2PI + np.sum(np.log(self.eigvals[j])))
                         - 0.5 * np.einsum("ij,ij->i", z, z))
        return out


def _ml_moments(x):
    mean = x.mean(axis=0)
    centered = x - mean
    return mean, centered.T @ centered / x.shape[0]


def _assignment_step(x, mix, n_trim):
    n = x.shape[0]
    scores = mix.log_scores(x)
    assign = np.argmax(scores, axis=1)
    best = scores[np.arange(n), assign]
    kept = np.ones(n, dtype=bool)
    kept[np.argsort(best, kind="stable")[:n_trim]] = False
    return assign, best, kept


def _concentrate(x, mix, n_trim, params):
    d = x.shape[1]
    k = params.k
    history, segments = [], [0]
    previous = None
    converged = False
    for it in range(1, params.max_iter + 1):
        assign, best, kept = _assignment_step(x, mix, n_trim)
        history.append(float(best[kept].sum()))
        state = np.where(kept, assign + 1, 0)
        if previous is not None and np.array_equal(state, previous):
            converged = True
            break
        previous = state
        if it == params.max_iter:
            break

        counts = np.bincount(assign[kept], minlength=k)
        retained = np.flatnonzero(kept)
        worst = retained[np.argsort(best[retained], kind="stable")]
        means, covs = [], []
        used = 0
        for j in range(k):
            if counts[j] > 0:
                m, s = _ml_moments(x[kept & (assign == j)])
            else:
                # refill an emptied cluster from the worst-fitting retained events
                pick = worst[used: used + d + 1]
                used += d + 1
                m, s = _ml_moments(x[pick])
                counts[j] = pick.size
            means.append(m)
            covs.append(s)
        if used:
            segments.append(len(history))
        mix = _Mixture.from_covariances(counts / counts.sum(), means, covs, counts,
                                        params.restriction_c)
    return mix, state, assign, history, segments, it, converged


def _random_start(x, params, rng):
    n, d = x.shape
    means, covs = [], []
    for _ in range(params.k):
        pick = rng.choice(n, size=d + 1, replace=False)
        m, s = _ml_moments(x[pick])
        means.append(m)
        covs.append(s)
    weights = np.full(params.k, 1.0 / params.k)
    return _Mixture.from_covariances(weights, means, covs, np.ones(params.k), params.restriction_c)


def tclust(events, params=None, init=None):
    """Trimmed, eigenvalue-restricted Gaussian clustering.

    With ``init`` (a list of ``k`` cluster models) a single run starts from
    those parameters and the returned models keep their labels; otherwise the
    best of ``params.n_restarts`` random starts is returned. Exactly
    ``ceil(n * alpha)`` events are trimmed.
    """
    x = np.atleast_2d(np.asarray(events, dtype=float))
    n, d = x.shape
    if params is None:
        params = TclustParams(k=len(init) if init else 2)
    k = params.k
    if n <= k * (d + 1):
        raise ArgumentError(f"tclust needs more than k(d+1) = {k * (d + 1)} events, got {n}")
    n_trim = n_trimmed(n, params.alpha)

    if init is not None:
        init = list(init)
        if len(init) != k or any(m.dim != d for m in init):
            raise ArgumentError(f"init must hold {k} models of dimension {d}")
        w = np.array([m.weight for m in init])
        starts = [_Mixture.from_covariances(w / w.sum(), [m.mean for m in init],
                                            [m.cov for m in init], w, params.restriction_c)]
        labels = [m.label for m in init]
    else:
        rng = np.random.default_rng(params.seed)
        starts = [_random_start(x, params, rng) for _ in range(params.n_restarts)]
        labels = [None] * k

    best = None
    for start in starts:
        run = _concentrate(x, start, n_trim, params)
        if best is None or run[3][-1] > best[3][-1]:
            best = run
    mix, state, nearest, history, segments, iterations, converged = best
    models = [ClusterModel(m, s, float(w), lab)
              for m, s, w, lab in zip(mix.means, mix.covariances(), mix.weights, labels)]
    return TclustResult(models, state, history[-1], history, segments, iterations, converged,
                        nearest)
