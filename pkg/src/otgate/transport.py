"""Optimal-transport primitives.

Exact discrete OT via the transportation simplex, entropic OT via log-domain
Sinkhorn, and the closed-form 2-Wasserstein distance between Gaussians.
"""

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ArgumentError, ConvergenceError

MASS_TOL = 1e-9
SYMMETRY_TOL = 1e-10
EIGEN_TOL = 1e-10


@dataclass
class TransportPlan:
    """A coupling between two discrete measures.

    ``cost`` is the LP objective for exact plans and the entropic objective
    for Sinkhorn plans.
    """

    plan: np.ndarray
    cost: float
    iterations: int = 0
    residual: float = 0.0

    def transport_cost(self, cost_matrix):
        """Unregularized cost ``sum(plan * cost_matrix)``."""
        return float(np.sum(self.plan * np.asarray(cost_matrix, dtype=float)))


def check_measure(weights, name="weights"):
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ArgumentError(f"{name} must be a non-empty 1-D vector")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ArgumentError(f"{name} must be finite and nonnegative")
    if abs(w.sum() - 1.0) > MASS_TOL:
        raise ArgumentError(f"{name} must sum to 1 (got {w.sum():.12g})")
    return w


def _check_problem(source, target, cost):
    a = check_measure(source, "source")
    b = check_measure(target, "target")
    c = np.asarray(cost, dtype=float)
    if c.shape != (a.size, b.size):
        raise ArgumentError(f"cost has shape {c.shape}, expected {(a.size, b.size)}")
    if not np.all(np.isfinite(c)):
        raise ArgumentError("cost entries must be finite")
    return a, b, c


def solve_discrete_ot(source, target, cost):
    """Solve the transportation LP between two discrete probability vectors.

    Zero-mass atoms are removed before pivoting and come back as zero rows or
    columns of the plan.
    """
    a, b, c = _check_problem(source, target, cost)
    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    a_pos = a[rows]
    b_pos = b[cols] * (a_pos.sum() / b[cols].sum())
    sub, iterations = _backend.transport_simplex(a_pos, b_pos, np.ascontiguousarray(c[np.ix_(rows, cols)]))
    plan = np.zeros_like(c)
    plan[np.ix_(rows, cols)] = sub
    return TransportPlan(plan=plan, cost=float(np.sum(plan * c)), iterations=iterations)


def default_gamma(cost):
    c = np.asarray(cost, dtype=float)
    med = float(np.median(c))
    if med <= 0:
        med = float(c.max()) if c.max() > 0 else 1.0
    return 1e-2 * med


def _lse(x, axis):
    top = x.max(axis=axis, keepdims=True)
    return (top + np.log(np.exp(x - top).sum(axis=axis, keepdims=True))).squeeze(axis)


class _SinkhornState:
    """Dual potentials of the entropic problem plus an iteration budget."""

    def __init__(self, a, b, c, max_iter):
        self.a, self.b, self.c = a, b, c
        self.log_a, self.log_b = np.log(a), np.log(b)
        self.f = np.zeros(a.size)
        self.g = np.zeros(b.size)
        self.budget = max_iter
        self.used = 0

    def log_plan(self, gamma):
        return (self.f[:, None] + self.g[None, :] - self.c) / gamma

    def sweep(self, gamma):
        self.f = gamma * (self.log_a - _lse((self.g[None, :] - self.c) / gamma, 1))
        self.g = gamma * (self.log_b - _lse((self.f[:, None] - self.c) / gamma, 0))
        self.used += 1

    def row_residual(self, gamma):
        return float(np.abs(np.exp(_lse(self.log_plan(gamma), 1)) - self.a).sum())

    def dual(self, f, g, gamma):
        with np.errstate(over="ignore"):
            mass = np.exp((f[:, None] + g[None, :] - self.c) / gamma).sum()
        return self.a @ f + self.b @ g - gamma * mass

    def newton(self, gamma, tol, max_steps=60):
        # Damped Newton ascent on the dual; the gauge is fixed by g[-1].
        m = self.a.size
        for _ in range(max_steps):
            if self.used >= self.budget:
                return
            plan = np.exp(self.log_plan(gamma))
            rows, cols = plan.sum(1), plan.sum(0)
            grad = np.concatenate([self.a - rows, self.b - cols])
            if max(np.abs(grad[:m]).sum(), np.abs(grad[m:]).sum()) < tol:
                return
            hess = np.block([[np.diag(rows), plan], [plan.T, np.diag(cols)]]) / gamma
            step = np.zeros(grad.size)
            step[:-1] = np.linalg.lstsq(hess[:-1, :-1], grad[:-1], rcond=None)[0]
            base = self.dual(self.f, self.g, gamma)
            slope = grad @ step
            t = 1.0
            while t > 1e-12:
                f, g = self.f + t * step[:m], self.g + t * step[m:]
                if self.dual(f, g, gamma) >= base + 1e-4 * t * slope:
                    break
                t *= 0.5
            else:
                for _ in range(50):
                    self.sweep(gamma)
                continue
            self.f, self.g = f, g
            self.used += 1


def sinkhorn(source, target, cost, gamma=None, max_iter=10000, tol=1e-9, accelerate=True):
    """Entropy-regularized OT by log-domain Sinkhorn iterations.

    ``gamma`` defaults to 1% of the median cost entry. Convergence is declared
    when the L1 residual of the row marginal drops below ``tol`` right after a
    Sinkhorn sweep (column marginals are exact after each sweep).

    With ``accelerate`` the regularization is annealed from the cost range
    down to ``gamma`` and each stage is polished by damped Newton steps on the
    same dual; the final answer is still certified by plain sweeps. This
    avoids the very slow linear phase that plain iterations show at small
    ``gamma``. ``max_iter`` bounds sweeps plus Newton steps.
    """
    a, b, c = _check_problem(source, target, cost)
    if gamma is None:
        gamma = default_gamma(c)
    if not gamma > 0:
        raise ArgumentError("gamma must be positive")
    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    c_pos = c[np.ix_(rows, cols)]
    state = _SinkhornState(a[rows], b[cols], c_pos, max_iter)

    if accelerate:
        level = max(gamma, float(c_pos.max() - c_pos.min()))
        while True:
            for _ in range(10):
                state.sweep(level)
            state.newton(level, tol / 10 if level == gamma else 1e-6)
            if level == gamma or state.used >= max_iter:
                break
            level = max(gamma, level / 2)

    residual = np.inf
    while state.used < max_iter:
        state.sweep(gamma)
        residual = state.row_residual(gamma)
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"Sinkhorn did not reach tol={tol:g} in {max_iter} iterations (residual {residual:.3g})",
            residual=residual,
            iterations=state.used,
        )

    log_plan = state.log_plan(gamma)
    sub = np.exp(log_plan)
    plan = np.zeros_like(c)
    plan[np.ix_(rows, cols)] = sub
    objective = float(np.sum(sub * c_pos)) + gamma * float(np.sum(sub * log_plan))
    return TransportPlan(plan=plan, cost=objective, iterations=state.used, residual=residual)


def check_spd(m, name="matrix"):
    """Validate symmetry and PSD-ness; return the symmetrized matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ArgumentError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ArgumentError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if m.size and np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale:
        raise ArgumentError(f"{name} is not symmetric")
    sym = 0.5 * (m + m.T)
    if m.size:
        _clamped_eigh(sym, name)
    return sym


def _clamped_eigh(sym, name):
    w, vecs = np.linalg.eigh(sym)
    top = max(float(w[-1]), 0.0)
    if w[0] < -EIGEN_TOL * max(1.0, top):
        raise ArgumentError(f"{name} is not positive semidefinite (min eigenvalue {w[0]:.3g})")
    w = np.where(w < EIGEN_TOL * top, 0.0, w)
    return w, vecs


def spd_sqrt(m):
    """Symmetric PSD square root through an eigendecomposition."""
    sym = check_spd(m)
    w, vecs = _clamped_eigh(sym, "matrix")
    root = (vecs * np.sqrt(w)) @ vecs.T
    return 0.5 * (root + root.T)


def spd_inv_sqrt(m):
    sym = check_spd(m)
    w, vecs = _clamped_eigh(sym, "matrix")
    if w[0] <= 0:
        raise ArgumentError("matrix is singular")
    root = (vecs / np.sqrt(w)) @ vecs.T
    return 0.5 * (root + root.T)


def _canonical(mean_a, cov_a, mean_b, cov_b):
    # Fixed argument order makes the distance bitwise symmetric.
    key_a = (cov_a.tobytes(), mean_a.tobytes())
    key_b = (cov_b.tobytes(), mean_b.tobytes())
    if key_b < key_a:
        return mean_b, cov_b, mean_a, cov_a
    return mean_a, cov_a, mean_b, cov_b


def bures_wasserstein_squared(mean_a, cov_a, mean_b, cov_b):
    """Squared 2-Wasserstein distance between N(mean_a, cov_a) and N(mean_b, cov_b)."""
    mean_a = np.atleast_1d(np.asarray(mean_a, dtype=float))
    mean_b = np.atleast_1d(np.asarray(mean_b, dtype=float))
    cov_a = check_spd(np.atleast_2d(cov_a), "cov_a")
    cov_b = check_spd(np.atleast_2d(cov_b), "cov_b")
    d = mean_a.size
    if mean_b.size != d or cov_a.shape != (d, d) or cov_b.shape != (d, d):
        raise ArgumentError("Gaussian parameters have mismatched dimensions")
    mean_a, cov_a, mean_b, cov_b = _canonical(mean_a, cov_a, mean_b, cov_b)

    diff = mean_a - mean_b
    location = float(diff @ diff)
    if np.array_equal(cov_a, cov_b):
        _clamped_eigh(cov_a, "cov_a")
        return location

    root_b = spd_sqrt(cov_b)
    inner = root_b @ cov_a @ root_b
    inner = 0.5 * (inner + inner.T)
    w, _ = _clamped_eigh(inner, "cov_a")
    trace_sum = float(np.trace(cov_a) + np.trace(cov_b))
    bures = trace_sum - 2.0 * float(np.sum(np.sqrt(w)))
    if bures <= 64 * np.finfo(float).eps * trace_sum:
        bures = 0.0
    return location + bures


def gaussian_w2_squared(a, b):
    """Squared W2 between two cluster models (objects with ``mean`` and ``cov``)."""
    return bures_wasserstein_squared(a.mean, a.cov, b.mean, b.cov)


def gaussian_w2(a, b):
    """2-Wasserstein distance between the Gaussians of two cluster models."""
    return float(np.sqrt(gaussian_w2_squared(a, b)))
