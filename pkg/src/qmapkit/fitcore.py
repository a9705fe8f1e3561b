"""Shared fitting machinery: linear least squares, box-constrained
Gauss-Newton, multi-start, and exhaustive grid search.

All solvers here are deterministic: no randomness, no threading, and
tie-breaking rules that do not depend on evaluation schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np


class LsqResult(NamedTuple):
    x: np.ndarray
    residual_norm: float
    rank: int
    rank_deficient: bool


def lsq_solve(a, b):
    """Least-squares solution of ``a @ x = b`` for real or complex ``a``.

    Uses an orthogonal factorization (SVD via ``numpy.linalg.lstsq``), never
    normal equations.  Rank-deficient systems return the minimum-norm
    solution with ``rank_deficient`` set.

    Returns an :class:`LsqResult`; the first two fields are ``(x,
    residual_norm)``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2:
        raise ValueError("design matrix must be 2-D")
    if b.shape[0] != a.shape[0]:
        raise ValueError(
            f"shape mismatch: a has {a.shape[0]} rows, b has {b.shape[0]}"
        )
    x, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    residual_norm = float(np.linalg.norm(a @ x - b))
    return LsqResult(x, residual_norm, int(rank), rank < a.shape[1])


@dataclass
class BoxedProblem:
    """A residual-vector minimization over a box.

    ``residual(x)`` returns a 1-D real array; the cost is its squared
    Euclidean norm.  Bounds may be ``-inf``/``+inf`` on either side; ``x0``
    must lie strictly inside every finite bound.
    """

    residual: Callable[[np.ndarray], np.ndarray]
    x0: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        self.lower = np.broadcast_to(
            np.asarray(self.lower, dtype=float), self.x0.shape
        ).copy()
        self.upper = np.broadcast_to(
            np.asarray(self.upper, dtype=float), self.x0.shape
        ).copy()
        if np.any(self.lower >= self.upper):
            raise ValueError("lower bounds must be strictly below upper bounds")
        if np.any(self.x0 <= self.lower) or np.any(self.x0 >= self.upper):
            raise ValueError("x0 must lie strictly inside the bounds")


class BoxedResult(NamedTuple):
    x: np.ndarray
    cost: float
    n_iter: int
    converged: bool


def _fd_jacobian(residual, x, r0, lower, upper):
    # Forward differences, stepping backward when a bound is in the way.
    n = x.size
    jac = np.empty((r0.size, n))
    for i in range(n):
        h = 1e-6 * max(1.0, abs(x[i]))
        xi = x.copy()
        if x[i] + h >= upper[i]:
            h = -h
        xi[i] = x[i] + h
        jac[:, i] = (residual(xi) - r0) / h
    return jac


def _projected_gradient(g, x, lower, upper, eps=1e-12):
    pg = g.copy()
    at_lo = x <= lower + eps
    at_hi = x >= upper - eps
    pg[at_lo] = np.minimum(pg[at_lo], 0.0)
    pg[at_hi] = np.maximum(pg[at_hi], 0.0)
    return pg


def solve_boxed(problem: BoxedProblem, max_iter: int = 200, tol: float = 1e-8):
    """Projected Gauss-Newton with backtracking line search.

    Iterates are clipped to the box after each step; convergence is declared
    when the sup-norm of the projected gradient of the cost drops below
    ``tol``.  Deterministic for fixed inputs.
    """
    x = problem.x0.copy()
    lower, upper = problem.lower, problem.upper
    r = np.atleast_1d(np.asarray(problem.residual(x), dtype=float))
    cost = float(r @ r)
    n_iter = 0
    converged = False
    for n_iter in range(1, max_iter + 1):
        jac = _fd_jacobian(problem.residual, x, r, lower, upper)
        g = 2.0 * (jac.T @ r)
        if np.max(np.abs(_projected_gradient(g, x, lower, upper))) < tol:
            converged = True
            n_iter -= 1
            break
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        if not np.all(np.isfinite(step)):
            step = -g  # fall back to steepest descent
        alpha = 1.0
        improved = False
        while alpha > 1e-14:
            x_new = np.clip(x + alpha * step, lower, upper)
            direction = x_new - x
            slope = float(g @ direction)
            r_new = np.atleast_1d(
                np.asarray(problem.residual(x_new), dtype=float)
            )
            cost_new = float(r_new @ r_new)
            # Armijo on the actual (projected) displacement; for ascent-ish
            # directions just require plain decrease.
            target = cost + 1e-4 * min(slope, 0.0)
            if cost_new <= target and cost_new < cost:
                x, r, cost = x_new, r_new, cost_new
                improved = True
                break
            alpha *= 0.5
        if not improved:
            # No admissible decrease along GN or gradient: treat as stationary.
            converged = (
                np.max(np.abs(_projected_gradient(g, x, lower, upper))) < tol
            )
            break
    return BoxedResult(x, cost, n_iter, converged)


def multi_start(problem: BoxedProblem, starts: Sequence[np.ndarray],
                max_iter: int = 200, tol: float = 1e-8):
    """Run :func:`solve_boxed` from each start; return the lowest-cost result.

    Ties go to the earliest start in list order.  Starts are clipped to the
    interior of the box before solving.
    """
    starts = list(starts)
    if not starts:
        raise ValueError("at least one start is required")
    best = None
    for x0 in starts:
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        span = np.where(
            np.isfinite(problem.upper - problem.lower),
            problem.upper - problem.lower, 1.0,
        )
        nudge = 1e-9 * np.maximum(span, 1.0)
        x0 = np.clip(x0, problem.lower + nudge, problem.upper - nudge)
        sub = BoxedProblem(problem.residual, x0, problem.lower, problem.upper)
        res = solve_boxed(sub, max_iter=max_iter, tol=tol)
        if best is None or res.cost < best.cost:
            best = res
    return best


@dataclass(frozen=True)
class GridSpec:
    """Axes of an exhaustive search grid, in tie-break priority order."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(np.asarray(ax, dtype=float) for ax in self.axes)
        if not axes:
            raise ValueError("GridSpec needs at least one axis")
        for ax in axes:
            if ax.ndim != 1 or ax.size == 0:
                raise ValueError("each axis must be a non-empty 1-D array")
        object.__setattr__(self, "axes", axes)

    @property
    def shape(self):
        return tuple(ax.size for ax in self.axes)


class GridResult(NamedTuple):
    point: tuple
    indices: tuple
    cost: float


def grid_minimize(spec: GridSpec, cost, vectorized: bool = False):
    """Exhaustive minimization of ``cost`` over the cartesian grid.

    ``cost(point)`` is called once per grid point (a tuple of floats) unless
    ``vectorized`` is set, in which case ``cost`` receives one flattened
    coordinate array per axis and must return the flat cost array.  Non-finite
    costs are skipped; ties are broken by the first point in lexicographic
    axis-index order (identical in both evaluation modes).
    """
    shape = spec.shape
    if vectorized:
        mesh = np.meshgrid(*spec.axes, indexing="ij")
        flat = [m.reshape(-1) for m in mesh]
        values = np.asarray(cost(*flat), dtype=float).reshape(-1)
        if values.size != int(np.prod(shape)):
            raise ValueError("vectorized cost returned wrong number of values")
        values = np.where(np.isfinite(values), values, np.inf)
        flat_idx = int(np.argmin(values))
        best_cost = float(values[flat_idx])
        if not np.isfinite(best_cost):
            raise ValueError("cost was non-finite over the entire grid")
        idx = np.unravel_index(flat_idx, shape)
    else:
        best_cost = np.inf
        idx = None
        for flat_idx in range(int(np.prod(shape))):
            i = np.unravel_index(flat_idx, shape)
            point = tuple(spec.axes[d][i[d]] for d in range(len(shape)))
            c = float(cost(point))
            if np.isfinite(c) and c < best_cost:
                best_cost = c
                idx = i
        if idx is None:
            raise ValueError("cost was non-finite over the entire grid")
    point = tuple(float(spec.axes[d][idx[d]]) for d in range(len(shape)))
    return GridResult(point, tuple(int(j) for j in idx), best_cost)
