"""Minimum-MSE blending weights on the probability simplex.

Given out-of-fold predictions ``P`` (n x k) and targets ``y``, find ``w``
with ``w >= 0`` and ``sum(w) = 1`` minimizing ``mean((y - P @ w)**2)``.
With ``G = P.T @ P / n`` and ``g = P.T @ y / n`` the objective is the
convex quadratic ``w @ G @ w - 2 g @ w + y @ y / n``.

Two solvers are provided:

``active_set`` (default)
    Primal active-set method. Exact up to round-off, and a few linear
    solves per instance, which matters when GEM-ITH solves thousands.
``pgd``
    Projected gradient descent with step ``1/L``, ``L = 2 lambda_max(G)``,
    and exact Euclidean projection. Slow on ill-conditioned blends (highly
    correlated learners) but independent of the active-set code.

When columns are collinear the optimal weights are not unique; only the
objective value is guaranteed.
"""

from dataclasses import dataclass

import numpy as np

from .oob import OobMatrix


@dataclass(frozen=True)
class SimplexWeights:
    w: np.ndarray
    objective: float
    iterations: int = 0
    method: str = "active_set"


def _as_matrix(M):
    if not isinstance(M, OobMatrix):
        raise TypeError("expected an OobMatrix")
    return M.predictions, M.y


def ensemble_mse(w, M):
    """``mean((y - P @ w)**2)`` evaluated directly from the residuals."""
    P, y = _as_matrix(M)
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != P.shape[1]:
        raise ValueError(f"{w.shape[0]} weights for {P.shape[1]} columns")
    r = y - P @ w
    return float(np.mean(r * r))


def project_to_simplex(v):
    """Euclidean projection of ``v`` onto ``{w : w >= 0, sum(w) = 1}``."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise ValueError("need a non-empty finite vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / idx > 0)
    theta = css[rho - 1] / rho
    w = np.maximum(v - theta, 0.0)
    return w / w.sum()


def gram(P, y):
    n = P.shape[0]
    return P.T @ P / n, P.T @ y / n


def _polish(w):
    w = np.where(w > 0.0, w, 0.0)
    return w / w.sum()


def solve_active_set(G, g, max_iter=None, tol=1e-10):
    """Primal active-set method for ``min w'Gw - 2g'w`` on the simplex.

    Starts at the best vertex and keeps a set ``F`` of free coordinates;
    the rest are pinned at zero. At a minimizer of the subproblem on ``F``
    the coordinate with the most negative multiplier is freed; otherwise
    the step towards that minimizer is taken, stopping at the first
    coordinate that hits zero. Returns ``(w, iterations)``.
    """
    k = g.shape[0]
    if max_iter is None:
        max_iter = 50 * k + 50
    start = int(np.argmin(np.diag(G) - 2.0 * g))
    w = np.zeros(k)
    w[start] = 1.0
    free = np.zeros(k, dtype=bool)
    free[start] = True
    mult_tol = tol * max(float(np.max(np.abs(G))), float(np.max(np.abs(g))), 1e-300)
    at_min = True
    last_freed = -1

    for it in range(1, max_iter + 1):
        if at_min:
            grad = 2.0 * (G @ w - g)
            F = np.flatnonzero(free)
            mult = grad + -float(np.mean(grad[F]))
            mult[free] = np.inf
            j = int(np.argmin(mult))
            if mult[j] >= -mult_tol:
                return _polish(w), it
            free[j] = True
            last_freed = j
            at_min = False
            continue

        # minimize over the affine face {w_F : sum(w_F) = 1} via its KKT system
        F = np.flatnonzero(free)
        m = F.size
        K = np.zeros((m + 1, m + 1))
        K[:m, :m] = 2.0 * G[np.ix_(F, F)]
        K[:m, m] = 1.0
        K[m, :m] = 1.0
        rhs = np.concatenate([2.0 * g[F], [1.0]])
        try:
            target = np.linalg.solve(K, rhs)[:m]
        except np.linalg.LinAlgError:
            target = np.linalg.lstsq(K, rhs, rcond=None)[0][:m]
        p = target - w[F]
        neg = p < 0
        ratios = np.where(neg, w[F] / np.where(neg, -p, 1.0), np.inf)
        step = min(1.0, float(np.min(ratios)))
        if step >= 1.0:
            w[F] = target
            at_min = True
            continue
        blocking = int(F[int(np.argmin(ratios))])
        if step <= 0.0 and blocking == last_freed:
            # round-off multiplier; the freed coordinate cannot move
            free[blocking] = False
            return _polish(w), it
        w[F] = w[F] + step * p
        w[blocking] = 0.0
        free[blocking] = False
        w = np.maximum(w, 0.0)
    return _polish(w), max_iter


def solve_pgd(G, g, tol=1e-12, max_iter=100_000, w0=None):
    """Projected gradient descent, step ``1 / (2 lambda_max(G))``."""
    k = g.shape[0]
    L = 2.0 * float(np.linalg.eigvalsh(G)[-1])
    if L <= 0.0:
        return np.full(k, 1.0 / k), 0
    w = np.full(k, 1.0 / k) if w0 is None else project_to_simplex(w0)
    for it in range(1, max_iter + 1):
        grad = 2.0 * (G @ w - g)
        w_next = project_to_simplex(w - grad / L)
        if np.max(np.abs(w_next - w)) < tol:
            return w_next, it
        w = w_next
    return w, max_iter


def solve_gem_weights(M, method="active_set"):
    """Optimal simplex weights for the columns of ``M``.

    The reported objective is recomputed from the residuals, and the
    returned weights are clipped to be non-negative and renormalized.
    """
    P, y = _as_matrix(M)
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(y))):
        raise ValueError("OOB matrix contains non-finite entries")
    k = P.shape[1]
    if k == 1:
        w, iters = np.ones(1), 0
    else:
        G, g = gram(P, y)
        if method == "active_set":
            w, iters = solve_active_set(G, g)
        elif method == "pgd":
            w, iters = solve_pgd(G, g)
        else:
            raise ValueError(f"unknown method {method!r}")
    return SimplexWeights(w=w, objective=ensemble_mse(w, M), iterations=iters, method=method)


def mse_gradient(w, M):
    P, y = _as_matrix(M)
    n = P.shape[0]
    return -2.0 / n * (P.T @ (y - P @ w))


def kkt_report(weights, M, active_tol=0.0):
    """KKT residuals of simplex weights.

    Returns ``(spread, violation)``: ``spread`` is the range of the gradient
    over coordinates with ``w_j > active_tol`` (zero at an optimum) and
    ``violation`` is how far any zero coordinate's gradient falls below the
    common active value (``<= 0`` at an optimum).
    """
    w = np.asarray(weights.w if isinstance(weights, SimplexWeights) else weights, dtype=float)
    grad = mse_gradient(w, M)
    active = w > active_tol
    common = float(np.mean(grad[active]))
    spread = float(np.ptp(grad[active]))
    inactive = ~active
    violation = float(np.max(common - grad[inactive])) if inactive.any() else -np.inf
    return spread, violation
