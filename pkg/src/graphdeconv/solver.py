"""Weighted l1 minimization under a single linear equality constraint.

The core problem is

    minimize    || w o (A g) ||_1     over g in R^n
    subject to  r' g = c

where o is the entrywise product.  With A the Khatri-Rao design built
from observations and eigenvectors, A g is the vectorized source matrix
produced by the candidate inverse response g, so this is an l1-synthesis
program: it searches for the response whose reconstructed sources are
sparsest, with the linear constraint fixing the scale.

``solve_l1_synthesis`` performs one such solve with a primal-dual
interior-point method; ``reweighted_l1`` wraps it in the standard
iteratively-reweighted scheme (weights 1 / (|x| + delta)) to sharpen the
l1 objective toward l0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .exceptions import ContractViolationError, InvertibilityError
from .gsp import inverse_response
from .validation import as_float_array, check_vector

# Conservative iteration cap multiplier: the interior-point method needs
# a few dozen iterations at most, but the cap must never bind first.
_MAX_INNER_PER_ROW = 50


@dataclass(frozen=True)
class L1SynthesisProblem:
    """Problem data: design matrix, constraint vector r, scale c, weights."""

    design: np.ndarray
    r: np.ndarray
    c: float
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        A = as_float_array(self.design, "design", ndim=2)
        r = check_vector(self.r, A.shape[1], "r")
        if not np.any(r != 0.0):
            raise ContractViolationError("constraint vector r must be non-zero")
        c = float(self.c)
        if c == 0.0:
            raise ContractViolationError("constraint value c must be non-zero")
        w = self.weights
        if w is not None:
            w = check_vector(w, A.shape[0], "weights")
            if np.any(w <= 0.0):
                raise ContractViolationError("weights must be strictly positive")
        object.__setattr__(self, "design", A)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "weights", w)


@dataclass
class SolverConfig:
    """Tolerances and budgets for the inner solver and the reweighting loop.

    delta:      reweighting smoother; None picks 1e-3 * max(1, max|x|)
                from the first iterate.
    eps:        outer stopping threshold on ||X_t - X_{t-1}||_F.
    max_outer:  number of weighted solves (first one is unweighted).
    inner_tol:  relative residual/gap tolerance of the interior-point solve.
    max_inner:  iteration cap per solve; None picks 50 * n_rows.
    """

    delta: Optional[float] = None
    eps: float = 1e-6
    max_outer: int = 4
    inner_tol: float = 1e-9
    max_inner: Optional[int] = None

    def __post_init__(self):
        if self.delta is not None and self.delta <= 0:
            raise ContractViolationError("delta must be positive")
        if self.eps < 0:
            raise ContractViolationError("eps must be >= 0")
        if self.max_outer < 1:
            raise ContractViolationError("max_outer must be >= 1")
        if self.inner_tol <= 0:
            raise ContractViolationError("inner_tol must be positive")
        if self.max_inner is not None and self.max_inner < 1:
            raise ContractViolationError("max_inner must be >= 1")


@dataclass
class Solution:
    """Result of a solve: minimizer, reconstruction, and diagnostics.

    objective is the unweighted l1 norm of design @ g_hat (the sparsity
    surrogate being driven down); objective_history records it after each
    solve of the reweighting loop (a single entry for one-shot solves).
    """

    g_hat: np.ndarray
    X_hat: np.ndarray
    objective: float
    iterations: int
    converged: bool
    objective_history: List[float] = field(default_factory=list)


def _max_step(v, dv):
    """Largest step in [0, 1] keeping v + step*dv >= 0."""
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def _ipm_weighted_l1(A, r, c, w, tol, max_iter, g0=None):
    """Mehrotra-style predictor-corrector interior-point solve.

    Reformulates min ||w o (Ag)||_1 s.t. r'g = c with bound variables
    t >= |Ag| and eliminates everything but (g, y) from the Newton
    systems, leaving one symmetric (n+1) x (n+1) solve per iteration.
    Returns (g, iterations, converged); on non-convergence the final
    iterate is still feasible (g is projected onto r'g = c on exit).
    """
    m, n = A.shape
    rr = float(r @ r)

    if n == 1:
        # Constraint pins g completely; nothing to optimize.
        g = np.array([c / r[0]])
        return g, 0, True

    # Strictly feasible start: g on the constraint plane, slack margins
    # bounded away from zero, duals consistent with lam1 + lam2 = w.
    if g0 is None:
        g = c * r / rr
    else:
        g = np.asarray(g0, float).copy()
        g += (c - r @ g) * r / rr
    z = A @ g
    t = np.abs(z) + 1.0 + 0.1 * np.abs(z).max(initial=0.0)
    s1 = t - z
    s2 = t + z
    lam1 = w / 2.0
    lam2 = w / 2.0
    y = 0.0

    converged = False
    it = 0
    for it in range(1, int(max_iter) + 1):
        z = A @ g
        r1 = z - t + s1
        r2 = -z - t + s2
        rg = A.T @ (lam1 - lam2) + y * r
        rt = w - lam1 - lam2
        ry = float(r @ g - c)
        comp = float(lam1 @ s1 + lam2 @ s2)
        mu = comp / (2 * m)
        pobj = float(w @ t)
        res = max(
            np.abs(r1).max(initial=0.0),
            np.abs(r2).max(initial=0.0),
            np.abs(rg).max(initial=0.0),
            np.abs(rt).max(initial=0.0),
            abs(ry),
        )
        if res / (1.0 + abs(c)) < tol and comp / (1.0 + abs(pobj)) < tol:
            converged = True
            it -= 1
            break

        D1 = lam1 / s1
        D2 = lam2 / s2
        dsum = D1 + D2
        dtil = 4.0 * D1 * D2 / dsum
        K = np.zeros((n + 1, n + 1))
        K[:n, :n] = (A * dtil[:, None]).T @ A
        K[:n, n] = r
        K[n, :n] = r

        def newton(rc1, rc2):
            f_t = rt - D1 * r1 - D2 * r2 - rc1 / s1 - rc2 / s2
            q = (D1 - D2) / dsum * f_t + D1 * r1 - D2 * r2 + rc1 / s1 - rc2 / s2
            rhs = np.concatenate([-rg - A.T @ q, [-ry]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                jitter = 1e-12 * max(1.0, float(np.abs(K).max()))
                sol = np.linalg.solve(K + jitter * np.eye(n + 1), rhs)
            dg, dy = sol[:n], float(sol[n])
            dt = ((D1 - D2) * (A @ dg) - f_t) / dsum
            dlam1 = D1 * (A @ dg - dt + r1) + rc1 / s1
            dlam2 = D2 * (-A @ dg - dt + r2) + rc2 / s2
            ds1 = (rc1 - s1 * dlam1) / lam1
            ds2 = (rc2 - s2 * dlam2) / lam2
            return dg, dy, dt, dlam1, dlam2, ds1, ds2

        # Predictor: pure Newton step on the affine system.
        dg, dy, dt, dl1, dl2, ds1, ds2 = newton(-lam1 * s1, -lam2 * s2)
        ap = min(_max_step(s1, ds1), _max_step(s2, ds2))
        ad = min(_max_step(lam1, dl1), _max_step(lam2, dl2))
        mu_aff = (
            (lam1 + ad * dl1) @ (s1 + ap * ds1) + (lam2 + ad * dl2) @ (s2 + ap * ds2)
        ) / (2 * m)
        sigma = float(np.clip((mu_aff / mu) ** 3, 1e-10, 0.99999)) if mu > 0 else 0.1

        # Corrector: recenters toward sigma*mu and cancels second-order terms.
        rc1 = sigma * mu - lam1 * s1 - dl1 * ds1
        rc2 = sigma * mu - lam2 * s2 - dl2 * ds2
        dg, dy, dt, dl1, dl2, ds1, ds2 = newton(rc1, rc2)
        ap = min(1.0, 0.99995 * min(_max_step(s1, ds1), _max_step(s2, ds2)))
        ad = min(1.0, 0.99995 * min(_max_step(lam1, dl1), _max_step(lam2, dl2)))

        g = g + ap * dg
        t = t + ap * dt
        s1 = s1 + ap * ds1
        s2 = s2 + ap * ds2
        y = y + ad * dy
        lam1 = lam1 + ad * dl1
        lam2 = lam2 + ad * dl2

        if min(ap, ad) < 1e-12 or not np.isfinite(g).all():
            break  # stalled or diverged; bail out with the last finite iterate

    if not np.isfinite(g).all():
        g = c * r / rr
    # Pin the equality constraint to machine precision.
    g = g + (c - r @ g) * r / rr
    return g, it, converged


def _unvec(x, n_cols_hint):
    """Reshape a stacked vector back to a matrix, column-major."""
    m = x.shape[0]
    n = n_cols_hint
    if m % n == 0:
        return x.reshape((n, m // n), order="F")
    return x.reshape((m, 1))


def solve_l1_synthesis(problem, config=None, warm_start=None):
    """Solve one weighted l1-synthesis program.

    Parameters
    ----------
    problem : L1SynthesisProblem
    config : SolverConfig, optional
    warm_start : array, optional
        Initial g; it is projected onto the constraint plane before use.

    Returns
    -------
    Solution
        converged is False when the iteration budget ran out first; the
        returned iterate is feasible either way.
    """
    config = config or SolverConfig()
    A, r, c = problem.design, problem.r, problem.c
    w = problem.weights if problem.weights is not None else np.ones(A.shape[0])
    cap = config.max_inner or _MAX_INNER_PER_ROW * A.shape[0]
    g, iters, ok = _ipm_weighted_l1(
        A, r, c, w, config.inner_tol, cap, g0=warm_start
    )
    x = A @ g
    obj = float(np.abs(x).sum())
    return Solution(
        g_hat=g,
        X_hat=_unvec(x, A.shape[1]),
        objective=obj,
        iterations=iters,
        converged=ok,
        objective_history=[obj],
    )


def reweighted_l1(design, r, c, config=None):
    """Iteratively-reweighted l1 minimization of the synthesis program.

    The first pass solves the unweighted program; each subsequent pass
    re-solves with weights 1 / (|x_i| + delta) built from the previous
    reconstruction x = design @ g, which approximates l0 minimization.
    The loop stops when consecutive reconstructions agree to within
    config.eps in Frobenius norm or after config.max_outer solves.

    Returns a Solution whose iterations field counts inner iterations
    summed over all passes and whose converged flag is True only if every
    inner solve met its tolerance.
    """
    config = config or SolverConfig()
    A = as_float_array(design, "design", ndim=2)
    r = check_vector(r, A.shape[1], "r")
    m, n = A.shape
    w = np.ones(m)
    cap = config.max_inner or _MAX_INNER_PER_ROW * m
    delta = config.delta
    g = None
    x_prev = np.zeros(m)
    history: List[float] = []
    total_iters = 0
    all_ok = True

    for outer in range(config.max_outer):
        g, iters, ok = _ipm_weighted_l1(A, r, c, w, config.inner_tol, cap, g0=g)
        total_iters += iters
        all_ok = all_ok and ok
        x = A @ g
        history.append(float(np.abs(x).sum()))
        if delta is None:
            delta = 1e-3 * max(1.0, float(np.abs(x).max(initial=0.0)))
        if np.linalg.norm(x - x_prev) <= config.eps:
            break
        x_prev = x
        w = 1.0 / (np.abs(x) + delta)

    return Solution(
        g_hat=g,
        X_hat=_unvec(x, n),
        objective=history[-1],
        iterations=total_iters,
        converged=all_ok,
        objective_history=history,
    )


def reconstruct_sources(design, g_hat, n_nodes=None):
    """Map a solved response back to the source matrix: unvec(design @ g).

    n_nodes defaults to the design's column count, which is correct for
    Khatri-Rao designs (rows stack the N x P source matrix columnwise).
    """
    A = as_float_array(design, "design", ndim=2)
    g = check_vector(g_hat, A.shape[1], "g_hat")
    n = int(n_nodes) if n_nodes is not None else A.shape[1]
    x = A @ g
    if x.shape[0] % n != 0:
        raise ContractViolationError(
            f"cannot reshape {x.shape[0]} stacked entries into {n} rows"
        )
    return x.reshape((n, x.shape[0] // n), order="F")


def estimate_filter(eigenvectors, g_hat, tol=None):
    """Recover the diffusion filter matrix V diag(1/g) V^T from g.

    Raises InvertibilityError when some response entry is too close to
    zero (the estimated inverse does not correspond to a bounded filter).
    """
    V = as_float_array(eigenvectors, "eigenvectors", ndim=2)
    g = check_vector(g_hat, V.shape[1], "g_hat")
    h = inverse_response(g, tol)  # reciprocal with zero guard
    return (V * h[None, :]) @ V.T


__all__ = [
    "L1SynthesisProblem",
    "SolverConfig",
    "Solution",
    "solve_l1_synthesis",
    "reweighted_l1",
    "reconstruct_sources",
    "estimate_filter",
    "InvertibilityError",
]
