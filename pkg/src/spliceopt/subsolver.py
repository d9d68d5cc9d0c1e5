"""Restricted minimization: min f(theta) subject to supp(theta) = A.

Quadratic objectives get the exact normal-equations solution; everything
else goes through damped Newton with Armijo backtracking on the reduced
|A|-dimensional problem.  Restricted dimensions here are small (tens), so
dense factorizations are the cheap and fast-converging choice.

Off-support coordinates of every returned vector are exactly zero, never
merely small.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .objectives import Objective, QuadraticObjective
from .types import ParamVector, SubsolverError, SupportSet, embed

RIDGE_CAP = 1e-2


@dataclass(frozen=True)
class SubsolverConfig:
    """Newton/backtracking knobs for restricted solves.

    ``ridge`` is the initial Hessian damping tried when a factorization
    fails, escalated x10 up to 1e-2; leaving it at 0 disables escalation
    (the quadratic path then reports singular systems as errors).
    """

    grad_tol: float = 1e-8
    max_iter: int = 100
    ls_shrink: float = 0.5
    ls_decrease: float = 1e-4
    ridge: float = 0.0

    def __post_init__(self) -> None:
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.ls_shrink < 1:
            raise ValueError("line-search shrink factor must be in (0, 1)")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")


DEFAULT_CONFIG = SubsolverConfig()


def _ridge_schedule(ridge: float):
    if ridge <= 0:
        yield 0.0
        return
    r = ridge
    yield 0.0
    while r <= RIDGE_CAP:
        yield r
        r *= 10.0


_SINGULAR_DIAG_RATIO = 1e-7  # factor-diagonal ratio below this means rank-deficient


def _spd_solve(H: np.ndarray, rhs: np.ndarray, ridge: float) -> np.ndarray | None:
    """Solve H d = rhs via Cholesky, damping the diagonal if enabled.

    Rounding can let an exactly singular matrix slip through the
    factorization with a near-zero pivot, so the factor's diagonal spread
    is checked as well.
    """
    if H.shape[0] == 0:
        return np.zeros(0)
    eye = np.eye(H.shape[0])
    for r in _ridge_schedule(ridge):
        try:
            factor = cho_factor(H + r * eye, lower=True)
        except LinAlgError:
            continue
        diag = np.abs(np.diag(factor[0]))
        if diag.min() <= _SINGULAR_DIAG_RATIO * diag.max():
            continue
        return cho_solve(factor, rhs)
    return None


def solve_quadratic_restricted(obj: QuadraticObjective, support: SupportSet,
                               config: SubsolverConfig | None = None) -> ParamVector:
    """Exact restricted least squares via the normal equations.

    Solves (X_A^T X_A) u = X_A^T y with an SPD factorization; raises
    SubsolverError when the Gram matrix cannot be factored (rank-deficient
    X_A and ridge escalation disabled or exhausted).
    """
    cfg = config or DEFAULT_CONFIG
    idx = support.as_array()
    XA = obj.X[:, idx]
    G = (XA.T @ XA) / obj.n
    rhs = (XA.T @ obj.y) / obj.n
    u = _spd_solve(G, rhs, cfg.ridge)
    if u is None:
        raise SubsolverError(
            f"normal equations are singular on support {support.indices}"
        )
    theta = embed(u, support)
    val = obj.value(theta)
    if not np.isfinite(val):
        raise SubsolverError("restricted least-squares objective is not finite")
    return ParamVector(theta, support, objective=val)


def solve_smooth_restricted(obj: Objective, support: SupportSet,
                            config: SubsolverConfig | None = None,
                            warm: ParamVector | None = None) -> ParamVector:
    """Damped Newton on the reduced problem.

    Stops when the restricted gradient sup-norm drops below ``grad_tol``.
    Exhausting ``max_iter`` is a soft failure: the best iterate is still
    returned, flagged via ``stationary=False`` (separable logistic fits
    land here by design).  Non-finite values or gradients raise
    SubsolverError.
    """
    cfg = config or DEFAULT_CONFIG
    idx = support.as_array()
    prob = obj.restricted_problem(support)

    if warm is not None:
        u = np.asarray(warm.values, dtype=float)[idx].copy()
    else:
        u = np.zeros(len(idx))

    f = prob.value(u)
    if not np.isfinite(f):
        raise SubsolverError("objective not finite at the starting point")

    stationary = False
    for _ in range(cfg.max_iter):
        g = prob.gradient(u)
        if not np.all(np.isfinite(g)):
            raise SubsolverError("gradient not finite during restricted solve")
        if len(u) == 0 or np.max(np.abs(g)) <= cfg.grad_tol:
            stationary = True
            break

        H = prob.hessian(u)
        d = None
        if H is not None and np.all(np.isfinite(H)):
            d = _spd_solve(H, -g, cfg.ridge)
        if d is None:
            d = -g  # factorization unavailable; plain descent step

        step = _backtrack(prob, u, f, g, d, cfg)
        if step is None and not np.array_equal(d, -g):
            step = _backtrack(prob, u, f, g, -g, cfg)
        if step is None:
            break  # no decrease along either direction; give up here
        u, f = step
        if not np.isfinite(f):
            raise SubsolverError("objective not finite during restricted solve")
    else:
        g = prob.gradient(u)
        stationary = len(u) == 0 or bool(np.max(np.abs(g)) <= cfg.grad_tol)

    return ParamVector(embed(u, support), support, objective=float(f),
                       stationary=stationary)


def _backtrack(prob, u, f, g, d, cfg: SubsolverConfig, max_halvings: int = 60):
    """Armijo backtracking; returns (new u, new f) or None if no decrease."""
    slope = float(g @ d)
    if slope >= 0:
        return None
    t = 1.0
    for _ in range(max_halvings):
        u_new = u + t * d
        f_new = prob.value(u_new)
        if np.isfinite(f_new) and f_new <= f + cfg.ls_decrease * t * slope:
            return u_new, f_new
        t *= cfg.ls_shrink
    return None
