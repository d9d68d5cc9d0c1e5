"""Hard-thresholding baselines over the shared objective contract.

* iht_solve:    theta <- H_s(theta - tau * grad f(theta)), fixed step
* grahtp_solve: gradient step, H_s, then re-minimize on the selected
                support; step is a fixed tau, a grid of taus (best final
                objective wins), or None for the curvature-based default
                (2 * lambda_max of the initial restricted Hessian)^-1
* grasp_solve:  merge the top-2s gradient coordinates with the current
                support, minimize there, keep the top-s of that, minimize
                again

All start from theta = 0 and stop once the support is stable and the
iterate moved less than stop_tol in sup norm, or at max_iter with
converged=False (step-size misfits can cycle forever).
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .objectives import Objective
from .splicing import hard_threshold, top_k_indices
from .subsolver import SubsolverConfig
from .types import (
    ParamVector,
    SolveResult,
    SolverError,
    SolveTrace,
    SubsolverError,
    SupportSet,
)

GRAHTP_STEP_GRID = (1.0, 1e-1, 1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class HTConfig:
    """Knobs shared by the hard-thresholding family.

    ``step`` is a fixed positive tau, a grid of taus, or None for the
    curvature-based choice (grahtp only).  ``debias`` re-minimizes on the
    thresholded support after each gradient step; gradient-support pursuit
    and the pursuit variant of hard thresholding always debias, plain
    iterative hard thresholding never does unless asked.
    """

    s: int
    step: float | Sequence[float] | None = None
    max_iter: int = 500
    stop_tol: float = 1e-8
    debias: bool = False

    def __post_init__(self) -> None:
        if self.s < 1:
            raise ValueError("sparsity level s must be at least 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be nonnegative")
        for tau in self.step_candidates() or []:
            if not tau > 0:
                raise ValueError(f"step sizes must be positive, got {tau}")

    def step_candidates(self) -> tuple[float, ...] | None:
        if self.step is None:
            return None
        if isinstance(self.step, (int, float)):
            return (float(self.step),)
        return tuple(float(t) for t in self.step)


def grahtp_auto_step(obj: Objective, s: int) -> float:
    """Step size from local curvature: (2 * lambda_max)^-1 of the restricted
    Hessian at zero, on the top-s gradient-at-zero support."""
    p = obj.dimension
    a0 = SupportSet.from_iterable(top_k_indices(obj.gradient(np.zeros(p)), s), p)
    H = obj.restricted_hessian(np.zeros(p), a0)
    if H is None:
        raise SolverError("objective provides no restricted Hessian; pass a step size")
    m_hat = float(np.max(np.linalg.eigvalsh(H)))
    if not np.isfinite(m_hat) or m_hat <= 0:
        raise SolverError(f"cannot derive a step from curvature estimate {m_hat}")
    return 1.0 / (2.0 * m_hat)


def _ht_loop(obj: Objective, cfg: HTConfig, tau: float, debias: bool,
             subsolver: SubsolverConfig | None) -> SolveResult:
    p = obj.dimension
    if not 1 <= cfg.s <= p:
        raise ValueError(f"s must lie in [1, {p}], got {cfg.s}")
    theta = np.zeros(p)
    prev_support: SupportSet | None = None
    trace = SolveTrace()
    converged = False
    iterations = 0
    result_theta: ParamVector | None = None

    for t in range(1, cfg.max_iter + 1):
        iterations = t
        g = obj.gradient(theta)
        z = theta - tau * g
        if not np.all(np.isfinite(z)):
            raise SolverError(f"iterate became non-finite at iteration {t} (tau={tau})")
        support = SupportSet.from_iterable(top_k_indices(z, cfg.s), p)
        if debias:
            warm = ParamVector(hard_threshold(z, cfg.s), support)
            pv = obj.restricted_minimize(support, config=subsolver, warm=warm)
            if not pv.stationary:
                trace.soft_failures += 1
        else:
            vals = hard_threshold(z, cfg.s)
            pv = ParamVector(vals, support, objective=float(obj.value(vals)))
        trace.record(t, support, pv.objective, None)
        moved = float(np.max(np.abs(pv.values - theta)))
        stable = prev_support is not None and support == prev_support
        theta = pv.values
        prev_support = support
        result_theta = pv
        if stable and moved < cfg.stop_tol:
            converged = True
            break

    assert result_theta is not None
    return SolveResult(result_theta, result_theta.support, trace, converged, iterations)


def iht_solve(obj: Objective, cfg: HTConfig,
              subsolver: SubsolverConfig | None = None) -> SolveResult:
    """Plain iterative hard thresholding with a fixed user-supplied step."""
    taus = cfg.step_candidates()
    if taus is None or len(taus) != 1:
        raise ValueError("iht_solve needs a single fixed step size")
    return _ht_loop(obj, cfg, taus[0], cfg.debias, subsolver)


def grahtp_solve(obj: Objective, cfg: HTConfig,
                 subsolver: SubsolverConfig | None = None) -> SolveResult:
    """Gradient hard thresholding pursuit (debiased).

    A step grid runs the full solve per candidate tau and keeps the run
    with the smallest final objective; grid entries whose iterates blow up
    are dropped.
    """
    taus = cfg.step_candidates()
    if taus is None:
        taus = (grahtp_auto_step(obj, cfg.s),)
    best: SolveResult | None = None
    failures = []
    for tau in taus:
        try:
            run = _ht_loop(obj, cfg, tau, True, subsolver)
        except (SolverError, SubsolverError) as exc:
            failures.append(f"tau={tau}: {exc}")
            continue
        if best is None or run.objective < best.objective:
            best = run
    if best is None:
        raise SolverError("every step size failed: " + "; ".join(failures))
    return best


def grasp_solve(obj: Objective, cfg: HTConfig,
                subsolver: SubsolverConfig | None = None) -> SolveResult:
    """Gradient support pursuit with the 2s-coordinate merge step."""
    p = obj.dimension
    if not 1 <= cfg.s <= p:
        raise ValueError(f"s must lie in [1, {p}], got {cfg.s}")
    if 2 * cfg.s > p:
        raise ValueError(f"gradient support pursuit needs 2s <= p, got s={cfg.s}, p={p}")

    theta = ParamVector(np.zeros(p), SupportSet((), p), objective=float(obj.value(np.zeros(p))))
    prev_support: SupportSet | None = None
    trace = SolveTrace()
    converged = False
    iterations = 0

    for t in range(1, cfg.max_iter + 1):
        iterations = t
        g = obj.gradient(theta.values)
        if not np.all(np.isfinite(g)):
            raise SolverError(f"gradient became non-finite at iteration {t}")
        z = top_k_indices(g, 2 * cfg.s)
        merged = SupportSet.from_iterable(set(int(j) for j in z) | theta.support.as_set(), p)
        b = obj.restricted_minimize(merged, config=subsolver, warm=theta)
        support = SupportSet.from_iterable(top_k_indices(b.values, cfg.s), p)
        pv = obj.restricted_minimize(support, config=subsolver, warm=b)
        if not (b.stationary and pv.stationary):
            trace.soft_failures += 1
        trace.record(t, support, pv.objective, None)
        moved = float(np.max(np.abs(pv.values - theta.values)))
        stable = prev_support is not None and support == prev_support
        theta = pv
        prev_support = support
        if stable and moved < cfg.stop_tol:
            converged = True
            break

    return SolveResult(theta, theta.support, trace, converged, iterations)
