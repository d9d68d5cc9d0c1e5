"""Independent verification machinery.

Exhaustive best-subset enumeration (the exactness referee for small
problems), central finite-difference gradient checking, and trace
diagnostics used by the acceptance suite.  Nothing here shares code with
the solvers it checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .objectives import Objective
from .subsolver import SubsolverConfig
from .types import SolveResult, SolveTrace, SupportSet

ENUMERATION_GUARD = 1_000_000


@dataclass(frozen=True)
class OracleResult:
    best_support: SupportSet
    best_objective: float
    evaluated_count: int


def brute_force_best_support(obj: Objective, s: int,
                             subsolver: SubsolverConfig | None = None) -> OracleResult:
    """Enumerate every size-s support and restricted-minimize each.

    Supports are visited in lexicographic order and ties keep the first,
    so the result is deterministic.  Refuses instances with more than 10^6
    candidate supports.
    """
    p = obj.dimension
    if not 1 <= s <= p:
        raise ValueError(f"s must lie in [1, {p}], got {s}")
    total = comb(p, s)
    if total > ENUMERATION_GUARD:
        raise ValueError(
            f"refusing to enumerate C({p},{s}) = {total} supports "
            f"(guard is {ENUMERATION_GUARD})"
        )
    best_support: SupportSet | None = None
    best_objective = np.inf
    for idx in combinations(range(p), s):
        support = SupportSet(idx, p)
        theta = obj.restricted_minimize(support, config=subsolver)
        if theta.objective < best_objective:
            best_objective = theta.objective
            best_support = support
    assert best_support is not None
    return OracleResult(best_support, float(best_objective), total)


def fd_gradient_check(obj: Objective, theta: np.ndarray, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Per-coordinate error is |analytic - numeric| / max(1, |analytic|).
    """
    if step <= 0:
        raise ValueError("step must be positive")
    theta = np.asarray(theta, dtype=float)
    analytic = np.asarray(obj.gradient(theta), dtype=float)
    if not np.all(np.isfinite(analytic)):
        raise ValueError("analytic gradient is not finite")
    worst = 0.0
    for j in range(theta.shape[0]):
        bump = np.zeros_like(theta)
        bump[j] = step
        f_plus = obj.value(theta + bump)
        f_minus = obj.value(theta - bump)
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise ValueError("objective not finite at a perturbed point")
        numeric = (f_plus - f_minus) / (2.0 * step)
        err = abs(analytic[j] - numeric) / max(1.0, abs(analytic[j]))
        worst = max(worst, err)
    return worst


def gap_decay_diagnostics(trace: SolveTrace, f_star: float) -> list[float]:
    """Per-step optimality-gap contraction ratios along a trace.

    Returns |f(t+1) - f*| / |f(t) - f*| for each accepted step; steps whose
    denominator is zero (already optimal) are omitted.  Empty when the
    trace has at most one step.
    """
    objectives = trace.objectives()
    if objectives and f_star > min(objectives) + 1e-9:
        raise ValueError(
            f"f_star={f_star} exceeds the best trace objective {min(objectives)}"
        )
    ratios = []
    for prev, nxt in zip(objectives, objectives[1:]):
        denom = abs(prev - f_star)
        if denom == 0.0:
            continue
        ratios.append(abs(nxt - f_star) / denom)
    return ratios


def relaxed_sparsity_check(result: SolveResult, truth_support: SupportSet,
                           s_star: int) -> tuple[bool, bool]:
    """Over-specified-sparsity diagnostics for a solve with s > s*.

    Returns (the recovered support contains the true one, the s* largest
    magnitudes of the estimate sit exactly on the true support).
    """
    from .splicing import top_k_indices

    if s_star < 1:
        raise ValueError("s_star must be at least 1")
    superset = truth_support.as_set() <= result.support.as_set()
    top = top_k_indices(result.theta.values, s_star)
    top_match = set(int(j) for j in top) == truth_support.as_set()
    return superset, top_match
