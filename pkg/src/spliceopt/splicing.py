"""Support splicing for sparsity-constrained minimization.

The solver keeps a support of fixed cardinality s and, at each outer
iteration, scores every coordinate (squared coefficient if active, squared
gradient if inactive), proposes candidate supports by swapping the k
least-relevant active coordinates for the k most-relevant inactive ones
(k = 1..k_max), restricted-minimizes each candidate, and accepts the best
candidate if it strictly decreases the objective.  No continuous step size
exists anywhere, and every tie is broken toward the lower index, so runs
are bit-for-bit reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objectives import Objective
from .subsolver import SubsolverConfig
from .types import (
    ParamVector,
    SkippedCandidate,
    SolveResult,
    SolverError,
    SolveTrace,
    SubsolverError,
    SupportSet,
)


def top_k_indices(v: np.ndarray, t: int) -> np.ndarray:
    """Indices of the t largest-magnitude entries, ties to the lower index."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError("expected a one-dimensional vector")
    if not 1 <= t <= v.shape[0]:
        raise ValueError(f"t must lie in [1, {v.shape[0]}], got {t}")
    order = np.argsort(-np.abs(v), kind="stable")
    return np.sort(order[:t])


def hard_threshold(v: np.ndarray, t: int) -> np.ndarray:
    """Keep the t largest-magnitude entries of v, zero out the rest."""
    v = np.asarray(v, dtype=float)
    keep = top_k_indices(v, t)
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out


@dataclass(frozen=True)
class RelevanceScores:
    """Per-coordinate relevance: theta_j^2 on the support, grad_j^2 off it."""

    active: dict[int, float]
    inactive: dict[int, float]
    p: int

    def __post_init__(self) -> None:
        keys = set(self.active) | set(self.inactive)
        if set(self.active) & set(self.inactive):
            raise ValueError("active and inactive scores overlap")
        if keys != set(range(self.p)):
            raise ValueError("active/inactive keys must partition [0, p)")


def relevance_scores(theta: ParamVector, grad: np.ndarray) -> RelevanceScores:
    """Score coordinates of a restricted minimizer for exchange ranking."""
    grad = np.asarray(grad, dtype=float)
    p = theta.support.p
    if grad.shape != (p,):
        raise ValueError(f"gradient has shape {grad.shape}, expected ({p},)")
    inside = theta.support.as_set()
    active = {j: float(theta.values[j]) ** 2 for j in theta.support}
    inactive = {j: float(grad[j]) ** 2 for j in range(p) if j not in inside}
    return RelevanceScores(active, inactive, p)


def exchange_sets(scores: RelevanceScores, k: int) -> tuple[SupportSet, SupportSet]:
    """The k active coordinates with smallest scores and the k inactive ones
    with largest scores.

    Ties go to the lower index (deterministic traces beat the footnote's
    coin flip), which also makes the sets nest as k grows.
    """
    limit = min(len(scores.active), len(scores.inactive))
    if not 1 <= k <= limit:
        raise ValueError(f"k must lie in [1, {limit}], got {k}")
    drop = sorted(scores.active.items(), key=lambda kv: (kv[1], kv[0]))[:k]
    add = sorted(scores.inactive.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    s_a = SupportSet.from_iterable((j for j, _ in drop), scores.p)
    s_i = SupportSet.from_iterable((j for j, _ in add), scores.p)
    return s_a, s_i


def init_support(objective: Objective, s: int) -> SupportSet:
    """Gradient-at-zero initialization: the s largest squared gradient entries."""
    p = objective.dimension
    if not 1 <= s <= p:
        raise ValueError(f"s must lie in [1, {p}], got {s}")
    g0 = np.asarray(objective.gradient(np.zeros(p)), dtype=float)
    order = np.argsort(-(g0 ** 2), kind="stable")
    return SupportSet.from_iterable(order[:s], p)


@dataclass(frozen=True)
class SpliceConfig:
    """Outer-loop knobs.

    k_max defaults to s (resolved at solve time), the choice backing the
    solver's guarantees; accept_tol=0 is the plain strict-decrease rule and
    only needs raising when inexact subsolves produce epsilon-sized fake
    improvements.  max_outer_iter is a cap against floating-point cycling;
    exact arithmetic terminates on its own.
    """

    s: int
    k_max: int | None = None
    max_outer_iter: int = 100
    accept_tol: float = 0.0

    def __post_init__(self) -> None:
        if self.s < 1:
            raise ValueError("sparsity level s must be at least 1")
        if self.k_max is not None and not 1 <= self.k_max <= self.s:
            raise ValueError(f"k_max must lie in [1, s={self.s}], got {self.k_max}")
        if self.max_outer_iter < 1:
            raise ValueError("max_outer_iter must be at least 1")
        if self.accept_tol < 0:
            raise ValueError("accept_tol must be nonnegative")

    def resolved_k_max(self) -> int:
        return self.s if self.k_max is None else self.k_max


def splice_iteration(theta: ParamVector, objective: Objective, cfg: SpliceConfig,
                     subsolver: SubsolverConfig | None = None,
                     trace: SolveTrace | None = None,
                     iteration: int = 0) -> tuple[ParamVector, bool, int | None]:
    """One exchange round.

    Builds the swap candidate for every k up to k_max, restricted-minimizes
    each (warm-started from theta), and returns the best one if it beats
    f(theta) by more than accept_tol; otherwise theta comes back unchanged.
    Among equal candidate objectives the smallest k wins.  Candidates whose
    restricted solve fails hard are skipped (and logged to the trace); if
    every candidate fails, that is a solver error.
    """
    if theta.objective is None:
        raise ValueError("theta must carry its restricted-minimum objective")
    support = theta.support
    p, s = support.p, len(support)
    k_hi = min(cfg.resolved_k_max(), s, p - s)
    if k_hi < 1:
        return theta, False, None

    grad = objective.gradient(theta.values)
    if not np.all(np.isfinite(grad)):
        raise SolverError("gradient not finite at the current iterate")
    scores = relevance_scores(theta, grad)

    best: ParamVector | None = None
    best_k: int | None = None
    attempted = 0
    for k in range(1, k_hi + 1):
        s_a, s_i = exchange_sets(scores, k)
        cand = SupportSet.from_iterable(
            (support.as_set() - s_a.as_set()) | s_i.as_set(), p
        )
        attempted += 1
        try:
            cand_theta = objective.restricted_minimize(cand, config=subsolver, warm=theta)
        except SubsolverError as exc:
            if trace is not None:
                trace.skipped.append(SkippedCandidate(iteration, k, cand, str(exc)))
            continue
        if trace is not None and not cand_theta.stationary:
            trace.soft_failures += 1
        if best is None or cand_theta.objective < best.objective:
            best, best_k = cand_theta, k

    if best is None:
        if attempted:
            raise SolverError(
                f"every candidate restricted solve failed at iteration {iteration}"
            )
        return theta, False, None
    if best.objective < theta.objective - cfg.accept_tol:
        return best, True, best_k
    return theta, False, None


def scope_solve(objective: Objective, cfg: SpliceConfig,
                init: SupportSet | None = None,
                subsolver: SubsolverConfig | None = None) -> SolveResult:
    """Run the splicing loop to convergence.

    Starts from ``init`` (default: the gradient-at-zero support), iterates
    ``splice_iteration`` until no candidate improves, and reports whether
    the stop was natural (``converged=True``) or the iteration cap.  Trace
    objectives strictly decrease across accepted iterations and every
    support in the trace has cardinality s.
    """
    p = objective.dimension
    if not 1 <= cfg.s <= p:
        raise ValueError(f"s must lie in [1, {p}], got {cfg.s}")
    if init is None:
        init = init_support(objective, cfg.s)
    else:
        if init.p != p:
            raise ValueError("init support has the wrong ambient dimension")
        if len(init) != cfg.s:
            raise ValueError(f"init support must have cardinality {cfg.s}")

    trace = SolveTrace()
    try:
        theta = objective.restricted_minimize(init, config=subsolver)
    except SubsolverError as exc:
        raise SolverError(f"restricted solve failed on the initial support: {exc}") from exc
    if not theta.stationary:
        trace.soft_failures += 1
    trace.record(0, init, theta.objective, None)

    converged = False
    outer = 0
    for t in range(1, cfg.max_outer_iter + 1):
        outer = t
        theta_next, changed, chosen_k = splice_iteration(
            theta, objective, cfg, subsolver, trace, iteration=t
        )
        if not changed:
            converged = True
            break
        trace.record(t, theta_next.support, theta_next.objective, chosen_k)
        theta = theta_next

    return SolveResult(theta, theta.support, trace, converged, outer)
