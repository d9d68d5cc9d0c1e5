"""Shared domain types for the splicing solver and its harness.

Everything downstream (objectives, subsolver, solvers, oracle, bench)
imports from here, so keep this module dependency-light.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np


class SpliceoptError(Exception):
    """Base class for library errors."""


class SubsolverError(SpliceoptError):
    """Restricted minimization failed hard (singular system, non-finite values)."""


class SolverError(SpliceoptError):
    """An outer solver could not produce a usable iterate."""


class ConfigError(SpliceoptError):
    """Invalid experiment or CLI configuration."""


@dataclass(frozen=True)
class SupportSet:
    """An ordered set of coordinate indices inside an ambient dimension p.

    Indices are stored sorted ascending and must be unique and in [0, p).
    """

    indices: tuple[int, ...]
    p: int

    def __post_init__(self) -> None:
        if self.p <= 0:
            raise ValueError(f"ambient dimension must be positive, got {self.p}")
        prev = -1
        for j in self.indices:
            if not isinstance(j, (int, np.integer)):
                raise ValueError(f"support index {j!r} is not an integer")
            if j <= prev:
                raise ValueError("support indices must be strictly increasing")
            if not 0 <= j < self.p:
                raise ValueError(f"support index {j} outside [0, {self.p})")
            prev = j
        # normalize numpy integers so hashing/equality are stable
        object.__setattr__(self, "indices", tuple(int(j) for j in self.indices))

    @classmethod
    def from_iterable(cls, indices, p: int) -> "SupportSet":
        return cls(tuple(sorted(int(j) for j in indices)), p)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, j) -> bool:
        return int(j) in set(self.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)

    def as_set(self) -> frozenset[int]:
        return frozenset(self.indices)

    def complement(self) -> tuple[int, ...]:
        inside = set(self.indices)
        return tuple(j for j in range(self.p) if j not in inside)

    def issubset(self, other: "SupportSet") -> bool:
        return self.as_set() <= other.as_set()


@dataclass
class ParamVector:
    """A dense parameter vector together with its support.

    ``objective`` is filled in by restricted solves.  ``stationary`` is False
    when the subsolver hit its iteration cap before reaching the gradient
    tolerance (soft failure); the iterate is still usable for objective
    comparisons.
    """

    values: np.ndarray
    support: SupportSet
    objective: float | None = None
    stationary: bool = True

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("parameter vector must be one-dimensional")
        if self.values.shape[0] != self.support.p:
            raise ValueError(
                f"vector length {self.values.shape[0]} != ambient dimension {self.support.p}"
            )
        if self.objective is not None and not np.isfinite(self.objective):
            raise ValueError("objective must be finite when populated")
        off = np.ones(self.support.p, dtype=bool)
        off[self.support.as_array()] = False
        if np.any(self.values[off] != 0.0):
            raise ValueError("values must be exactly zero off the support")


@dataclass(frozen=True)
class TraceStep:
    """One accepted outer iteration: support, objective and the swap size used."""

    iteration: int
    support: SupportSet
    objective: float
    chosen_k: int | None
    wall_time: float


@dataclass(frozen=True)
class SkippedCandidate:
    """A candidate support whose restricted solve failed and was skipped."""

    iteration: int
    k: int
    support: SupportSet
    reason: str


@dataclass
class SolveTrace:
    """Per-iteration history of an outer solve."""

    steps: list[TraceStep] = field(default_factory=list)
    skipped: list[SkippedCandidate] = field(default_factory=list)
    soft_failures: int = 0

    def objectives(self) -> list[float]:
        return [s.objective for s in self.steps]

    def supports(self) -> list[SupportSet]:
        return [s.support for s in self.steps]

    def record(self, iteration: int, support: SupportSet, objective: float,
               chosen_k: int | None) -> None:
        self.steps.append(TraceStep(iteration, support, float(objective),
                                    chosen_k, time.perf_counter()))


@dataclass
class SolveResult:
    """Final iterate of an outer solver plus its trace.

    ``converged`` distinguishes a natural stop (no improving candidate /
    stable support) from hitting the iteration cap.
    """

    theta: ParamVector
    support: SupportSet
    trace: SolveTrace
    converged: bool
    outer_iterations: int

    def __post_init__(self) -> None:
        if self.support != self.theta.support:
            raise ValueError("result support must equal the support of theta")

    @property
    def objective(self) -> float:
        if self.theta.objective is None:
            raise ValueError("result objective was never populated")
        return self.theta.objective


def embed(values_on_support: np.ndarray, support: SupportSet) -> np.ndarray:
    """Scatter a reduced vector onto the full space, zero elsewhere."""
    full = np.zeros(support.p)
    full[support.as_array()] = values_on_support
    return full
