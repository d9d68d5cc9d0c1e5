"""Experiment runner: config parsing, trial scheduling, CSV emission.

A run is a cross product (grid point x method x replication).  Every
trial's data seed is derived from the base seed plus a SHA-256 hash of the
generator-relevant grid point and the replication index, so any subset of
a run (one method, one grid value) reproduces the exact rows of the full
run, methods are always compared on identical instances, and the worker
schedule is unobservable in the output.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .baselines import GRAHTP_STEP_GRID, HTConfig, grahtp_solve, grasp_solve, iht_solve
from .datagen import (
    IsingGenConfig,
    LinearGenConfig,
    ProblemInstance,
    gen_ising,
    gen_linear,
    gen_logistic,
)
from .splicing import SpliceConfig, scope_solve
from .types import ConfigError, SolveResult, SolverError, SubsolverError, SupportSet

MODELS = ("linear", "logistic", "ising")
METHODS = ("scope", "iht", "grahtp1", "grahtp2", "grasp")
RESERVED_METHODS = ("gurobi", "lasso")

CSV_HEADER = ("experiment,model,n,p,s,k_max,seed,method,accuracy,runtime_ms,"
              "objective,outer_iterations,converged,support")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment table: a model, grids, methods and a base seed."""

    name: str
    model: str
    n_grid: tuple[int, ...]
    p_grid: tuple[int, ...]
    s_grid: tuple[int, ...]
    k_max_grid: tuple[int | None, ...] = (None,)
    snr: float = 1.0
    rho: float = 0.6
    signal_magnitude: float = 100.0
    coupling_magnitude: float = 0.5
    replications: int = 1
    methods: tuple[str, ...] = ("scope",)
    base_seed: int = 0
    standardize_response: bool = True
    snr_convention: str = "per_sample"
    iht_step: float = 1.0
    output_path: str | None = None

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ConfigError(f"[{self.name}] unknown model {self.model!r}; "
                              f"choose from {MODELS}")
        for label, grid in (("n", self.n_grid), ("p", self.p_grid), ("s", self.s_grid)):
            if not grid:
                raise ConfigError(f"[{self.name}] empty {label} grid")
            if any(v < 1 for v in grid):
                raise ConfigError(f"[{self.name}] every {label} value must be positive")
        if any(k is not None and k < 1 for k in self.k_max_grid):
            raise ConfigError(f"[{self.name}] every k_max value must be positive")
        if self.replications < 1:
            raise ConfigError(f"[{self.name}] replications must be at least 1")
        if not self.methods:
            raise ConfigError(f"[{self.name}] method set is empty")
        for m in self.methods:
            if m in RESERVED_METHODS:
                raise ConfigError(
                    f"[{self.name}] method {m!r} is a reserved slot for an external "
                    f"solver and is not implemented here"
                )
            if m not in METHODS:
                raise ConfigError(f"[{self.name}] unknown method {m!r}; "
                                  f"choose from {METHODS}")
        if not self.snr > 0:
            raise ConfigError(f"[{self.name}] snr must be positive")
        if not 0 <= self.rho < 1:
            raise ConfigError(f"[{self.name}] rho must lie in [0, 1)")


@dataclass(frozen=True)
class GridPoint:
    experiment: str
    model: str
    n: int
    p: int
    s: int
    k_max: int


@dataclass(frozen=True)
class TrialRecord:
    """One (method, instance, seed) result row."""

    experiment: str
    model: str
    n: int
    p: int
    s: int
    k_max: int
    seed: int
    method: str
    accuracy: float | None
    runtime_ms: float
    objective: float | None
    outer_iterations: int | None
    converged: bool
    support: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.accuracy is not None and not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy {self.accuracy} outside [0, 1]")

    def csv_row(self) -> list[str]:
        return [
            self.experiment,
            self.model,
            str(self.n),
            str(self.p),
            str(self.s),
            str(self.k_max),
            str(self.seed),
            self.method,
            "" if self.accuracy is None else repr(self.accuracy),
            f"{self.runtime_ms:.3f}",
            "" if self.objective is None else repr(self.objective),
            "" if self.outer_iterations is None else str(self.outer_iterations),
            "true" if self.converged else "false",
            ";".join(str(j) for j in self.support),
        ]


def accuracy(recovered: SupportSet, truth: SupportSet) -> float:
    """Fraction of true support coordinates that were selected."""
    if len(truth) == 0:
        raise ValueError("truth support is empty; accuracy is undefined")
    return len(recovered.as_set() & truth.as_set()) / len(truth)


def trial_seed(exp: ExperimentConfig, point: GridPoint, replication: int) -> int:
    """Deterministic per-trial data seed.

    The hash covers only generator-relevant fields: the method never enters
    (all methods see the same instance) and neither does k_max (a solver
    knob, so its sweep reuses the same data).
    """
    key = "|".join([
        point.model,
        f"n={point.n}",
        f"p={point.p}",
        f"s={point.s}",
        f"snr={exp.snr!r}",
        f"rho={exp.rho!r}",
        f"mag={exp.signal_magnitude!r}",
        f"coupling={exp.coupling_magnitude!r}",
        f"std={int(exp.standardize_response)}",
        f"conv={exp.snr_convention}",
        f"rep={replication}",
    ])
    digest = hashlib.sha256(key.encode("ascii")).digest()
    return (exp.base_seed + int.from_bytes(digest[:8], "big")) % (1 << 63)


def make_instance(exp: ExperimentConfig, point: GridPoint, seed: int) -> ProblemInstance:
    if point.model == "ising":
        inst, _ = gen_ising(IsingGenConfig(
            p=point.p, s_true=point.s, n=point.n,
            coupling_magnitude=exp.coupling_magnitude, seed=seed,
        ))
        return inst
    cfg = LinearGenConfig(
        n=point.n, p=point.p, s_true=point.s, rho=exp.rho, snr=exp.snr,
        signal_magnitude=exp.signal_magnitude, seed=seed,
        standardize_response=exp.standardize_response,
        snr_convention=exp.snr_convention,
    )
    inst, _ = (gen_linear if point.model == "linear" else gen_logistic)(cfg)
    return inst


def solve_with_method(inst: ProblemInstance, method: str, s: int, k_max: int,
                      iht_step: float = 1.0) -> SolveResult:
    obj = inst.objective
    if method == "scope":
        return scope_solve(obj, SpliceConfig(s=s, k_max=k_max))
    if method == "iht":
        return iht_solve(obj, HTConfig(s=s, step=iht_step))
    if method == "grahtp1":
        return grahtp_solve(obj, HTConfig(s=s, step=None))
    if method == "grahtp2":
        return grahtp_solve(obj, HTConfig(s=s, step=GRAHTP_STEP_GRID))
    if method == "grasp":
        return grasp_solve(obj, HTConfig(s=s))
    raise ConfigError(f"unknown method {method!r}")


def run_trial(exp: ExperimentConfig, point: GridPoint, method: str,
              replication: int) -> TrialRecord:
    """Generate the instance, run one method, time the solve only."""
    seed = trial_seed(exp, point, replication)
    inst = make_instance(exp, point, seed)
    start = time.perf_counter()
    try:
        result = solve_with_method(inst, method, point.s, point.k_max, exp.iht_step)
    except (SolverError, SubsolverError):
        runtime_ms = (time.perf_counter() - start) * 1e3
        return TrialRecord(
            experiment=exp.name, model=point.model, n=point.n, p=point.p,
            s=point.s, k_max=point.k_max, seed=seed, method=method,
            accuracy=None, runtime_ms=runtime_ms, objective=None,
            outer_iterations=None, converged=False, support=(),
        )
    runtime_ms = (time.perf_counter() - start) * 1e3
    return TrialRecord(
        experiment=exp.name, model=point.model, n=point.n, p=point.p,
        s=point.s, k_max=point.k_max, seed=seed, method=method,
        accuracy=accuracy(result.support, inst.truth.support),
        runtime_ms=runtime_ms,
        objective=result.objective,
        outer_iterations=result.outer_iterations,
        converged=result.converged,
        support=result.support.indices,
    )


def grid_points(exp: ExperimentConfig) -> list[GridPoint]:
    """Grid points in deterministic config order; k_max is clamped to s."""
    points = []
    for n in exp.n_grid:
        for p in exp.p_grid:
            for s in exp.s_grid:
                for k in exp.k_max_grid:
                    k_eff = s if k is None else min(k, s)
                    points.append(GridPoint(exp.name, exp.model, n, p, s, k_eff))
    # clamping can collapse k_max values onto each other; keep first
    seen: set[GridPoint] = set()
    unique = []
    for pt in points:
        if pt not in seen:
            seen.add(pt)
            unique.append(pt)
    return unique


def plan_trials(exps: list[ExperimentConfig],
                method_filter: str | None = None) -> list[tuple[ExperimentConfig, GridPoint, str, int]]:
    plan = []
    for exp in exps:
        methods = [m for m in exp.methods
                   if method_filter is None or m == method_filter]
        for point in grid_points(exp):
            for method in methods:
                for rep in range(exp.replications):
                    plan.append((exp, point, method, rep))
    return plan


def run_grid(exps: list[ExperimentConfig], out_path: str | Path,
             threads: int = 1, method_filter: str | None = None) -> list[TrialRecord]:
    """Run every planned trial and write one CSV row per trial.

    Rows appear in plan order (grid point, method, replication) regardless
    of the worker schedule.  The output file is written atomically; nothing
    partial is left behind on failure.
    """
    plan = plan_trials(exps, method_filter)
    if not plan:
        raise ConfigError("nothing to run (empty plan after filtering)")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda item: run_trial(*item), plan))
    else:
        records = [run_trial(*item) for item in plan]

    out_path = Path(out_path)
    tmp_path = out_path.with_name(out_path.name + ".tmp")
    try:
        with open(tmp_path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER.split(","))
            for rec in records:
                writer.writerow(rec.csv_row())
        os.replace(tmp_path, out_path)
    except BaseException:
        tmp_path.unlink(missing_ok=True)
        raise
    return records


_KNOWN_KEYS = {
    "model", "n", "p", "s", "k_max", "snr", "rho", "signal_magnitude",
    "coupling_magnitude", "replications", "methods", "base_seed",
    "standardize_response", "snr_convention", "iht_step", "output",
}


def _parse_int_list(raw: str, key: str, section: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: expected integers, got {raw!r}") from exc


def _parse_float(raw: str, key: str, section: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from exc


def _parse_bool(raw: str, key: str, section: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"[{section}] {key}: expected a boolean, got {raw!r}")


def parse_config(path: str | Path) -> list[ExperimentConfig]:
    """Parse an experiment file: one INI table per experiment.

    Grammar: ``[name]`` opens an experiment; keys are scalars or
    comma/space-separated integer lists (n, p, s, k_max) and a
    comma-separated method list.  Unknown keys are rejected.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not parser.sections():
        raise ConfigError(f"{path}: no experiment tables found")

    exps = []
    for section in parser.sections():
        table = dict(parser.items(section))
        unknown = set(table) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"[{section}] unknown keys: {sorted(unknown)}")
        if "model" not in table:
            raise ConfigError(f"[{section}] missing required key 'model'")
        for key in ("n", "p", "s"):
            if key not in table:
                raise ConfigError(f"[{section}] missing required key {key!r}")
        kwargs = dict(
            name=section,
            model=table["model"].strip(),
            n_grid=_parse_int_list(table["n"], "n", section),
            p_grid=_parse_int_list(table["p"], "p", section),
            s_grid=_parse_int_list(table["s"], "s", section),
        )
        if "k_max" in table:
            kwargs["k_max_grid"] = _parse_int_list(table["k_max"], "k_max", section)
        if "snr" in table:
            raw = table["snr"].strip().lower()
            kwargs["snr"] = math.inf if raw in ("inf", "noiseless") else \
                _parse_float(table["snr"], "snr", section)
        if "rho" in table:
            kwargs["rho"] = _parse_float(table["rho"], "rho", section)
        if "signal_magnitude" in table:
            kwargs["signal_magnitude"] = _parse_float(
                table["signal_magnitude"], "signal_magnitude", section)
        if "coupling_magnitude" in table:
            kwargs["coupling_magnitude"] = _parse_float(
                table["coupling_magnitude"], "coupling_magnitude", section)
        if "replications" in table:
            kwargs["replications"] = _parse_int_list(
                table["replications"], "replications", section)[0]
        if "methods" in table:
            kwargs["methods"] = tuple(
                tok.strip() for tok in table["methods"].replace(",", " ").split()
            )
        if "base_seed" in table:
            kwargs["base_seed"] = _parse_int_list(table["base_seed"], "base_seed", section)[0]
        if "standardize_response" in table:
            kwargs["standardize_response"] = _parse_bool(
                table["standardize_response"], "standardize_response", section)
        if "snr_convention" in table:
            conv = table["snr_convention"].strip()
            if conv not in ("per_sample", "total"):
                raise ConfigError(f"[{section}] snr_convention must be "
                                  f"'per_sample' or 'total', got {conv!r}")
            kwargs["snr_convention"] = conv
        if "iht_step" in table:
            kwargs["iht_step"] = _parse_float(table["iht_step"], "iht_step", section)
        if "output" in table:
            kwargs["output_path"] = table["output"].strip()
        exps.append(ExperimentConfig(**kwargs))
    return exps


def with_methods(exp: ExperimentConfig, methods: tuple[str, ...]) -> ExperimentConfig:
    return replace(exp, methods=methods)
