"""Command-line benchmark runner.

Subcommands:

* ``run <config> --out <path> [--threads N] [--filter method=NAME]``
  executes every experiment table in the config and writes one CSV row
  per (grid point, method, replication).
* ``oracle <config>`` reruns each trial with the splicing solver and the
  exhaustive-enumeration oracle side by side (desk-scale instances only)
  and reports support agreement and objective dominance.
* ``check`` runs the gradient/property self-test suite.

Exit codes: 0 success, 1 configuration error, 2 solver or infrastructure
error.
"""

from __future__ import annotations

import argparse
import sys
from math import comb

import numpy as np

from .bench import make_instance, grid_points, parse_config, run_grid, trial_seed
from .datagen import IsingGenConfig, LinearGenConfig, gen_ising, gen_linear, gen_logistic
from .oracle import ENUMERATION_GUARD, brute_force_best_support, fd_gradient_check
from .splicing import SpliceConfig, scope_solve
from .types import ConfigError, SolverError, SpliceoptError, SubsolverError


def _cmd_run(args: argparse.Namespace) -> int:
    exps = parse_config(args.config)
    method_filter = None
    if args.filter:
        key, _, value = args.filter.partition("=")
        if key != "method" or not value:
            raise ConfigError(f"unsupported filter {args.filter!r}; use method=NAME")
        method_filter = value
    records = run_grid(exps, args.out, threads=args.threads,
                       method_filter=method_filter)
    print(f"wrote {len(records)} trial rows to {args.out}")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    exps = parse_config(args.config)
    dominance_ok = True
    for exp in exps:
        agree = total = 0
        for point in grid_points(exp):
            dim = point.p * (point.p - 1) // 2 if exp.model == "ising" else point.p
            if comb(dim, point.s) > ENUMERATION_GUARD:
                raise ConfigError(
                    f"[{exp.name}] C({dim},{point.s}) supports exceed the "
                    f"oracle guard of {ENUMERATION_GUARD}; shrink the instance"
                )
            for rep in range(exp.replications):
                inst = make_instance(exp, point, trial_seed(exp, point, rep))
                result = scope_solve(inst.objective, SpliceConfig(s=point.s,
                                                                  k_max=point.k_max))
                ref = brute_force_best_support(inst.objective, point.s)
                total += 1
                if result.support == ref.best_support:
                    agree += 1
                if result.objective < ref.best_objective - 1e-8:
                    dominance_ok = False
                    print(f"[{exp.name}] dominance violated: solver "
                          f"{result.objective} < oracle {ref.best_objective}")
        print(f"[{exp.name}] support agreement with enumeration: {agree}/{total}")
    if not dominance_ok:
        raise SolverError("oracle dominance violated; enumeration or solver is broken")
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    failures = 0

    def report(label: str, ok: bool, detail: str) -> None:
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
        failures += 0 if ok else 1

    rng = np.random.default_rng(20240901)
    for model in ("linear", "logistic", "ising"):
        worst = 0.0
        for rep in range(10):
            seed = int(rng.integers(1 << 31))
            if model == "ising":
                inst, _ = gen_ising(IsingGenConfig(p=5, s_true=3, n=40, seed=seed))
            else:
                cfg = LinearGenConfig(n=30, p=12, s_true=3, signal_magnitude=1.0,
                                      seed=seed)
                inst, _ = (gen_linear if model == "linear" else gen_logistic)(cfg)
            dim = inst.objective.dimension
            theta = np.zeros(dim)
            picks = rng.choice(dim, size=min(6, dim), replace=False)
            theta[picks] = rng.standard_normal(len(picks))
            worst = max(worst, fd_gradient_check(inst.objective, theta))
        report(f"{model} gradient", worst < 1e-5,
               f"max finite-difference relative error {worst:.2e}")

    cfg = LinearGenConfig(n=40, p=12, s_true=3, signal_magnitude=1.0, seed=7)
    inst, _ = gen_linear(cfg)
    obj = inst.objective
    ok = True
    for _ in range(20):
        a = rng.standard_normal(obj.dimension)
        b = rng.standard_normal(obj.dimension)
        for lam in (0.25, 0.5, 0.75):
            mid = obj.value(lam * a + (1 - lam) * b)
            if mid > lam * obj.value(a) + (1 - lam) * obj.value(b) + 1e-10:
                ok = False
    report("convexity witness", ok, "midpoint inequality on random pairs")

    from .types import SupportSet
    support = SupportSet((0, 3, 7), obj.dimension)
    pv = obj.restricted_minimize(support)
    g = obj.gradient(pv.values)[support.as_array()]
    stat = float(np.max(np.abs(g)))
    report("restricted stationarity", stat <= 1e-8,
           f"sup-norm restricted gradient {stat:.2e}")

    if failures:
        raise SolverError(f"{failures} self-check(s) failed")
    print("all checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spliceopt",
        description="Benchmark harness for sparsity-constrained solvers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment grid and emit CSV")
    run_p.add_argument("config", help="experiment config file (INI tables)")
    run_p.add_argument("--out", required=True, help="output CSV path")
    run_p.add_argument("--threads", type=int, default=1,
                       help="worker threads for trials (default 1)")
    run_p.add_argument("--filter", default=None,
                       help="restrict to one method, e.g. method=scope")
    run_p.set_defaults(handler=_cmd_run)

    oracle_p = sub.add_parser("oracle",
                              help="referee a small config against enumeration")
    oracle_p.add_argument("config")
    oracle_p.set_defaults(handler=_cmd_oracle)

    check_p = sub.add_parser("check", help="gradient and property self-tests")
    check_p.set_defaults(handler=_cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, SubsolverError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SpliceoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
