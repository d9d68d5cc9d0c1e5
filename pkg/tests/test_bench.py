from __future__ import annotations

import csv

import pytest

from spliceopt import ConfigError, SupportSet, accuracy, parse_config, run_grid
from spliceopt.bench import (
    CSV_HEADER,
    ExperimentConfig,
    grid_points,
    plan_trials,
    run_trial,
    trial_seed,
)
from spliceopt.cli import main as cli_main

MINI_CONFIG = """
[mini-linear]
model = linear
n = 40, 80
p = 12
s = 3
snr = 4.0
rho = 0.6
signal_magnitude = 10
replications = 3
methods = scope, grasp
base_seed = 2024
"""


def write_config(tmp_path, text=MINI_CONFIG, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def strip_runtime(csv_path):
    rows = list(csv.reader(open(csv_path)))
    idx = rows[0].index("runtime_ms")
    for row in rows[1:]:
        row[idx] = "X"
    return rows


class TestAccuracy:
    def test_partial_overlap(self):
        rec = SupportSet((1, 2, 3), 10)
        truth = SupportSet((1, 2, 4), 10)
        assert accuracy(rec, truth) == pytest.approx(2.0 / 3.0)

    def test_perfect(self):
        s = SupportSet((0, 5), 8)
        assert accuracy(s, s) == 1.0

    def test_disjoint(self):
        assert accuracy(SupportSet((0,), 4), SupportSet((3,), 4)) == 0.0

    def test_empty_truth_rejected(self):
        with pytest.raises(ValueError):
            accuracy(SupportSet((0,), 4), SupportSet((), 4))


def mini_exp(**overrides):
    base = dict(
        name="t", model="linear", n_grid=(40,), p_grid=(12,), s_grid=(3,),
        snr=4.0, signal_magnitude=10.0, replications=2,
        methods=("scope",), base_seed=7,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfigValidation:
    def test_reserved_methods_rejected_with_message(self):
        with pytest.raises(ConfigError, match="reserved"):
            mini_exp(methods=("scope", "gurobi"))
        with pytest.raises(ConfigError, match="reserved"):
            mini_exp(methods=("lasso",))

    def test_unknown_method(self):
        with pytest.raises(ConfigError, match="unknown method"):
            mini_exp(methods=("homotopy",))

    @pytest.mark.parametrize("overrides", [
        {"model": "poisson"}, {"n_grid": ()}, {"s_grid": (0,)},
        {"replications": 0}, {"methods": ()}, {"snr": 0.0}, {"rho": 1.0},
    ])
    def test_bad_values(self, overrides):
        with pytest.raises(ConfigError):
            mini_exp(**overrides)


class TestSeedDerivation:
    def test_independent_of_method_and_k_max(self):
        exp = mini_exp(methods=("scope", "grasp"), k_max_grid=(1, 3))
        pts = grid_points(exp)
        seeds = {trial_seed(exp, pt, 0) for pt in pts}
        assert len(seeds) == 1  # k_max sweeps reuse the same instance

    def test_depends_on_grid_point_and_rep(self):
        exp = mini_exp(n_grid=(40, 80))
        a, b = grid_points(exp)
        assert trial_seed(exp, a, 0) != trial_seed(exp, b, 0)
        assert trial_seed(exp, a, 0) != trial_seed(exp, a, 1)

    def test_base_seed_shifts(self):
        e1, e2 = mini_exp(base_seed=1), mini_exp(base_seed=2)
        pt = grid_points(e1)[0]
        assert trial_seed(e1, pt, 0) != trial_seed(e2, pt, 0)


class TestRunTrial:
    def test_deterministic_except_runtime(self):
        exp = mini_exp()
        pt = grid_points(exp)[0]
        a = run_trial(exp, pt, "scope", 0)
        b = run_trial(exp, pt, "scope", 0)
        assert a.csv_row()[:9] == b.csv_row()[:9]
        assert a.csv_row()[10:] == b.csv_row()[10:]

    def test_oracle_dominance_at_desk_scale(self):
        from spliceopt import brute_force_best_support
        from spliceopt.bench import make_instance
        exp = mini_exp(n_grid=(50,), p_grid=(10,), s_grid=(3,))
        pt = grid_points(exp)[0]
        rec = run_trial(exp, pt, "scope", 0)
        inst = make_instance(exp, pt, rec.seed)
        ref = brute_force_best_support(inst.objective, 3)
        assert rec.objective >= ref.best_objective - 1e-8

    def test_accuracy_bounds(self):
        exp = mini_exp(replications=4)
        pt = grid_points(exp)[0]
        for rep in range(4):
            rec = run_trial(exp, pt, "scope", rep)
            assert 0.0 <= rec.accuracy <= 1.0
            if rec.accuracy == 1.0 and len(rec.support) == 3:
                from spliceopt.bench import make_instance
                inst = make_instance(exp, pt, rec.seed)
                assert set(rec.support) == inst.truth.support.as_set()


class TestRunGrid:
    def test_row_count(self, tmp_path):
        exps = parse_config(write_config(tmp_path))
        out = tmp_path / "out.csv"
        records = run_grid(exps, out)
        lines = out.read_text().splitlines()
        assert len(records) == 2 * 2 * 3  # points x methods x reps
        assert len(lines) == 1 + 12
        assert lines[0] == CSV_HEADER

    def test_rerun_identical_modulo_runtime(self, tmp_path):
        exps = parse_config(write_config(tmp_path))
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_grid(exps, out1)
        run_grid(exps, out2)
        assert strip_runtime(out1) == strip_runtime(out2)

    def test_threads_do_not_change_rows(self, tmp_path):
        exps = parse_config(write_config(tmp_path))
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_grid(exps, out1, threads=1)
        run_grid(exps, out2, threads=4)
        assert strip_runtime(out1) == strip_runtime(out2)

    def test_method_subset_reproduces_matching_rows(self, tmp_path):
        exps = parse_config(write_config(tmp_path))
        full, subset = tmp_path / "full.csv", tmp_path / "sub.csv"
        run_grid(exps, full)
        run_grid(exps, subset, method_filter="scope")
        full_rows = [r for r in strip_runtime(full)[1:] if r[7] == "scope"]
        sub_rows = strip_runtime(subset)[1:]
        assert full_rows == sub_rows

    def test_support_column_semicolon_joined(self, tmp_path):
        exps = parse_config(write_config(tmp_path))
        out = tmp_path / "out.csv"
        run_grid(exps, out)
        rows = list(csv.reader(open(out)))
        support = rows[1][rows[0].index("support")]
        parts = [int(tok) for tok in support.split(";")]
        assert parts == sorted(parts)
        assert len(parts) <= 3


class TestConfigParsing:
    def test_parses_mini(self, tmp_path):
        exps = parse_config(write_config(tmp_path))
        assert len(exps) == 1
        exp = exps[0]
        assert exp.name == "mini-linear"
        assert exp.n_grid == (40, 80)
        assert exp.methods == ("scope", "grasp")
        assert exp.base_seed == 2024

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "nope.ini")

    def test_missing_required_key(self, tmp_path):
        path = write_config(tmp_path, "[x]\nmodel = linear\nn = 10\np = 5\n")
        with pytest.raises(ConfigError, match="'s'"):
            parse_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = write_config(
            tmp_path, "[x]\nmodel = linear\nn = 10\np = 5\ns = 2\nsnrr = 1\n")
        with pytest.raises(ConfigError, match="snrr"):
            parse_config(path)

    def test_noiseless_spelling(self, tmp_path):
        path = write_config(
            tmp_path, "[x]\nmodel = linear\nn = 10\np = 5\ns = 2\nsnr = inf\n")
        assert parse_config(path)[0].snr == float("inf")

    def test_k_max_clamped_to_s(self):
        exp = mini_exp(s_grid=(3,), k_max_grid=(5,))
        assert grid_points(exp)[0].k_max == 3

    def test_plan_order_is_point_method_rep(self):
        exp = mini_exp(n_grid=(40, 80), methods=("scope", "grasp"), replications=2)
        plan = plan_trials([exp])
        keys = [(pt.n, m, r) for _, pt, m, r in plan]
        assert keys == sorted(keys, key=lambda k: (k[0], ["scope", "grasp"].index(k[1]), k[2]))


class TestCli:
    def test_run_roundtrip(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        out = tmp_path / "cli.csv"
        assert cli_main(["run", str(cfg), "--out", str(out)]) == 0
        assert out.exists()
        assert "12 trial rows" in capsys.readouterr().out

    def test_bad_config_is_exit_1(self, tmp_path, capsys):
        path = write_config(tmp_path, "[x]\nmodel = linear\nn = 10\np = 5\n")
        assert cli_main(["run", str(path), "--out", str(tmp_path / "o.csv")]) == 1
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file_is_exit_1(self, tmp_path):
        assert cli_main(["run", str(tmp_path / "none.ini"),
                         "--out", str(tmp_path / "o.csv")]) == 1

    def test_reserved_method_is_exit_1(self, tmp_path, capsys):
        path = write_config(
            tmp_path,
            "[x]\nmodel = linear\nn = 10\np = 5\ns = 2\nmethods = lasso\n")
        assert cli_main(["run", str(path), "--out", str(tmp_path / "o.csv")]) == 1
        assert "reserved" in capsys.readouterr().err

    def test_filter_flag(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "f.csv"
        assert cli_main(["run", str(cfg), "--out", str(out),
                         "--filter", "method=scope"]) == 0
        rows = list(csv.reader(open(out)))
        assert all(r[7] == "scope" for r in rows[1:])

    def test_bad_filter_is_exit_1(self, tmp_path):
        cfg = write_config(tmp_path)
        assert cli_main(["run", str(cfg), "--out", str(tmp_path / "o.csv"),
                         "--filter", "bogus"]) == 1

    def test_oracle_command(self, tmp_path, capsys):
        cfg = write_config(tmp_path, """
[tiny]
model = linear
n = 40
p = 10
s = 3
snr = 8.0
signal_magnitude = 10
replications = 2
methods = scope
base_seed = 5
""")
        assert cli_main(["oracle", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert "support agreement" in out

    def test_check_command(self, capsys):
        assert cli_main(["check"]) == 0
        out = capsys.readouterr().out
        assert "all checks passed" in out
