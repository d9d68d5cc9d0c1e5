from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from spliceopt import (
    ParamVector,
    QuadraticObjective,
    SolverError,
    SpliceConfig,
    SupportSet,
    brute_force_best_support,
    exchange_sets,
    hard_threshold,
    init_support,
    relevance_scores,
    scope_solve,
    splice_iteration,
    top_k_indices,
)
from spliceopt.splicing import RelevanceScores

from conftest import FailingSupports, separable_quadratic

finite_vectors = st.lists(
    st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False),
    min_size=1, max_size=12,
).map(np.array)


class TestHardThreshold:
    def test_top2_unambiguous(self):
        assert_allclose(hard_threshold(np.array([1.0, -5.0, 3.0, 0.0]), 2),
                        [0.0, -5.0, 3.0, 0.0])

    def test_identity_when_t_equals_length(self):
        assert_allclose(hard_threshold(np.array([3.0, 0.0, 1.0]), 3), [3.0, 0.0, 1.0])

    def test_tie_keeps_lower_index(self):
        assert_allclose(hard_threshold(np.array([2.0, -2.0, 0.0]), 1), [2.0, 0.0, 0.0])

    @pytest.mark.parametrize("t", [0, 4, -1])
    def test_out_of_range(self, t):
        with pytest.raises(ValueError):
            hard_threshold(np.array([1.0, 2.0, 3.0]), t)

    @given(v=finite_vectors, data=st.data())
    @settings(max_examples=100, deadline=None)
    def test_selection_properties(self, v, data):
        t = data.draw(st.integers(1, len(v)))
        out = hard_threshold(v, t)
        kept = np.nonzero(out)[0]
        selected = top_k_indices(v, t)
        assert len(selected) == t
        # kept entries are untouched, dropped ones zeroed
        assert_allclose(out[selected], v[selected])
        dropped = np.setdiff1d(np.arange(len(v)), selected)
        assert np.all(out[dropped] == 0.0)
        assert set(kept) <= set(selected)
        # no dropped magnitude exceeds a kept one
        if len(dropped) and len(selected):
            assert np.max(np.abs(v[dropped])) <= np.min(np.abs(v[selected]))
        # idempotence
        assert_allclose(hard_threshold(out, t), out)


class TestRelevanceScores:
    def test_separable_quadratic_example(self):
        # f = 0.5*||theta - (3,1,2)||^2 restricted to the third coordinate
        obj = separable_quadratic([3.0, 1.0, 2.0])
        support = SupportSet((2,), 3)
        theta = obj.restricted_minimize(support)
        assert_allclose(theta.values, [0.0, 0.0, 2.0])
        grad = obj.gradient(theta.values)
        assert_allclose(grad, [-3.0, -1.0, 0.0], atol=1e-12)
        scores = relevance_scores(theta, grad)
        assert scores.active == pytest.approx({2: 4.0})
        assert scores.inactive == pytest.approx({0: 9.0, 1: 1.0})

    def test_zero_on_support_gives_zero_active_scores(self):
        theta = ParamVector(np.zeros(4), SupportSet((1, 2), 4))
        scores = relevance_scores(theta, np.array([1.0, 0.0, 0.0, 2.0]))
        assert scores.active == {1: 0.0, 2: 0.0}

    def test_zero_gradient_gives_zero_inactive_scores(self):
        vals = np.array([0.0, 1.0, 0.0, 0.0])
        theta = ParamVector(vals, SupportSet((1,), 4))
        scores = relevance_scores(theta, np.zeros(4))
        assert scores.inactive == {0: 0.0, 2: 0.0, 3: 0.0}

    def test_gradient_length_checked(self):
        theta = ParamVector(np.zeros(3), SupportSet((0,), 3))
        with pytest.raises(ValueError):
            relevance_scores(theta, np.zeros(4))

    def test_partition_enforced(self):
        with pytest.raises(ValueError):
            RelevanceScores({0: 1.0}, {0: 2.0, 1: 0.0}, 2)


class TestExchangeSets:
    def test_unique_extrema(self):
        scores = RelevanceScores({2: 4.0}, {0: 9.0, 1: 1.0}, 3)
        s_a, s_i = exchange_sets(scores, 1)
        assert s_a.indices == (2,)
        assert s_i.indices == (0,)

    def test_tie_forces_lowest_index(self):
        scores = RelevanceScores({0: 2.0, 1: 2.0}, {2: 5.0}, 3)
        s_a, s_i = exchange_sets(scores, 1)
        assert s_a.indices == (0,)
        assert s_i.indices == (2,)

    def test_full_swap(self):
        scores = RelevanceScores({0: 1.0, 1: 2.0}, {2: 3.0, 3: 0.0}, 4)
        s_a, _ = exchange_sets(scores, 2)
        assert s_a.indices == (0, 1)

    def test_k_out_of_range(self):
        scores = RelevanceScores({0: 1.0}, {1: 1.0, 2: 2.0}, 3)
        with pytest.raises(ValueError):
            exchange_sets(scores, 2)  # capped by |active| = 1

    @given(data=st.data())
    @settings(max_examples=60, deadline=None)
    def test_nesting_in_k(self, data):
        p = data.draw(st.integers(4, 10))
        cut = data.draw(st.integers(1, p - 1))
        vals = data.draw(st.lists(st.floats(0, 100, allow_nan=False),
                                  min_size=p, max_size=p))
        active = {j: vals[j] for j in range(cut)}
        inactive = {j: vals[j] for j in range(cut, p)}
        scores = RelevanceScores(active, inactive, p)
        k_hi = min(len(active), len(inactive))
        prev_a, prev_i = set(), set()
        for k in range(1, k_hi + 1):
            s_a, s_i = exchange_sets(scores, k)
            assert len(s_a) == len(s_i) == k
            assert s_a.as_set() <= set(active)
            assert s_i.as_set() <= set(inactive)
            assert prev_a <= s_a.as_set()
            assert prev_i <= s_i.as_set()
            prev_a, prev_i = set(s_a.as_set()), set(s_i.as_set())


class TestInitSupport:
    def test_separable_quadratic(self):
        obj = separable_quadratic([3.0, 1.0, 2.0])
        assert init_support(obj, 2).indices == (0, 2)

    def test_s_equals_p(self):
        obj = separable_quadratic([1.0, 2.0, 3.0])
        assert init_support(obj, 3).indices == (0, 1, 2)

    def test_all_tied_takes_first_indices(self):
        obj = separable_quadratic([0.0, 0.0, 0.0, 0.0])
        assert init_support(obj, 2).indices == (0, 1)

    def test_s_out_of_range(self):
        obj = separable_quadratic([1.0, 2.0])
        with pytest.raises(ValueError):
            init_support(obj, 3)


class TestSpliceIteration:
    def test_accepts_improving_swap(self):
        obj = separable_quadratic([3.0, 1.0, 2.0])
        theta = obj.restricted_minimize(SupportSet((2,), 3))
        assert theta.objective == pytest.approx(5.0)
        nxt, changed, k = splice_iteration(theta, obj, SpliceConfig(s=1))
        assert changed and k == 1
        assert nxt.support.indices == (0,)
        assert nxt.objective == pytest.approx(2.5)

    def test_no_improvement_at_optimum(self):
        obj = separable_quadratic([3.0, 1.0, 2.0])
        best = brute_force_best_support(obj, 1)
        theta = obj.restricted_minimize(best.best_support)
        nxt, changed, k = splice_iteration(theta, obj, SpliceConfig(s=1))
        assert not changed and k is None
        assert nxt is theta

    def test_k1_optimal_swap_same_for_any_k_max(self):
        # second-best inactive gain (4) < second-worst active loss (9), so
        # the single swap beats the double swap; enumeration confirms
        obj = separable_quadratic([10.0, 3.0, 2.0, 0.0])
        start = SupportSet((1, 3), 4)
        theta = obj.restricted_minimize(start)
        results = {}
        for k_max in (1, 2):
            nxt, changed, k = splice_iteration(theta, obj, SpliceConfig(s=2, k_max=k_max))
            assert changed and k == 1
            results[k_max] = nxt.support.indices
        assert results[1] == results[2] == (0, 1)

    def test_requires_populated_objective(self):
        obj = separable_quadratic([1.0, 2.0])
        theta = ParamVector(np.array([0.0, 2.0]), SupportSet((1,), 2))
        with pytest.raises(ValueError):
            splice_iteration(theta, obj, SpliceConfig(s=1))

    def test_failed_candidate_is_skipped_and_recorded(self):
        from spliceopt.types import SolveTrace
        inner = separable_quadratic([10.0, 3.0, 2.0, 0.0])
        # from support {1,3} the k=1 candidate is {0,1}; force it to fail so
        # the k=2 candidate {0,2} must win instead
        obj = FailingSupports(inner, bad_supports=[{0, 1}])
        theta = obj.restricted_minimize(SupportSet((1, 3), 4))
        trace = SolveTrace()
        nxt, changed, k = splice_iteration(theta, obj, SpliceConfig(s=2),
                                           trace=trace, iteration=1)
        assert changed and k == 2
        assert nxt.support.indices == (0, 2)
        assert len(trace.skipped) == 1
        assert trace.skipped[0].support.indices == (0, 1)

    def test_all_candidates_failing_raises(self):
        inner = separable_quadratic([3.0, 1.0, 2.0])
        obj = FailingSupports(inner, bad_supports=[{0}, {1}, {2}])
        theta = inner.restricted_minimize(SupportSet((2,), 3))
        with pytest.raises(SolverError):
            splice_iteration(theta, obj, SpliceConfig(s=1))


class TestScopeSolve:
    def test_separable_quadratic_s1(self):
        obj = separable_quadratic([3.0, 1.0, 2.0])
        res = scope_solve(obj, SpliceConfig(s=1))
        assert res.support.indices == (0,)
        assert_allclose(res.theta.values, [3.0, 0.0, 0.0], atol=1e-12)
        assert res.objective == pytest.approx(2.5)
        assert res.converged
        assert res.outer_iterations <= 2

    def test_trace_from_suboptimal_init(self):
        obj = separable_quadratic([3.0, 1.0, 2.0])
        res = scope_solve(obj, SpliceConfig(s=1), init=SupportSet((2,), 3))
        assert_allclose(res.trace.objectives(), [5.0, 2.5], atol=1e-12)
        assert [s.indices for s in res.trace.supports()] == [(2,), (0,)]
        assert res.trace.steps[1].chosen_k == 1

    def test_orthonormal_noiseless_recovers_at_init(self, rng):
        n, p, s = 40, 10, 3
        Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
        X = Q * np.sqrt(n)
        theta_star = np.zeros(p)
        true_support = (1, 4, 8)
        theta_star[list(true_support)] = [5.0, -3.0, 2.0]
        obj = QuadraticObjective(X, X @ theta_star)
        res = scope_solve(obj, SpliceConfig(s=s))
        assert res.support.indices == true_support
        assert res.trace.supports()[0].indices == true_support  # init already there
        assert res.outer_iterations == 1

    def test_small_instance_matches_enumeration(self, rng):
        n, p, s = 50, 10, 3
        X = rng.standard_normal((n, p))
        theta_star = np.zeros(p)
        theta_star[[0, 4, 7]] = [3.0, -2.0, 4.0]
        obj = QuadraticObjective(X, X @ theta_star)
        res = scope_solve(obj, SpliceConfig(s=s))
        ref = brute_force_best_support(obj, s)
        assert res.support == ref.best_support
        assert ref.evaluated_count == 120
        assert res.objective >= ref.best_objective - 1e-8

    def test_monotone_strictly_decreasing_traces(self, rng):
        for trial in range(20):
            X = rng.standard_normal((30, 12))
            y = rng.standard_normal(30)
            obj = QuadraticObjective(X, y)
            res = scope_solve(obj, SpliceConfig(s=4))
            objs = res.trace.objectives()
            assert all(b < a for a, b in zip(objs, objs[1:]))
            assert res.converged
            assert all(len(sup) == 4 for sup in res.trace.supports())

    def test_deterministic_reruns(self, rng):
        X = rng.standard_normal((25, 9))
        y = rng.standard_normal(25)
        obj = QuadraticObjective(X, y)
        a = scope_solve(obj, SpliceConfig(s=3))
        b = scope_solve(obj, SpliceConfig(s=3))
        assert a.trace.objectives() == b.trace.objectives()
        assert a.trace.supports() == b.trace.supports()
        assert a.support == b.support

    def test_accept_tol_blocks_small_gains(self):
        obj = separable_quadratic([3.0, 1.0, 2.0])
        res = scope_solve(obj, SpliceConfig(s=1, accept_tol=100.0),
                          init=SupportSet((2,), 3))
        assert res.support.indices == (2,)  # 2.5-point gain below the bar
        assert res.converged

    def test_s_equals_p_converges_immediately(self):
        obj = separable_quadratic([3.0, 1.0, 2.0])
        res = scope_solve(obj, SpliceConfig(s=3))
        assert res.support.indices == (0, 1, 2)
        assert res.converged

    def test_init_validation(self):
        obj = separable_quadratic([3.0, 1.0, 2.0])
        with pytest.raises(ValueError):
            scope_solve(obj, SpliceConfig(s=2), init=SupportSet((0,), 3))
        with pytest.raises(ValueError):
            scope_solve(obj, SpliceConfig(s=4))

    def test_initial_subsolver_failure_is_solver_error(self):
        inner = separable_quadratic([3.0, 1.0, 2.0])
        obj = FailingSupports(inner, bad_supports=[{0}])
        with pytest.raises(SolverError):
            scope_solve(obj, SpliceConfig(s=1), init=SupportSet((0,), 3))

    def test_max_outer_iter_cap_reported(self, rng):
        # a one-iteration budget on an instance that needs more ends
        # unconverged with the cap recorded
        X = rng.standard_normal((30, 12))
        y = rng.standard_normal(30)
        obj = QuadraticObjective(X, y)
        full = scope_solve(obj, SpliceConfig(s=4), init=SupportSet((8, 9, 10, 11), 12))
        if full.outer_iterations > 1:
            capped = scope_solve(obj, SpliceConfig(s=4, max_outer_iter=1),
                                 init=SupportSet((8, 9, 10, 11), 12))
            assert not capped.converged
            assert capped.outer_iterations == 1


class TestSpliceConfig:
    @pytest.mark.parametrize("kwargs", [
        {"s": 0}, {"s": 3, "k_max": 0}, {"s": 3, "k_max": 4},
        {"s": 3, "max_outer_iter": 0}, {"s": 3, "accept_tol": -1.0},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            SpliceConfig(**kwargs)

    def test_k_max_defaults_to_s(self):
        assert SpliceConfig(s=5).resolved_k_max() == 5
        assert SpliceConfig(s=5, k_max=2).resolved_k_max() == 2
