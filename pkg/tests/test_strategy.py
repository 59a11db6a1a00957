import numpy as np
import pytest

from mutualsec import (
    Environment,
    MonitoringModel,
    Subset,
    TrafficMatrix,
    brute_force_optimal,
    core_periphery_threshold,
    iterative_deletion,
    optimal_design,
)

from support import (
    REFERENCE_ENV,
    random_feasible_instance,
    reference_instance,
)


def six_as_instance():
    env = Environment(p_high=0.45, p_low=0.05, c=0.2, beta=0.2)
    mon = MonitoringModel.rational(0.9)
    tm = TrafficMatrix.from_edges(6, [
        (0, 1, 2.0), (1, 2, 1.0), (1, 3, 2.0), (2, 3, 6.0),
        (2, 4, 8.0), (3, 4, 5.0), (3, 5, 12.0), (4, 5, 9.0),
    ])
    return env, mon, tm


class TestIterativeDeletion:
    def test_full_set_optimal_on_complete(self):
        env, mon, tm = reference_instance()
        result = iterative_deletion(env, mon, tm)
        assert result.subset.members == tuple(range(8))
        assert result.design.feasible
        # complete graphs have no subset with larger critical traffic, so
        # everything after the first iteration is skipped
        assert result.evaluations == 1

    def test_six_as_trace(self):
        env, mon, tm = six_as_instance()
        result = iterative_deletion(env, mon, tm)
        trace = result.trace
        assert [it.critical_traffic for it in trace.iterations] == \
            [2.0, 3.0, 14.0, 14.0, 12.0]
        assert [it.critical_ases for it in trace.iterations] == \
            [(0,), (1,), (2,), (4,), (3, 5)]
        assert [it.evaluated for it in trace.iterations] == \
            [True, True, True, False, False]
        assert result.subset.members == (2, 3, 4, 5)
        assert trace.chosen == 2
        evaluated = [it for it in trace.iterations if it.evaluated]
        costs = [it.design.j_star for it in evaluated]
        assert costs[2] < costs[1] < costs[0]
        skipped = [it for it in trace.iterations if not it.evaluated]
        assert all(it.skip_reason for it in skipped)
        assert all(it.design is None for it in skipped)

    def test_warns_when_assumptions_fail(self):
        env, tm = REFERENCE_ENV, TrafficMatrix.complete(8, 1.0)
        sloppy = MonitoringModel.rational(5.0)
        with pytest.warns(UserWarning):
            iterative_deletion(env, sloppy, tm)
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            iterative_deletion(env, sloppy, tm, check_assumptions=False)

    def test_falls_back_to_no_deployment(self):
        env = Environment(p_high=0.3, p_low=0.05, c=5.0, beta=0.2)
        mon = MonitoringModel.rational(0.1)
        tm = TrafficMatrix.complete(4, 1.0)
        result = iterative_deletion(env, mon, tm, check_assumptions=False)
        assert result.trace.chosen is None
        assert result.design.feasible
        assert result.design.j_star == pytest.approx(env.p_high * 12.0)
        assert len(result.design.subset) == 0


class TestBruteForce:
    def test_matches_deletion_search(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            env, mon, tm = random_feasible_instance(
                rng, n_hi=8, require_assumptions=True)
            a = iterative_deletion(env, mon, tm).design.j_star
            b = brute_force_optimal(env, mon, tm).design.j_star
            assert a == pytest.approx(b, rel=1e-12)

    def test_cap(self):
        env, mon, _ = reference_instance()
        with pytest.raises(ValueError):
            brute_force_optimal(env, mon, TrafficMatrix.complete(17, 1.0))

    def test_deterministic_tie_break(self):
        # two identical disconnected pairs tie exactly; the reported
        # optimum is the lexicographically first largest subset
        tm = TrafficMatrix.from_edges(4, [(0, 1, 3.0), (2, 3, 3.0)])
        env = Environment(p_high=0.3, p_low=0.05, c=0.1, beta=0.2)
        mon = MonitoringModel.rational(0.05)
        result = brute_force_optimal(env, mon, tm)
        full = optimal_design(env, mon, tm)
        if full.feasible and full.j_star <= result.design.j_star:
            assert result.subset.members == (0, 1, 2, 3)
        else:
            assert result.subset.members == (0, 1)

    def test_counts_evaluations(self):
        env, mon, _ = reference_instance()
        tm = TrafficMatrix.complete(4, 1.0)
        result = brute_force_optimal(env, mon, tm)
        # every nonempty subset plus the no-deployment baseline
        assert result.evaluations == 2 ** 4


class TestCorePeripheryThreshold:
    def test_reference_threshold(self):
        env = Environment(p_high=0.3, p_low=0.05, c=0.3, beta=0.2)
        mon = MonitoringModel.rational(0.4)
        result = core_periphery_threshold(env, mon, periphery_per_core=1,
                                          rate=4.0, k_max=30)
        assert result.k_star == 11
        assert result.n_star == 22
        rows = {r.cores: r for r in result.rows}
        assert rows[11].exact_diff == pytest.approx(0.122128, abs=1e-5)
        assert rows[10].exact_diff < 0
        for r in result.rows:
            if r.exact_diff is not None and r.closed_form_diff is not None:
                assert r.closed_form_diff == pytest.approx(r.exact_diff,
                                                           abs=1e-9)

    def test_never_worth_deploying(self):
        env = Environment(p_high=0.3, p_low=0.05, c=0.3, beta=0.2)
        mon = MonitoringModel.rational(0.4)
        result = core_periphery_threshold(env, mon, periphery_per_core=1,
                                          rate=0.5, k_max=10)
        assert result.k_star == 0
        assert "never" in result.note

    def test_no_crossing_in_range(self):
        env = Environment(p_high=0.3, p_low=0.05, c=0.3, beta=0.2)
        mon = MonitoringModel.rational(0.4)
        result = core_periphery_threshold(env, mon, periphery_per_core=1,
                                          rate=4.0, k_max=8)
        assert result.k_star == 0
        assert "no crossover" in result.note

    def test_validation(self):
        env, mon, _ = reference_instance()
        with pytest.raises(ValueError):
            core_periphery_threshold(env, mon, periphery_per_core=0,
                                     rate=1.0, k_max=10)
        with pytest.raises(ValueError):
            core_periphery_threshold(env, mon, periphery_per_core=1,
                                     rate=1.0, k_max=2)
