import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dyntdd.frame import ContractError
from dyntdd.learning import (
    FixedPolicy,
    GibbsLearner,
    LearnerState,
    RandomPolicy,
    RateSchedule,
    baseline_fixed,
    baseline_random,
    gibbs_distribution,
    learning_rates,
    make_policies,
    select_action,
    update_cost_estimate,
    update_strategy,
    validate_schedule,
)

costs_st = arrays(float, st.integers(1, 8), elements=st.floats(0.0, 100.0))


class TestGibbs:
    def test_hand_value(self):
        # e^-1 / (e^-1 + e^-2) = 1 / (1 + e^-1) = 0.731059
        assert gibbs_distribution([1.0, 2.0], 1.0) == pytest.approx([0.7310586, 0.2689414], abs=1e-7)

    def test_equal_costs_uniform(self):
        assert np.array_equal(gibbs_distribution([4.0] * 5, 200.0), np.full(5, 0.2))

    def test_large_beta_picks_minimum(self):
        p = gibbs_distribution([0.0, 1e6], 200.0)
        assert p[0] == 1.0 and p[1] == 0.0

    def test_domain(self):
        with pytest.raises(ContractError):
            gibbs_distribution([1.0], 0.0)
        with pytest.raises(ContractError):
            gibbs_distribution([1.0, math.inf], 1.0)

    @given(costs_st, st.floats(1e-3, 1e3))
    def test_normalized(self, costs, beta):
        p = gibbs_distribution(costs, beta)
        assert abs(p.sum() - 1.0) <= 1e-12
        assert np.all(p >= 0)

    @given(arrays(float, st.integers(2, 8), elements=st.floats(0.0, 1.0)), st.floats(0.1, 10.0))
    def test_ordering(self, costs, beta):
        p = gibbs_distribution(costs, beta)
        for a in range(len(costs)):
            for b in range(len(costs)):
                # gaps below float resolution of beta * cost are not distinguishable
                if costs[b] - costs[a] > 1e-6:
                    assert p[a] > p[b]

    @given(costs_st, st.floats(-1e3, 1e3))
    def test_shift_invariant(self, costs, shift):
        np.testing.assert_allclose(gibbs_distribution(costs + shift, 2.0), gibbs_distribution(costs, 2.0), atol=1e-12)


class TestEstimateUpdate:
    def state(self, est):
        s = LearnerState.initial(len(est), 1.0)
        return dataclasses.replace(s, cost_estimates=np.asarray(est, dtype=float))

    def test_alpha_one(self):
        assert update_cost_estimate(self.state([0, 0, 0]), 1, 7.5, 1.0).cost_estimates[1] == 7.5

    def test_fixed_point(self):
        assert np.array_equal(update_cost_estimate(self.state([1, 2, 3]), 2, 3.0, 0.4).cost_estimates, [1, 2, 3])

    def test_half_step(self):
        assert update_cost_estimate(self.state([0, 0]), 0, 2.0, 0.5).cost_estimates[0] == 1.0

    @given(arrays(float, 5, elements=st.floats(0, 50)), st.integers(0, 4), st.floats(0, 50), st.floats(1e-6, 1.0))
    def test_unplayed_untouched(self, est, a, cost, alpha):
        new = update_cost_estimate(self.state(est), a, cost, alpha).cost_estimates
        others = [i for i in range(5) if i != a]
        assert np.array_equal(new[others], est[others])

    def test_domain(self):
        with pytest.raises(ContractError):
            update_cost_estimate(self.state([0.0]), 0, 1.0, 0.0)
        with pytest.raises(ContractError):
            update_cost_estimate(self.state([0.0]), 0, math.nan, 0.5)


class TestStrategyUpdate:
    def test_halfway_to_target(self):
        # halfway from (0.5, 0.5) to (0.7311, 0.2689)
        s = dataclasses.replace(LearnerState.initial(2, 1.0), cost_estimates=np.array([1.0, 2.0]))
        assert update_strategy(s, 0.5).strategy == pytest.approx([0.6155293, 0.3844707], abs=1e-7)

    def test_zeta_one_jumps_to_target(self):
        s = dataclasses.replace(LearnerState.initial(3, 5.0), cost_estimates=np.array([0.3, 0.1, 0.2]))
        np.testing.assert_allclose(update_strategy(s, 1.0).strategy, gibbs_distribution([0.3, 0.1, 0.2], 5.0), atol=1e-15)

    def test_target_is_fixed_point(self):
        est = np.array([0.3, 0.1, 0.2])
        s = LearnerState(est, gibbs_distribution(est, 5.0), 0, 5.0)
        np.testing.assert_allclose(update_strategy(s, 0.3).strategy, s.strategy, atol=1e-15)

    def test_simplex_preserved_over_many_updates(self):
        rng = np.random.default_rng(0)
        s = LearnerState.initial(5, 200.0)
        for n in range(1, 10_001):
            a = int(rng.integers(5))
            s = update_strategy(s, float(rng.uniform(1e-4, 1.0)))
            s = update_cost_estimate(s, a, float(rng.exponential(3.0)), 1.0 / math.sqrt(n))
            assert np.all(s.strategy >= 0)
            assert abs(s.strategy.sum() - 1.0) <= 1e-9

    @given(st.lists(st.tuples(st.integers(0, 3), st.floats(0, 10.0), st.floats(1e-3, 1.0)), max_size=60))
    def test_estimates_stay_in_cost_range(self, steps):
        s = LearnerState.initial(4, 1.0)
        for a, c, alpha in steps:
            s = update_cost_estimate(s, a, c, alpha)
            assert np.all(s.cost_estimates >= 0) and np.all(s.cost_estimates <= 10.0)


class TestRates:
    def test_values(self):
        assert learning_rates(1) == (1.0, 1.0)
        alpha, zeta = learning_rates(100)
        assert alpha == pytest.approx(0.1)
        # 100^-0.65 = 10^-1.3 = 0.0501187
        assert zeta == pytest.approx(0.0501187, abs=1e-7)
        assert RateSchedule()(100) == learning_rates(100)

    def test_ratio_vanishes(self):
        ratios = [z / a for a, z in (learning_rates(n) for n in (10, 10**3, 10**6))]
        assert ratios == sorted(ratios, reverse=True) and ratios[-1] < 0.13

    def test_zero(self):
        with pytest.raises(ContractError):
            learning_rates(0)

    def test_default_schedule_flagged(self):
        check = validate_schedule(RateSchedule(0.5, 0.65), terms=10**5)
        assert not check.ok
        assert check.violations() == ["sum of alpha(t)^2 diverges"]
        assert check.numeric["alpha_sq"]["converging"] is False

    def test_compliant_schedule(self):
        check = validate_schedule(RateSchedule(0.6, 0.65), terms=10**5)
        assert check.ok and check.violations() == []
        assert check.numeric["alpha_sq"]["converging"] is True

    @pytest.mark.parametrize(
        "pa,pz,msg",
        [(1.2, 1.3, "sum of alpha(t) converges"), (0.6, 0.55, "zeta(t)/alpha(t) does not vanish")],
    )
    def test_other_violations(self, pa, pz, msg):
        assert msg in validate_schedule(RateSchedule(pa, pz), terms=10**4).violations()


class TestSelection:
    def test_one_hot(self):
        rng = np.random.default_rng(0)
        assert {select_action([0, 0, 1, 0], rng) for _ in range(100)} == {2}

    def test_frequencies(self):
        rng = np.random.default_rng(1)
        draws = np.array([select_action(np.full(5, 0.2), rng) for _ in range(100_000)])
        freq = np.bincount(draws, minlength=5) / len(draws)
        assert np.all(np.abs(freq - 0.2) < 0.01)

    def test_skewed_frequencies(self):
        rng = np.random.default_rng(2)
        p = np.array([0.05, 0.5, 0.05, 0.1, 0.3])
        draws = np.array([select_action(p, rng) for _ in range(100_000)])
        assert np.all(np.abs(np.bincount(draws, minlength=5) / len(draws) - p) < 0.01)

    def test_reproducible(self):
        a = [select_action([0.3, 0.7], np.random.default_rng(5)) for _ in range(1)]
        b = [select_action([0.3, 0.7], np.random.default_rng(5)) for _ in range(1)]
        assert a == b

    def test_non_simplex(self):
        with pytest.raises(ContractError):
            select_action([0.5, 0.6], np.random.default_rng(0))


class TestBaselines:
    def test_fixed(self):
        assert baseline_fixed(5) == 3
        assert baseline_fixed(4) == 2
        assert baseline_fixed(1) == 1

    def test_random_single(self):
        rng = np.random.default_rng(0)
        assert {baseline_random(1, rng) for _ in range(50)} == {1}

    def test_random_uniform(self):
        rng = np.random.default_rng(3)
        draws = np.array([baseline_random(5, rng) for _ in range(100_000)])
        assert draws.min() == 1 and draws.max() == 5
        assert np.all(np.abs(np.bincount(draws, minlength=6)[1:] / len(draws) - 0.2) < 0.01)

    def test_random_reproducible(self):
        seq = lambda: [baseline_random(5, np.random.default_rng(8)) for _ in range(3)]  # noqa: E731
        assert seq() == seq()


class TestPolicies:
    def test_fixed_policy(self):
        p = FixedPolicy(5)
        assert [p.choose() for _ in range(4)] == [3] * 4
        assert p.strategy().tolist() == [0, 0, 1, 0, 0]
        with pytest.raises(ContractError):
            FixedPolicy(5, 6)

    def test_random_policy(self):
        p = RandomPolicy(5, np.random.default_rng(0))
        assert all(1 <= p.choose() <= 5 for _ in range(100))

    def test_learner_converges_on_static_costs(self):
        costs = {1: 3.0, 2: 1.0, 3: 2.0, 4: 5.0, 5: 4.0}
        learner = GibbsLearner(5, np.random.default_rng(0), beta=200.0, max_iterations=200)
        for _ in range(200):
            a = learner.choose()
            learner.observe(a, costs[a])
        assert learner.strategy()[1] > 0.9
        assert learner.state.frozen

    def test_frozen_learner_stops_updating(self):
        learner = GibbsLearner(3, np.random.default_rng(0), beta=1.0, max_iterations=2)
        for _ in range(2):
            learner.observe(learner.choose(), 1.0)
        before = learner.state
        learner.observe(1, 100.0)
        assert learner.state is before

    def test_observe_uses_previous_estimates(self):
        learner = GibbsLearner(2, np.random.default_rng(0), beta=1.0)
        learner.observe(1, 10.0)
        # strategy moved toward Gibbs of the all-zero estimates, i.e. stayed uniform
        assert learner.strategy().tolist() == [0.5, 0.5]
        assert learner.estimates().tolist() == [10.0, 0.0]

    def test_make_policies(self):
        rngs = [np.random.default_rng(i) for i in range(3)]
        ps = make_policies(["learner", "fixed", "random"], 5, rngs, fixed_point=2)
        assert [p.name for p in ps] == ["learner", "fixed", "random"]
        assert ps[1].choose() == 2
        with pytest.raises(ContractError):
            make_policies(["greedy"], 5, rngs)
