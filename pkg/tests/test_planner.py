"""Tests for backward induction and the exhaustive oracle."""

import numpy as np
import pytest

from conftest import TOL, random_mechanism, random_prior
from core.catalog import noisy_binary_channel
from core.errors import BudgetExceeded, InvalidHorizon, TooManyStrategies
from core.leakage import leakage_value, max_leakage
from core.measures import error, shannon
from core.planner import (complete_strategy_count, exhaustive_oracle, mdp_size_estimate,
                          optimal_strategy)
from core.strategy import from_list


class TestNoisyHospital:
    """Horizon-2 planning against the noisy-age table."""

    @pytest.fixture
    def plan(self, noisy_db):
        mech, prior = noisy_db
        return optimal_strategy(mech, prior, shannon(), 2)

    def test_root_action_is_age(self, plan):
        assert plan.root_action == 'Age'
        assert plan.value == pytest.approx(2.4, abs=1e-2)

    def test_branch_rewards(self, plan):
        values = plan.root_action_values()
        log3, log5 = np.log2(3), np.log2(5)
        # ZIP first: z1 -> 2/5 + (3/5)log3, z2 -> 2/3, z3 -> 4/9 bits left
        assert values['ZIP'] == pytest.approx(np.log2(10) - 7 / 15 - 0.3 * log3, abs=TOL)
        # Date first: d1 -> 1, d2 -> 2/9 + (1/3)log3 + (5/18)log5, d3 -> 2/3
        assert values['Date'] == pytest.approx(np.log2(10) - 7 / 15 - log3 / 5 - log5 / 6, abs=TOL)
        # Age first: 3/5 + (1/5)log3 bits left on average
        assert values['Age'] == pytest.approx(np.log2(10) - 0.6 - log3 / 5, abs=TOL)
        assert values['Age'] == pytest.approx(2.4, abs=1e-2)

    def test_value_is_leakage_of_plan(self, plan, noisy_db):
        mech, prior = noisy_db
        assert leakage_value(mech, prior, plan.strategy, shannon()) == pytest.approx(plan.value, abs=TOL)

    def test_beats_fixed_strategy(self, plan, noisy_db, zip_date_age):
        mech, prior = noisy_db
        assert plan.value >= leakage_value(mech, prior, zip_date_age, shannon()) - TOL

    def test_report(self, plan):
        doc = plan.to_dict()
        assert doc['root_action'] == 'Age'
        assert doc['horizon'] == 2
        assert set(doc['root_action_values']) == {'ZIP', 'Age', 'Date'}


class TestOptimalStrategy:

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(61)
        for _ in range(50):
            mech = random_mechanism(rng)
            prior = random_prior(rng, len(mech.secrets))
            horizon = int(rng.integers(1, 3))
            for measure in (shannon(), error()):
                plan = optimal_strategy(mech, prior, measure, horizon)
                oracle = exhaustive_oracle(mech, prior, measure, horizon)
                assert plan.value == pytest.approx(oracle.value, abs=TOL)

    def test_horizon_one_is_best_single_action(self, medical_db):
        mech, prior = medical_db
        plan = optimal_strategy(mech, prior, shannon(), 1)
        best = max(leakage_value(mech, prior, from_list([a]), shannon()) for a in mech.actions)
        assert plan.value == pytest.approx(best, abs=TOL)
        assert plan.strategy.length == 1

    def test_deterministic_db_reaches_max_leakage(self, medical_db):
        mech, prior = medical_db
        plan = optimal_strategy(mech, prior, shannon(), 3)
        assert plan.value == pytest.approx(max_leakage(mech, prior, shannon()), abs=TOL)

    def test_ties_keep_first_action(self):
        mech = noisy_binary_channel((0.2, 0.2))
        plan = optimal_strategy(mech, mech.uniform_prior(), shannon(), 1)
        assert plan.root_action == 'c1'

    def test_invalid_horizon(self, medical_db):
        mech, prior = medical_db
        with pytest.raises(InvalidHorizon):
            optimal_strategy(mech, prior, shannon(), 0)

    def test_budget(self, noisy_db):
        mech, prior = noisy_db
        with pytest.raises(BudgetExceeded):
            optimal_strategy(mech, prior, shannon(), 6, node_budget=1000)


class TestPlanInvariants:
    """Properties of backward induction over seeded random instances."""

    @pytest.fixture
    def instances(self):
        rng = np.random.default_rng(77)
        out = []
        for _ in range(30):
            mech = random_mechanism(rng)
            out.append((mech, random_prior(rng, len(mech.secrets))))
        return out

    def test_bellman_consistency(self, instances):
        for mech, prior in instances:
            plan = optimal_strategy(mech, prior, shannon(), 3)
            for node in plan.root.walk():
                assert node.value == pytest.approx(max(node.action_values.values()), abs=TOL)
                assert node.value == node.action_values[node.action]
                future = sum(node.probabilities[y] * child.value for y, child in node.children.items())
                assert node.value == pytest.approx(node.gains[node.action] + future, abs=TOL)
                if node.remaining == 1:
                    assert not node.children

    def test_monotone_in_horizon(self, instances):
        for mech, prior in instances:
            values = [optimal_strategy(mech, prior, shannon(), h).value for h in (1, 2, 3)]
            assert values[1] >= values[0] - TOL
            assert values[2] >= values[1] - TOL

    def test_bounded_by_max_leakage(self, instances):
        for mech, prior in instances:
            for measure in (shannon(), error()):
                bound = max_leakage(mech, prior, measure)
                for h in (1, 2, 3):
                    assert optimal_strategy(mech, prior, measure, h).value <= bound + TOL

    def test_repeated_runs_are_identical(self, instances):
        for mech, prior in instances[:10]:
            first = optimal_strategy(mech, prior, shannon(), 3)
            second = optimal_strategy(mech, prior, shannon(), 3)
            assert first.value == second.value
            assert first.strategy == second.strategy
            assert first.root_action_values() == second.root_action_values()
            assert first.nodes_expanded == second.nodes_expanded


class TestSizes:

    def test_mdp_size_estimate(self, medical_db):
        size = mdp_size_estimate(medical_db[0], 1)
        assert size.decision_nodes == (12 * 3) ** 2 - 1
        assert size.time_space == 10 * (12 * 3) ** 2

    def test_complete_strategy_count(self):
        mech = noisy_binary_channel((0.1, 0.3))
        # 1 + 2 + 4 decision points, 2 choices each
        assert complete_strategy_count(mech, 3) == 2 ** 7

    def test_oracle_limit(self, medical_db):
        mech, prior = medical_db
        with pytest.raises(TooManyStrategies):
            exhaustive_oracle(mech, prior, shannon(), 2)

    def test_oracle_enumerates_every_complete_strategy(self):
        mech = noisy_binary_channel((0.1, 0.3))
        result = exhaustive_oracle(mech, mech.uniform_prior(), shannon(), 2)
        # root plus one node per observation, two actions each
        assert result.nodes_expanded == 8
        assert result.nodes_expanded == complete_strategy_count(mech, 2)
