"""Tests for the mechanism model: validation, Bayes updates and the quotient."""

import numpy as np
import pytest

from conftest import TOL, random_deterministic_mechanism, random_mechanism
from core.errors import (InvalidMechanism, UnknownAction, UnknownObservation,
                         ZeroProbabilityObservation)
from core.measures import Belief
from core.mechanism import (Mechanism, belief_update, binomial_noise, function_mechanism,
                            indistinguishability_classes, is_deterministic,
                            lift_actions_observable, observation_dist, uniform_offset_noise,
                            validate)


def _channel(flip=0.2):
    return Mechanism(['0', '1'], ['0', '1'], ['c'], [[[1 - flip, flip], [flip, 1 - flip]]])


class TestConstruction:

    def test_shape_mismatch(self):
        with pytest.raises(InvalidMechanism):
            Mechanism(['a', 'b'], ['y'], ['q'], np.ones((1, 3, 1)))

    def test_duplicate_labels(self):
        with pytest.raises(InvalidMechanism):
            Mechanism(['a', 'a'], ['y'], ['q'], np.ones((1, 2, 1)))

    def test_matrices_from_mapping(self):
        mech = Mechanism(['a', 'b'], ['y0', 'y1'], ['q', 'r'],
                         {'r': np.eye(2), 'q': [[0.5, 0.5], [0.5, 0.5]]})
        assert mech.matrix('r').tolist() == [[1.0, 0.0], [0.0, 1.0]]
        assert mech.shape == (2, 2, 2)

    def test_matrices_are_read_only(self):
        mech = _channel()
        with pytest.raises(ValueError):
            mech.matrices[0, 0, 0] = 0.0

    def test_unknown_names(self):
        mech = _channel()
        with pytest.raises(UnknownAction):
            mech.matrix('nope')
        with pytest.raises(UnknownObservation):
            mech.observation_index('2')


class TestValidate:

    def test_valid(self, medical_db):
        mech, _ = medical_db
        assert validate(mech).ok

    def test_reports_every_bad_row(self):
        mech = Mechanism(['a', 'b'], ['y0', 'y1'], ['q'], [[[0.5, 0.4], [1.2, -0.2]]])
        report = validate(mech)
        assert not report.ok
        assert len(report.violations) == 2
        assert report.lines()[0].startswith("action q, secret a: row sum 0.9")
        assert "negative entry -0.2" in report.lines()[1]

    def test_deterministic(self, medical_db, noisy_db):
        assert is_deterministic(medical_db[0])
        assert not is_deterministic(noisy_db[0])


class TestBayes:

    def test_observation_distribution(self):
        dist = observation_dist(_channel(), [0.5, 0.5], 'c')
        assert dist.tolist() == pytest.approx([0.5, 0.5])

    def test_update(self):
        post = belief_update(_channel(0.2), Belief([0.5, 0.5]), 'c', '0')
        assert post == Belief([0.8, 0.2])

    def test_zero_probability(self):
        mech = Mechanism(['a', 'b'], ['y0', 'y1'], ['q'], [np.eye(2)])
        with pytest.raises(ZeroProbabilityObservation):
            belief_update(mech, Belief.point(2, 0), 'q', 'y1')

    def test_updates_are_order_independent(self):
        """Posterior after two observations does not depend on their order."""
        rng = np.random.default_rng(5)
        for _ in range(20):
            mech = random_mechanism(rng)
            prior = rng.dirichlet(np.ones(len(mech.secrets)))
            a, b = mech.actions[0], mech.actions[-1]
            y, z = mech.observations[0], mech.observations[-1]
            one = belief_update(mech, belief_update(mech, prior, a, y), b, z)
            two = belief_update(mech, belief_update(mech, prior, b, z), a, y)
            assert np.allclose(one.probs, two.probs, atol=TOL)


def _uniform_on(mech, members):
    return Belief.uniform_on(len(mech.secrets), [mech.secret_index(x) for x in members])


class TestHospitalBayes:
    """Belief updates on the hospital tables."""

    def test_zip_distribution(self, medical_db):
        mech, prior = medical_db
        dist = observation_dist(mech, prior, 'ZIP')
        assert dist[:3].tolist() == pytest.approx([0.5, 0.2, 0.3])
        assert dist[3:].sum() == pytest.approx(0.0)

    def test_noisy_age_of_one_record(self, noisy_db):
        mech, _ = noisy_db
        dist = observation_dist(mech, Belief.point(10, 0), 'Age')
        nonzero = {mech.observations[j]: p for j, p in enumerate(dist) if p > 0}
        assert nonzero == pytest.approx({'64': 1 / 3, '65': 1 / 3, '66': 1 / 3})

    def test_zip_narrows_to_area(self, medical_db):
        mech, prior = medical_db
        assert belief_update(mech, prior, 'ZIP', 'z2') == _uniform_on(mech, ['9', '10'])
        assert belief_update(mech, prior, 'ZIP', 'z1') == _uniform_on(mech, ['1', '2', '3', '4', '5'])

    def test_noisy_age_narrows_area(self, noisy_db):
        mech, _ = noisy_db
        area = _uniform_on(mech, ['6', '7', '8'])
        assert belief_update(mech, area, 'Age', '66') == _uniform_on(mech, ['6', '7'])

    def test_impossible_zip(self, medical_db):
        mech, _ = medical_db
        with pytest.raises(ZeroProbabilityObservation):
            belief_update(mech, _uniform_on(mech, ['9', '10']), 'ZIP', 'z1')


class TestIndistinguishability:

    def test_medical_has_eight_classes(self, medical_db):
        partition = indistinguishability_classes(medical_db[0])
        assert partition.K == 8
        assert partition.labelled(medical_db[0])[:3] == [['1', '2'], ['3'], ['4', '5']]

    def test_classes_ordered_by_smallest_member(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            partition = indistinguishability_classes(random_mechanism(rng))
            firsts = [c[0] for c in partition.classes]
            assert firsts == sorted(firsts)
            assert sorted(x for c in partition.classes for x in c) == list(range(len(partition.class_of)))

    def test_rows_agreeing_within_tolerance(self):
        mech = Mechanism(['a', 'b', 'c'], ['y0', 'y1'], ['q'],
                         [[[0.5, 0.5], [0.5 + 1e-13, 0.5 - 1e-13], [0.1, 0.9]]])
        assert indistinguishability_classes(mech).classes == ((0, 1), (2,))

    def test_restricted_to_actions(self, medical_db):
        partition = indistinguishability_classes(medical_db[0], actions=['ZIP'])
        assert partition.K == 3

    def test_close_rows_on_either_side_of_a_rounding_boundary(self):
        mech = Mechanism(['a', 'b'], ['y0', 'y1'], ['q'],
                         [[[0.3 + 4e-10, 0.7 - 4e-10], [0.3 + 6e-10, 0.7 - 6e-10]]])
        assert indistinguishability_classes(mech).K == 1

    def test_more_actions_refine_the_partition(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            mech = random_deterministic_mechanism(rng)
            coarse = indistinguishability_classes(mech, actions=mech.actions[:1])
            fine = indistinguishability_classes(mech)
            assert fine.K >= coarse.K
            for members in fine.classes:
                assert len({coarse.class_of[x] for x in members}) == 1

    def test_refinement_on_hospital(self, medical_db):
        mech = medical_db[0]
        sizes = [indistinguishability_classes(mech, actions=mech.actions[:k]).K
                 for k in range(1, len(mech.actions) + 1)]
        assert sizes == sorted(sizes)
        assert sizes[-1] == 8


    def test_class_masses(self, medical_db):
        partition = indistinguishability_classes(medical_db[0])
        masses = partition.class_masses(medical_db[1])
        assert masses.sum() == pytest.approx(1.0)
        assert masses[0] == pytest.approx(0.2)


class TestConstructors:

    def test_lift_makes_actions_observable(self):
        mech = Mechanism(['a', 'b'], ['y'], ['q', 'r'], np.ones((2, 2, 1)))
        lifted = lift_actions_observable(mech)
        assert lifted.observations == ('q:y', 'r:y')
        assert validate(lifted).ok
        assert lifted.matrix('r').tolist() == [[0.0, 1.0], [0.0, 1.0]]

    def test_lift_keeps_the_partition(self, medical_db, noisy_db):
        rng = np.random.default_rng(31)
        mechs = [medical_db[0], noisy_db[0]] + [random_mechanism(rng) for _ in range(10)]
        for mech in mechs:
            lifted = lift_actions_observable(mech)
            assert indistinguishability_classes(lifted) == indistinguishability_classes(mech)


    def test_noise_pmfs(self):
        assert sum(uniform_offset_noise(2).values()) == pytest.approx(1.0)
        pmf = binomial_noise(2, 0.5)
        assert pmf == pytest.approx({0: 0.25, 1: 0.5, 2: 0.25})

    def test_function_mechanism_is_deterministic_without_noise(self):
        mech = function_mechanism(['1', '2', '3'], ['mod2', 'mod3'],
                                  lambda k, m: int(k) % int(m[-1]))
        assert is_deterministic(mech)
        assert mech.observations == ('0', '1', '2')

    def test_function_mechanism_with_noise(self):
        mech = function_mechanism(['0', '1'], ['id'], lambda k, m: int(k), noise=uniform_offset_noise(1))
        assert mech.observations == ('-1', '0', '1', '2')
        assert validate(mech).ok
        assert mech.matrix('id')[0].tolist() == pytest.approx([1 / 3, 1 / 3, 1 / 3, 0.0])
