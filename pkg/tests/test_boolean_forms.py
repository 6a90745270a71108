"""Tests for formula parsing and the x AND phi(z) mechanism family."""

import itertools

import numpy as np
import pytest

from core.boolean_forms import BooleanForm, boolean_form_build, random_formula
from core.errors import ParseError, TooManyVariables
from core.leakage import leakage_value
from core.measures import shannon
from core.mechanism import validate
from core.strategy import from_list


def _brute_force_sat(form: BooleanForm) -> bool:
    return any(form.evaluate(bits) for bits in itertools.product([0, 1], repeat=form.u))


class TestParsing:

    def test_precedence(self):
        form = BooleanForm("z1 | z2 & !z3")
        # or binds loosest: z1 | (z2 & !z3)
        assert form.evaluate([1, 0, 1])
        assert form.evaluate([0, 1, 0])
        assert not form.evaluate([0, 1, 1])

    def test_word_and_symbol_operators_agree(self):
        a = BooleanForm("not (z1 and z2) or z3")
        b = BooleanForm("¬(z1 ∧ z2) ∨ z3")
        assert a.truth_table().tolist() == b.truth_table().tolist()

    def test_natural_variable_order(self):
        assert BooleanForm("z10 & z2 & z1").variables == ('z1', 'z2', 'z10')

    def test_constants(self):
        assert not BooleanForm("z1 & false").satisfiable()
        assert BooleanForm("z1 | true").satisfiable()

    @pytest.mark.parametrize('text', ["", "z1 &", "(z1 | z2", "z1 $ z2", "z1 z2"])
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            BooleanForm(text)


class TestMechanism:

    def test_actions_are_assignments(self):
        mech = boolean_form_build("z1 & !z2")
        assert mech.actions == ('00', '01', '10', '11')
        assert validate(mech).ok
        assert mech.matrix('10').tolist() == [[1.0, 0.0], [0.0, 1.0]]
        assert mech.matrix('11').tolist() == [[1.0, 0.0], [1.0, 0.0]]

    def test_too_many_variables(self):
        with pytest.raises(TooManyVariables):
            boolean_form_build("z1 | z2 | z3", max_variables=2)

    def test_satisfying_action_leaks_one_bit(self):
        mech = boolean_form_build("z1 & z2")
        prior = mech.uniform_prior()
        assert leakage_value(mech, prior, from_list(['11']), shannon()) == pytest.approx(1.0)
        assert leakage_value(mech, prior, from_list(['01']), shannon()) == pytest.approx(0.0, abs=1e-12)

    def test_leakage_decides_satisfiability(self):
        """Some single action leaks under the uniform prior iff the formula is satisfiable."""
        rng = np.random.default_rng(2014)
        for _ in range(50):
            u = int(rng.integers(1, 9))
            form = BooleanForm(random_formula(u, int(rng.integers(1, 5)), rng))
            mech = form.mechanism()
            prior = mech.uniform_prior()
            leaks = any(leakage_value(mech, prior, from_list([a]), shannon()) > 1e-9
                        for a in mech.actions)
            assert leaks == _brute_force_sat(form), form.text
