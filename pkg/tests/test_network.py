import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crnstab.network import (
    Network,
    NetworkSyntaxError,
    Reaction,
    apply_generator,
    builtin_network,
    mass_action_rate,
    parse_network,
    propensity,
    propensity_grid,
    reaction_vector,
)

CRN0_DOC = """
{
  "name": "crn0",
  "species": ["A", "B"],
  "reactions": [
    {"input": {}, "output": {"A": 1, "B": 1}, "kappa": 1.0},
    {"input": {"B": 1}, "output": {}, "kappa": 1.0},
    {"input": {"A": 5, "B": 2}, "output": {"B": 3}, "kappa": 1.0},
    {"input": {"B": 3}, "output": {"A": 2}, "kappa": 1.0}
  ]
}
"""


class TestBuiltins:
    def test_variant_reactions(self):
        assert builtin_network("crn0").reactions[1].c_in == (0, 1)
        assert builtin_network("crn0").reactions[1].c_out == (0, 0)
        assert builtin_network("crn1").reactions[1].c_in == (1, 1)
        assert builtin_network("crn1").reactions[1].c_out == (1, 0)
        assert builtin_network("crn2").reactions[1].c_in == (2, 1)
        assert builtin_network("crn2").reactions[1].c_out == (2, 0)

    def test_common_reactions(self):
        for name in ("crn0", "crn1", "crn2"):
            net = builtin_network(name)
            assert net.reactions[2].c_in == (5, 2)
            assert net.reactions[2].c_out == (0, 3)
            assert net.reactions[3].c_in == (0, 3)
            assert all(r.kappa == 1.0 for r in net.reactions)

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown builtin"):
            builtin_network("crn9")

    def test_complex_norm(self):
        assert builtin_network("crn0").complex_norm_max() == 7


class TestParser:
    def test_round_trip_matches_builtin(self):
        net = parse_network(CRN0_DOC)
        ref = builtin_network("crn0")
        assert net.d == ref.d
        for a, b in zip(net.reactions, ref.reactions):
            assert a.c_in == b.c_in and a.c_out == b.c_out and a.kappa == b.kappa

    def test_zero_kappa_rejected(self):
        doc = CRN0_DOC.replace('"kappa": 1.0},\n    {"input": {"B": 1}', '"kappa": 0.0},\n    {"input": {"B": 1}')
        with pytest.raises(NetworkSyntaxError, match="nonpositive rate constant"):
            parse_network(doc)

    def test_zero_reaction_vector_rejected(self):
        doc = """{"species": ["A"], "reactions": [{"input": {"A": 1}, "output": {"A": 1}}]}"""
        with pytest.raises(NetworkSyntaxError, match="zero reaction vector"):
            parse_network(doc)

    def test_negative_stoichiometry_rejected(self):
        doc = """{"species": ["A"], "reactions": [{"input": {"A": -1}, "output": {}}]}"""
        with pytest.raises(NetworkSyntaxError, match="negative stoichiometry"):
            parse_network(doc)

    def test_syntax_error_carries_line(self):
        with pytest.raises(NetworkSyntaxError, match="line"):
            parse_network('{"species": ["A"],\n  "reactions": [}')


class TestPropensity:
    def test_pinned_value(self, crn0):
        # binom(6,5) 5! binom(3,2) 2! = 6 * 120 * 3 * 2
        assert propensity(crn0, 2, (6, 3)) == 4320.0

    def test_zero_below_requirement(self, crn0):
        assert propensity(crn0, 2, (4, 2)) == 0.0

    def test_source_reaction_constant(self):
        for name in ("crn0", "crn1", "crn2"):
            net = builtin_network(name)
            for x in ((0, 0), (3, 7), (100, 2)):
                assert propensity(net, 0, x) == 1.0

    def test_grid_matches_scalar(self, crn2, rng):
        states = rng.integers(0, 50, size=(200, 2))
        for r in range(crn2.n_reactions):
            grid = propensity_grid(crn2, r, states)
            for x, val in zip(states, grid):
                assert val == propensity(crn2, r, x)


class TestMassAction:
    def test_pinned_value(self, crn0):
        assert mass_action_rate(crn0, 2, (2.0, 3.0)) == 2.0 ** 5 * 3.0 ** 2

    def test_zero_at_origin_with_input(self, crn0):
        assert mass_action_rate(crn0, 2, (0.0, 0.0)) == 0.0

    def test_empty_input_complex(self, crn0):
        assert mass_action_rate(crn0, 0, (0.0, 0.0)) == 1.0  # 0^0 = 1 convention


class TestReactionVector:
    def test_pinned_vectors(self, crn0):
        assert tuple(reaction_vector(crn0, 2)) == (-5, 1)
        assert tuple(reaction_vector(crn0, 0)) == (1, 1)
        assert tuple(reaction_vector(crn0, 3)) == (2, -3)


class TestGenerator:
    def test_pinned_value(self, crn0):
        assert apply_generator(crn0, lambda x: x[0] + x[1], (6, 3)) == -17287.0

    def test_constant_function(self, crn1):
        assert apply_generator(crn1, lambda x: 42.0, (9, 9)) == 0.0

    def test_origin(self, crn0):
        assert apply_generator(crn0, lambda x: x[0], (0, 0)) == 1.0

    @given(
        a=st.floats(-3, 3), b=st.floats(-3, 3),
        x1=st.integers(0, 30), x2=st.integers(0, 30),
    )
    @settings(max_examples=40, deadline=None)
    def test_linearity(self, a, b, x1, x2):
        net = builtin_network("crn2")
        f = lambda x: math.sin(0.1 * x[0]) + x[1]
        g = lambda x: x[0] ** 2 - 3.0 * x[1]
        combo = lambda x: a * f(x) + b * g(x)
        lhs = apply_generator(net, combo, (x1, x2))
        rhs = a * apply_generator(net, f, (x1, x2)) + b * apply_generator(net, g, (x1, x2))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-9)


class TestMonomialSandwich:
    def test_bounded_and_monotone(self, crn0, rng):
        # propensity <= monomial rate; ratio nondecreasing per coordinate
        states = rng.integers(1, 60, size=(300, 2)) + np.array([5, 2])
        for r in range(crn0.n_reactions):
            for x in states:
                lam = mass_action_rate(crn0, r, x.astype(float))
                Lam = propensity(crn0, r, x)
                assert Lam <= lam + 1e-9
                for i in range(2):
                    y = x.copy()
                    y[i] += 1
                    lam_y = mass_action_rate(crn0, r, y.astype(float))
                    Lam_y = propensity(crn0, r, y)
                    if lam > 0 and lam_y > 0:
                        assert Lam_y / lam_y >= Lam / lam - 1e-12

    def test_ratio_tends_to_one(self, crn0):
        for scale in (10, 100, 1000, 10000):
            x = (6 * scale, 3 * scale)
            ratio = propensity(crn0, 2, x) / mass_action_rate(crn0, 2, x)
            assert ratio <= 1.0
        assert propensity(crn0, 2, (60000, 30000)) / mass_action_rate(
            crn0, 2, (60000.0, 30000.0)
        ) > 0.999


class TestScalingLaw:
    def test_propensity_scales_like_monomial(self, crn0):
        # at fixed positive x, rate(S_l x) / (l^<w, c_in> lam(x)) -> 1
        w = np.array([1.0, 1.0]) / math.sqrt(2.0)
        x = np.array([3.0, 2.0])
        r = 2
        c_in = np.array(crn0.reactions[r].c_in)
        prev = 0.0
        for l in (1e2, 1e4, 1e6):
            xs = np.round((l ** w) * x).astype(int)
            lam_scaled = mass_action_rate(crn0, r, (l ** w) * x)
            ratio = propensity(crn0, r, xs) / lam_scaled
            assert ratio > prev * 0.999
            prev = ratio
        assert prev > 0.99


class TestValidation:
    def test_kappa_positive(self):
        with pytest.raises(ValueError):
            Reaction(c_in=(1, 0), c_out=(0, 0), kappa=-1.0)

    def test_zero_vector(self):
        with pytest.raises(ValueError):
            Reaction(c_in=(1, 1), c_out=(1, 1))

    def test_network_arity(self):
        with pytest.raises(ValueError):
            Network(d=3, reactions=(Reaction(c_in=(1, 0), c_out=(0, 1)),))
