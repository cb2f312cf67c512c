import math
from dataclasses import replace

import numpy as np
import pytest

from crnstab.lyapunov import (
    InfeasibleParameters,
    PiecewiseLyapunov,
    alt_piece_value,
    assemble,
    derive_exponents,
    gamma_star,
    params_from_text,
    params_to_text,
    phi,
    piece_value,
    rate_h,
    select_parameters,
)
from crnstab.regions import REGION_TAGS, RegionParams, classify_region_grid, homogeneity_check, unit_direction


class TestExponents:
    def test_crn0_table(self):
        e = derive_exponents(0.5, 0.1, "crn0", 7)
        assert e.delta0p == 0.5
        assert e.delta1p == e.delta0pp == 5.5
        assert e.delta1pp == pytest.approx(0.9)
        assert e.delta2p == pytest.approx(6.4)
        assert e.delta3p == pytest.approx(4.1)
        assert e.delta3pp == pytest.approx(2.3)
        assert e.delta4 == pytest.approx(0.3)
        assert e.delta4pp == pytest.approx(2.3)
        # bound max(5, 7 * 0.1 + 4) = 5, plus the fixed offset
        assert e.delta4p == 5.5
        assert e.delta4star == e.delta4

    def test_crn1_only_strip_exponent_moves(self):
        e0 = derive_exponents(0.5, 0.1, "crn0", 7)
        e1 = derive_exponents(0.5, 0.1, "crn1", 7)
        assert e1.delta0p == pytest.approx(-0.5)
        for name in ("delta0pp", "delta1p", "delta1pp", "delta2p", "delta3p",
                     "delta3pp", "delta4", "delta4pp", "delta4p"):
            assert getattr(e0, name) == getattr(e1, name)

    def test_continuity_relations(self):
        e = derive_exponents(0.7, 0.2, "crn0", 7)
        assert e.delta1p == e.delta0pp == 5 + e.delta0
        assert e.delta2p == pytest.approx(e.delta3p + e.delta3pp)
        assert e.delta3pp - 2 == pytest.approx(e.delta4)
        assert e.delta1pp == pytest.approx(1 - e.eps)
        # sublevel-compactness inequalities
        assert e.delta0 > 0 and e.delta1pp < 1 and e.delta2p > 6 and e.delta3p > 4

    def test_precondition(self):
        with pytest.raises(ValueError):
            derive_exponents(0.5, 0.3, "crn0", 7)
        with pytest.raises(ValueError):
            derive_exponents(1.2, 0.1, "crn0", 7)
        with pytest.raises(ValueError):
            derive_exponents(0.5, 0.1, "crn2", 7)


class TestPieceValues:
    def test_steep_cone_pinned(self, params0):
        pm = replace(params0, m4=1.0)
        val = piece_value("T3", (100, 800), pm)
        assert val == pytest.approx(50 ** -0.1 * 100 ** 0.1 * 800 ** 0.3, rel=1e-12)
        assert val == pytest.approx(7.97, abs=0.01)

    def test_shallow_trace_identity(self, params0):
        # on the shallow interface the b1 powers cancel exactly
        e = params0.exps
        for x1 in (400.0, 4000.0, 40000.0):
            got = piece_value("T1", (x1, x1 / params0.region.b1), params0)
            assert got == pytest.approx(params0.m2 * x1 ** (e.delta2p - 6), rel=1e-12)

    def test_strip_level_zero_pinned(self, params0):
        e = params0.exps
        m01 = params0.m0_levels[1]
        for x1 in (5, 50, 1000):
            got = piece_value("T0", (x1, 0), params0)
            want = m01 * (x1 + 1) ** e.delta0 + params0.h0 * x1 ** e.delta0p
            assert got == pytest.approx(want, rel=1e-12)

    def test_membership_guard(self, params0):
        with pytest.raises(ValueError, match="not within reach"):
            piece_value("T3", (5, 1), params0)


class TestRates:
    def test_cone_sector_rates(self, params0):
        e = params0.exps
        assert rate_h("T2", (10, 10), params0, j=0) == pytest.approx(
            params0.h2 * 60 ** e.delta2p
        )
        assert rate_h("T2", (10, 10), params0, j=1) == pytest.approx(
            params0.eta2star * rate_h("T2", (10, 10), params0, j=0)
        )

    def test_strip_rate_crn1(self, params1):
        assert rate_h("T0", (100, 1), params1) == pytest.approx(params1.h0 * 100 ** -0.5)

    def test_rate_positive_everywhere(self, V0, rng):
        states = rng.integers(0, 2000, size=(500, 2))
        _, _, h = V0.evaluate(states)
        assert np.all(h > 0)


class TestPhi:
    def test_linear_for_crn0(self, params0):
        assert gamma_star(params0.exps) == 1.0
        assert phi(7.0, params0) == pytest.approx(params0.Ch * 7.0)

    def test_inverse_for_crn1(self, params1):
        assert gamma_star(params1.exps) == -1.0
        assert phi(8.0, params1) == pytest.approx(params1.Ch / 8.0)

    def test_unit_value(self, params0, params1):
        assert phi(1.0, params0) == pytest.approx(params0.Ch)
        assert phi(1.0, params1) == pytest.approx(params1.Ch)


class TestSelectParameters:
    def test_margins_feasible_both_variants(self):
        for variant in ("crn0", "crn1"):
            params, report = select_parameters(0.5, 0.1, variant)
            assert report.feasible()
            assert all(v > 0 for _, v in report.entries)

    def test_level_constraint(self, params1):
        # the pinned strip-level inequality at the asymptotic coefficients
        d0 = params1.exps.delta0
        m0 = params1.m0_levels
        assert m0[2] < m0[1] * (1 - d0) - params1.h0

    def test_h_rate_chain(ceiling, params0):
        e, g = params0.exps, params0.region
        assert params0.h3 == pytest.approx(
            (e.delta3p - 4) * params0.m4 * g.b2 ** -(e.delta3p - 4)
        )
        assert params0.h1 == pytest.approx(
            params0.m2 * (1 - e.delta1pp) * g.b1 ** (e.delta1pp - 1)
        )

    def test_narrow_cone_infeasible(self):
        with pytest.raises(InfeasibleParameters) as err:
            select_parameters(0.5, 0.1, "crn0", RegionParams(b0=20, b1=1.01, b2=50, rho=200))
        assert err.value.interface == "T23"

    def test_m0_table_decreasing(self, params0):
        levels = params0.m0_levels
        assert all(a > b for a, b in zip(levels, levels[1:]))
        assert all(v > 0 for v in levels)


class TestAssembly:
    def test_evaluator_matches_own_pieces(self, V0, rng):
        states = rng.integers(0, 3000, size=(300, 2))
        vals, codes, _ = V0.evaluate(states)
        for x, v, c in zip(states, vals, codes):
            tag = REGION_TAGS[c]
            if tag in ("T12", "T23", "T34"):
                continue  # interface bands glue by pointwise minimum
            ref = float(np.asarray(V0.piece_formula(tag, float(x[0]), float(x[1]))))
            assert v == pytest.approx(ref, rel=1e-12)

    def test_priming_trace_exact(self, V0, params0):
        # the steep-cone trace at the priming column equals the profile trace
        b2 = params0.region.b2
        for x2 in (600.0, 1000.0, 5000.0):
            v3 = float(np.asarray(V0.v3(b2, x2)))
            v4 = float(np.asarray(V0.v4(b2, x2)))
            assert v3 == pytest.approx(v4, rel=1e-12)

    def test_t12_trace_match(self, V0, params0):
        # cone trace equals the shallow-cone trace on the interface ray
        for x1 in (2000.0, 5000.0):
            x2 = x1 / params0.region.b1
            assert float(np.asarray(V0.v1(x1, x2))) == pytest.approx(
                float(np.asarray(V0.v2(x1, x2))), rel=1e-12
            )

    def test_t01_trace_match(self, V0, params0):
        b0 = params0.region.b0
        for x1 in (500.0, 3000.0):
            assert float(np.asarray(V0.v0p(x1, b0))) == pytest.approx(
                float(np.asarray(V0.v1(x1, b0))), rel=1e-12
            )

    def test_subdivided_vs_plain_cone_inflation(self, V0):
        # the sector construction inflates the cone value by a bounded,
        # analytically determined factor near the shallow interface
        x1, x2 = 3000.0, 320.0
        tilde = float(np.asarray(V0.v2(x1, x2)))
        plain = float(np.asarray(V0.v2_unsubdivided(x1, x2)))
        assert tilde >= plain
        assert (tilde - plain) / plain < 10.0

    def test_values_positive_and_growing(self, V0):
        rays = [(1, 0), (0, 1), (1, 1), (20, 1), (1, 20)]
        for d in rays:
            pts = np.array([[d[0] * t, d[1] * t] for t in (100, 10_000, 1_000_000)])
            vals = V0.values(pts)
            assert np.all(vals > 0)
            assert vals[2] > vals[1] > vals[0]


class TestPieceHomogeneity:
    """Scaling behavior of the closed-form pieces (monomials exact; the
    cone and priming pieces exact along their own invariant dilations)."""

    def test_steep_cone_monomial(self, params0):
        e = params0.exps
        w = unit_direction(np.array([1.0, 2.0]) / math.sqrt(5))
        delta = float(np.dot(w, (e.delta3p - 4, e.delta3pp - 2)))
        dev = homogeneity_check(
            lambda x: piece_value("T3", x, params0),
            w, delta, [(60.0, 700.0), (100.0, 1500.0)], [10.0, 100.0],
        )
        assert dev < 1e-10

    def test_shallow_cone_monomial(self, params0):
        e = params0.exps
        w = unit_direction(np.array([2.0, 1.0]) / math.sqrt(5))
        delta = float(np.dot(w, (e.delta1p - 5, e.delta1pp - 1)))
        dev = homogeneity_check(
            lambda x: piece_value("T1", x, params0),
            w, delta, [(500.0, 30.0), (1000.0, 80.0)], [10.0, 100.0],
        )
        assert dev < 1e-10

    def test_strip_column_monomial(self, params0):
        e = params0.exps
        dev = homogeneity_check(
            lambda x: piece_value("T0prime", x, params0),
            (1.0, 0.0), e.delta0pp - 5, [(300.0, 5.0), (900.0, 12.0)], [10.0, 100.0],
        )
        assert dev < 1e-10

    def test_priming_vertical_scaling(self, params0):
        dev = homogeneity_check(
            lambda x: piece_value("T4", x, params0),
            (0.0, 1.0), params0.exps.delta4, [(10.0, 600.0), (30.0, 2000.0)], [10.0, 100.0],
        )
        assert dev <= 0.05

    def test_cone_diagonal_scaling(self, params0):
        e = params0.exps
        w = unit_direction(np.array([1.0, 1.0]) / math.sqrt(2))
        delta = (e.delta2p - 6.0) / math.sqrt(2.0)
        dev = homogeneity_check(
            lambda x: piece_value("T2", x, params0),
            w, delta, [(2600.0, 900.0), (4000.0, 2000.0)], [10.0, 100.0],
        )
        assert dev <= 0.05


class TestAlternativePieces:
    def test_steep_reduces_at_unit_chi(self, params0):
        x = (80.0, 900.0)
        got = alt_piece_value("T3", x, 1.0, params0)
        want = 900.0 ** params0.exps.delta4 * (
            params0.m4 + params0.h3 * (80.0 - params0.region.b2)
        )
        assert got == pytest.approx(want, rel=1e-12)

    def test_lifted_homogeneity(self, params0):
        x = (80.0, 900.0)
        chi = 1.3
        l = 7.0
        d = params0.exps.delta4 + 1.0
        for tag in ("T3", "T2", "T1"):
            base = alt_piece_value(tag, x, chi, params0)
            scaled = alt_piece_value(tag, (l * x[0], l * x[1]), l * chi, params0)
            assert scaled == pytest.approx(l ** d * base, rel=1e-12)

    def test_priming_trace(self, params0):
        b2 = params0.region.b2
        got = alt_piece_value("T3", (b2, 70.0), 1.0, params0)
        assert got == pytest.approx(params0.m4 * 70.0 ** params0.exps.delta4, rel=1e-12)

    def test_region_restriction(self, params0):
        with pytest.raises(ValueError):
            alt_piece_value("T4", (10.0, 500.0), 1.0, params0)

    def test_chi_positive(self, params0):
        with pytest.raises(ValueError):
            alt_piece_value("T3", (80.0, 900.0), 0.0, params0)


class TestParamsIo:
    def test_round_trip(self, params0):
        text = params_to_text(params0)
        back = params_from_text(text)
        assert back == params0

    def test_missing_field(self):
        with pytest.raises(ValueError, match="missing field"):
            params_from_text("variant = crn0\n")

    def test_bad_line(self):
        with pytest.raises(ValueError, match="line 1"):
            params_from_text("nonsense without equals\n")
