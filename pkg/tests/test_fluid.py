import io

import numpy as np
import pytest
from scipy.optimize import fsolve

from crnstab.fluid import integrate, ode_rhs, vector_field_grid
from crnstab.network import builtin_network


class TestRhs:
    def test_exact_mass_action_field(self, crn0):
        # sum of rate * net vector; at (1,1) every monomial equals one
        # r1 (1,1) + r2 (0,-1) + r3 (-5,1) + r4 (2,-3)
        assert tuple(ode_rhs(crn0, (1.0, 1.0))) == (-2.0, -2.0)

    def test_crn2_coincides_at_ones(self, crn0, crn2):
        assert np.allclose(ode_rhs(crn0, (1.0, 1.0)), ode_rhs(crn2, (1.0, 1.0)))

    def test_origin_only_source(self):
        for name in ("crn0", "crn1", "crn2"):
            assert tuple(ode_rhs(builtin_network(name), (0.0, 0.0))) == (1.0, 1.0)

    def test_variant_difference(self, crn0, crn1):
        # fields differ only in the second component by (x1^0 - x1^1) x2
        pts = [(0.5, 1.5), (2.0, 0.3), (1.2, 2.2)]
        for x1, x2 in pts:
            d = ode_rhs(crn0, (x1, x2)) - ode_rhs(crn1, (x1, x2))
            assert d[0] == pytest.approx(0.0, abs=1e-12)
            assert d[1] == pytest.approx(-(1 - x1) * x2, rel=1e-12, abs=1e-12)


class TestIntegrate:
    def test_equilibrium_stays_put(self, crn0):
        eq = fsolve(lambda x: ode_rhs(crn0, x), x0=[1.0, 0.8], full_output=False)
        eq = np.abs(eq)
        assert np.linalg.norm(ode_rhs(crn0, eq)) < 1e-9
        tol = 1e-8
        path = integrate(crn0, eq, t_end=1.0, tol=tol)
        dev = np.abs(path.states - eq).max()
        assert dev <= 10 * tol + 1e-12

    def test_euler_consistency(self, crn0):
        h = 1e-4
        path = integrate(crn0, (1.0, 1.0), t_end=h, tol=1e-10)
        end = path.states[-1]
        euler = np.array([1.0, 1.0]) + h * ode_rhs(crn0, (1.0, 1.0))
        assert np.abs(end - euler).max() < 20 * h ** 2 * 100

    def test_tolerance_halving_improves(self, crn1):
        ref = integrate(crn1, (1.0, 1.0), 1.0, tol=1e-12)
        grid = np.linspace(0.05, 1.0, 20)
        ref_vals = np.array([ref.value_at(t) for t in grid])

        def deviation(tol):
            p = integrate(crn1, (1.0, 1.0), 1.0, tol=tol)
            vals = np.array([p.value_at(t) for t in grid])
            return np.abs(vals - ref_vals).max()

        d1 = deviation(1e-4)
        d2 = deviation(5e-5)
        assert d2 <= d1

    def test_positivity(self, crn0):
        path = integrate(crn0, (0.0, 2.5), 2.0, tol=1e-9)
        assert path.states.min() >= 0.0

    def test_input_validation(self, crn0):
        with pytest.raises(ValueError):
            integrate(crn0, (1.0, 1.0), t_end=-1.0)
        with pytest.raises(ValueError):
            integrate(crn0, (1.0, 1.0), t_end=1.0, tol=0.0)
        with pytest.raises(ValueError):
            integrate(crn0, (-1.0, 1.0), t_end=1.0)


class TestGrid:
    def test_corner_value(self, crn0):
        points, values = vector_field_grid(crn0, (0.0, 1.0, 0.0, 1.0), 2)
        idx = np.where((points == (0.0, 0.0)).all(axis=1))[0][0]
        assert tuple(values[idx]) == (1.0, 1.0)

    def test_variant_difference_on_grid(self, crn0, crn1):
        pts0, v0 = vector_field_grid(crn0, (0.1, 2.0, 0.1, 2.0), 4)
        pts1, v1 = vector_field_grid(crn1, (0.1, 2.0, 0.1, 2.0), 4)
        assert np.allclose(pts0, pts1)
        diff = v0 - v1
        expected = -(1 - pts0[:, 0]) * pts0[:, 1]
        assert np.allclose(diff[:, 0], 0.0, atol=1e-12)
        assert np.allclose(diff[:, 1], expected, rtol=1e-12, atol=1e-12)

    def test_degenerate_bounds(self, crn0):
        points, values = vector_field_grid(crn0, (1.0, 1.0, 1.0, 1.0), 2)
        assert np.allclose(points, 1.0)
        assert np.allclose(values, (-2.0, -2.0))

    def test_resolution_validation(self, crn0):
        with pytest.raises(ValueError):
            vector_field_grid(crn0, (0, 1, 0, 1), 1)


class TestKurtz:
    def test_scaled_paths_converge_to_ode(self, crn0, scaled_network):
        from crnstab import _kernels

        ref = integrate(crn0, (1.0, 1.0), 1.0, tol=1e-10)
        grid = np.linspace(0.02, 1.0, 40)
        ref_states = np.array([ref.value_at(t) for t in grid])
        sups = []
        for vol in (10, 100, 1000):
            sn = scaled_network(crn0, vol)
            x0 = np.array([vol, vol], dtype=np.int64)
            paths = np.array([
                _kernels.run_to_time_grid(
                    sn.c_in_matrix(), sn.vectors_matrix(), sn.kappas(), x0, grid, 4242, i
                )
                for i in range(100)
            ], dtype=np.float64)
            mean_path = paths.mean(axis=0) / vol
            sups.append(np.abs(mean_path - ref_states).max())
        assert sups[0] > sups[1] > sups[2]
        rel = sups[2] / np.abs(ref_states).max()
        assert rel <= 0.05
