"""Two-gamma Stein equation: solution, residuals, boundedness, recursion."""

import numpy as np
import pytest

from steinprod import funcs, steinsolve

CASES = [(1.0, 1.0, 1.0), (2.0, 0.5, 1.0), (1.5, 1.5, 2.0)]


def bounded_test_functions():
    return {
        "const": funcs.constant(1.0),
        "exp": funcs.exp_decay(1.0),
        "sin": funcs.Sinusoid(),
        "rational": funcs.BoundedRational(1.0),
        "gauss": funcs.gaussian_bump(1.0),
    }


class TestHomogeneousSystem:
    @pytest.mark.parametrize("r1,r2,lam", CASES)
    def test_fundamental_solutions_annihilated(self, r1, r2, lam):
        s, d = 0.5 * (r1 + r2), abs(r1 - r2)
        for x in (0.05, 0.5, 2.0, 10.0, 40.0):
            rk, ri = steinsolve.homogeneous_residual(r1, r2, lam, x)
            wk = funcs.BesselPowerComb([(1.0, -s, d, "k")], 2 * lam, 0.5).deriv(x, 0)
            wi = funcs.BesselPowerComb([(1.0, -s, d, "i")], 2 * lam, 0.5).deriv(x, 0)
            scale = (1.0 + x * lam**2)
            assert abs(rk) < 1e-8 * max(1.0, abs(wk) * scale)
            assert abs(ri) < 1e-8 * max(1.0, abs(wi) * scale)


class TestSolveSteinPG:
    def test_constant_test_function_gives_zero(self):
        sol = steinsolve.solve_stein_pg(1.0, 1.0, 1.0, funcs.constant(5.0))
        for x in (0.1, 1.0, 10.0):
            assert abs(sol.value(x)) < 1e-10

    def test_expectation_matches_density_quadrature(self):
        # E h for h(x) = x is the product of the gamma means
        e_h = steinsolve.expect_pg(1.4, 2.2, 1.5, funcs.monomial(1))
        assert e_h == pytest.approx(1.4 * 2.2 / 1.5**2, rel=1e-9)

    def test_unbounded_test_function_rejected(self):
        with pytest.raises(ValueError, match="unbounded"):
            steinsolve.solve_stein_pg(1.0, 1.0, 1.0, funcs.monomial(2))

    def test_representations_agree(self):
        sol = steinsolve.solve_stein_pg(1.0, 1.0, 1.0, funcs.exp_decay(1.0))
        for x in (0.1, 1.0, 10.0):
            a, b = sol.value(x), sol.value_tail_form(x)
            assert a == pytest.approx(b, abs=1e-8, rel=1e-8)

    def test_rejects_invalid_parameters(self):
        with pytest.raises(ValueError):
            steinsolve.solve_stein_pg(-1.0, 1.0, 1.0, funcs.constant(1.0))

    def test_bounded_solution(self):
        sol = steinsolve.solve_stein_pg(2.0, 0.5, 1.0, funcs.Sinusoid())
        grid = np.geomspace(1e-3, 1e2, 120)
        vals = np.array([sol.value(float(x)) for x in grid])
        assert np.all(np.isfinite(vals))
        # grid refinement changes the supremum estimate by < 1%
        fine = np.geomspace(1e-3, 1e2, 240)
        vals_fine = np.array([sol.value(float(x)) for x in fine])
        sup, sup_fine = np.max(np.abs(vals)), np.max(np.abs(vals_fine))
        assert abs(sup - sup_fine) < 0.01 * sup_fine

    def test_equal_shapes_small_x_bound(self):
        r = 1.5
        h = funcs.Sinusoid()
        sol = steinsolve.solve_stein_pg(r, r, 1.0, h)
        h_tilde_sup = 1.0 + abs(sol.e_h)  # |sin| <= 1
        bound = 4.0 * h_tilde_sup / (2 * r) ** 2
        assert abs(sol.value(1e-3)) <= bound + 1e-6


class TestResidual:
    @pytest.mark.parametrize("r1,r2,lam", CASES)
    def test_residual_small_for_exp(self, r1, r2, lam):
        sol = steinsolve.solve_stein_pg(r1, r2, lam, funcs.exp_decay(1.0))
        xs = np.geomspace(0.01, 50.0, 20)
        res = [steinsolve.stein_residual(sol, float(x)) for x in xs]
        assert np.max(np.abs(res)) < 1e-6

    def test_residual_zero_for_constant(self):
        sol = steinsolve.solve_stein_pg(1.0, 2.0, 1.0, funcs.constant(1.0))
        for x in (0.05, 1.0, 20.0):
            assert abs(steinsolve.stein_residual(sol, x)) < 1e-10


class TestDerivativeBounds:
    def test_stage_parameters_shift(self):
        sups = steinsolve.estimate_derivative_bounds(
            1.0, 1.0, 1.0, funcs.Sinusoid(), 2,
            grid=np.geomspace(1e-3, 1e2, 50))
        assert len(sups) == 3
        assert all(np.isfinite(s) and s < 50 for s in sups)

    def test_requires_smooth_enough_h(self):
        class Rough:
            max_order = 1

            def deriv(self, x, k=0):
                return 0.0 * np.asarray(x)

        with pytest.raises(ValueError, match="derivatives"):
            steinsolve.estimate_derivative_bounds(1.0, 1.0, 1.0, Rough(), 3)

    def test_stage_function_mean_zero(self):
        gap = steinsolve.stage_mean_zero_gap(1.0, 1.0, 1.0, funcs.exp_decay(1.0))
        assert gap < 1e-6
