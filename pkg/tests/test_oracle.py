"""Oracle-module self-tests: quadrature contracts and the simulator."""

import numpy as np
import pytest

from lfmgp import oracle
from lfmgp.errors import QuadratureBudgetError
from lfmgp.kernels import FirstOrderParams, SecondOrderParams
from lfmgp.kernels.ode import first_order_cross_output_cov


class TestQuadrature:
    def test_delta_response_recovers_force_cov(self):
        # near-delta impulse response (narrow offset Gaussian, width 1e-4)
        width, offset = 1e-4, 5e-4
        norm = 1.0 / (width * np.sqrt(2.0 * np.pi))

        def fn(s):
            return norm * np.exp(-0.5 * ((s - offset) / width) ** 2)

        g = oracle.GreensFunction(0, fn, "delta approximation")
        k = oracle.se_force_cov(1.0)
        t, tp = 2.0, 3.0
        res = oracle.kernel_by_quadrature(g, g, k, t, tp, tol=1e-9,
                                          peak_lag=offset, peak_width=width)
        assert abs(res.value - k(t, tp)) <= 1e-4

    def test_error_estimate_bounds_true_error(self):
        g1 = oracle.first_order_greens(0.7)
        g2 = oracle.first_order_greens(1.9)
        k = oracle.se_force_cov(0.8)
        res = oracle.kernel_by_quadrature(g1, g2, k, 1.3, 2.1, tol=1e-8)
        tight = oracle.kernel_by_quadrature(g1, g2, k, 1.3, 2.1, tol=1e-12)
        assert abs(res.value - tight.value) <= max(res.error_estimate, 1e-12)
        assert res.evaluations > 0

    def test_tolerance_halving_self_consistency(self):
        g1 = oracle.first_order_greens(0.5)
        g2 = oracle.first_order_greens(1.1)
        k = oracle.se_force_cov(1.0)
        a = oracle.kernel_by_quadrature(g1, g2, k, 2.0, 1.5, tol=1e-8)
        b = oracle.kernel_by_quadrature(g1, g2, k, 2.0, 1.5, tol=5e-9)
        assert abs(a.value - b.value) <= max(a.error_estimate, 1e-12)

    def test_budget_exhaustion_is_explicit(self):
        g = oracle.first_order_greens(1.0)
        wild = lambda a, b: np.cos(4e4 * (a - 2.0 * b)) * np.exp(-((a - b) ** 2))
        with pytest.raises(QuadratureBudgetError) as err:
            oracle.kernel_by_quadrature(g, g, wild, 3.0, 3.0, tol=1e-12)
        assert err.value.value is not None

    def test_cross_zero_sensitivity_short_circuits(self):
        g = oracle.first_order_greens(1.0)
        res = oracle.cross_kernel_by_quadrature(
            g, oracle.se_force_cov(1.0), 2.0, 1.0, sensitivity=0.0
        )
        assert res.value == 0.0 and res.evaluations == 0


class TestSimulator:
    def make_params(self, d=2):
        return FirstOrderParams(
            decay=np.array([1.0, 0.5][:d]),
            sens=np.ones((d, 1)),
            lengthscale=np.array([1.0]),
        )

    def test_zero_forces_gives_pure_noise(self):
        params = self.make_params()
        grid = np.linspace(0, 5, 400)
        rng = np.random.default_rng(0)
        sigma = 0.3
        noisy, clean = oracle.simulate_forced_system(
            params, grid, np.zeros((1, grid.size)), sigma, rng
        )
        assert np.all(clean == 0.0)
        var = noisy.var(axis=1)
        mc_sd = sigma**2 * np.sqrt(2.0 / (grid.size - 1))
        assert np.all(np.abs(var - sigma**2) <= 3.0 * mc_sd)

    def test_step_response_analytic(self):
        params = FirstOrderParams(
            decay=np.array([1.0]), sens=np.array([[1.0]]),
            lengthscale=np.array([1.0]),
        )
        grid = np.linspace(0, 6, 1201)
        rng = np.random.default_rng(0)
        _, clean = oracle.simulate_forced_system(
            params, grid, np.ones((1, grid.size)), 0.0, rng
        )
        expected = 1.0 - np.exp(-grid)
        assert np.max(np.abs(clean[0] - expected)) <= 1e-4

    def test_linearity_without_noise(self):
        params = self.make_params()
        grid = np.linspace(0, 5, 300)
        rng = np.random.default_rng(1)
        forces = oracle.sample_se_forces(grid, params.lengthscale, rng)
        _, a = oracle.simulate_forced_system(params, grid, forces, 0.0, rng)
        _, b = oracle.simulate_forced_system(params, grid, 2.0 * forces, 0.0, rng)
        np.testing.assert_array_equal(2.0 * a, b)

    def test_coarse_grid_warns(self):
        params = self.make_params()
        grid = np.linspace(0, 5, 20)  # step 0.26 > lengthscale/10
        with pytest.warns(UserWarning, match="grid step"):
            oracle.simulate_forced_system(
                params, grid, np.zeros((1, grid.size)), 0.0,
                np.random.default_rng(0),
            )

    def test_second_order_impulse_matches_greens(self):
        params = SecondOrderParams(
            spring=np.array([2.0]), damper=np.array([0.6]),
            sens=np.array([[1.0]]), lengthscale=np.array([1.0]),
        )
        g = oracle.second_order_greens(2.0, 0.6)
        grid = np.linspace(0, 4, 2001)
        # narrow unit-mass pulse at t=0.5 approximates a shifted impulse
        width = 0.004
        pulse = np.exp(-0.5 * ((grid - 0.5) / width) ** 2)
        pulse /= np.trapezoid(pulse, grid)
        _, clean = oracle.simulate_forced_system(
            params, grid, pulse[None, :], 0.0, np.random.default_rng(0)
        )
        mask = grid > 0.6
        expected = g.fn(grid[mask] - 0.5)
        assert np.max(np.abs(clean[0, mask] - expected)) <= 5e-3

    @pytest.mark.slow
    def test_monte_carlo_covariance_matches_closed_form(self):
        """Replicate covariance agrees with the closed form at ~1/sqrt(R)."""
        params = FirstOrderParams(
            decay=np.array([0.8, 1.6]), sens=np.array([[1.0], [0.7]]),
            lengthscale=np.array([1.0]),
        )
        grid = np.linspace(0, 4, 161)
        i1, i2 = 80, 140
        t1, t2 = grid[i1], grid[i2]
        k12 = (
            params.sens[0, 0] * params.sens[1, 0]
            * first_order_cross_output_cov(t1, t2, 0, 1, 0, params)
        )
        k11 = params.sens[0, 0] ** 2 * first_order_cross_output_cov(
            t1, t1, 0, 0, 0, params
        )
        k22 = params.sens[1, 0] ** 2 * first_order_cross_output_cov(
            t2, t2, 1, 1, 0, params
        )
        for reps in (125, 500):
            rng = np.random.default_rng(100 + reps)
            vals = np.empty((reps, 2))
            for r in range(reps):
                forces = oracle.sample_se_forces(grid, params.lengthscale, rng)
                _, clean = oracle.simulate_forced_system(
                    params, grid, forces, 0.0, rng
                )
                vals[r] = clean[0, i1], clean[1, i2]
            emp = np.cov(vals.T, ddof=1)[0, 1]
            mc_sd = np.sqrt((k11 * k22 + k12**2) / reps)
            assert abs(emp - k12) <= 3.0 * mc_sd
