"""Diffusion-series kernel and its spatial coefficients vs quadrature."""

import numpy as np
import pytest

from lfmgp import oracle
from lfmgp.kernels import (
    DiffusionParams,
    diffusion_cross_latent_cov,
    diffusion_cross_output_cov,
    series_coeff_cc,
    series_coeff_cu,
)


def make_params(n_terms=30, lx=0.3, lt=0.5):
    return DiffusionParams(
        decay=np.array([1.0, 0.6]),
        diffusivity=np.array([0.1, 0.25]),
        sens=np.ones((2, 1)),
        time_lengthscale=np.array([lt]),
        space_lengthscale=np.array([lx]),
        domain_length=1.0,
        n_terms=n_terms,
    )


class TestSeriesCoeffCC:
    def test_mixed_parity_is_zero(self):
        assert series_coeff_cc(1, 2, 0.3, 1.0) == 0.0
        assert series_coeff_cc(4, 1, 0.25, 1.0) == 0.0

    @pytest.mark.parametrize("n,m,lx", [(1, 3, 0.3), (3, 5, 0.25), (4, 2, 0.4)])
    def test_same_parity_matches_quadrature(self, n, m, lx):
        closed = series_coeff_cc(n, m, lx, 1.0)
        ref = oracle.coeff_cc_by_quadrature(n, m, lx, 1.0)
        assert abs(closed - ref.value) <= 1e-8

    @pytest.mark.parametrize("n,lx", [(1, 0.2), (2, 0.3), (5, 0.15)])
    def test_diagonal_matches_quadrature(self, n, lx):
        closed = series_coeff_cc(n, n, lx, 1.0)
        ref = oracle.coeff_cc_by_quadrature(n, n, lx, 1.0)
        assert abs(closed - ref.value) <= 1e-8

    def test_symmetry(self):
        assert series_coeff_cc(1, 3, 0.3, 1.0) == pytest.approx(
            series_coeff_cc(3, 1, 0.3, 1.0), rel=1e-11
        )


class TestSeriesCoeffCU:
    def test_antisymmetry_null(self):
        # sin(2 pi xi / l) is odd about l/2 under the symmetric weight
        assert abs(series_coeff_cu(0.5, 2, 0.3, 1.0)) <= 1e-14

    @pytest.mark.parametrize(
        "xp,n,lx", [(0.3, 1, 0.2), (0.8, 3, 0.15), (0.5, 1, 0.25), (1.0, 2, 0.2)]
    )
    def test_matches_quadrature(self, xp, n, lx):
        closed = series_coeff_cu(xp, n, lx, 1.0)
        ref = oracle.coeff_cu_by_quadrature(xp, n, lx, 1.0)
        assert abs(closed - ref.value) <= 1e-9

    def test_small_lengthscale_concentration(self):
        # the integral concentrates at xi = x': ratio to sqrt(pi) lx sin(w_n x')
        xp, n = 0.37, 1
        ratios = []
        for lx in (0.08, 0.04, 0.02, 0.01):
            val = series_coeff_cu(xp, n, lx, 1.0)
            ratios.append(val / (np.sqrt(np.pi) * lx * np.sin(n * np.pi * xp)))
        errs = [abs(r - 1.0) for r in ratios]
        assert all(b < a for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-3


class TestDiffusionKernel:
    def test_boundary_zeros(self):
        p = make_params(n_terms=10)
        for x in (0.0, 1.0):
            assert diffusion_cross_output_cov(x, 0.8, 0.5, 0.6, 0, 1, 0, p) == (
                pytest.approx(0.0, abs=1e-12)
            )
        assert diffusion_cross_latent_cov(0.0, 0.8, 0.5, 0.6, 0, 0, p) == (
            pytest.approx(0.0, abs=1e-12)
        )

    def test_zero_time_zero(self):
        p = make_params(n_terms=10)
        assert diffusion_cross_output_cov(0.4, 0.0, 0.5, 0.0, 0, 1, 0, p) == (
            pytest.approx(0.0, abs=1e-12)
        )

    def test_matches_image_sum_oracle(self):
        p = make_params(n_terms=30)
        for (a, b) in [((0.35, 1.0), (0.6, 0.8)), ((0.5, 0.7), (0.5, 0.7)),
                       ((0.2, 1.5), (0.8, 0.5))]:
            closed = diffusion_cross_output_cov(a[0], a[1], b[0], b[1], 0, 1, 0, p)
            ref = oracle.diffusion_cov_by_quadrature(p, 0, 1, 0, a, b)
            assert abs(closed - ref.value) <= 1e-3 * max(abs(ref.value), 1e-9)

    def test_cross_matches_oracle(self):
        # 60 series terms so the algebraic truncation tail sits well below
        # the 1e-4 oracle-match budget even for small covariance values
        p = make_params(n_terms=60)
        for (a, b) in [((0.35, 1.0), (0.6, 0.8)), ((0.7, 0.5), (0.25, 1.2))]:
            closed = diffusion_cross_latent_cov(a[0], a[1], b[0], b[1], 0, 0, p)
            ref = oracle.diffusion_cross_by_quadrature(p, 0, 0, a, b)
            assert abs(closed - ref.value) <= 1e-4 * max(abs(ref.value), 1e-9)

    def test_zero_sensitivity_cross(self):
        p = DiffusionParams(
            decay=np.array([1.0]), diffusivity=np.array([0.1]),
            sens=np.zeros((1, 1)), time_lengthscale=np.array([0.5]),
            space_lengthscale=np.array([0.3]), domain_length=1.0, n_terms=8,
        )
        assert diffusion_cross_latent_cov(0.4, 1.0, 0.5, 0.6, 0, 0, p) == 0.0

    def test_joint_symmetry(self):
        p = make_params(n_terms=15)
        a = diffusion_cross_output_cov(0.35, 1.0, 0.6, 0.8, 0, 1, 0, p)
        b = diffusion_cross_output_cov(0.6, 0.8, 0.35, 1.0, 1, 0, 0, p)
        assert a == pytest.approx(b, rel=1e-10)

    def test_truncation_convergence(self):
        """Doubling the series truncation 30 -> 60 changes entries only mildly.

        The sine series of the SE latent covariance converges algebraically
        (the SE factor does not satisfy the absorbing boundary conditions),
        so the observed 30 -> 60 change sits at the 1e-5 level rather than
        vanishing exponentially; 60 -> 120 must shrink it further.
        """
        rng = np.random.default_rng(9)
        for lx in (1.0 / 20.0, 0.3):
            p30 = make_params(n_terms=30, lx=lx)
            p60 = make_params(n_terms=60, lx=lx)
            p120 = make_params(n_terms=120, lx=lx)
            for _ in range(3):
                a = (rng.uniform(0.1, 0.9), rng.uniform(0.3, 1.5))
                b = (rng.uniform(0.1, 0.9), rng.uniform(0.3, 1.5))
                v30 = diffusion_cross_output_cov(a[0], a[1], b[0], b[1], 0, 1, 0, p30)
                v60 = diffusion_cross_output_cov(a[0], a[1], b[0], b[1], 0, 1, 0, p60)
                v120 = diffusion_cross_output_cov(a[0], a[1], b[0], b[1], 0, 1, 0, p120)
                scale = max(abs(v120), 1e-9)
                assert abs(v60 - v30) <= 2e-4 * scale
                assert abs(v120 - v60) <= 2e-4 * scale

    def test_rejects_out_of_domain(self):
        p = make_params(n_terms=5)
        with pytest.raises(ValueError):
            p.kff_block(0, 0, np.array([[1.4, 0.5]]), np.array([[0.5, 0.5]]))
        with pytest.raises(ValueError):
            p.kff_block(0, 0, np.array([[0.4, -0.5]]), np.array([[0.5, 0.5]]))


class TestImageGreens:
    def test_image_sum_matches_sine_series(self):
        # two representations of the same Dirichlet Green's function
        length, diff, dec = 1.0, 0.15, 0.7
        x, xi, s = 0.3, 0.6, 0.25
        img = oracle.dirichlet_heat_greens(x, xi, s, diff, dec, length)
        n = np.arange(1, 400)
        series = (
            (2.0 / length)
            * np.exp(-dec * s)
            * np.sum(
                np.sin(n * np.pi * x / length)
                * np.sin(n * np.pi * xi / length)
                * np.exp(-diff * (n * np.pi / length) ** 2 * s)
            )
        )
        assert img == pytest.approx(series, rel=1e-10)

    def test_boundary_conditions(self):
        assert oracle.dirichlet_heat_greens(0.0, 0.4, 0.2, 0.1, 0.5, 1.0) == (
            pytest.approx(0.0, abs=1e-12)
        )
        assert oracle.dirichlet_heat_greens(1.0, 0.4, 0.2, 0.1, 0.5, 1.0) == (
            pytest.approx(0.0, abs=1e-12)
        )
