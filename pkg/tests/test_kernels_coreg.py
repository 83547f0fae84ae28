"""Coregionalization baselines and the independent-SE family."""

import numpy as np
import pytest

from lfmgp.errors import UnsupportedFamilyError
from lfmgp.kernels import (
    IndependentSEParams,
    MultiTaskParams,
    SemiparametricParams,
    mtgp_cov,
    se_cov,
)


class TestMultiTask:
    def test_unit_diagonal_with_unit_row(self):
        s = np.array([[0.6, 0.8], [1.0, 0.0]])  # rows have unit norm
        p = MultiTaskParams(lengthscale=1.3, sens=s)
        assert mtgp_cov(0.7, 0.7, 0, 0, p) == pytest.approx(1.0, abs=1e-14)
        assert mtgp_cov(2.0, 2.0, 1, 1, p) == pytest.approx(1.0, abs=1e-14)

    def test_rank_one_coregionalization(self):
        rng = np.random.default_rng(0)
        s = rng.standard_normal((4, 1))
        p = MultiTaskParams(lengthscale=0.9, sens=s)
        B = np.array([[p.kff_block(d, dp, [0.0], [0.0])[0, 0] for dp in range(4)]
                      for d in range(4)])
        assert np.linalg.matrix_rank(B, tol=1e-10) == 1

    def test_definitional_sum(self):
        rng = np.random.default_rng(1)
        s = rng.standard_normal((3, 2))
        p = MultiTaskParams(lengthscale=1.1, sens=s)
        t, tp = 0.4, 1.9
        expected = sum(
            s[0, q] * s[2, q] * se_cov(t, tp, 1.1) for q in range(2)
        )
        assert mtgp_cov(t, tp, 0, 2, p) == pytest.approx(expected, rel=1e-13)

    def test_no_latent_surface(self):
        p = MultiTaskParams(lengthscale=1.0, sens=np.ones((2, 1)))
        assert not p.supports_latent
        with pytest.raises(UnsupportedFamilyError):
            p.kfu_block(0, 0, np.array([0.0]), np.array([0.0]))


class TestSemiparametric:
    def test_reduces_to_multitask_with_equal_lengthscales(self):
        rng = np.random.default_rng(2)
        s = rng.standard_normal((3, 2))
        a = SemiparametricParams(lengthscale=np.array([0.8, 0.8]), sens=s)
        b = MultiTaskParams(lengthscale=0.8, sens=s)
        X = rng.uniform(0, 3, (5, 1))
        np.testing.assert_allclose(
            a.kff_block(0, 2, X, X), b.kff_block(0, 2, X, X), rtol=1e-13
        )

    def test_distinct_lengthscales_enter_per_force(self):
        s = np.array([[1.0, 0.0], [0.0, 1.0]])
        p = SemiparametricParams(lengthscale=np.array([0.5, 2.0]), sens=s)
        t, tp = 0.0, 1.0
        assert p.kff_block(0, 0, [t], [tp])[0, 0] == pytest.approx(
            se_cov(t, tp, 0.5), rel=1e-13
        )
        assert p.kff_block(1, 1, [t], [tp])[0, 0] == pytest.approx(
            se_cov(t, tp, 2.0), rel=1e-13
        )


class TestIndependentSE:
    def test_block_diagonal(self):
        p = IndependentSEParams(
            signal_var=np.array([1.0, 2.0]), lengthscale=np.array([0.5, 1.5])
        )
        X = np.linspace(0, 2, 4)[:, None]
        assert np.all(p.kff_block(0, 1, X, X) == 0.0)
        diag = p.kff_block(1, 1, X, X)
        assert diag[0, 0] == pytest.approx(2.0, abs=1e-14)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            IndependentSEParams(
                signal_var=np.array([0.0]), lengthscale=np.array([1.0])
            )
