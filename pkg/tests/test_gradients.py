"""Analytic marginal-likelihood gradients vs central finite differences.

The acceptance suite runs 20 instances per family; this module keeps a
fast smoke version (3 instances) so gradient regressions surface in the
unit run.  The relative error uses max(|analytic|, |fd|, floor) so
near-zero gradient entries stay meaningful.
"""

import numpy as np
import pytest

from _support import ALL_FAMILIES, draw_inputs, draw_kernel
from lfmgp import gp
from lfmgp.dataset import MultiOutputDataset, OutputSeries


def gradient_check(tag, seed, n_points=6, n_terms=5):
    rng = np.random.default_rng(seed)
    kernel = draw_kernel(tag, rng, n_terms=n_terms)
    inputs = draw_inputs(tag, rng, kernel.n_outputs, max_points=n_points)
    ds = MultiOutputDataset(tuple(
        OutputSeries(f"o{d}", X, rng.standard_normal(X.shape[0]))
        for d, X in enumerate(inputs)
    ))
    noise = rng.uniform(0.02, 0.3, ds.n_outputs)
    _, grad = gp.lml_and_gradient(kernel, noise, ds)
    nk = kernel.log_vector().size
    x0 = np.concatenate([kernel.log_vector(), np.log(noise)])

    worst = 0.0
    for i in range(x0.size):
        h = 1e-6 * max(1.0, abs(x0[i]))
        xp = x0.copy()
        xp[i] += h
        xm = x0.copy()
        xm[i] -= h
        fp = gp.log_marginal_likelihood(
            kernel.with_log_vector(xp[:nk]), np.exp(xp[nk:]), ds
        )
        fm = gp.log_marginal_likelihood(
            kernel.with_log_vector(xm[:nk]), np.exp(xm[nk:]), ds
        )
        fd = (fp - fm) / (2.0 * h)
        denom = max(abs(grad[i]), abs(fd), 1e-6)
        worst = max(worst, abs(grad[i] - fd) / denom)
    return worst


@pytest.mark.parametrize("tag", ALL_FAMILIES)
def test_lml_gradient_matches_finite_differences(tag):
    for seed in (0, 1, 2):
        worst = gradient_check(tag, seed)
        assert worst <= 1e-4, f"{tag} seed {seed}: worst rel err {worst:.2e}"
