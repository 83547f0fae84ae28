"""Gaussian-smoothing covariance for p-dimensional inputs.

Each output is a latent field convolved with an axis-aligned Gaussian
blur whose per-axis variances ``smooth_var[d]`` absorb diffusion-time
products (the snapshot interpretation of a free-space diffusion).  The
latent forces carry normalized Gaussian covariances with per-axis
variances ``latent_var[q]``, so every block is itself a normalized
Gaussian in x - x' whose variance is the sum of the participating
smoothing variances:

    k_{f_d, f_d'}^q(x, x') = N(x - x' ; smooth_var[d] + smooth_var[d']
                                        + latent_var[q])
    k_{f_d, u_q}(x, x')    = N(x - x' ; smooth_var[d] + latent_var[q])
    k_{u_q, u_q}(x, x')    = N(x - x' ; latent_var[q])
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .base import (
    KernelFamily,
    as_points,
    labels_2d,
    require_finite,
    require_positive,
    sens_weighted_sum,
    sens_weighted_sum_grads,
)

__all__ = ["HeatParams", "heat_cross_output_cov", "heat_cross_latent_cov"]


def _gauss_block(Xa, Xb, var):
    """Normalized axis-aligned Gaussian of the pairwise differences."""
    Xa = as_points(Xa)
    Xb = as_points(Xb)
    diff = Xa[:, None, :] - Xb[None, :, :]
    norm = np.prod(2.0 * np.pi * var) ** -0.5
    expo = -0.5 * np.sum(diff**2 / var, axis=2)
    return norm * np.exp(expo), diff


@dataclass(frozen=True, eq=False)
class HeatParams(KernelFamily):
    smooth_var: np.ndarray  # (D, p) per-output smoothing variances
    latent_var: np.ndarray  # (Q, p) latent Gaussian variances
    sens: np.ndarray  # (D, Q)

    tag = "heat"

    def __post_init__(self):
        object.__setattr__(
            self, "smooth_var", np.atleast_2d(require_positive("smooth_var", self.smooth_var))
        )
        object.__setattr__(
            self, "latent_var", np.atleast_2d(require_positive("latent_var", self.latent_var))
        )
        object.__setattr__(
            self, "sens", np.atleast_2d(require_finite("sens", self.sens))
        )
        if self.smooth_var.shape[1] != self.latent_var.shape[1]:
            raise ValueError("smooth_var and latent_var disagree on input dimension")
        if self.sens.shape != (self.smooth_var.shape[0], self.latent_var.shape[0]):
            raise ValueError("sens must be (n_outputs, n_forces)")

    @property
    def n_outputs(self):
        return self.smooth_var.shape[0]

    @property
    def n_forces(self):
        return self.latent_var.shape[0]

    @property
    def input_dim(self):
        return self.smooth_var.shape[1]

    def labels(self):
        return (
            labels_2d("log_smooth_var", *self.smooth_var.shape)
            + labels_2d("log_latent_var", *self.latent_var.shape)
            + labels_2d("sens", *self.sens.shape)
        )

    def log_vector(self):
        return np.concatenate(
            [
                np.log(self.smooth_var).ravel(),
                np.log(self.latent_var).ravel(),
                self.sens.ravel(),
            ]
        )

    def with_log_vector(self, vec):
        nd = self.smooth_var.size
        nq = self.latent_var.size
        return replace(
            self,
            smooth_var=np.exp(vec[:nd]).reshape(self.smooth_var.shape),
            latent_var=np.exp(vec[nd : nd + nq]).reshape(self.latent_var.shape),
            sens=vec[nd + nq :].reshape(self.sens.shape),
        )

    def _bases(self, d, dp, Xd, Xdp, with_diff=False):
        out = []
        for q in range(self.n_forces):
            var = self.smooth_var[d] + self.smooth_var[dp] + self.latent_var[q]
            out.append(_gauss_block(Xd, Xdp, var) + (var,))
        return out

    def kff_block(self, d, dp, Xd, Xdp):
        bases = [b for b, _, _ in self._bases(d, dp, Xd, Xdp)]
        return sens_weighted_sum(self.sens, d, dp, bases)

    def kff_block_grads(self, d, dp, Xd, Xdp):
        bases = []
        per_q = []
        for q, (block, diff, var) in enumerate(self._bases(d, dp, Xd, Xdp)):
            bases.append(block)
            # d/d(var_j) of a normalized Gaussian: k * (delta_j^2/var_j^2 - 1/var_j)/2
            dvar = block[:, :, None] * 0.5 * (
                diff**2 / var**2 - 1.0 / var
            )  # (N, M, p)
            g = {}
            for j in range(self.input_dim):
                g_out = dvar[:, :, j] * self.smooth_var[d, j]
                if d == dp:
                    g[f"log_smooth_var[{d},{j}]"] = 2.0 * g_out
                else:
                    g[f"log_smooth_var[{d},{j}]"] = g_out
                    g[f"log_smooth_var[{dp},{j}]"] = (
                        dvar[:, :, j] * self.smooth_var[dp, j]
                    )
                g[f"log_latent_var[{q},{j}]"] = dvar[:, :, j] * self.latent_var[q, j]
            per_q.append(g)
        return sens_weighted_sum_grads(self.sens, d, dp, bases, per_q)

    def kfu_block(self, d, q, Xd, Xu):
        var = self.smooth_var[d] + self.latent_var[q]
        block, _ = _gauss_block(Xd, Xu, var)
        return self.sens[d, q] * block

    def kuu_block(self, q, Xu, Xup):
        block, _ = _gauss_block(Xu, Xup, self.latent_var[q])
        return block


def heat_cross_output_cov(x, xp, d, dp, q, params: HeatParams):
    """Scalar output-output covariance for force q, without sensitivities."""
    var = params.smooth_var[d] + params.smooth_var[dp] + params.latent_var[q]
    block, _ = _gauss_block(np.atleast_2d(x), np.atleast_2d(xp), var)
    return float(block[0, 0])


def heat_cross_latent_cov(x, xp, d, q, params: HeatParams):
    """Scalar output-latent covariance including the sensitivity factor."""
    return float(params.kfu_block(d, q, np.atleast_2d(x), np.atleast_2d(xp))[0, 0])
