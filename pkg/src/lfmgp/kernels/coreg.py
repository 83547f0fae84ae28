"""Coregionalization baselines: rank-Q sensitivity mixing of latent SE GPs.

These are the degenerate smoothing-free members of the family: taking the
system's impulse response to be a Dirac delta collapses the convolution,
leaving k_{d,d'}(x,x') = sum_q S_dq S_d'q k_q(x,x').  With one shared
latent covariance this is the multi-task GP; with one length-scale per
latent function it is the semiparametric latent factor model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .base import (
    KernelFamily,
    as_points,
    labels_1d,
    labels_2d,
    require_finite,
    require_positive,
    sens_weighted_sum,
    sens_weighted_sum_grads,
)
from .se import se_block

__all__ = ["MultiTaskParams", "SemiparametricParams", "mtgp_cov"]


def _se_grad_factor(Xa, Xb, lengthscale):
    Xa = as_points(Xa)
    Xb = as_points(Xb)
    d2 = np.sum((Xa[:, None, :] - Xb[None, :, :]) ** 2, axis=2)
    return 2.0 * d2 / lengthscale**2


@dataclass(frozen=True, eq=False)
class MultiTaskParams(KernelFamily):
    """Shared latent SE covariance mixed by a D x Q sensitivity matrix."""

    lengthscale: float
    sens: np.ndarray  # (D, Q)

    tag = "mtgp"
    supports_latent = False

    def __post_init__(self):
        require_positive("lengthscale", [self.lengthscale])
        object.__setattr__(
            self, "sens", np.atleast_2d(require_finite("sens", self.sens))
        )

    @property
    def n_outputs(self):
        return self.sens.shape[0]

    @property
    def n_forces(self):
        return self.sens.shape[1]

    def labels(self):
        return ["log_lengthscale[0]"] + labels_2d("sens", *self.sens.shape)

    def log_vector(self):
        return np.concatenate([[np.log(self.lengthscale)], self.sens.ravel()])

    def with_log_vector(self, vec):
        return replace(
            self,
            lengthscale=float(np.exp(vec[0])),
            sens=vec[1:].reshape(self.sens.shape),
        )

    def kff_block(self, d, dp, Xd, Xdp):
        base = se_block(Xd, Xdp, self.lengthscale)
        return sens_weighted_sum(self.sens, d, dp, [base] * self.n_forces)

    def kff_block_grads(self, d, dp, Xd, Xdp):
        base = se_block(Xd, Xdp, self.lengthscale)
        factor = _se_grad_factor(Xd, Xdp, self.lengthscale)
        per_q_grads = [{"log_lengthscale[0]": base * factor}] * self.n_forces
        return sens_weighted_sum_grads(
            self.sens, d, dp, [base] * self.n_forces, per_q_grads
        )


@dataclass(frozen=True, eq=False)
class SemiparametricParams(KernelFamily):
    """Per-force latent SE length-scales mixed by sensitivities."""

    lengthscale: np.ndarray  # (Q,)
    sens: np.ndarray  # (D, Q)

    tag = "slfm"
    supports_latent = False

    def __post_init__(self):
        object.__setattr__(
            self, "lengthscale", require_positive("lengthscale", self.lengthscale)
        )
        object.__setattr__(
            self, "sens", np.atleast_2d(require_finite("sens", self.sens))
        )
        if self.sens.shape[1] != self.lengthscale.size:
            raise ValueError("sens must have one column per latent length-scale")

    @property
    def n_outputs(self):
        return self.sens.shape[0]

    @property
    def n_forces(self):
        return self.sens.shape[1]

    def labels(self):
        return labels_1d("log_lengthscale", self.n_forces) + labels_2d(
            "sens", *self.sens.shape
        )

    def log_vector(self):
        return np.concatenate([np.log(self.lengthscale), self.sens.ravel()])

    def with_log_vector(self, vec):
        q = self.n_forces
        return replace(
            self,
            lengthscale=np.exp(vec[:q]),
            sens=vec[q:].reshape(self.sens.shape),
        )

    def kff_block(self, d, dp, Xd, Xdp):
        bases = [se_block(Xd, Xdp, ell) for ell in self.lengthscale]
        return sens_weighted_sum(self.sens, d, dp, bases)

    def kff_block_grads(self, d, dp, Xd, Xdp):
        bases = [se_block(Xd, Xdp, ell) for ell in self.lengthscale]
        per_q_grads = [
            {
                f"log_lengthscale[{q}]": bases[q]
                * _se_grad_factor(Xd, Xdp, self.lengthscale[q])
            }
            for q in range(self.n_forces)
        ]
        return sens_weighted_sum_grads(self.sens, d, dp, bases, per_q_grads)


def mtgp_cov(t, tp, d, dp, params: MultiTaskParams):
    """Scalar multi-task covariance entry."""
    return float(
        params.kff_block(d, dp, np.atleast_1d(t), np.atleast_1d(tp))[0, 0]
    )
