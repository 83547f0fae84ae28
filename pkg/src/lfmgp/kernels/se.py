"""Squared-exponential covariance and the independent-GP baseline family."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .base import (
    KernelFamily,
    as_points,
    labels_1d,
    require_positive,
)

__all__ = ["se_cov", "se_block", "IndependentSEParams"]


def se_cov(x, xp, lengthscale):
    """exp(-|x - x'|^2 / lengthscale^2) for scalar or vector inputs."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    r2 = float(np.sum((x - xp) ** 2))
    return float(np.exp(-r2 / lengthscale**2))


def se_block(Xa, Xb, lengthscale):
    """Isotropic SE Gram block between point sets (Na, p) and (Nb, p)."""
    Xa = as_points(Xa)
    Xb = as_points(Xb)
    d2 = np.sum((Xa[:, None, :] - Xb[None, :, :]) ** 2, axis=2)
    return np.exp(-d2 / lengthscale**2)


@dataclass(frozen=True, eq=False)
class IndependentSEParams(KernelFamily):
    """Independent SE GP per output: k_dd'(x,x') = delta_dd' v_d exp(-r^2/l_d^2).

    Doubles as the per-output model of the signal-to-noise filter, where
    ``signal_var`` plays the signal-variance role against the noise floor.
    """

    signal_var: np.ndarray  # (D,)
    lengthscale: np.ndarray  # (D,)

    tag = "se"
    supports_latent = False

    def __post_init__(self):
        object.__setattr__(
            self, "signal_var", require_positive("signal_var", self.signal_var)
        )
        object.__setattr__(
            self, "lengthscale", require_positive("lengthscale", self.lengthscale)
        )
        if self.signal_var.shape != self.lengthscale.shape:
            raise ValueError("signal_var and lengthscale must have equal length")

    @property
    def n_outputs(self):
        return self.signal_var.size

    @property
    def n_forces(self):
        return 0

    def labels(self):
        d = self.n_outputs
        return labels_1d("log_signal_var", d) + labels_1d("log_lengthscale", d)

    def log_vector(self):
        return np.concatenate([np.log(self.signal_var), np.log(self.lengthscale)])

    def with_log_vector(self, vec):
        d = self.n_outputs
        return replace(
            self,
            signal_var=np.exp(vec[:d]),
            lengthscale=np.exp(vec[d : 2 * d]),
        )

    def kff_block(self, d, dp, Xd, Xdp):
        if d != dp:
            return np.zeros((as_points(Xd).shape[0], as_points(Xdp).shape[0]))
        return self.signal_var[d] * se_block(Xd, Xdp, self.lengthscale[d])

    def kff_block_grads(self, d, dp, Xd, Xdp):
        K = self.kff_block(d, dp, Xd, Xdp)
        if d != dp:
            return K, {}
        Xa = as_points(Xd)
        Xb = as_points(Xdp)
        d2 = np.sum((Xa[:, None, :] - Xb[None, :, :]) ** 2, axis=2)
        grads = {
            f"log_signal_var[{d}]": K.copy(),
            f"log_lengthscale[{d}]": K * 2.0 * d2 / self.lengthscale[d] ** 2,
        }
        return K, grads
