"""Covariance families derived from first- and second-order ODE responses.

First order:  dy_d/dt + B_d y_d = sum_q S_dq u_q(t),  impulse response
exp(-B_d t).  Second order (unit masses):  y_d'' + C_d y_d' + B_d y_d =
sum_q S_dq u_q(t), impulse response exp(-alpha_d t) sin(omega_d t)/omega_d
with alpha_d = C_d/2 and omega_d = sqrt(4 B_d - C_d^2)/2.  The latent
forces carry unit-variance SE priors exp(-(t-t')^2/ell_q^2).

The second-order response splits into complex exponentials with rates
gamma_d = alpha_d + j omega_d and its conjugate, so both families share the
:mod:`lfmgp.kernels.core` machinery; overdamped systems (C^2 > 4B) simply
make omega_d imaginary and are handled by the same complex arithmetic.
Critical damping (C^2 = 4B) is rejected: the closed form divides by
omega_d and the true critically damped response is a separate limit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import DegenerateKernelError
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
from .core import (
    first_order_block,
    first_order_block_grads,
    hterm,
    hterm_grads,
    real_with_residue_check,
    upsilon,
    upsilon_grads,
)
from .se import se_block

__all__ = [
    "FirstOrderParams",
    "SecondOrderParams",
    "response_upsilon",
    "first_order_cross_output_cov",
    "first_order_cross_latent_cov",
    "second_order_cross_output_cov",
    "second_order_cross_latent_cov",
]

_SQRT_PI = np.sqrt(np.pi)


def _times(X):
    """Extract the single time column, enforcing t >= 0."""
    X = as_points(X, dim=1)
    t = X[:, 0]
    if np.any(t < 0.0):
        raise ValueError("ODE-response kernels are defined from initial time 0; "
                         "all times must be nonnegative")
    return t


def response_upsilon(gamma, t, tprime, lengthscale):
    """Public three-term Upsilon expression (scalar or array arguments)."""
    t = np.asarray(t, dtype=float)
    tp = np.asarray(tprime, dtype=float)
    out = upsilon(gamma, lengthscale, t, tp)
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# first order
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FirstOrderParams(KernelFamily):
    decay: np.ndarray  # (D,)
    sens: np.ndarray  # (D, Q)
    lengthscale: np.ndarray  # (Q,)

    tag = "ode1"

    def __post_init__(self):
        object.__setattr__(self, "decay", require_positive("decay", self.decay))
        object.__setattr__(
            self, "lengthscale", require_positive("lengthscale", self.lengthscale)
        )
        object.__setattr__(
            self, "sens", np.atleast_2d(require_finite("sens", self.sens))
        )
        if self.sens.shape != (self.decay.size, self.lengthscale.size):
            raise ValueError("sens must be (n_outputs, n_forces)")

    @property
    def n_outputs(self):
        return self.decay.size

    @property
    def n_forces(self):
        return self.lengthscale.size

    def labels(self):
        return (
            labels_1d("log_decay", self.n_outputs)
            + labels_2d("sens", *self.sens.shape)
            + labels_1d("log_lengthscale", self.n_forces)
        )

    def log_vector(self):
        return np.concatenate(
            [np.log(self.decay), self.sens.ravel(), np.log(self.lengthscale)]
        )

    def with_log_vector(self, vec):
        d, q = self.sens.shape
        return replace(
            self,
            decay=np.exp(vec[:d]),
            sens=vec[d : d + d * q].reshape(d, q),
            lengthscale=np.exp(vec[d + d * q :]),
        )

    def validate_inputs(self, X):
        _times(X)

    def kff_block(self, d, dp, Xd, Xdp):
        ta, tb = _times(Xd), _times(Xdp)
        bases = [
            real_with_residue_check(
                first_order_block(self.decay[d], self.decay[dp], ell, ta, tb),
                context="first-order kernel",
            )
            for ell in self.lengthscale
        ]
        return sens_weighted_sum(self.sens, d, dp, bases)

    def kff_block_grads(self, d, dp, Xd, Xdp):
        ta, tb = _times(Xd), _times(Xdp)
        bases = []
        per_q = []
        for q, ell in enumerate(self.lengthscale):
            k, dk_da, dk_db, dk_dl = first_order_block_grads(
                self.decay[d], self.decay[dp], ell, ta, tb
            )
            bases.append(real_with_residue_check(k, context="first-order kernel"))
            g = {}
            if d == dp:
                g[f"log_decay[{d}]"] = (dk_da + dk_db).real * self.decay[d]
            else:
                g[f"log_decay[{d}]"] = dk_da.real * self.decay[d]
                g[f"log_decay[{dp}]"] = dk_db.real * self.decay[dp]
            g[f"log_lengthscale[{q}]"] = dk_dl.real * ell
            per_q.append(g)
        return sens_weighted_sum_grads(self.sens, d, dp, bases, per_q)

    def kfu_block(self, d, q, Xd, Xu):
        t = _times(Xd)
        s = _times(Xu)
        ell = self.lengthscale[q]
        ups = upsilon(self.decay[d], ell, t[:, None], s[None, :])
        block = (_SQRT_PI * ell / 2.0) * ups
        return self.sens[d, q] * real_with_residue_check(
            block, context="first-order cross"
        )

    def kuu_block(self, q, Xu, Xup):
        return se_block(as_points(Xu, 1), as_points(Xup, 1), self.lengthscale[q])


def first_order_cross_output_cov(t, tp, d, dp, q, params: FirstOrderParams):
    """Scalar k_{f_d^q, f_{d'}^q}(t, t') without sensitivities applied."""
    ta = np.atleast_1d(float(t))
    tb = np.atleast_1d(float(tp))
    if np.any(ta < 0) or np.any(tb < 0):
        raise ValueError("times must be nonnegative")
    block = first_order_block(
        params.decay[d], params.decay[dp], params.lengthscale[q], ta, tb
    )
    return float(real_with_residue_check(block)[0, 0])


def first_order_cross_latent_cov(t, tp, d, q, params: FirstOrderParams):
    """Scalar k_{f_d, u_q}(t, t') including the sensitivity factor."""
    return float(params.kfu_block(d, q, np.atleast_1d(float(t)),
                                  np.atleast_1d(float(tp)))[0, 0])


# ---------------------------------------------------------------------------
# second order
# ---------------------------------------------------------------------------

# (sign, Upsilon rate slot, exponential rate slot, transposed) for the
# eight-term closed form; slots name gamma_d ('g'), conj gamma_d ('gt'),
# gamma_d' ('gp'), conj gamma_d' ('gtp').
_SECOND_ORDER_TERMS = (
    (1.0, "gtp", "g", False),
    (1.0, "g", "gtp", True),
    (1.0, "gp", "gt", False),
    (1.0, "gt", "gp", True),
    (-1.0, "gtp", "gt", False),
    (-1.0, "gt", "gtp", True),
    (-1.0, "gp", "g", False),
    (-1.0, "g", "gp", True),
)

_CRITICAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SecondOrderParams(KernelFamily):
    spring: np.ndarray  # (D,)  B_d
    damper: np.ndarray  # (D,)  C_d >= 0
    sens: np.ndarray  # (D, Q)
    lengthscale: np.ndarray  # (Q,)

    tag = "ode2"

    def __post_init__(self):
        object.__setattr__(self, "spring", require_positive("spring", self.spring))
        damper = require_finite("damper", self.damper)
        if np.any(damper < 0.0):
            raise ValueError("damper coefficients must be nonnegative")
        object.__setattr__(self, "damper", damper)
        object.__setattr__(
            self, "lengthscale", require_positive("lengthscale", self.lengthscale)
        )
        object.__setattr__(
            self, "sens", np.atleast_2d(require_finite("sens", self.sens))
        )
        if self.sens.shape != (self.spring.size, self.lengthscale.size):
            raise ValueError("sens must be (n_outputs, n_forces)")
        disc = 4.0 * self.spring - self.damper**2
        scale = np.maximum(1.0, np.maximum(4.0 * self.spring, self.damper**2))
        if np.any(np.abs(disc) <= _CRITICAL_TOL * scale):
            raise DegenerateKernelError(
                "critically damped output (C^2 = 4B): the closed form divides "
                "by omega; perturb the parameters away from critical damping"
            )

    @property
    def n_outputs(self):
        return self.spring.size

    @property
    def n_forces(self):
        return self.lengthscale.size

    # derived quantities; omega is imaginary in the overdamped regime
    def omega(self, d):
        return np.sqrt(complex(4.0 * self.spring[d] - self.damper[d] ** 2)) / 2.0

    def alpha(self, d):
        return self.damper[d] / 2.0

    def gamma_pair(self, d):
        om = self.omega(d)
        al = self.alpha(d)
        return al + 1j * om, al - 1j * om

    def labels(self):
        return (
            labels_1d("log_spring", self.n_outputs)
            + labels_1d("log_damper", self.n_outputs)
            + labels_2d("sens", *self.sens.shape)
            + labels_1d("log_lengthscale", self.n_forces)
        )

    def log_vector(self):
        return np.concatenate(
            [
                np.log(self.spring),
                np.log(self.damper),
                self.sens.ravel(),
                np.log(self.lengthscale),
            ]
        )

    def with_log_vector(self, vec):
        d, q = self.sens.shape
        return replace(
            self,
            spring=np.exp(vec[:d]),
            damper=np.exp(vec[d : 2 * d]),
            sens=vec[2 * d : 2 * d + d * q].reshape(d, q),
            lengthscale=np.exp(vec[2 * d + d * q :]),
        )

    def validate_inputs(self, X):
        _times(X)

    def _slots(self, d, dp):
        g, gt = self.gamma_pair(d)
        gp, gtp = self.gamma_pair(dp)
        return {"g": g, "gt": gt, "gp": gp, "gtp": gtp}

    def _base_block(self, d, dp, ta, tb, ell):
        slots = self._slots(d, dp)
        om_d, om_dp = self.omega(d), self.omega(dp)
        k0 = ell * _SQRT_PI / (8.0 * om_d * om_dp)
        acc = 0.0
        for sign, a_key, b_key, transposed in _SECOND_ORDER_TERMS:
            if transposed:
                h = hterm(slots[a_key], slots[b_key], ell, tb, ta)
                h = np.swapaxes(h, -1, -2)
            else:
                h = hterm(slots[a_key], slots[b_key], ell, ta, tb)
            acc = acc + sign * h
        return k0 * acc

    def kff_block(self, d, dp, Xd, Xdp):
        ta, tb = _times(Xd), _times(Xdp)
        bases = [
            real_with_residue_check(
                self._base_block(d, dp, ta, tb, ell), context="second-order kernel"
            )
            for ell in self.lengthscale
        ]
        return sens_weighted_sum(self.sens, d, dp, bases)

    def _base_block_grads(self, d, dp, ta, tb, ell):
        slots = self._slots(d, dp)
        om_d, om_dp = self.omega(d), self.omega(dp)
        k0 = ell * _SQRT_PI / (8.0 * om_d * om_dp)
        sig = 0.0
        dsig = {key: 0.0 for key in slots}
        dsig_dl = 0.0
        for sign, a_key, b_key, transposed in _SECOND_ORDER_TERMS:
            if transposed:
                h, dh_da, dh_db, dh_dl = hterm_grads(
                    slots[a_key], slots[b_key], ell, tb, ta
                )
                h, dh_da, dh_db, dh_dl = (
                    np.swapaxes(arr, -1, -2) for arr in (h, dh_da, dh_db, dh_dl)
                )
            else:
                h, dh_da, dh_db, dh_dl = hterm_grads(
                    slots[a_key], slots[b_key], ell, ta, tb
                )
            sig = sig + sign * h
            dsig[a_key] = dsig[a_key] + sign * dh_da
            dsig[b_key] = dsig[b_key] + sign * dh_db
            dsig_dl = dsig_dl + sign * dh_dl

        base = k0 * sig
        # rate partials:  d gamma/dB = j/(2 omega), d conj/dB = -j/(2 omega)
        #                 d gamma/dC = 1/2 - jC/(4 omega), conj flips the sign
        cd, cdp = self.damper[d], self.damper[dp]
        d_spring_d = k0 * (
            dsig["g"] * (1j / (2 * om_d)) + dsig["gt"] * (-1j / (2 * om_d))
        ) + base * (-1.0 / (2.0 * om_d**2))
        d_damper_d = k0 * (
            dsig["g"] * (0.5 - 1j * cd / (4 * om_d))
            + dsig["gt"] * (0.5 + 1j * cd / (4 * om_d))
        ) + base * (cd / (4.0 * om_d**2))
        d_spring_dp = k0 * (
            dsig["gp"] * (1j / (2 * om_dp)) + dsig["gtp"] * (-1j / (2 * om_dp))
        ) + base * (-1.0 / (2.0 * om_dp**2))
        d_damper_dp = k0 * (
            dsig["gp"] * (0.5 - 1j * cdp / (4 * om_dp))
            + dsig["gtp"] * (0.5 + 1j * cdp / (4 * om_dp))
        ) + base * (cdp / (4.0 * om_dp**2))
        d_ell = base / ell + k0 * dsig_dl
        return base, d_spring_d, d_damper_d, d_spring_dp, d_damper_dp, d_ell

    def kff_block_grads(self, d, dp, Xd, Xdp):
        ta, tb = _times(Xd), _times(Xdp)
        bases = []
        per_q = []
        for q, ell in enumerate(self.lengthscale):
            base, dB_d, dC_d, dB_dp, dC_dp, d_ell = self._base_block_grads(
                d, dp, ta, tb, ell
            )
            bases.append(
                real_with_residue_check(base, context="second-order kernel")
            )
            g = {}
            if d == dp:
                g[f"log_spring[{d}]"] = (dB_d + dB_dp).real * self.spring[d]
                g[f"log_damper[{d}]"] = (dC_d + dC_dp).real * self.damper[d]
            else:
                g[f"log_spring[{d}]"] = dB_d.real * self.spring[d]
                g[f"log_spring[{dp}]"] = dB_dp.real * self.spring[dp]
                g[f"log_damper[{d}]"] = dC_d.real * self.damper[d]
                g[f"log_damper[{dp}]"] = dC_dp.real * self.damper[dp]
            g[f"log_lengthscale[{q}]"] = d_ell.real * ell
            per_q.append(g)
        return sens_weighted_sum_grads(self.sens, d, dp, bases, per_q)

    def kfu_block(self, d, q, Xd, Xu):
        t = _times(Xd)
        s = _times(Xu)
        ell = self.lengthscale[q]
        g, gt = self.gamma_pair(d)
        om = self.omega(d)
        diff = upsilon(gt, ell, t[:, None], s[None, :]) - upsilon(
            g, ell, t[:, None], s[None, :]
        )
        block = ell * _SQRT_PI / (4j * om) * diff
        return self.sens[d, q] * real_with_residue_check(
            block, context="second-order cross"
        )

    def kuu_block(self, q, Xu, Xup):
        return se_block(as_points(Xu, 1), as_points(Xup, 1), self.lengthscale[q])


def second_order_cross_output_cov(t, tp, d, dp, q, params: SecondOrderParams):
    """Scalar k_{f_d^q, f_{d'}^q}(t, t') without sensitivities applied."""
    ta = np.atleast_1d(float(t))
    tb = np.atleast_1d(float(tp))
    if np.any(ta < 0) or np.any(tb < 0):
        raise ValueError("times must be nonnegative")
    block = params._base_block(d, dp, ta, tb, params.lengthscale[q])
    return float(real_with_residue_check(block)[0, 0])


def second_order_cross_latent_cov(t, tp, d, q, params: SecondOrderParams):
    """Scalar k_{f_d, u_q}(t, t') including the sensitivity factor."""
    return float(params.kfu_block(d, q, np.atleast_1d(float(t)),
                                  np.atleast_1d(float(tp)))[0, 0])
