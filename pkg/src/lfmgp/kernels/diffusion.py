"""Space-time covariance from a driven diffusion on a bounded interval.

Outputs obey dy_d/dt = sum_q S_dq u_q(x,t) - decay_d y_d
+ diffusivity_d d^2y_d/dx^2 on 0 <= x <= length with absorbing boundaries
and zero initial condition.  Expanding the Green's function in the
Dirichlet sine basis turns the covariance into a double series: mode n of
output d behaves like a first-order system with effective decay

    B_{d,n} = decay_d + diffusivity_d * (n pi / length)^2,

so each (n, m) term factorizes into the first-order temporal block from
:mod:`lfmgp.kernels.core` times a spatial coefficient

    C(n, m, lx) = int int sin(w_n xi) sin(w_m xi') e^{-(xi-xi')^2/lx^2},

whose closed form (three parity branches) is implemented here along with
the single-integral cross coefficient C(x', n, lx).  Latent forces carry
product SE covariances with separate time and space length-scales.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..specialfn import faddeeva
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
    real_with_residue_check,
    upsilon,
)

__all__ = [
    "DiffusionParams",
    "series_coeff_cc",
    "series_coeff_cu",
    "diffusion_cross_output_cov",
    "diffusion_cross_latent_cov",
]

_SQRT_PI = np.sqrt(np.pi)


def _wprime(w_val, zeta):
    """w'(zeta) from w(zeta), via w' = -2 zeta w + 2j/sqrt(pi)."""
    return -2.0 * zeta * w_val + 2j / _SQRT_PI


def _w_bank(space_ls, length, n_terms):
    """W(m, lx) and dW/d(lx) for m = 1..n_terms, vectorized.

    W(m, lx) = w(j z1) - exp(-(l/lx)^2) exp(-gamma_m l) w(j z2) with
    z1 = lx gamma_m / 2, z2 = l/lx + lx gamma_m / 2, gamma_m = j w_m.
    exp(-gamma_m l) reduces to cos(m pi) = (-1)^m.
    """
    m = np.arange(1, n_terms + 1)
    om = m * np.pi / length
    gam = 1j * om
    z1 = space_ls * gam / 2.0
    z2 = length / space_ls + space_ls * gam / 2.0
    w1 = faddeeva(1j * z1)  # argument real: on the bounded boundary
    w2 = faddeeva(1j * z2)  # Im = l/lx > 0
    decay = np.exp(-((length / space_ls) ** 2))
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    W = w1 - decay * sign * w2

    dz1 = gam / 2.0
    dz2 = -length / space_ls**2 + gam / 2.0
    dw1 = _wprime(w1, 1j * z1) * 1j * dz1
    dw2 = _wprime(w2, 1j * z2) * 1j * dz2
    ddecay = decay * 2.0 * length**2 / space_ls**3
    dW = dw1 - sign * (ddecay * w2 + decay * dw2)
    return W, dW


def coeff_cc_matrix(space_ls, length, n_terms, with_grad=False):
    """Matrix of C(n, m, lx) for n, m = 1..n_terms (optionally d/d lx).

    Mixed-parity entries vanish; same-parity off-diagonal entries combine
    imaginary parts of the W bank; the diagonal has its own closed form
    with an extra tail term.
    """
    W, dW = _w_bank(space_ls, length, n_terms)
    idx = np.arange(1, n_terms + 1, dtype=float)
    mm, nn = np.meshgrid(idx, idx)
    same_parity = ((mm - nn) % 2) == 0
    off = same_parity & (mm != nn)

    C = np.zeros((n_terms, n_terms))
    denom = np.where(off, mm**2 - nn**2, 1.0)
    imW = W.imag
    C_off = (space_ls * length / (_SQRT_PI * denom)) * (
        nn * imW[None, :] - mm * imW[:, None]
    )
    C[off] = C_off[off]

    n = idx
    cn = space_ls**2 * n * np.pi / (2.0 * length**2) + 1.0 / (n * np.pi)
    sign = np.where(np.arange(1, n_terms + 1) % 2 == 0, 1.0, -1.0)
    decay = np.exp(-((length / space_ls) ** 2))
    diag = (space_ls * _SQRT_PI * length / 2.0) * (W.real - W.imag * cn) + (
        space_ls**2 / 2.0
    ) * (decay * sign - 1.0)
    C[np.diag_indices(n_terms)] = diag

    if not with_grad:
        return C

    dC = np.zeros((n_terms, n_terms))
    dimW = dW.imag
    dC_off = C_off / space_ls + (space_ls * length / (_SQRT_PI * denom)) * (
        nn * dimW[None, :] - mm * dimW[:, None]
    )
    dC[off] = dC_off[off]
    dcn = space_ls * n * np.pi / length**2
    ddecay = decay * 2.0 * length**2 / space_ls**3
    ddiag = (
        (_SQRT_PI * length / 2.0) * (W.real - W.imag * cn)
        + (space_ls * _SQRT_PI * length / 2.0)
        * (dW.real - dW.imag * cn - W.imag * dcn)
        + space_ls * (decay * sign - 1.0)
        + (space_ls**2 / 2.0) * sign * ddecay
    )
    dC[np.diag_indices(n_terms)] = ddiag
    return C, dC


def series_coeff_cc(n, m, space_ls, length):
    """Scalar spatial coefficient C(n, m, lx) of the output-output series."""
    size = max(n, m)
    C = coeff_cc_matrix(space_ls, length, size)
    return float(C[n - 1, m - 1])


def coeff_cu_matrix(x_latent, space_ls, length, n_terms):
    """C(x', n, lx) for n = 1..n_terms over latent positions, shape (n_terms, M).

    The second Faddeeva argument lies in the lower half-plane for x' < l,
    so that term is folded through the reflection identity analytically;
    the huge exp factors cancel and everything evaluated is bounded.
    """
    xp = np.asarray(x_latent, dtype=float)[None, :]
    n = np.arange(1, n_terms + 1, dtype=float)[:, None]
    om = n * np.pi / length
    b = space_ls * om / 2.0
    a = (length - xp) / space_ls
    sign = np.where(n % 2 == 0, 1.0, -1.0)

    # e^{-(x'/lx)^2} w(j z1),  j z1 = -b + j x'/lx  (upper half-plane)
    term1 = np.exp(-((xp / space_ls) ** 2)) * faddeeva(-b + 1j * xp / space_ls)
    # (-1)^n e^{-a^2} w(j z2),  j z2 = -b - j a: reflect to b + j a
    reflected = 2.0 * np.exp(-b * b - 2j * a * b) - np.exp(-a * a) * faddeeva(
        b + 1j * a
    )
    term2 = sign * reflected
    vals = (space_ls * _SQRT_PI / 2.0) * (term2 - term1).imag
    return vals


def series_coeff_cu(x_latent, n, space_ls, length):
    """Scalar spatial coefficient C(x', n, lx) of the cross series."""
    return float(coeff_cu_matrix([x_latent], space_ls, length, n)[n - 1, 0])


def _split_columns(X, length):
    X = as_points(X, dim=2)
    x, t = X[:, 0], X[:, 1]
    if np.any((x < 0.0) | (x > length)):
        raise ValueError("spatial inputs must lie inside [0, domain_length]")
    if np.any(t < 0.0):
        raise ValueError("times must be nonnegative")
    return x, t


@dataclass(frozen=True, eq=False)
class DiffusionParams(KernelFamily):
    decay: np.ndarray  # (D,)
    diffusivity: np.ndarray  # (D,)
    sens: np.ndarray  # (D, Q)
    time_lengthscale: np.ndarray  # (Q,)
    space_lengthscale: np.ndarray  # (Q,)
    domain_length: float = 1.0
    n_terms: int = 30  # series truncation per sum

    tag = "diffusion"

    def __post_init__(self):
        object.__setattr__(self, "decay", require_positive("decay", self.decay))
        object.__setattr__(
            self, "diffusivity", require_positive("diffusivity", self.diffusivity)
        )
        object.__setattr__(
            self,
            "time_lengthscale",
            require_positive("time_lengthscale", self.time_lengthscale),
        )
        object.__setattr__(
            self,
            "space_lengthscale",
            require_positive("space_lengthscale", self.space_lengthscale),
        )
        object.__setattr__(
            self, "sens", np.atleast_2d(require_finite("sens", self.sens))
        )
        if self.domain_length <= 0:
            raise ValueError("domain_length must be positive")
        if self.n_terms < 1:
            raise ValueError("n_terms must be at least 1")
        if self.sens.shape != (self.decay.size, self.time_lengthscale.size):
            raise ValueError("sens must be (n_outputs, n_forces)")
        if self.diffusivity.shape != self.decay.shape:
            raise ValueError("decay and diffusivity must have equal length")
        if self.space_lengthscale.shape != self.time_lengthscale.shape:
            raise ValueError("time and space length-scales must pair up")

    @property
    def n_outputs(self):
        return self.decay.size

    @property
    def n_forces(self):
        return self.time_lengthscale.size

    def labels(self):
        return (
            labels_1d("log_decay", self.n_outputs)
            + labels_1d("log_diffusion", self.n_outputs)
            + labels_2d("sens", *self.sens.shape)
            + labels_1d("log_time_lengthscale", self.n_forces)
            + labels_1d("log_space_lengthscale", self.n_forces)
        )

    def log_vector(self):
        return np.concatenate(
            [
                np.log(self.decay),
                np.log(self.diffusivity),
                self.sens.ravel(),
                np.log(self.time_lengthscale),
                np.log(self.space_lengthscale),
            ]
        )

    def with_log_vector(self, vec):
        d, q = self.sens.shape
        return replace(
            self,
            decay=np.exp(vec[:d]),
            diffusivity=np.exp(vec[d : 2 * d]),
            sens=vec[2 * d : 2 * d + d * q].reshape(d, q),
            time_lengthscale=np.exp(vec[2 * d + d * q : 2 * d + d * q + q]),
            space_lengthscale=np.exp(vec[2 * d + d * q + q :]),
        )

    def validate_inputs(self, X):
        _split_columns(X, self.domain_length)

    def _mode_decays(self, d):
        n = np.arange(1, self.n_terms + 1)
        om = n * np.pi / self.domain_length
        return self.decay[d] + self.diffusivity[d] * om**2, om

    def kff_block(self, d, dp, Xd, Xdp):
        xa, ta = _split_columns(Xd, self.domain_length)
        xb, tb = _split_columns(Xdp, self.domain_length)
        Bn, om = self._mode_decays(d)
        Bm, _ = self._mode_decays(dp)
        sin_a = np.sin(np.outer(om, xa))  # (N, Na)
        sin_b = np.sin(np.outer(om, xb))  # (N, Nb)
        bases = []
        for q in range(self.n_forces):
            C = coeff_cc_matrix(
                self.space_lengthscale[q], self.domain_length, self.n_terms
            )
            acc = np.zeros((xa.size, xb.size), dtype=complex)
            for i in range(self.n_terms):
                msel = np.nonzero(C[i])[0]
                if msel.size == 0:
                    continue
                T = first_order_block(
                    Bn[i], Bm[msel], self.time_lengthscale[q], ta, tb
                )
                inner = np.einsum("m,mj,mij->ij", C[i, msel], sin_b[msel], T)
                acc += sin_a[i][:, None] * inner
            block = (4.0 / self.domain_length**2) * acc
            bases.append(real_with_residue_check(block, context="diffusion kernel"))
        return sens_weighted_sum(self.sens, d, dp, bases)

    def kff_block_grads(self, d, dp, Xd, Xdp):
        xa, ta = _split_columns(Xd, self.domain_length)
        xb, tb = _split_columns(Xdp, self.domain_length)
        Bn, om = self._mode_decays(d)
        Bm, _ = self._mode_decays(dp)
        om2 = om**2
        sin_a = np.sin(np.outer(om, xa))
        sin_b = np.sin(np.outer(om, xb))
        pref = 4.0 / self.domain_length**2
        bases = []
        per_q = []
        for q in range(self.n_forces):
            lt = self.time_lengthscale[q]
            C, dC = coeff_cc_matrix(
                self.space_lengthscale[q], self.domain_length, self.n_terms,
                with_grad=True,
            )
            acc = np.zeros((xa.size, xb.size), dtype=complex)
            acc_dec_a = np.zeros_like(acc)
            acc_dif_a = np.zeros_like(acc)
            acc_dec_b = np.zeros_like(acc)
            acc_dif_b = np.zeros_like(acc)
            acc_lt = np.zeros_like(acc)
            acc_lx = np.zeros_like(acc)
            for i in range(self.n_terms):
                msel = np.nonzero(C[i] != 0.0)[0]
                msel = np.union1d(msel, np.nonzero(dC[i] != 0.0)[0])
                if msel.size == 0:
                    continue
                T, dT_da, dT_db, dT_dl = first_order_block_grads(
                    Bn[i], Bm[msel], lt, ta, tb
                )
                w = C[i, msel]
                dw = dC[i, msel]
                sa = sin_a[i][:, None]
                e_da = np.einsum("m,mj,mij->ij", w, sin_b[msel], dT_da)
                acc += sa * np.einsum("m,mj,mij->ij", w, sin_b[msel], T)
                acc_dec_a += sa * e_da
                acc_dif_a += sa * e_da * om2[i]
                acc_dec_b += sa * np.einsum("m,mj,mij->ij", w, sin_b[msel], dT_db)
                acc_dif_b += sa * np.einsum(
                    "m,m,mj,mij->ij", w, om2[msel], sin_b[msel], dT_db
                )
                acc_lt += sa * np.einsum("m,mj,mij->ij", w, sin_b[msel], dT_dl)
                acc_lx += sa * np.einsum("m,mj,mij->ij", dw, sin_b[msel], T)
            block = real_with_residue_check(pref * acc, context="diffusion kernel")
            bases.append(block)
            g = {}
            gdec_a = pref * acc_dec_a.real * self.decay[d]
            gdif_a = pref * acc_dif_a.real * self.diffusivity[d]
            gdec_b = pref * acc_dec_b.real * self.decay[dp]
            gdif_b = pref * acc_dif_b.real * self.diffusivity[dp]
            if d == dp:
                g[f"log_decay[{d}]"] = gdec_a + gdec_b
                g[f"log_diffusion[{d}]"] = gdif_a + gdif_b
            else:
                g[f"log_decay[{d}]"] = gdec_a
                g[f"log_decay[{dp}]"] = gdec_b
                g[f"log_diffusion[{d}]"] = gdif_a
                g[f"log_diffusion[{dp}]"] = gdif_b
            g[f"log_time_lengthscale[{q}]"] = pref * acc_lt.real * lt
            g[f"log_space_lengthscale[{q}]"] = (
                pref * acc_lx.real * self.space_lengthscale[q]
            )
            per_q.append(g)
        return sens_weighted_sum_grads(self.sens, d, dp, bases, per_q)

    def kfu_block(self, d, q, Xd, Xu):
        xa, ta = _split_columns(Xd, self.domain_length)
        xu, tu = _split_columns(Xu, self.domain_length)
        Bn, om = self._mode_decays(d)
        lt = self.time_lengthscale[q]
        sin_a = np.sin(np.outer(om, xa))  # (N, Na)
        Ccu = coeff_cu_matrix(
            xu, self.space_lengthscale[q], self.domain_length, self.n_terms
        )  # (N, Nu)
        ups = upsilon(
            Bn[:, None, None], lt, ta[None, :, None], tu[None, None, :]
        )  # (N, Na, Nu)
        acc = np.einsum("ni,nu,niu->iu", sin_a, Ccu, ups)
        block = (2.0 / self.domain_length) * (_SQRT_PI * lt / 2.0) * acc
        return self.sens[d, q] * real_with_residue_check(
            block, context="diffusion cross"
        )

    def kuu_block(self, q, Xu, Xup):
        xu, tu = _split_columns(Xu, self.domain_length)
        xv, tv = _split_columns(Xup, self.domain_length)
        kt = np.exp(
            -np.subtract.outer(tu, tv) ** 2 / self.time_lengthscale[q] ** 2
        )
        kx = np.exp(
            -np.subtract.outer(xu, xv) ** 2 / self.space_lengthscale[q] ** 2
        )
        return kt * kx


def diffusion_cross_output_cov(x, t, xp, tp, d, dp, q, params: DiffusionParams):
    """Scalar k_{f_d^q, f_{d'}^q}((x,t),(x',t')) without sensitivities."""
    single = replace(
        params,
        sens=np.ones((params.n_outputs, 1)),
        time_lengthscale=params.time_lengthscale[q : q + 1],
        space_lengthscale=params.space_lengthscale[q : q + 1],
    )
    block = single.kff_block(d, dp, np.array([[x, t]]), np.array([[xp, tp]]))
    return float(block[0, 0])


def diffusion_cross_latent_cov(x, t, xp, tp, d, q, params: DiffusionParams):
    """Scalar k_{f_d, u_q}((x,t),(x',t')) including the sensitivity factor."""
    return float(
        params.kfu_block(d, q, np.array([[x, t]]), np.array([[xp, tp]]))[0, 0]
    )
