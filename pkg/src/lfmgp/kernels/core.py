"""Complex-exponential building blocks shared by the ODE-response kernels.

A linear system with impulse response exp(-gamma*t) (gamma possibly
complex) driven by a unit-variance squared-exponential process with
length-scale ``ell`` produces integrals of the form

    J(gamma, t, s) = int_0^t exp(-gamma*(t-v)) exp(-((v-s)/ell)^2) dv
                   = (ell*sqrt(pi)/2) * Upsilon(gamma, t, s)

where Upsilon is the three-term Faddeeva-function expression implemented
by :func:`upsilon`.  Double convolutions reduce to the quotient
:func:`hterm`, and the first-order covariance block is assembled in
:func:`first_order_block`.

Numerical stability: the raw expression contains exp(l^2 g^2/4 - g(t-s)),
which explodes where the Faddeeva argument leaves the bounded half-plane.
The leading term then cancels analytically against the reflection of
w(j z), so evaluation branches on Re(z) and never forms the large
exponential.  Every Faddeeva call below has its argument in the bounded
region Im >= 0 by construction.

All functions broadcast over leading axes of ``gamma`` so the diffusion
kernel can evaluate whole banks of series terms at once.  Analytic
gamma- and length-scale-derivatives reuse the same Faddeeva values via
w'(z) = -2 z w(z) + 2j/sqrt(pi).
"""

from __future__ import annotations

import numpy as np

from ..specialfn import faddeeva

_SQRT_PI = np.sqrt(np.pi)
_INV_SQRT_PI = 1.0 / _SQRT_PI


def _upsilon_parts(gamma, ell, t_main, t_ref):
    """Shared intermediates for Upsilon and its derivatives."""
    g = np.asarray(gamma, dtype=complex)
    A = np.asarray(t_main, dtype=float)
    B = np.asarray(t_ref, dtype=float)
    u = (A - B) / ell
    z1 = u - ell * g / 2.0
    z0 = -B / ell - ell * g / 2.0
    mask = z1.real >= 0.0
    # w argument in the bounded region on both branches
    w1 = faddeeva(1j * np.where(mask, z1, -z1))
    w0 = faddeeva(-1j * z0)
    eu2 = np.exp(-u * u)
    third_pre = np.exp(-((B / ell) ** 2) - g * A)
    expo = np.where(mask, (ell * g / 2.0) ** 2 - g * (A - B), -np.inf)
    return g, A, B, u, z1, z0, mask, w1, w0, eu2, third_pre, expo


def upsilon(gamma, ell, t_main, t_ref):
    """Upsilon(gamma, t_main, t_ref) for SE length-scale ``ell``.

    Equals (2/(ell*sqrt(pi))) * int_0^{t_main} exp(-gamma*(t_main-v))
    * exp(-((v-t_ref)/ell)^2) dv for t_main >= 0.  Inputs broadcast.
    """
    (_, _, _, _, _, _, mask, w1, w0, eu2, third_pre, expo) = _upsilon_parts(
        gamma, ell, t_main, t_ref
    )
    third = third_pre * w0
    return np.where(mask, 2.0 * np.exp(expo) - eu2 * w1, eu2 * w1) - third


def upsilon_grads(gamma, ell, t_main, t_ref):
    """Upsilon together with d/d(gamma) and d/d(ell), all broadcast."""
    (g, A, B, u, z1, z0, mask, w1, w0, eu2, third_pre, expo) = _upsilon_parts(
        gamma, ell, t_main, t_ref
    )
    third = third_pre * w0
    dthird_dg = -third_pre * ((A + ell * z0) * w0 + ell * _INV_SQRT_PI)
    dz0_dl = B / ell**2 - g / 2.0
    dthird_dl = third_pre * (
        (2.0 * B**2 / ell**3) * w0 + (2.0 * z0 * w0 + 2.0 * _INV_SQRT_PI) * dz0_dl
    )

    dz1_dl = -u / ell - g / 2.0
    e1 = 2.0 * np.exp(expo)
    # branch Re(z1) >= 0: U = e1 - eu2*w(j z1) - third
    de1_dg = e1 * (ell**2 * g / 2.0 - (A - B))
    de1_dl = e1 * (ell * g**2 / 2.0)
    dwterm_pos_dg = ell * eu2 * (_INV_SQRT_PI - z1 * w1)
    dwterm_pos_dl = eu2 * (
        (2.0 * u**2 / ell) * w1 + (2.0 * z1 * w1 - 2.0 * _INV_SQRT_PI) * dz1_dl
    )
    # branch Re(z1) < 0: U = eu2*w(-j z1) - third
    dwterm_neg_dg = -ell * eu2 * (z1 * w1 + _INV_SQRT_PI)
    dwterm_neg_dl = eu2 * (
        (2.0 * u**2 / ell) * w1 + (2.0 * z1 * w1 + 2.0 * _INV_SQRT_PI) * dz1_dl
    )

    ups = np.where(mask, e1 - eu2 * w1, eu2 * w1) - third
    dg = np.where(mask, de1_dg - dwterm_pos_dg, dwterm_neg_dg) - dthird_dg
    dl = np.where(mask, de1_dl - dwterm_pos_dl, dwterm_neg_dl) - dthird_dl
    return ups, dg, dl


def hterm(gamma_hat, gamma, ell, t_rows, t_cols):
    """h(gamma_hat, gamma) on the grid rows x cols.

    h = [Upsilon(gamma_hat, t', t) - exp(-gamma t) Upsilon(gamma_hat, t', 0)]
        / (gamma + gamma_hat),
    with t over ``t_rows`` and t' over ``t_cols``.  ``gamma_hat``/``gamma``
    may carry leading broadcast axes; the result has shape
    ``broadcast + (len(t_rows), len(t_cols))``.
    """
    gh = np.asarray(gamma_hat, dtype=complex)[..., None, None]
    g = np.asarray(gamma, dtype=complex)[..., None, None]
    ta = np.asarray(t_rows, dtype=float)
    tb = np.asarray(t_cols, dtype=float)
    u1 = upsilon(gh, ell, tb[None, :], ta[:, None])
    u0 = upsilon(gh, ell, tb[None, :], np.zeros((1, tb.size)))
    e = np.exp(-g * ta[:, None])
    return (u1 - e * u0) / (g + gh)


def hterm_grads(gamma_hat, gamma, ell, t_rows, t_cols):
    """h plus partials w.r.t. (gamma_hat, gamma, ell)."""
    gh = np.asarray(gamma_hat, dtype=complex)[..., None, None]
    g = np.asarray(gamma, dtype=complex)[..., None, None]
    ta = np.asarray(t_rows, dtype=float)
    tb = np.asarray(t_cols, dtype=float)
    u1, du1_dg, du1_dl = upsilon_grads(gh, ell, tb[None, :], ta[:, None])
    u0, du0_dg, du0_dl = upsilon_grads(gh, ell, tb[None, :], np.zeros((1, tb.size)))
    e = np.exp(-g * ta[:, None])
    denom = g + gh
    h = (u1 - e * u0) / denom
    dh_dgh = (du1_dg - e * du0_dg) / denom - h / denom
    dh_dg = (ta[:, None] * e * u0) / denom - h / denom
    dh_dl = (du1_dl - e * du0_dl) / denom
    return h, dh_dgh, dh_dg, dh_dl


def _swap(arr):
    return np.swapaxes(arr, -1, -2)


def first_order_block(decay_a, decay_b, ell, t_a, t_b):
    """Covariance block of two exponential-decay responses to one SE force.

    Entry (i, j) couples response a at t_a[i] with response b at t_b[j];
    sensitivities are applied by the caller.  ``decay_a``/``decay_b`` may
    carry leading broadcast axes (used by the diffusion series).
    """
    h1 = hterm(decay_b, decay_a, ell, t_a, t_b)
    h2 = hterm(decay_a, decay_b, ell, t_b, t_a)
    return (_SQRT_PI * ell / 2.0) * (h1 + _swap(h2))


def first_order_block_grads(decay_a, decay_b, ell, t_a, t_b):
    """Block plus partials w.r.t. (decay_a, decay_b, ell).

    For equal output indices the caller sums the two decay partials.
    """
    h1, dh1_dgh, dh1_dg, dh1_dl = hterm_grads(decay_b, decay_a, ell, t_a, t_b)
    h2, dh2_dgh, dh2_dg, dh2_dl = hterm_grads(decay_a, decay_b, ell, t_b, t_a)
    pref = _SQRT_PI * ell / 2.0
    k = pref * (h1 + _swap(h2))
    dk_da = pref * (dh1_dg + _swap(dh2_dgh))
    dk_db = pref * (dh1_dgh + _swap(dh2_dg))
    dk_dl = k / ell + pref * (dh1_dl + _swap(dh2_dl))
    return k, dk_da, dk_db, dk_dl


def real_with_residue_check(values, rel_tol=1e-8, context="kernel"):
    """Take the real part, asserting the imaginary residue is numerical noise.

    The second-order closed form combines conjugate pairs; a significant
    imaginary part indicates an implementation bug rather than a parameter
    problem, hence the hard error.
    """
    values = np.asarray(values)
    if not np.iscomplexobj(values):
        return values
    scale = np.max(np.abs(values)) if values.size else 0.0
    resid = np.max(np.abs(values.imag)) if values.size else 0.0
    if scale > 0.0 and resid > rel_tol * max(scale, 1e-300):
        raise AssertionError(
            f"{context}: imaginary residue {resid:.3e} exceeds "
            f"{rel_tol:.1e} * {scale:.3e}"
        )
    return values.real.copy()
