"""Brute-force validators, independent of every closed form they check.

Two kinds of oracle live here:

* adaptive quadrature of the Green's-function convolutions that *define*
  each covariance (double integrals for output-output terms, single
  integrals for output-latent terms), plus tensor-product quadrature with
  an image-sum Green's function for the space-time diffusion kernel -- a
  representation deliberately different from the sine series used by the
  closed form;
* a trajectory simulator that integrates the forced system numerically
  from sampled latent forces, for recovery and Monte-Carlo covariance
  tests.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.linalg import cholesky

from .errors import QuadratureBudgetError
from .kernels.diffusion import DiffusionParams
from .kernels.heat import HeatParams
from .kernels.ode import FirstOrderParams, SecondOrderParams

__all__ = [
    "GreensFunction",
    "QuadratureResult",
    "first_order_greens",
    "second_order_greens",
    "kernel_by_quadrature",
    "cross_kernel_by_quadrature",
    "heat_cov_by_quadrature",
    "heat_cross_by_quadrature",
    "diffusion_cov_by_quadrature",
    "diffusion_cross_by_quadrature",
    "coeff_cc_by_quadrature",
    "coeff_cu_by_quadrature",
    "se_force_cov",
    "sample_se_forces",
    "simulate_forced_system",
]


@dataclass(frozen=True)
class GreensFunction:
    """Impulse response of a time-invariant linear differential operator.

    ``fn`` evaluates g(s) for lag s >= 0; causality (zero for s < 0) is
    enforced by the integration limits.
    """

    order: int
    fn: Callable[[np.ndarray], np.ndarray]
    description: str = ""


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


def first_order_greens(decay: float) -> GreensFunction:
    return GreensFunction(1, lambda s: np.exp(-decay * s), f"exp(-{decay} s)")


def second_order_greens(spring: float, damper: float) -> GreensFunction:
    om = np.sqrt(complex(4.0 * spring - damper * damper)) / 2.0
    al = damper / 2.0

    def fn(s):
        return np.real(np.exp(-al * s) * np.sin(om * s) / om)

    return GreensFunction(2, fn, f"damped oscillator B={spring}, C={damper}")


def se_force_cov(lengthscale: float) -> Callable:
    return lambda a, b: np.exp(-((a - b) ** 2) / lengthscale**2)


def _budget_guard(caught, value, err, context):
    for warning in caught:
        if issubclass(warning.category, integrate.IntegrationWarning):
            raise QuadratureBudgetError(
                f"{context}: quadrature budget exhausted ({warning.message})",
                value=value,
                error_estimate=err,
            )


def kernel_by_quadrature(
    g_a: GreensFunction,
    g_b: GreensFunction,
    force_cov: Callable,
    t: float,
    tprime: float,
    tol: float = 1e-10,
    peak_lag: float | None = None,
    peak_width: float | None = None,
) -> QuadratureResult:
    """int_0^t int_0^t' g_a(t-v) g_b(t'-v') k_u(v, v') dv' dv.

    ``peak_lag``/``peak_width`` mark a sharp impulse-response feature (a
    near-delta response) so the adaptive rule gets bracketing breakpoints
    at the feature scale instead of hunting for a sliver of mass.
    """
    if t == 0.0 or tprime == 0.0:
        return QuadratureResult(0.0, 0.0, 0)
    evals = [0]

    def bracket(upper):
        if peak_lag is None:
            return None
        w = peak_width if peak_width is not None else max(peak_lag / 4.0, 1e-8)
        pts = [upper - peak_lag - 10 * w, upper - peak_lag, upper - peak_lag + 10 * w]
        return [p for p in pts if 0.0 < p < upper]

    inner_pts = bracket(tprime)
    outer_pts = bracket(t)

    def inner(v):
        def f(vp):
            evals[0] += 1
            return float(g_b.fn(tprime - vp) * force_cov(v, vp))

        val, _ = integrate.quad(f, 0.0, tprime, epsabs=tol * 1e-2,
                                epsrel=tol * 1e-2, points=inner_pts)
        return float(g_a.fn(t - v)) * val

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, err = integrate.quad(inner, 0.0, t, epsabs=tol, epsrel=tol,
                                    points=outer_pts)
    _budget_guard(caught, value, err, "output-output convolution")
    return QuadratureResult(value, err, evals[0])


def cross_kernel_by_quadrature(
    g_a: GreensFunction,
    force_cov: Callable,
    t: float,
    tprime: float,
    sensitivity: float = 1.0,
    tol: float = 1e-11,
) -> QuadratureResult:
    """sensitivity * int_0^t g_a(t-v) k_u(v, t') dv."""
    if t == 0.0 or sensitivity == 0.0:
        return QuadratureResult(0.0, 0.0, 0)
    evals = [0]

    def f(v):
        evals[0] += 1
        return float(g_a.fn(t - v) * force_cov(v, tprime))

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, err = integrate.quad(f, 0.0, t, epsabs=tol, epsrel=tol)
    _budget_guard(caught, value, err, "output-latent convolution")
    return QuadratureResult(sensitivity * value, abs(sensitivity) * err, evals[0])


# ---------------------------------------------------------------------------
# Gaussian-smoothing (heat) kernel: per-dimension factorized quadrature
# ---------------------------------------------------------------------------


def _gauss1(r, var):
    return np.exp(-0.5 * r * r / var) / np.sqrt(2.0 * np.pi * var)


def heat_cov_by_quadrature(
    params: HeatParams, d, dp, q, x, xp, tol: float = 1e-10
) -> QuadratureResult:
    """Smoothing-convolution oracle for the heat-kernel output covariance.

    Diagonal precisions factorize the p-dimensional double convolution into
    p independent two-dimensional integrals over a +-8 sigma box.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    total = 1.0
    err_acc = 0.0
    evals = [0]
    for j in range(x.size):
        va = params.smooth_var[d, j]
        vb = params.smooth_var[dp, j]
        vu = params.latent_var[q, j]
        reach = 8.0 * np.sqrt(max(va, vb, vu))
        lo = min(x[j], xp[j]) - reach
        hi = max(x[j], xp[j]) + reach

        def f(zp, z, j=j, va=va, vb=vb, vu=vu):
            evals[0] += 1
            return (
                _gauss1(x[j] - z, va) * _gauss1(xp[j] - zp, vb) * _gauss1(z - zp, vu)
            )

        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            val, err = integrate.dblquad(
                f, lo, hi, lo, hi, epsabs=tol, epsrel=tol
            )
        _budget_guard(caught, val, err, "heat smoothing convolution")
        err_acc = err_acc * abs(val) + abs(total) * err
        total *= val
    s = params.sens[d, q] * params.sens[dp, q]
    return QuadratureResult(s * total, abs(s) * err_acc, evals[0])


def heat_cross_by_quadrature(
    params: HeatParams, d, q, x, xp, tol: float = 1e-10
) -> QuadratureResult:
    """Single-smoothing oracle for the heat-kernel cross covariance."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    total = 1.0
    err_acc = 0.0
    evals = [0]
    for j in range(x.size):
        va = params.smooth_var[d, j]
        vu = params.latent_var[q, j]
        reach = 8.0 * np.sqrt(max(va, vu))
        lo = min(x[j], xp[j]) - reach
        hi = max(x[j], xp[j]) + reach

        def f(z, j=j, va=va, vu=vu):
            evals[0] += 1
            return _gauss1(x[j] - z, va) * _gauss1(z - xp[j], vu)

        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            val, err = integrate.quad(f, lo, hi, epsabs=tol, epsrel=tol)
        _budget_guard(caught, val, err, "heat cross convolution")
        err_acc = err_acc * abs(val) + abs(total) * err
        total *= val
    s = params.sens[d, q]
    return QuadratureResult(s * total, abs(s) * err_acc, evals[0])


# ---------------------------------------------------------------------------
# bounded-domain diffusion kernel: image-sum Green's function + tensor rule
# ---------------------------------------------------------------------------


def dirichlet_heat_greens(x, xi, s, diffusivity, decay, length, n_images=10):
    """Green's function of u_t = D u_xx - lambda u on [0, length] with
    absorbing boundaries, via the method of images.

    Complementary to the sine-series representation used by the closed
    form: images converge fast exactly where the series converges slowly.
    """
    s = np.asarray(s, dtype=float)
    var = 2.0 * diffusivity * s
    acc = 0.0
    for k in range(-n_images, n_images + 1):
        acc = acc + _gauss1(x - xi - 2 * k * length, var) - _gauss1(
            x + xi - 2 * k * length, var
        )
    return acc * np.exp(-decay * s)


def _gl_nodes(lo, hi, n):
    u, w = leggauss(n)
    return 0.5 * (hi - lo) * (u + 1.0) + lo, 0.5 * (hi - lo) * w


def _lag_graded_nodes(t, n):
    """Nodes for int_0^t f(tau) dtau with f sharp at tau = t.

    Substituting tau = t - s^2 clusters nodes quadratically at the
    endpoint where the Green's function approaches a delta.
    """
    s, ws = _gl_nodes(0.0, np.sqrt(t), n)
    return t - s * s, 2.0 * s * ws


def _diffusion_cov_tensor(params, d, dp, q, point_a, point_b, n_nodes):
    x, t = point_a
    xp, tp = point_b
    length = params.domain_length
    tau, wtau = _lag_graded_nodes(t, n_nodes)
    taup, wtaup = _lag_graded_nodes(tp, n_nodes)
    xi, wxi = _gl_nodes(0.0, length, n_nodes)

    ga = dirichlet_heat_greens(
        x, xi[:, None], t - tau[None, :], params.diffusivity[d], params.decay[d], length
    )
    gb = dirichlet_heat_greens(
        xp, xi[:, None], tp - taup[None, :], params.diffusivity[dp],
        params.decay[dp], length,
    )
    kt = np.exp(
        -np.subtract.outer(tau, taup) ** 2 / params.time_lengthscale[q] ** 2
    )
    kx = np.exp(
        -np.subtract.outer(xi, xi) ** 2 / params.space_lengthscale[q] ** 2
    )
    ga = ga * wxi[:, None] * wtau[None, :]
    gb = gb * wxi[:, None] * wtaup[None, :]
    # contract (xi,tau) x (xi,xi') x (xi',tau') x (tau,tau')
    inner = kx @ gb  # (xi, tau')
    outer = ga.T @ inner  # (tau, tau')
    return float(np.sum(kt * outer)), 3 * n_nodes * n_nodes


def diffusion_cov_by_quadrature(
    params: DiffusionParams, d, dp, q, point_a, point_b, n_nodes: int = 128
) -> QuadratureResult:
    """Space-time Green's-function convolution for the diffusion kernel.

    Tensor Gauss-Legendre rule (the integrand is a smooth product of
    Gaussians, exponentials and the image sum); the node count is doubled
    once to form the error estimate.  Sensitivities included.
    """
    x, t = point_a
    xp, tp = point_b
    if t == 0.0 or tp == 0.0 or x in (0.0, params.domain_length) or xp in (
        0.0,
        params.domain_length,
    ):
        return QuadratureResult(0.0, 0.0, 0)
    coarse, n1 = _diffusion_cov_tensor(params, d, dp, q, point_a, point_b, n_nodes // 2)
    fine, n2 = _diffusion_cov_tensor(params, d, dp, q, point_a, point_b, n_nodes)
    s = params.sens[d, q] * params.sens[dp, q]
    return QuadratureResult(s * fine, abs(s) * abs(fine - coarse), n1 + n2)


def _gauss_box_integral(mu, var, center, se_ls, length):
    """int_0^length N(xi - mu; var) exp(-(xi - center)^2 / se_ls^2) d xi.

    Gaussian-product completion: the two factors merge into one Gaussian
    whose box mass is an erf difference (scipy.special.ndtr).
    """
    from scipy.special import ndtr

    half = se_ls**2 / 2.0  # SE factor as an unnormalized variance-half Gaussian
    v_star = 1.0 / (1.0 / var + 1.0 / half)
    m_star = v_star * (mu / var + center / half)
    pref = np.sqrt(2.0 * np.pi * half) * _gauss1(mu - center, var + half)
    sd = np.sqrt(v_star)
    return pref * (ndtr((length - m_star) / sd) - ndtr(-m_star / sd))


def diffusion_cross_by_quadrature(
    params: DiffusionParams, d, q, point_a, point_b, tol: float = 1e-10
) -> QuadratureResult:
    """Space-time single convolution for the diffusion cross covariance.

    The spatial integral of (image Gaussians x SE factor) is done in
    closed form per image, leaving a one-dimensional adaptive quadrature
    over the time lag.
    """
    x, t = point_a
    xp, tp = point_b
    if t == 0.0 or x in (0.0, params.domain_length):
        return QuadratureResult(0.0, 0.0, 0)
    length = params.domain_length
    diff = params.diffusivity[d]
    dec = params.decay[d]
    lx = params.space_lengthscale[q]
    lt = params.time_lengthscale[q]
    n_images = 10
    evals = [0]

    def f(tau):
        evals[0] += 1
        s_lag = t - tau
        var = 2.0 * diff * s_lag
        acc = 0.0
        for k in range(-n_images, n_images + 1):
            acc += _gauss_box_integral(x - 2 * k * length, var, xp, lx, length)
            acc -= _gauss_box_integral(-x + 2 * k * length, var, xp, lx, length)
        return (
            acc
            * np.exp(-dec * s_lag)
            * np.exp(-((tau - tp) ** 2) / lt**2)
        )

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, err = integrate.quad(f, 0.0, t, epsabs=tol, epsrel=tol, limit=200)
    _budget_guard(caught, value, err, "diffusion cross convolution")
    s = params.sens[d, q]
    return QuadratureResult(s * value, abs(s) * err, evals[0])


def coeff_cc_by_quadrature(n, m, space_lengthscale, length, tol=1e-11):
    """Double integral over [0,l]^2 of sin sin x SE, for the series coeff."""
    wn = n * np.pi / length
    wm = m * np.pi / length
    evals = [0]

    def f(xip, xi):
        evals[0] += 1
        return (
            np.sin(wn * xi)
            * np.sin(wm * xip)
            * np.exp(-((xi - xip) ** 2) / space_lengthscale**2)
        )

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        val, err = integrate.dblquad(f, 0.0, length, 0.0, length, epsabs=tol, epsrel=tol)
    _budget_guard(caught, val, err, "series coefficient (output-output)")
    return QuadratureResult(val, err, evals[0])


def coeff_cu_by_quadrature(xp, n, space_lengthscale, length, tol=1e-12):
    """Single integral over [0,l] of sin x SE, for the cross series coeff."""
    wn = n * np.pi / length
    evals = [0]

    def f(xi):
        evals[0] += 1
        return np.sin(wn * xi) * np.exp(-((xp - xi) ** 2) / space_lengthscale**2)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        val, err = integrate.quad(f, 0.0, length, epsabs=tol, epsrel=tol)
    _budget_guard(caught, val, err, "series coefficient (cross)")
    return QuadratureResult(val, err, evals[0])


# ---------------------------------------------------------------------------
# forced-system simulator
# ---------------------------------------------------------------------------


def sample_se_forces(grid, lengthscales, rng, jitter=1e-10):
    """Draw independent SE-GP trajectories on ``grid``, one per length-scale."""
    grid = np.asarray(grid, dtype=float)
    out = np.empty((len(lengthscales), grid.size))
    for q, ell in enumerate(lengthscales):
        cov = np.exp(-np.subtract.outer(grid, grid) ** 2 / ell**2)
        cov[np.diag_indices_from(cov)] += jitter
        chol = cholesky(cov, lower=True)
        out[q] = chol @ rng.standard_normal(grid.size)
    return out


def _impulse_response(params, d):
    if isinstance(params, FirstOrderParams):
        return first_order_greens(params.decay[d]).fn
    if isinstance(params, SecondOrderParams):
        return second_order_greens(params.spring[d], params.damper[d]).fn
    raise TypeError("simulator supports first- and second-order parameters")


def simulate_forced_system(params, grid, forces, noise_std, rng):
    """Numerically convolve sampled forces through the system dynamics.

    Trapezoidal integration of y_d(t_i) = sum_q S_dq int_0^{t_i}
    g_d(t_i - v) u_q(v) dv on the supplied grid, from zero initial
    conditions, plus white observation noise.  Returns the noisy outputs
    (D, n_grid) and the noise-free responses.
    """
    grid = np.asarray(grid, dtype=float)
    forces = np.atleast_2d(np.asarray(forces, dtype=float))
    n = grid.size
    step = float(np.max(np.diff(grid)))
    min_ell = float(np.min(params.lengthscale))
    if step > min_ell / 10.0:
        warnings.warn(
            f"force grid step {step:.4g} exceeds lengthscale/10 = "
            f"{min_ell / 10.0:.4g}; convolution error may be large",
            stacklevel=2,
        )
    D = params.n_outputs
    lag = grid[:, None] - grid[None, :]
    trap = np.tril(np.ones((n, n)))
    trap[:, 0] = 0.5
    trap[np.diag_indices_from(trap)] = 0.5
    trap[0, 0] = 0.0
    trap *= step

    clean = np.zeros((D, n))
    for d in range(D):
        g = _impulse_response(params, d)
        gmat = np.where(lag >= 0.0, g(np.maximum(lag, 0.0)), 0.0) * trap
        for q in range(params.n_forces):
            clean[d] += params.sens[d, q] * (gmat @ forces[q])
    noise_std = np.broadcast_to(np.asarray(noise_std, dtype=float), (D,))
    noisy = clean + noise_std[:, None] * rng.standard_normal((D, n))
    return noisy, clean
