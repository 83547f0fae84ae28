"""Exact multi-output GP inference.

Marginal likelihood and its analytic gradient, quasi-Newton hyperparameter
fitting with restarts, predictive distributions, conditioning on arbitrary
observation subsets, and the latent-force posterior.  Everything is dense:
cost grows as (sum_d N_d)^3, so callers guard problem sizes.

Factorizations use a deterministic jitter ladder: starting from
1e-10 * trace/n, the diagonal boost doubles until Cholesky succeeds or the
1e-4 * trace/n cap is passed, at which point the hyperparameters are
declared pathological.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, fields as dataclass_fields

import numpy as np
from scipy import optimize
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from .dataset import MultiOutputDataset
from .errors import (
    DegenerateKernelError,
    NotPositiveDefiniteError,
    RangeOverflowError,
    UnsupportedFamilyError,
)
from .kernels import FAMILIES, KernelFamily
from .kernels.base import as_points

__all__ = [
    "PosteriorSummary",
    "FitConfig",
    "FitResult",
    "FittedModel",
    "assemble_kff",
    "chol_with_jitter",
    "log_marginal_likelihood",
    "lml_and_gradient",
    "fit",
    "predict",
    "condition_and_extrapolate",
    "latent_posterior",
    "heldout_log_density",
    "default_latent_grid",
    "save_model",
    "load_model",
]

_JITTER_START = 1e-10
_JITTER_CAP = 1e-4
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class PosteriorSummary:
    """Gaussian summary of a predictive or latent-force posterior."""

    mean: np.ndarray
    cov: np.ndarray
    kind: str  # "predictive-outputs" | "latent-forces"

    @property
    def variance(self):
        return np.diag(self.cov).copy()


def chol_with_jitter(K):
    """Lower Cholesky factor of K plus the smallest working jitter.

    Returns (L, jitter).  Raises NotPositiveDefiniteError past the cap.
    """
    n = K.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0.0
    scale = float(np.trace(K)) / n
    if not np.isfinite(scale) or scale <= 0.0:
        scale = 1.0
    jitter = 0.0
    boost = _JITTER_START * scale
    for _ in range(32):
        try:
            L = cholesky(K + jitter * np.eye(n), lower=True)
            return L, jitter
        except LinAlgError:
            jitter = boost
            boost *= 2.0
            if jitter > _JITTER_CAP * scale:
                break
    raise NotPositiveDefiniteError(
        f"covariance not positive definite at maximum jitter "
        f"{_JITTER_CAP * scale:.3e}; hyperparameters are pathological"
    )


def assemble_kff(kernel: KernelFamily, inputs):
    """Joint output Gram matrix over per-output input lists."""
    counts = [as_points(X).shape[0] for X in inputs]
    n = sum(counts)
    K = np.empty((n, n))
    offs = np.concatenate([[0], np.cumsum(counts)])
    for d in range(len(inputs)):
        for dp in range(d, len(inputs)):
            block = kernel.kff_block(d, dp, inputs[d], inputs[dp])
            K[offs[d] : offs[d + 1], offs[dp] : offs[dp + 1]] = block
            if dp != d:
                K[offs[dp] : offs[dp + 1], offs[d] : offs[d + 1]] = block.T
    return K


def _noise_diag(noise_var, counts):
    return np.repeat(np.asarray(noise_var, dtype=float), counts)


def log_marginal_likelihood(kernel, noise_var, dataset: MultiOutputDataset):
    """log N(y | 0, K_ff + Sigma) over the stacked targets."""
    y = dataset.stacked_targets()
    K = assemble_kff(kernel, dataset.inputs())
    K[np.diag_indices_from(K)] += _noise_diag(noise_var, dataset.counts)
    L, _ = chol_with_jitter(K)
    alpha = cho_solve((L, True), y)
    return float(
        -0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * y.size * _LOG_2PI
    )


def lml_and_gradient(kernel, noise_var, dataset: MultiOutputDataset):
    """Marginal likelihood plus gradient over kernel labels and log noise.

    Gradient entries are 0.5 y^T K^-1 (dK/dtheta) K^-1 y
    - 0.5 tr(K^-1 dK/dtheta), accumulated block-wise so per-label full
    matrices are never materialized.
    """
    y = dataset.stacked_targets()
    inputs = dataset.inputs()
    counts = dataset.counts
    slices = dataset.slices()
    n = dataset.total_points

    # single pass: blocks and their gradients come from the same evaluation
    K = np.empty((n, n))
    block_grads = {}
    for d in range(dataset.n_outputs):
        for dp in range(d, dataset.n_outputs):
            block, grads = kernel.kff_block_grads(d, dp, inputs[d], inputs[dp])
            K[slices[d], slices[dp]] = block
            if dp != d:
                K[slices[dp], slices[d]] = block.T
            block_grads[d, dp] = grads
    K[np.diag_indices_from(K)] += _noise_diag(noise_var, counts)
    L, _ = chol_with_jitter(K)
    alpha = cho_solve((L, True), y)
    kinv = cho_solve((L, True), np.eye(n))
    lml = float(
        -0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * y.size * _LOG_2PI
    )

    labels = kernel.labels()
    acc = dict.fromkeys(labels, 0.0)
    for (d, dp), grads in block_grads.items():
        factor = 1.0 if d == dp else 2.0
        a_d = alpha[slices[d]]
        a_dp = alpha[slices[dp]]
        kinv_block = kinv[slices[d], slices[dp]]
        for label, G in grads.items():
            acc[label] += factor * (
                0.5 * (a_d @ G @ a_dp) - 0.5 * np.sum(kinv_block * G)
            )
    grad = np.array([acc[label] for label in labels])

    noise_grad = np.empty(dataset.n_outputs)
    for d, sl in enumerate(slices):
        sv = noise_var[d]
        noise_grad[d] = 0.5 * sv * (
            np.sum(alpha[sl] ** 2) - np.trace(kinv[sl, sl])
        )
    return lml, np.concatenate([grad, noise_grad])


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 5
    max_iters: int = 200
    gtol: float = 1e-6
    seed: int = 0
    init_overrides: dict | None = None  # label prefix -> value
    # box bounds on hyperparameters by label prefix, in natural units
    # (log-transformed internally for log-packed parameters)
    bounds: dict | None = None
    # optional cheap pre-screening: probe extra starts for a few iterations
    # and only run the best ``restarts`` of them to convergence
    screen_draws: int = 0
    screen_iters: int = 15
    # explicit warm starts: (kernel params, noise variances) pairs run as
    # additional restarts ahead of the random ones
    warm_starts: tuple = ()


@dataclass(frozen=True)
class FittedModel:
    kernel: KernelFamily
    noise_var: np.ndarray  # (D,)
    train: MultiOutputDataset

    @property
    def family(self):
        return self.kernel.tag


@dataclass(frozen=True)
class FitResult:
    model: FittedModel
    lml: float
    traces: tuple  # per restart, tuple of accepted-objective values
    restart_lmls: tuple
    seed: int


def _median_spacing(dataset):
    spac = []
    for o in dataset.outputs:
        if o.n < 2:
            continue
        for j in range(dataset.input_dim):
            s = np.diff(np.sort(o.X[:, j]))
            s = s[s > 0]
            if s.size:
                spac.append(np.median(s))
    return float(np.median(spac)) if spac else 1.0


def _loguniform(rng, lo, hi, size=None):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


def random_init(family_tag, dataset, n_forces, rng, fixed=None):
    """Data-driven random initialization for a kernel family.

    Length-scales draw log-uniformly between the median input spacing and
    the input range; rates (decays, springs) between 0.2/range and
    20/spacing-ish; sensitivities are standard normal.
    """
    fixed = dict(fixed or {})
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    D = dataset.n_outputs
    p = dataset.input_dim
    rng_range = dataset.input_range()
    span = np.maximum(rng_range[:, 1] - rng_range[:, 0], 1e-8)
    spacing = max(_median_spacing(dataset), 1e-6 * float(span.max()))
    ell_lo, ell_hi = spacing, float(span.max())
    if ell_hi <= ell_lo:
        ell_hi = 2.0 * ell_lo
    rate_lo, rate_hi = 0.2 / float(span.max()), min(2.0 / spacing, 50.0 / float(span.max()))
    if rate_hi <= rate_lo:
        rate_hi = 10.0 * rate_lo
    Q = n_forces

    if family_tag == "se":
        return FAMILIES["se"](
            signal_var=_loguniform(rng, 0.2, 2.0, D),
            lengthscale=_loguniform(rng, ell_lo, ell_hi, D),
        )
    if family_tag == "mtgp":
        return FAMILIES["mtgp"](
            lengthscale=float(_loguniform(rng, ell_lo, ell_hi)),
            sens=rng.standard_normal((D, Q)),
        )
    if family_tag == "slfm":
        return FAMILIES["slfm"](
            lengthscale=_loguniform(rng, ell_lo, ell_hi, Q),
            sens=rng.standard_normal((D, Q)),
        )
    if family_tag == "ode1":
        return FAMILIES["ode1"](
            decay=_loguniform(rng, rate_lo, rate_hi, D),
            sens=rng.standard_normal((D, Q)),
            lengthscale=_loguniform(rng, ell_lo, ell_hi, Q),
        )
    if family_tag == "ode2":
        spring = _loguniform(rng, rate_lo**2, rate_hi**2, D)
        for _ in range(100):
            ratio = _loguniform(rng, 0.1, 3.0, D)
            if np.all(np.abs(ratio - 1.0) > 0.05):
                break
        damper = 2.0 * np.sqrt(spring) * ratio
        return FAMILIES["ode2"](
            spring=spring,
            damper=damper,
            sens=rng.standard_normal((D, Q)),
            lengthscale=_loguniform(rng, ell_lo, ell_hi, Q),
        )
    if family_tag == "diffusion":
        length = float(fixed.get("domain_length", 1.0))
        n_terms = int(fixed.get("n_terms", 30))
        t_span = float(span[1])
        return FAMILIES["diffusion"](
            decay=_loguniform(rng, 0.2 / t_span, 10.0 / t_span, D),
            diffusivity=_loguniform(rng, 0.01, 0.5, D) * length**2 / t_span,
            sens=rng.standard_normal((D, Q)),
            time_lengthscale=_loguniform(rng, ell_lo, ell_hi, Q),
            space_lengthscale=_loguniform(rng, length / 20.0, length / 2.0, Q),
            domain_length=length,
            n_terms=n_terms,
        )
    if family_tag == "heat":
        v_lo, v_hi = (float(span.min()) / 50.0) ** 2, (float(span.max()) / 3.0) ** 2
        return FAMILIES["heat"](
            smooth_var=_loguniform(rng, v_lo, v_hi, (D, p)),
            latent_var=_loguniform(rng, v_lo, v_hi, (Q, p)),
            sens=rng.standard_normal((D, Q)),
        )
    raise UnsupportedFamilyError(f"unknown kernel family '{family_tag}'")


def _apply_overrides(kernel, overrides):
    if not overrides:
        return kernel
    vec = kernel.log_vector()
    labels = kernel.labels()
    for key, value in overrides.items():
        hit = False
        for i, lab in enumerate(labels):
            if lab == key or lab.startswith(key + "["):
                vec[i] = np.log(value) if lab.startswith("log_") else value
                hit = True
        if not hit:
            raise KeyError(f"init override '{key}' matches no hyperparameter")
    return kernel.with_log_vector(vec)


def _build_bounds(kernel, n_outputs, bounds):
    """Optimizer box bounds aligned with the packed vector (or None)."""
    if not bounds:
        return None
    labels = kernel.labels() + [f"log_noise_var[{d}]" for d in range(n_outputs)]
    out = []
    for lab in labels:
        pair = (None, None)
        for key, (lo, hi) in bounds.items():
            if lab == key or lab.startswith(key + "["):
                if lab.startswith("log_"):
                    pair = (
                        None if lo is None else np.log(lo),
                        None if hi is None else np.log(hi),
                    )
                else:
                    pair = (lo, hi)
        out.append(pair)
    return out


def fit(dataset: MultiOutputDataset, family_tag: str, n_forces: int = 1,
        config: FitConfig = FitConfig(), fixed: dict | None = None) -> FitResult:
    """Maximize the marginal likelihood with a quasi-Newton optimizer.

    Runs ``config.restarts`` seeded random restarts and keeps the best
    final marginal likelihood.  Pathological iterates (overflow, critical
    damping, non-PSD past the jitter cap) are treated as objective +inf
    so the line search backs off.
    """
    rng = np.random.default_rng(config.seed)
    y_var = np.array([max(o.y.var(), 1e-12) for o in dataset.outputs])
    traces = []
    restart_lmls = []
    best = None

    def draw_start():
        for _attempt in range(30):
            try:
                kernel0 = random_init(family_tag, dataset, n_forces, rng, fixed)
                kernel0 = _apply_overrides(kernel0, config.init_overrides)
            except DegenerateKernelError:
                continue
            noise0 = _loguniform(rng, 1e-4, 1e-1, dataset.n_outputs) * y_var
            x0 = np.concatenate([kernel0.log_vector(), np.log(noise0)])
            lbounds = _build_bounds(kernel0, dataset.n_outputs, config.bounds)
            if lbounds is not None:
                for i, (lo, hi) in enumerate(lbounds):
                    if lo is not None:
                        x0[i] = max(x0[i], lo)
                    if hi is not None:
                        x0[i] = min(x0[i], hi)
            if np.isfinite(_objective(x0, kernel0, dataset)[0]):
                return kernel0, x0
        return None

    def run_lbfgs(kernel0, x0, maxiter, trace):
        recent = {}

        def objective(x):
            f, g = _objective(x, kernel0, dataset)
            if len(recent) > 64:
                recent.clear()
            recent[x.tobytes()] = f
            return f, g

        def callback(xk):
            f = recent.get(xk.tobytes())
            if f is None:
                f = _objective(xk, kernel0, dataset)[0]
            trace.append(-f)

        return optimize.minimize(
            objective, x0, jac=True, method="L-BFGS-B", callback=callback,
            bounds=_build_bounds(kernel0, dataset.n_outputs, config.bounds),
            options={"maxiter": maxiter, "gtol": config.gtol},
        )

    n_restarts = max(1, config.restarts)
    starts = []
    for kernel0, noise0 in config.warm_starts:
        x0 = np.concatenate(
            [kernel0.log_vector(), np.log(np.asarray(noise0, dtype=float))]
        )
        f0 = _objective(x0, kernel0, dataset)[0]
        if np.isfinite(f0):
            starts.append((kernel0, x0, [-f0]))
    if config.screen_draws > n_restarts:
        # probe many starts briefly, keep the most promising
        probes = []
        for _ in range(config.screen_draws):
            drawn = draw_start()
            if drawn is None:
                continue
            kernel0, x0 = drawn
            trace = [-_objective(x0, kernel0, dataset)[0]]
            res = run_lbfgs(kernel0, x0, config.screen_iters, trace)
            if np.isfinite(res.fun):
                probes.append((float(res.fun), kernel0, res.x, trace))
        probes.sort(key=lambda p: p[0])
        starts = [(k, x, tr) for _, k, x, tr in probes[:n_restarts]]
    else:
        for _ in range(n_restarts):
            drawn = draw_start()
            if drawn is not None:
                kernel0, x0 = drawn
                starts.append(
                    (kernel0, x0, [-_objective(x0, kernel0, dataset)[0]])
                )

    for kernel0, x0, trace in starts:
        nk = kernel0.log_vector().size
        res = run_lbfgs(kernel0, x0, config.max_iters, trace)
        if not np.isfinite(res.fun):
            continue
        kernel_fit = kernel0.with_log_vector(res.x[:nk])
        noise_fit = np.exp(res.x[nk:])
        lml = -float(res.fun)
        traces.append(tuple(trace))
        restart_lmls.append(lml)
        if best is None or lml > best[0]:
            best = (lml, kernel_fit, noise_fit)

    if best is None:
        raise NotPositiveDefiniteError(
            "all restarts diverged; no finite marginal likelihood found"
        )
    lml, kernel_fit, noise_fit = best
    model = FittedModel(kernel=kernel_fit, noise_var=noise_fit, train=dataset)
    return FitResult(
        model=model,
        lml=lml,
        traces=tuple(traces),
        restart_lmls=tuple(restart_lmls),
        seed=config.seed,
    )


def _objective(x, template, dataset):
    nk = template.log_vector().size
    try:
        with np.errstate(all="ignore"):
            kernel = template.with_log_vector(x[:nk])
            noise = np.exp(x[nk:])
            lml, grad = lml_and_gradient(kernel, noise, dataset)
        if not (np.isfinite(lml) and np.all(np.isfinite(grad))):
            return np.inf, np.zeros_like(x)
        return -lml, -grad
    except (
        NotPositiveDefiniteError,
        RangeOverflowError,
        DegenerateKernelError,
        FloatingPointError,
        ValueError,
        OverflowError,
        AssertionError,
    ):
        return np.inf, np.zeros_like(x)


# ---------------------------------------------------------------------------
# posteriors
# ---------------------------------------------------------------------------


def _cross_gram(kernel, rows_inputs, cols_inputs):
    """Cross Gram between two per-output input lists (same output count)."""
    r_counts = [as_points(X).shape[0] for X in rows_inputs]
    c_counts = [as_points(X).shape[0] for X in cols_inputs]
    K = np.empty((sum(r_counts), sum(c_counts)))
    ro = np.concatenate([[0], np.cumsum(r_counts)])
    co = np.concatenate([[0], np.cumsum(c_counts)])
    for d in range(len(rows_inputs)):
        for dp in range(len(cols_inputs)):
            if r_counts[d] == 0 or c_counts[dp] == 0:
                continue
            K[ro[d] : ro[d + 1], co[dp] : co[dp + 1]] = kernel.kff_block(
                d, dp, rows_inputs[d], cols_inputs[dp]
            )
    return K


def condition_and_extrapolate(
    model: FittedModel, observed: MultiOutputDataset, query_inputs
) -> PosteriorSummary:
    """Condition on an arbitrary observation subset, predict at queries.

    ``query_inputs``: per-output list of input arrays (empty arrays allowed).
    The predictive covariance includes the fitted noise on its diagonal.
    With the full training set observed this reduces to :func:`predict`;
    with an empty observation set it returns the prior.
    """
    kernel = model.kernel
    p = observed.input_dim
    q_inputs = []
    for X in query_inputs:
        X = np.asarray(X, dtype=float)
        q_inputs.append(as_points(X) if X.size else np.empty((0, p)))
    kqq = _cross_gram(kernel, q_inputs, q_inputs)
    q_counts = np.array([X.shape[0] for X in q_inputs])
    noise_q = _noise_diag(model.noise_var, q_counts)

    if observed.total_points == 0:
        cov = kqq + np.diag(noise_q)
        return PosteriorSummary(np.zeros(kqq.shape[0]), cov, "predictive-outputs")

    y = observed.stacked_targets()
    kaa = assemble_kff(kernel, observed.inputs())
    kaa[np.diag_indices_from(kaa)] += _noise_diag(model.noise_var, observed.counts)
    L, _ = chol_with_jitter(kaa)
    kqa = _cross_gram(kernel, q_inputs, observed.inputs())
    mean = kqa @ cho_solve((L, True), y)
    v = solve_triangular(L, kqa.T, lower=True)
    cov = kqq - v.T @ v + np.diag(noise_q)
    cov = 0.5 * (cov + cov.T)
    return PosteriorSummary(mean, cov, "predictive-outputs")


def predict(model: FittedModel, query_inputs) -> PosteriorSummary:
    """Predictive distribution at per-output query inputs."""
    return condition_and_extrapolate(model, model.train, query_inputs)


def default_latent_grid(dataset: MultiOutputDataset, size: int = 100):
    """Equally spaced grid over the training input range (lattice for p>1)."""
    rng_range = dataset.input_range()
    p = dataset.input_dim
    if p == 1:
        return np.linspace(rng_range[0, 0], rng_range[0, 1], size)[:, None]
    per_dim = max(2, int(round(size ** (1.0 / p))))
    axes = [np.linspace(lo, hi, per_dim) for lo, hi in rng_range]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def latent_posterior(model: FittedModel, grid=None) -> PosteriorSummary:
    """Posterior of the latent forces on a shared grid (one block per force).

    Raises UnsupportedFamilyError for families without output-latent
    cross-covariances (the coregionalization baselines).
    """
    kernel = model.kernel
    if not kernel.supports_latent:
        raise UnsupportedFamilyError(
            f"family '{kernel.tag}' does not define a latent-force posterior"
        )
    if grid is None:
        grid = default_latent_grid(model.train)
    grid = as_points(grid)
    Q = kernel.n_forces
    m = grid.shape[0]
    D = model.train.n_outputs
    inputs = model.train.inputs()

    kuu = np.zeros((Q * m, Q * m))
    for q in range(Q):
        kuu[q * m : (q + 1) * m, q * m : (q + 1) * m] = kernel.kuu_block(q, grid, grid)

    n = model.train.total_points
    kfu = np.zeros((n, Q * m))
    offs = np.concatenate([[0], np.cumsum(model.train.counts)])
    for d in range(D):
        for q in range(Q):
            kfu[offs[d] : offs[d + 1], q * m : (q + 1) * m] = kernel.kfu_block(
                d, q, inputs[d], grid
            )

    if n == 0:
        return PosteriorSummary(np.zeros(Q * m), kuu, "latent-forces")
    y = model.train.stacked_targets()
    kff = assemble_kff(kernel, inputs)
    kff[np.diag_indices_from(kff)] += _noise_diag(model.noise_var, model.train.counts)
    L, _ = chol_with_jitter(kff)
    mean = kfu.T @ cho_solve((L, True), y)
    v = solve_triangular(L, kfu, lower=True)
    cov = kuu - v.T @ v
    cov = 0.5 * (cov + cov.T)
    return PosteriorSummary(mean, cov, "latent-forces")


def heldout_log_density(model: FittedModel, heldout: MultiOutputDataset) -> float:
    """log p(y_heldout | y_train, theta) under the fitted model."""
    summary = condition_and_extrapolate(model, model.train, heldout.inputs())
    y = heldout.stacked_targets()
    r = y - summary.mean
    L, _ = chol_with_jitter(summary.cov)
    alpha = cho_solve((L, True), r)
    return float(
        -0.5 * r @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * y.size * _LOG_2PI
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def save_model(model: FittedModel, path):
    """Self-describing key-value text dump at full float precision."""
    kernel = model.kernel
    buf = io.StringIO()
    buf.write("format = lfmgp-model-v1\n")
    buf.write(f"family = {kernel.tag}\n")
    for f in dataclass_fields(kernel):
        value = getattr(kernel, f.name)
        if isinstance(value, np.ndarray):
            buf.write(f"{f.name}.shape = {' '.join(map(str, value.shape))}\n")
            buf.write(
                f"{f.name} = {' '.join(repr(float(v)) for v in value.ravel())}\n"
            )
        elif isinstance(value, float):
            buf.write(f"{f.name} = {value!r}\n")
        else:
            buf.write(f"{f.name} = {value}\n")
    buf.write(
        "noise_var = " + " ".join(repr(float(v)) for v in model.noise_var) + "\n"
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def load_model(path, train: MultiOutputDataset | None = None) -> FittedModel:
    """Rebuild a fitted model from :func:`save_model` output.

    The training dataset is not serialized; pass it back in for an
    inference-capable model (prior-only otherwise).
    """
    entries = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    if entries.get("format") != "lfmgp-model-v1":
        raise ValueError(f"{path}: not a recognized model file")
    cls = FAMILIES[entries["family"]]
    kwargs = {}
    for f in dataclass_fields(cls):
        raw = entries[f.name]
        shape_key = f"{f.name}.shape"
        if shape_key in entries:
            shape = tuple(int(s) for s in entries[shape_key].split())
            kwargs[f.name] = np.array(
                [float(v) for v in raw.split()]
            ).reshape(shape)
        elif f.type in ("int", int):
            kwargs[f.name] = int(raw)
        else:
            kwargs[f.name] = float(raw)
    kernel = cls(**kwargs)
    noise_var = np.array([float(v) for v in entries["noise_var"].split()])
    if train is None:
        names = [f"out{i}" for i in range(kernel.n_outputs)]
        from .dataset import OutputSeries

        p = getattr(kernel, "input_dim", 1)
        if kernel.tag == "diffusion":
            p = 2
        train = MultiOutputDataset(
            tuple(
                OutputSeries(nm, np.empty((0, p)), np.empty(0)) for nm in names
            )
        )
    return FittedModel(kernel=kernel, noise_var=noise_var, train=train)
