"""Command-line front end.

Verbs: fit, predict, validate, posterior, oracle-check, snr-report,
make-synthetic.  Every run is deterministic given (config, seed,
single-threaded mode); each command writes a resolved-config copy next to
its outputs.  Exit codes: 0 success, 1 runtime/I-O failure, 2 usage or
config error.

Configs are flat ``section.key = value`` text; see the README for the key
reference.  Heavy imports stay inside handlers so --threads can pin BLAS
pools before numpy loads.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from .errors import ConfigError, DataError, LfmgpError, QuadratureBudgetError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

_DENSE_LIMIT = 2000


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


def parse_config_text(text):
    out = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {line_no}: expected 'key = value'")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def write_resolved_config(cfg: dict, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"{k} = {v}" for k, v in sorted(cfg.items())]
    (out_dir / "resolved.cfg").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _get(cfg, key, default=None, required=False, cast=str):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing config key '{key}'")
        return default
    raw = cfg[key]
    try:
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"config key '{key}': bad value {raw!r}") from exc


def _get_list(cfg, key, required=False):
    raw = _get(cfg, key, default=None, required=required)
    if raw is None:
        return None
    return [v.strip() for v in raw.split(",") if v.strip()]


def _load_dataset(cfg):
    from .data import ColumnSchema, load_columnar

    path = _get(cfg, "data.path", required=True)
    inputs = _get_list(cfg, "data.inputs", required=True)
    outputs = _get_list(cfg, "data.outputs", required=True)
    extra_missing = _get_list(cfg, "data.missing") or []
    schema = ColumnSchema(
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        missing=("", "NA", "NaN", "nan", "?") + tuple(extra_missing),
    )
    return load_columnar(path, schema)


def _guard_size(n_points, allow_large):
    if n_points > _DENSE_LIMIT and not allow_large:
        raise ConfigError(
            f"{n_points} points exceeds the dense-inference guard of "
            f"{_DENSE_LIMIT} (cost grows cubically); pass --allow-large to "
            "override"
        )


def _fit_config(cfg, seed):
    from .gp import FitConfig

    overrides = {
        key[len("init.") :]: float(val)
        for key, val in cfg.items()
        if key.startswith("init.")
    }
    return FitConfig(
        restarts=_get(cfg, "fit.restarts", 5, cast=int),
        max_iters=_get(cfg, "fit.max_iters", 200, cast=int),
        seed=seed,
        init_overrides=overrides or None,
    )


def _family_fixed(cfg):
    fixed = {}
    if "kernel.n_terms" in cfg:
        fixed["n_terms"] = _get(cfg, "kernel.n_terms", cast=int)
    if "kernel.domain_length" in cfg:
        fixed["domain_length"] = _get(cfg, "kernel.domain_length", cast=float)
    return fixed


def _check_family(tag):
    from .kernels import FAMILIES

    if tag not in FAMILIES:
        raise ConfigError(
            f"unknown kernel family '{tag}'; choose from "
            f"{sorted(FAMILIES)}"
        )
    return tag


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_fit(args):
    import numpy as np

    from . import gp
    from .dataset import standardize

    cfg = load_config(args.config)
    out_dir = Path(args.out or _get(cfg, "out.dir", "out"))
    family = _check_family(_get(cfg, "kernel.family", required=True))
    forces = _get(cfg, "kernel.forces", 1, cast=int)
    if forces < 1 and family != "se":
        raise ConfigError("kernel.forces must be >= 1")
    seed = args.seed if args.seed is not None else _get(cfg, "fit.seed", 0, cast=int)

    ds = _load_dataset(cfg)
    _guard_size(ds.total_points, args.allow_large)
    norm = None
    if _get(cfg, "data.standardize", True, cast=bool):
        ds_fit, norm = standardize(ds)
    else:
        ds_fit = ds

    t0 = time.time()
    result = gp.fit(ds_fit, family, n_forces=forces,
                    config=_fit_config(cfg, seed), fixed=_family_fixed(cfg))
    wall = time.time() - t0

    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "model.txt"
    gp.save_model(result.model, model_path)
    log_lines = [
        f"family = {family}",
        f"seed = {seed}",
        f"wall_clock_s = {wall:.3f}",
        f"final_lml = {result.lml!r}",
        f"restart_lmls = {', '.join(repr(v) for v in result.restart_lmls)}",
    ]
    for i, tr in enumerate(result.traces):
        log_lines.append(
            f"trace[{i}] = {' '.join(f'{v:.6f}' for v in tr)}"
        )
    if norm is not None:
        log_lines.append(
            "standardize.mean = " + " ".join(repr(v) for v in norm.mean)
        )
        log_lines.append(
            "standardize.std = " + " ".join(repr(v) for v in norm.std)
        )
    (out_dir / "fit_log.txt").write_text("\n".join(log_lines) + "\n",
                                         encoding="utf-8")
    write_resolved_config(cfg, out_dir)
    print(f"fit: lml={result.lml:.4f} model={model_path}")
    return EXIT_OK


def cmd_predict(args):
    import numpy as np

    from . import gp
    from .data import ColumnSchema, load_columnar, write_columnar
    from .dataset import standardize

    cfg = load_config(args.config)
    out_dir = Path(args.out or _get(cfg, "out.dir", "out"))
    ds = _load_dataset(cfg)
    _guard_size(ds.total_points, args.allow_large)
    norm = None
    if _get(cfg, "data.standardize", True, cast=bool):
        ds_fit, norm = standardize(ds)
    else:
        ds_fit = ds

    model_path = _get(cfg, "predict.model", required=True)
    model = gp.load_model(model_path, train=ds_fit)

    at_path = _get(cfg, "predict.at")
    inputs = _get_list(cfg, "data.inputs", required=True)
    if at_path:
        schema = ColumnSchema(inputs=tuple(inputs), outputs=(inputs[0],))
        with open(at_path, encoding="utf-8") as fh:
            header = fh.readline().split()
        import numpy as np

        rows = np.loadtxt(at_path, skiprows=1)
        rows = rows.reshape(-1, len(header))
        cols = [header.index(c) for c in inputs]
        query = rows[:, cols]
    else:
        query = np.vstack([o.X for o in ds.outputs])
        query = np.unique(query, axis=0)
    queries = [query for _ in range(ds.n_outputs)]
    summary = gp.predict(model, queries)

    n = query.shape[0]
    header = list(inputs)
    columns = [query[:, j] for j in range(query.shape[1])]
    for d, name in enumerate(ds.names):
        mean = summary.mean[d * n : (d + 1) * n]
        var = summary.variance[d * n : (d + 1) * n]
        if norm is not None:
            mean = norm.invert_mean(d, mean)
            var = norm.invert_var(d, var)
        header += [f"{name}.mean", f"{name}.var"]
        columns += [mean, var]
    out_dir.mkdir(parents=True, exist_ok=True)
    write_columnar(out_dir / "predictions.txt", header, columns)
    write_resolved_config(cfg, out_dir)
    print(f"predict: wrote {out_dir / 'predictions.txt'} ({n} query points)")
    return EXIT_OK


# -- validation protocols ---------------------------------------------------


def holdout_validation(ds, family, forces, repeats, holdout_frac, seed,
                       fit_config=None, fixed=None):
    """Per-output random holdout: fit on the kept part, predict the rest."""
    import numpy as np

    from . import gp
    from .dataset import standardize

    rng = np.random.default_rng(seed)
    per_repeat = []
    for rep in range(repeats):
        train_idx, test_idx = [], []
        for o in ds.outputs:
            n_test = max(1, int(round(o.n * holdout_frac)))
            perm = rng.permutation(o.n)
            test_idx.append(perm[:n_test])
            train_idx.append(perm[n_test:])
        train = ds.subset(train_idx)
        test = ds.subset(test_idx)
        train_std, norm = standardize(train)
        cfgf = fit_config or gp.FitConfig(restarts=3, seed=seed + rep)
        res = gp.fit(train_std, family, n_forces=forces, config=cfgf,
                     fixed=fixed)
        summary = gp.condition_and_extrapolate(
            res.model, train_std, test.inputs()
        )
        per_repeat.append(
            _metrics_from_summary(summary, test, norm)
        )
    return per_repeat


def cokriging_validation(ds, family, forces, primary, repeats, n_train,
                         n_test, seed, fit_config=None, fixed=None,
                         progress=None):
    """Row-aligned undersampled protocol.

    All outputs must share one location set.  Each repeat splits the
    locations into a training set (every variable observed) and a
    validation set; hyperparameters are fitted on the training locations,
    then the primary variable at the validation locations is predicted by
    conditioning jointly on the secondary variables everywhere and the
    primary at the training locations.
    """
    import numpy as np

    from . import gp
    from .dataset import standardize

    X0 = ds.outputs[0].X
    for o in ds.outputs:
        if o.X.shape != X0.shape or not np.allclose(o.X, X0):
            raise ConfigError(
                "cokriging protocol needs row-aligned complete data "
                "(every output observed at every location)"
            )
    n_loc = X0.shape[0]
    if n_train + n_test > n_loc:
        raise ConfigError(
            f"split {n_train}+{n_test} exceeds the {n_loc} available locations"
        )
    try:
        primary_idx = ds.names.index(primary)
    except ValueError:
        raise ConfigError(f"primary output '{primary}' not in {ds.names}") from None

    rng = np.random.default_rng(seed)
    per_repeat = []
    for rep in range(repeats):
        perm = rng.permutation(n_loc)
        tr = perm[:n_train]
        va = perm[n_train : n_train + n_test]
        train = ds.subset([tr] * ds.n_outputs)
        train_std, norm = standardize(train)
        cfgf = fit_config or gp.FitConfig(restarts=3, seed=seed + rep)
        res = gp.fit(train_std, family, n_forces=forces, config=cfgf,
                     fixed=fixed)

        # conditioning set: secondaries at train+validation, primary at train
        cond_idx = [
            (tr if d == primary_idx else np.concatenate([tr, va]))
            for d in range(ds.n_outputs)
        ]
        cond = ds.subset(cond_idx)
        cond_std = norm.apply(cond)
        query = [
            (X0[va] if d == primary_idx else np.empty((0, X0.shape[1])))
            for d in range(ds.n_outputs)
        ]
        summary = gp.condition_and_extrapolate(res.model, cond_std, query)
        truth = ds.outputs[primary_idx].y[va]
        mean = norm.invert_mean(primary_idx, summary.mean)
        rmse = float(np.sqrt(np.mean((mean - truth) ** 2)))
        denom = float(np.var(truth))
        r2 = float(100.0 * (1.0 - np.mean((mean - truth) ** 2) / denom))
        per_repeat.append({primary: (rmse, r2)})
        if progress:
            progress(rep, rmse, r2)
    return per_repeat


def _metrics_from_summary(summary, test_ds, norm):
    import numpy as np

    out = {}
    offs = np.concatenate([[0], np.cumsum(test_ds.counts)])
    for d, o in enumerate(test_ds.outputs):
        if o.n == 0:
            continue
        mean = summary.mean[offs[d] : offs[d + 1]]
        if norm is not None:
            mean = norm.invert_mean(d, mean)
        err = mean - o.y
        rmse = float(np.sqrt(np.mean(err**2)))
        denom = float(np.var(o.y)) if o.n > 1 else 1.0
        r2 = float(100.0 * (1.0 - np.mean(err**2) / max(denom, 1e-300)))
        out[o.name] = (rmse, r2)
    return out


def summarize_metrics(per_repeat):
    """mean +- std across repeats for each output appearing in any repeat."""
    import numpy as np

    names = sorted({k for rep in per_repeat for k in rep})
    table = {}
    for name in names:
        rmses = np.array([rep[name][0] for rep in per_repeat if name in rep])
        r2s = np.array([rep[name][1] for rep in per_repeat if name in rep])
        table[name] = (
            float(rmses.mean()),
            float(rmses.std(ddof=0)),
            float(r2s.mean()),
            float(r2s.std(ddof=0)),
            len(rmses),
        )
    return table


def cmd_validate(args):
    from .data import write_columnar

    cfg = load_config(args.config)
    out_dir = Path(args.out or _get(cfg, "out.dir", "out"))
    family = _check_family(_get(cfg, "kernel.family", required=True))
    forces = _get(cfg, "kernel.forces", 1, cast=int)
    repeats = _get(cfg, "validate.repeats", 10, cast=int)
    if repeats < 1:
        raise ConfigError("validate.repeats must be >= 1")
    protocol = _get(cfg, "validate.protocol", "holdout")
    seed = args.seed if args.seed is not None else _get(cfg, "fit.seed", 0, cast=int)

    ds = _load_dataset(cfg)
    _guard_size(ds.total_points, args.allow_large)
    from . import gp

    fit_config = _fit_config(cfg, seed)
    t0 = time.time()
    if protocol == "holdout":
        frac = _get(cfg, "validate.holdout_fraction", 0.3, cast=float)
        if not 0.0 < frac < 1.0:
            raise ConfigError("validate.holdout_fraction must be in (0, 1)")
        per_repeat = holdout_validation(
            ds, family, forces, repeats, frac, seed,
            fit_config=fit_config, fixed=_family_fixed(cfg),
        )
    elif protocol == "cokriging":
        n_train = _get(cfg, "validate.train", required=True, cast=int)
        n_test = _get(cfg, "validate.test", required=True, cast=int)
        if n_test < 1:
            raise ConfigError("validate.test must be >= 1")
        primary = _get(cfg, "validate.primary", required=True)
        per_repeat = cokriging_validation(
            ds, family, forces, primary, repeats, n_train, n_test, seed,
            fit_config=fit_config, fixed=_family_fixed(cfg),
        )
    else:
        raise ConfigError(f"unknown validate.protocol '{protocol}'")
    wall = time.time() - t0

    table = summarize_metrics(per_repeat)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = list(table)
    write_columnar(
        out_dir / "metrics.txt",
        ["output_index", "rmse_mean", "rmse_std", "r2_mean", "r2_std", "repeats"],
        [
            list(range(len(names))),
            [table[n][0] for n in names],
            [table[n][1] for n in names],
            [table[n][2] for n in names],
            [table[n][3] for n in names],
            [table[n][4] for n in names],
        ],
    )
    (out_dir / "metrics_names.txt").write_text(
        "\n".join(names) + "\n", encoding="utf-8"
    )
    write_resolved_config(cfg, out_dir)
    print(f"validate: protocol={protocol} repeats={repeats} wall={wall:.1f}s")
    for name in names:
        rm, rs, r2m, r2s, n = table[name]
        print(f"  {name:>12}  RMSE {rm:.4f} +- {rs:.4f}   R2 {r2m:.2f} +- {r2s:.2f}  ({n} repeats)")
    return EXIT_OK


def cmd_posterior(args):
    import numpy as np

    from . import gp
    from .data import write_columnar
    from .dataset import standardize

    cfg = load_config(args.config)
    out_dir = Path(args.out or _get(cfg, "out.dir", "out"))
    ds = _load_dataset(cfg)
    _guard_size(ds.total_points, args.allow_large)
    if _get(cfg, "data.standardize", True, cast=bool):
        ds_fit, _ = standardize(ds)
    else:
        ds_fit = ds
    model = gp.load_model(_get(cfg, "posterior.model", required=True),
                          train=ds_fit)
    grid_size = _get(cfg, "posterior.grid", 100, cast=int)
    grid = gp.default_latent_grid(ds_fit, grid_size)
    summary = gp.latent_posterior(model, grid)

    q = model.kernel.n_forces
    m = grid.shape[0]
    header = [f"x{j}" for j in range(grid.shape[1])]
    columns = [grid[:, j] for j in range(grid.shape[1])]
    for k in range(q):
        header += [f"force{k}.mean", f"force{k}.var"]
        columns += [
            summary.mean[k * m : (k + 1) * m],
            np.maximum(summary.variance[k * m : (k + 1) * m], 0.0),
        ]
    out_dir.mkdir(parents=True, exist_ok=True)
    write_columnar(out_dir / "latent_forces.txt", header, columns)
    write_resolved_config(cfg, out_dir)
    print(f"posterior: wrote {out_dir / 'latent_forces.txt'} ({q} forces, {m} grid points)")
    return EXIT_OK


def cmd_snr_report(args):
    from .data import snr_filter

    cfg = load_config(args.config)
    out_dir = Path(args.out or _get(cfg, "out.dir", "out"))
    threshold = _get(cfg, "snr.threshold_db", 20.0, cast=float)
    seed = args.seed if args.seed is not None else 0
    ds = _load_dataset(cfg)
    filtered, report = snr_filter(ds, threshold_db=threshold, seed=seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "snr_report.txt").write_text(
        "\n".join(report.lines()) + "\n", encoding="utf-8"
    )
    write_resolved_config(cfg, out_dir)
    print(f"snr-report: kept {filtered.n_outputs}/{ds.n_outputs} outputs "
          f"at threshold {threshold} dB")
    for line in report.lines():
        print("  " + line)
    return EXIT_OK


def cmd_make_synthetic(args):
    import numpy as np

    from .data import make_synthetic, write_columnar
    from .kernels import FirstOrderParams, SecondOrderParams

    cfg = load_config(args.config)
    out_dir = Path(args.out or _get(cfg, "out.dir", "out"))
    family = _get(cfg, "kernel.family", required=True)
    d = _get(cfg, "synthetic.outputs", 2, cast=int)
    q = _get(cfg, "kernel.forces", 1, cast=int)
    seed = args.seed if args.seed is not None else 0
    rng = np.random.default_rng(seed)
    ell = np.full(q, _get(cfg, "synthetic.lengthscale", 1.0, cast=float))
    sens = rng.standard_normal((d, q))
    if family == "ode1":
        params = FirstOrderParams(
            decay=rng.uniform(0.4, 2.0, d), sens=sens, lengthscale=ell
        )
    elif family == "ode2":
        spring = rng.uniform(1.0, 4.0, d)
        params = SecondOrderParams(
            spring=spring,
            damper=2.0 * np.sqrt(spring) * rng.uniform(0.15, 0.7, d),
            sens=sens,
            lengthscale=ell,
        )
    else:
        raise ConfigError("make-synthetic supports families 'ode1' and 'ode2'")
    ds, truth = make_synthetic(
        params,
        n_per_output=_get(cfg, "synthetic.points", 100, cast=int),
        t_max=_get(cfg, "synthetic.t_max", 10.0, cast=float),
        seed=seed,
        snr_db=_get(cfg, "synthetic.snr_db", 20.0, cast=float),
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    rows_t = np.concatenate([o.X[:, 0] for o in ds.outputs])
    header = ["t"] + ds.names
    columns = [rows_t]
    offs = np.concatenate([[0], np.cumsum(ds.counts)])
    for di, o in enumerate(ds.outputs):
        col = np.full(rows_t.size, np.nan)
        col[offs[di] : offs[di + 1]] = o.y
        columns.append(col)
    # written with NaN markers for the heterotopic holes
    write_columnar(out_dir / "synthetic.txt", header, columns)
    write_columnar(
        out_dir / "true_forces.txt",
        ["t"] + [f"force{k}" for k in range(q)],
        [truth.grid] + [truth.forces[k] for k in range(q)],
    )
    write_resolved_config(cfg, out_dir)
    print(f"make-synthetic: wrote {out_dir / 'synthetic.txt'} "
          f"({ds.total_points} points, family {family})")
    return EXIT_OK


# -- oracle check -----------------------------------------------------------


def _oracle_draws(family, n_points, seed, n_terms=30):
    """Seeded random (params, point) draws per family for oracle checks."""
    import numpy as np

    from .kernels import (
        DiffusionParams,
        FirstOrderParams,
        HeatParams,
        SecondOrderParams,
    )

    rng = np.random.default_rng(seed)
    draws = []
    for _ in range(n_points):
        if family == "ode1":
            params = FirstOrderParams(
                decay=rng.uniform(0.2, 4.0, 2),
                sens=np.ones((2, 1)),
                lengthscale=rng.uniform(0.3, 2.0, 1),
            )
            point = (rng.uniform(0.0, 6.0), rng.uniform(0.0, 6.0))
        elif family in ("ode2", "ode2-overdamped"):
            spring = rng.uniform(0.5, 4.0, 2)
            if family == "ode2":
                ratio = rng.uniform(0.1, 0.9, 2)
            else:
                ratio = rng.uniform(1.1, 3.0, 2)
            params = SecondOrderParams(
                spring=spring,
                damper=2.0 * np.sqrt(spring) * ratio,
                sens=np.ones((2, 1)),
                lengthscale=rng.uniform(0.5, 2.0, 1),
            )
            point = (rng.uniform(0.0, 6.0), rng.uniform(0.0, 6.0))
        elif family == "diffusion":
            params = DiffusionParams(
                decay=rng.uniform(0.3, 2.0, 2),
                diffusivity=rng.uniform(0.05, 0.4, 2),
                sens=np.ones((2, 1)),
                time_lengthscale=rng.uniform(0.3, 1.5, 1),
                space_lengthscale=rng.uniform(0.08, 0.4, 1),
                domain_length=1.0,
                n_terms=n_terms,
            )
            point = (
                (rng.uniform(0.15, 0.85), rng.uniform(0.3, 1.5)),
                (rng.uniform(0.15, 0.85), rng.uniform(0.3, 1.5)),
            )
        elif family == "heat":
            params = HeatParams(
                smooth_var=rng.uniform(0.1, 2.0, (2, 2)),
                latent_var=rng.uniform(0.1, 2.0, (1, 2)),
                sens=np.ones((2, 1)),
            )
            point = (rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2))
        else:
            raise ConfigError(f"oracle-check does not cover family '{family}'")
        draws.append((params, point))
    return draws


def oracle_check_points(family, n_points, tolerance, seed, corrupt=False,
                        n_terms=30):
    """Closed form vs quadrature on seeded draws; returns result rows.

    Each row: (index, closed_value, oracle_value, rel_err, ok).  Relative
    error uses max(|oracle|, 1e-9) to keep near-zero values meaningful.
    """
    import numpy as np

    from . import oracle as orc
    from .kernels import (
        diffusion_cross_output_cov,
        first_order_cross_output_cov,
        heat_cross_output_cov,
        second_order_cross_output_cov,
    )

    rows = []
    for i, (params, point) in enumerate(_oracle_draws(family, n_points, seed,
                                                      n_terms)):
        eval_params = params
        if corrupt:
            # test fixture: corrupt the closed-form side only
            vec = params.log_vector()
            vec[0] += np.log(1.5)
            eval_params = params.with_log_vector(vec)
        if family == "ode1":
            t, tp = point
            closed = first_order_cross_output_cov(t, tp, 0, 1, 0, eval_params)
            res = orc.kernel_by_quadrature(
                orc.first_order_greens(params.decay[0]),
                orc.first_order_greens(params.decay[1]),
                orc.se_force_cov(params.lengthscale[0]), t, tp,
            )
        elif family in ("ode2", "ode2-overdamped"):
            t, tp = point
            closed = second_order_cross_output_cov(t, tp, 0, 1, 0, eval_params)
            res = orc.kernel_by_quadrature(
                orc.second_order_greens(params.spring[0], params.damper[0]),
                orc.second_order_greens(params.spring[1], params.damper[1]),
                orc.se_force_cov(params.lengthscale[0]), t, tp,
            )
        elif family == "diffusion":
            (x, t), (xp, tp) = point
            closed = diffusion_cross_output_cov(x, t, xp, tp, 0, 1, 0,
                                                eval_params)
            res = orc.diffusion_cov_by_quadrature(
                params, 0, 1, 0, (x, t), (xp, tp)
            )
        elif family == "heat":
            x, xp = point
            closed = heat_cross_output_cov(x, xp, 0, 1, 0, eval_params)
            res = orc.heat_cov_by_quadrature(params, 0, 1, 0, x, xp)
        rel = abs(closed - res.value) / max(abs(res.value), 1e-9)
        rows.append((i, closed, res.value, rel, rel <= tolerance))
    return rows


_DEFAULT_TOL = {
    "ode1": 1e-6,
    "ode2": 1e-5,
    "ode2-overdamped": 1e-5,
    "diffusion": 1e-3,
    "heat": 1e-6,
}


def cmd_oracle_check(args):
    family = args.family
    tolerance = args.tolerance
    if tolerance is None:
        if family not in _DEFAULT_TOL:
            raise ConfigError(
                f"oracle-check family must be one of {sorted(_DEFAULT_TOL)}"
            )
        tolerance = _DEFAULT_TOL[family]
    if family not in _DEFAULT_TOL:
        raise ConfigError(
            f"oracle-check family must be one of {sorted(_DEFAULT_TOL)}"
        )

    try:
        rows = oracle_check_points(
            family, args.points, tolerance, args.seed or 0,
            corrupt=args.corrupt,
        )
    except QuadratureBudgetError as exc:
        print(f"oracle-check: BUDGET EXHAUSTED: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    n_bad = sum(1 for r in rows if not r[4])
    print(f"# oracle-check family={family} tolerance={tolerance:g} "
          f"points={len(rows)} seed={args.seed or 0}")
    print(f"{'idx':>4} {'closed':>18} {'oracle':>18} {'rel_err':>12} status")
    for i, closed, oval, rel, ok in rows:
        if ok and not args.verbose:
            continue
        print(f"{i:>4} {closed:>18.10g} {oval:>18.10g} {rel:>12.3e} "
              f"{'ok' if ok else 'FAIL'}")
    if args.golden_out:
        lines = [
            f"{family} point={i} oracle={oval!r} tolerance={tolerance:g}"
            for i, _, oval, _, _ in rows
        ]
        Path(args.golden_out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.golden_out).write_text("\n".join(lines) + "\n",
                                         encoding="utf-8")
        print(f"golden values written to {args.golden_out}")
    if n_bad:
        print(f"oracle-check: {n_bad}/{len(rows)} points exceeded tolerance",
              file=sys.stderr)
        return EXIT_RUNTIME
    print(f"oracle-check: all {len(rows)} points within {tolerance:g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lfmgp",
        description="Multi-output GPs with ODE/PDE-derived covariances",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="pin BLAS thread pools (set before heavy imports)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="key=value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--allow-large", action="store_true",
                       help="lift the dense-inference size guard")

    p_fit = sub.add_parser("fit", help="maximize the marginal likelihood")
    common(p_fit)
    p_pred = sub.add_parser("predict", help="predictive means/variances")
    common(p_pred)
    p_val = sub.add_parser("validate", help="repeated split protocols with metrics")
    common(p_val)
    p_post = sub.add_parser("posterior", help="latent-force posterior on a grid")
    common(p_post)
    p_snr = sub.add_parser("snr-report", help="per-output signal-to-noise filter")
    common(p_snr)
    p_syn = sub.add_parser("make-synthetic", help="simulate a forced system")
    common(p_syn)

    p_orc = sub.add_parser("oracle-check",
                           help="closed forms vs quadrature oracles")
    p_orc.add_argument("--family", required=True)
    p_orc.add_argument("--tolerance", type=float, default=None)
    p_orc.add_argument("--points", type=int, default=10)
    p_orc.add_argument("--seed", type=int, default=None)
    p_orc.add_argument("--verbose", action="store_true")
    p_orc.add_argument("--corrupt", action="store_true",
                       help=argparse.SUPPRESS)  # negative-test fixture
    p_orc.add_argument("--regenerate-golden", dest="golden_out", default=None,
                       help="write oracle values to a golden file")
    return parser


_HANDLERS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "validate": cmd_validate,
    "posterior": cmd_posterior,
    "snr-report": cmd_snr_report,
    "make-synthetic": cmd_make_synthetic,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, LfmgpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
