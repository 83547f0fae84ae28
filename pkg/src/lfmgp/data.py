"""File ingestion, output-selection preprocessing, synthetic data generation.

The columnar format is delimiter-separated text with a one-line header.
Rows may leave cells empty (or carry a missing marker); each output keeps
only the rows where it and all input columns are present, which yields the
heterotopic per-output series the rest of the library works with.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import gp, oracle
from .dataset import MultiOutputDataset, OutputSeries
from .errors import DataError

__all__ = [
    "ColumnSchema",
    "load_columnar",
    "write_columnar",
    "load_mocap_angles",
    "SnrReport",
    "snr_filter",
    "SyntheticTruth",
    "make_synthetic",
]

_DEFAULT_MISSING = ("", "NA", "NaN", "nan", "?")


@dataclass(frozen=True)
class ColumnSchema:
    """Maps header names to roles; unlisted columns are ignored."""

    inputs: tuple
    outputs: tuple
    missing: tuple = _DEFAULT_MISSING

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if not self.inputs or not self.outputs:
            raise DataError("schema needs at least one input and one output column")


def _split_line(line, delimiter):
    if delimiter is None:
        return [c.strip() for c in line.replace(",", " ").split()]
    return [c.strip() for c in line.split(delimiter)]


def load_columnar(path, schema: ColumnSchema, delimiter=None) -> MultiOutputDataset:
    """Parse a headed columnar file into a heterotopic dataset."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DataError(f"{path}: empty file")
    header = _split_line(lines[0], delimiter)
    try:
        in_idx = [header.index(c) for c in schema.inputs]
        out_idx = [header.index(c) for c in schema.outputs]
    except ValueError as exc:
        raise DataError(f"{path}: schema column not in header {header}: {exc}") from exc

    per_output = {name: ([], []) for name in schema.outputs}
    for row_no, line in enumerate(lines[1:], start=2):
        cells = _split_line(line, delimiter)
        if len(cells) < len(header):
            cells = cells + [""] * (len(header) - len(cells))

        def cell_value(col, row_no=row_no, cells=cells):
            raw = cells[col]
            if raw in schema.missing:
                return None
            try:
                return float(raw)
            except ValueError:
                raise DataError(
                    f"{path}: row {row_no}, column '{header[col]}': "
                    f"malformed numeric value {raw!r}"
                ) from None

        xs = [cell_value(c) for c in in_idx]
        if any(v is None for v in xs):
            continue
        for name, col in zip(schema.outputs, out_idx):
            val = cell_value(col)
            if val is None:
                continue
            per_output[name][0].append(xs)
            per_output[name][1].append(val)

    outputs = []
    for name in schema.outputs:
        xs, ys = per_output[name]
        outputs.append(
            OutputSeries(
                name,
                np.array(xs, dtype=float).reshape(len(ys), len(in_idx)),
                np.array(ys, dtype=float),
            )
        )
    ds = MultiOutputDataset(tuple(outputs))
    if ds.total_points == 0:
        raise DataError(f"{path}: no usable rows after applying the schema")
    return ds


def write_columnar(path, header, columns, delimiter=" "):
    """Write aligned numeric columns under a one-line header."""
    columns = [np.asarray(c) for c in columns]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(delimiter.join(header) + "\n")
        for row in zip(*columns):
            fh.write(delimiter.join(repr(float(v)) for v in row) + "\n")


def load_mocap_angles(path, downsample: int = 4, frame_window=None,
                      frame_dt: float = 1.0, delimiter=None) -> MultiOutputDataset:
    """Angle-per-column importer for motion-capture exports.

    Rows are frames; the time axis is the frame index times ``frame_dt``
    after optional windowing (``frame_window=(first, last)`` inclusive) and
    downsampling.
    """
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DataError(f"{path}: empty file")
    header = _split_line(lines[0], delimiter)
    try:
        [float(v) for v in header]
        names = [f"angle{i}" for i in range(len(header))]
        data_lines = lines
    except ValueError:
        names = header
        data_lines = lines[1:]
    rows = []
    for row_no, line in enumerate(data_lines, start=1):
        cells = _split_line(line, delimiter)
        try:
            rows.append([float(v) for v in cells])
        except ValueError as exc:
            raise DataError(f"{path}: frame row {row_no}: {exc}") from None
    arr = np.array(rows, dtype=float)
    if frame_window is not None:
        first, last = frame_window
        arr = arr[first : last + 1]
    arr = arr[:: max(1, int(downsample))]
    t = (np.arange(arr.shape[0]) * downsample * frame_dt)[:, None]
    outputs = tuple(
        OutputSeries(names[j], t, arr[:, j]) for j in range(arr.shape[1])
    )
    return MultiOutputDataset(outputs)


# ---------------------------------------------------------------------------
# signal-to-noise output selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SnrReport:
    names: tuple
    snr_db: tuple  # float or None where the per-output fit failed
    retained: tuple
    threshold_db: float

    def lines(self):
        out = []
        for name, snr, keep in zip(self.names, self.snr_db, self.retained):
            snr_txt = "unknown" if snr is None else f"{snr:8.2f} dB"
            out.append(f"{name:>16}  {snr_txt}  {'kept' if keep else 'dropped'}")
        return out


def snr_filter(dataset: MultiOutputDataset, threshold_db: float = 20.0,
               seed: int = 0):
    """Keep outputs whose fitted signal-to-noise ratio clears the threshold.

    Each output gets an independent GP with SE-plus-white-noise covariance;
    SNR = 10 log10(signal_var / noise_var).  Outputs whose fit fails are
    retained with SNR marked unknown.
    """
    if any(o.n < 10 for o in dataset.outputs):
        raise ValueError("snr_filter needs at least 10 points per output")
    names = []
    snrs = []
    retained = []
    kept_series = []
    for d, series in enumerate(dataset.outputs):
        sub = MultiOutputDataset((series,))
        try:
            res = gp.fit(
                sub, "se", n_forces=0,
                config=gp.FitConfig(restarts=3, max_iters=150, seed=seed + d),
            )
            snr = float(
                10.0
                * np.log10(res.model.kernel.signal_var[0] / res.model.noise_var[0])
            )
            keep = snr > threshold_db
        except Exception as exc:  # noqa: BLE001 - fit failure is a data condition
            warnings.warn(
                f"SNR fit failed for output '{series.name}': {exc}; retaining it",
                stacklevel=2,
            )
            snr = None
            keep = True
        names.append(series.name)
        snrs.append(snr)
        retained.append(keep)
        if keep:
            kept_series.append(series)
    if not kept_series:
        raise DataError("snr_filter dropped every output")
    report = SnrReport(tuple(names), tuple(snrs), tuple(retained), threshold_db)
    return MultiOutputDataset(tuple(kept_series), dict(dataset.units)), report


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticTruth:
    grid: np.ndarray  # (n_grid,)
    forces: np.ndarray  # (Q, n_grid)
    clean: np.ndarray  # (D, n_grid)
    noise_std: np.ndarray  # (D,)
    params: object = field(repr=False, default=None)


def make_synthetic(params, n_per_output: int, t_max: float, seed: int = 0,
                   noise_std=None, snr_db=None, forces=None,
                   grid_size=None) -> tuple[MultiOutputDataset, SyntheticTruth]:
    """Simulate a forced first- or second-order system into a dataset.

    Forces default to fresh SE-GP draws matching the kernel length-scales.
    Noise is either explicit (``noise_std``) or derived from a target
    signal-to-noise ratio in dB (``snr_db``) using the realized per-output
    signal variance.  Observation times are a random grid subset per
    output, making the dataset heterotopic.
    """
    rng = np.random.default_rng(seed)
    min_ell = float(np.min(params.lengthscale))
    if grid_size is None:
        grid_size = max(int(np.ceil(t_max / (min_ell / 20.0))) + 1, 120)
    grid = np.linspace(0.0, t_max, grid_size)
    if forces is None:
        forces = oracle.sample_se_forces(grid, params.lengthscale, rng)
    forces = np.atleast_2d(np.asarray(forces, dtype=float))

    zero_noise = np.zeros(params.n_outputs)
    _, clean = oracle.simulate_forced_system(params, grid, forces, zero_noise, rng)
    if snr_db is not None:
        signal_var = clean.var(axis=1)
        noise_std = np.sqrt(signal_var / 10.0 ** (snr_db / 10.0))
    elif noise_std is None:
        noise_std = np.full(params.n_outputs, 1e-3)
    noise_std = np.broadcast_to(np.asarray(noise_std, dtype=float),
                                (params.n_outputs,)).copy()

    outputs = []
    for d in range(params.n_outputs):
        idx = np.sort(rng.choice(grid_size, size=min(n_per_output, grid_size),
                                 replace=False))
        y = clean[d, idx] + noise_std[d] * rng.standard_normal(idx.size)
        outputs.append(OutputSeries(f"out{d}", grid[idx][:, None], y))
    ds = MultiOutputDataset(tuple(outputs))
    truth = SyntheticTruth(grid=grid, forces=forces, clean=clean,
                           noise_std=noise_std, params=params)
    return ds, truth
