"""Multi-output dataset container and target normalization.

Outputs are heterotopic: each output carries its own input set.  Inputs
are (N_d, p) arrays with a shared dimension p across outputs; Gram
assembly stacks outputs in output-major order, matching column-stacked
vectorization of the target matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .kernels.base import as_points

__all__ = ["OutputSeries", "MultiOutputDataset", "NormalizationState", "standardize"]


@dataclass(frozen=True)
class OutputSeries:
    name: str
    X: np.ndarray  # (N, p)
    y: np.ndarray  # (N,)

    def __post_init__(self):
        X = as_points(self.X)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[0] != y.size:
            raise ValueError(
                f"output '{self.name}': {X.shape[0]} inputs vs {y.size} targets"
            )
        if y.size and not np.all(np.isfinite(y)):
            raise ValueError(f"output '{self.name}' has non-finite targets")
        if not np.all(np.isfinite(X)):
            raise ValueError(f"output '{self.name}' has non-finite inputs")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.y.size


@dataclass(frozen=True)
class MultiOutputDataset:
    outputs: tuple[OutputSeries, ...]
    units: dict = field(default_factory=dict)

    def __post_init__(self):
        outputs = tuple(self.outputs)
        if not outputs:
            raise ValueError("dataset needs at least one output")
        dims = {o.X.shape[1] for o in outputs}
        if len(dims) != 1:
            raise ValueError(f"outputs disagree on input dimension: {dims}")
        object.__setattr__(self, "outputs", outputs)

    @property
    def n_outputs(self):
        return len(self.outputs)

    @property
    def input_dim(self):
        return self.outputs[0].X.shape[1]

    @property
    def counts(self):
        return np.array([o.n for o in self.outputs])

    @property
    def total_points(self):
        return int(self.counts.sum())

    @property
    def names(self):
        return [o.name for o in self.outputs]

    def inputs(self):
        return [o.X for o in self.outputs]

    def stacked_targets(self):
        return np.concatenate([o.y for o in self.outputs]) if self.total_points else np.empty(0)

    def slices(self):
        """Output-major index slices into the stacked target vector."""
        out = []
        start = 0
        for o in self.outputs:
            out.append(slice(start, start + o.n))
            start += o.n
        return out

    def input_range(self):
        """(p, 2) array of [min, max] over all outputs' inputs."""
        allx = np.vstack([o.X for o in self.outputs if o.n])
        return np.column_stack([allx.min(axis=0), allx.max(axis=0)])

    def subset(self, index_lists):
        """New dataset keeping the given indices per output (empty allowed)."""
        outs = []
        for o, idx in zip(self.outputs, index_lists):
            idx = np.asarray(idx, dtype=int)
            outs.append(OutputSeries(o.name, o.X[idx].reshape(len(idx), -1)
                                     if len(idx) else o.X[:0], o.y[idx]))
        return MultiOutputDataset(tuple(outs), dict(self.units))

    def with_targets(self, targets_per_output):
        outs = [
            OutputSeries(o.name, o.X, y)
            for o, y in zip(self.outputs, targets_per_output)
        ]
        return MultiOutputDataset(tuple(outs), dict(self.units))


@dataclass(frozen=True)
class NormalizationState:
    mean: np.ndarray  # (D,)
    std: np.ndarray  # (D,)

    def apply(self, dataset: MultiOutputDataset) -> MultiOutputDataset:
        return dataset.with_targets(
            [(o.y - m) / s for o, m, s in zip(dataset.outputs, self.mean, self.std)]
        )

    def invert(self, dataset: MultiOutputDataset) -> MultiOutputDataset:
        return dataset.with_targets(
            [o.y * s + m for o, m, s in zip(dataset.outputs, self.mean, self.std)]
        )

    def invert_mean(self, d, values):
        return np.asarray(values) * self.std[d] + self.mean[d]

    def invert_var(self, d, values):
        return np.asarray(values) * self.std[d] ** 2


def standardize(dataset: MultiOutputDataset):
    """Zero-mean unit-variance targets per output; returns (dataset, state).

    Raises on constant outputs (undefined scale).
    """
    means = np.array([o.y.mean() for o in dataset.outputs])
    stds = np.array([o.y.std(ddof=0) for o in dataset.outputs])
    bad = [o.name for o, s in zip(dataset.outputs, stds) if not s > 0.0]
    if bad:
        raise ValueError(f"constant outputs cannot be standardized: {bad}")
    state = NormalizationState(means, stds)
    return state.apply(dataset), state
