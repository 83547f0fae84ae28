"""Shared machinery for kernel families.

Every family exposes a uniform block interface so Gram assembly is
family-agnostic:

* ``kff_block(d, dp, Xd, Xdp)``      output-output covariance block
* ``kff_block_grads(d, dp, Xd, Xdp)``  block plus partials w.r.t. the packed
  (log-transformed) hyperparameter vector, keyed by label
* ``kfu_block(d, q, Xd, Xu)``        output-latent cross block
* ``kuu_block(q, Xu, Xup)``          latent-latent block

Positive hyperparameters are packed in log space; sensitivities are packed
raw.  ``labels()`` names the packed entries in order, and all gradient
dictionaries use those labels.
"""

from __future__ import annotations

import numpy as np

from ..errors import UnsupportedFamilyError


def as_points(X, dim=None):
    """Coerce to a 2-D (N, p) float array; 1-D input becomes (N, 1)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"input points must be (N, p), got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"expected {dim}-dimensional inputs, got {X.shape[1]}")
    return X


def labels_1d(name, n):
    return [f"{name}[{i}]" for i in range(n)]


def labels_2d(name, n, m):
    return [f"{name}[{i},{j}]" for i in range(n) for j in range(m)]


def require_positive(name, arr):
    arr = np.asarray(arr, dtype=float)
    if arr.size == 0 or not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError(f"{name} must be finite and strictly positive")
    return arr


def require_finite(name, arr):
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


class KernelFamily:
    """Base class; concrete families fill in the block computations."""

    tag = "?"
    supports_latent = True

    # -- packing ----------------------------------------------------------

    def labels(self):
        raise NotImplementedError

    def log_vector(self):
        raise NotImplementedError

    def with_log_vector(self, vec):
        raise NotImplementedError

    # -- structure --------------------------------------------------------

    @property
    def n_outputs(self):
        raise NotImplementedError

    @property
    def n_forces(self):
        raise NotImplementedError

    def validate_inputs(self, X):
        """Hook for families with constrained input domains."""

    # -- blocks -----------------------------------------------------------

    def kff_block(self, d, dp, Xd, Xdp):
        raise NotImplementedError

    def kff_block_grads(self, d, dp, Xd, Xdp):
        raise NotImplementedError

    def kfu_block(self, d, q, Xd, Xu):
        raise UnsupportedFamilyError(
            f"family '{self.tag}' has no output-latent cross-covariance"
        )

    def kuu_block(self, q, Xu, Xup):
        raise UnsupportedFamilyError(
            f"family '{self.tag}' has no latent-force covariance"
        )


def sens_weighted_sum(S, d, dp, base_blocks):
    """K_{d,dp} = sum_q S[d,q] S[dp,q] C_q for per-force base blocks."""
    acc = None
    for q, Cq in enumerate(base_blocks):
        term = S[d, q] * S[dp, q] * Cq
        acc = term if acc is None else acc + term
    return acc


def sens_weighted_sum_grads(S, d, dp, base_blocks, base_grads):
    """Assemble the sensitivity-weighted sum and its packed-gradient dict.

    ``base_grads``: per force q, a dict label -> d(C_q)/d(label) already in
    packed (log) coordinates.  Sensitivity gradients are appended here since
    their structure is family-independent.
    """
    D, Q = S.shape
    K = sens_weighted_sum(S, d, dp, base_blocks)
    grads = {}
    for q, gdict in enumerate(base_grads):
        wq = S[d, q] * S[dp, q]
        for label, g in gdict.items():
            if label in grads:
                grads[label] = grads[label] + wq * g
            else:
                grads[label] = wq * g
    for q, Cq in enumerate(base_blocks):
        if d == dp:
            grads[f"sens[{d},{q}]"] = 2.0 * S[d, q] * Cq
        else:
            grads[f"sens[{d},{q}]"] = S[dp, q] * Cq
            grads[f"sens[{dp},{q}]"] = S[d, q] * Cq
    return K, grads
