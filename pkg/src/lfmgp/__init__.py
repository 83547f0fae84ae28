"""Multi-output Gaussian processes driven by latent forces.

Covariance functions derived from first-order ODEs, second-order ODEs and
diffusion PDEs, with exact inference, marginal-likelihood hyperparameter
learning, latent-force posteriors and brute-force quadrature oracles that
independently validate every closed form.
"""

__version__ = "0.1.0"

from . import data, dataset, errors, gp, kernels, oracle, specialfn
from .dataset import MultiOutputDataset, NormalizationState, OutputSeries, standardize

__all__ = [
    "data",
    "dataset",
    "errors",
    "gp",
    "kernels",
    "oracle",
    "specialfn",
    "MultiOutputDataset",
    "OutputSeries",
    "NormalizationState",
    "standardize",
    "__version__",
]
