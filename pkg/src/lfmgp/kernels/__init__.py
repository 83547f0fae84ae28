"""Closed-form covariance families with analytic hyperparameter gradients.

Families (registry tags):

* ``se``        independent SE GP per output (baseline, no latent forces)
* ``mtgp``      shared-latent coregionalization baseline
* ``slfm``      per-force-length-scale coregionalization baseline
* ``ode1``      first-order ODE response (exponential decay smoothing)
* ``ode2``      second-order ODE response (damped oscillator smoothing)
* ``diffusion`` bounded-interval driven diffusion, space-time inputs
* ``heat``      free-space Gaussian-smoothing kernel, p-dim inputs
"""

from .base import KernelFamily
from .coreg import MultiTaskParams, SemiparametricParams, mtgp_cov
from .diffusion import (
    DiffusionParams,
    diffusion_cross_latent_cov,
    diffusion_cross_output_cov,
    series_coeff_cc,
    series_coeff_cu,
)
from .heat import HeatParams, heat_cross_latent_cov, heat_cross_output_cov
from .ode import (
    FirstOrderParams,
    SecondOrderParams,
    first_order_cross_latent_cov,
    first_order_cross_output_cov,
    response_upsilon,
    second_order_cross_latent_cov,
    second_order_cross_output_cov,
)
from .se import IndependentSEParams, se_cov

FAMILIES = {
    cls.tag: cls
    for cls in (
        IndependentSEParams,
        MultiTaskParams,
        SemiparametricParams,
        FirstOrderParams,
        SecondOrderParams,
        DiffusionParams,
        HeatParams,
    )
}

__all__ = [
    "KernelFamily",
    "FAMILIES",
    "IndependentSEParams",
    "MultiTaskParams",
    "SemiparametricParams",
    "FirstOrderParams",
    "SecondOrderParams",
    "DiffusionParams",
    "HeatParams",
    "se_cov",
    "mtgp_cov",
    "response_upsilon",
    "first_order_cross_output_cov",
    "first_order_cross_latent_cov",
    "second_order_cross_output_cov",
    "second_order_cross_latent_cov",
    "diffusion_cross_output_cov",
    "diffusion_cross_latent_cov",
    "series_coeff_cc",
    "series_coeff_cu",
    "heat_cross_output_cov",
    "heat_cross_latent_cov",
]
