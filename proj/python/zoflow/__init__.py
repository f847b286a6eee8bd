"""Zero-order optimization through black-box flow samplers."""

from ._zoflow import (
    AssumptionViolated,
    ConfigError,
    DivergenceError,
    Flow,
    GaussianMixture,
    Trace,
    affine_bound_exact,
    bundled_mixture,
    ddim_delta,
    estimate_bound,
    flowopt_run,
    invert_fixed_point,
    invert_naive,
    jacobian_gd,
    run_config,
    stopgrad_equivalence_check,
)

__all__ = [
    "AssumptionViolated",
    "ConfigError",
    "DivergenceError",
    "Flow",
    "GaussianMixture",
    "Trace",
    "affine_bound_exact",
    "bundled_mixture",
    "ddim_delta",
    "estimate_bound",
    "flowopt_run",
    "invert_fixed_point",
    "invert_naive",
    "jacobian_gd",
    "run_config",
    "stopgrad_equivalence_check",
]
