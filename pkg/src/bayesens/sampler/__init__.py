"""Adaptive HMC over unconstrained space, constraint transforms and diagnostics."""
from .diagnostics import effective_sample_size, mcse_mean, mcse_quantile, split_rhat
from .hmc import (
    ConfigurationError,
    DrawsMatrix,
    InitializationError,
    SamplerConfig,
    SamplingError,
    hmc_sample,
)
from .transforms import Constraint, ConstraintSpec, constrain_scalar, to_constrained, to_unconstrained

__all__ = [
    "Constraint",
    "ConstraintSpec",
    "ConfigurationError",
    "DrawsMatrix",
    "InitializationError",
    "SamplerConfig",
    "SamplingError",
    "constrain_scalar",
    "effective_sample_size",
    "hmc_sample",
    "mcse_mean",
    "mcse_quantile",
    "split_rhat",
    "to_constrained",
    "to_unconstrained",
]
