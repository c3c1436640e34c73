"""Bayesian sensitivity analysis for causal effects.

Models for misclassified exposure, unmeasured confounding and outcomes
missing not at random, sampled with a built-in Hamiltonian Monte Carlo
engine and summarized through the g-formula.
"""
from .data import Dataset, Grid, NormalPrior, PointMass, SensitivityConfig, ValidationError
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Dataset",
    "Grid",
    "NormalPrior",
    "PointMass",
    "SensitivityConfig",
    "ValidationError",
    "__version__",
]
