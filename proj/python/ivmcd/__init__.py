"""Robust estimation and outlier detection for interval-valued data."""

from ._core import (
    DegenerateError,
    InputError,
    detect,
    farness_scores,
    fit,
    generate_scenario,
    mahalanobis_sq,
    medcouple,
    symbolic_cov,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateError",
    "InputError",
    "detect",
    "farness_scores",
    "fit",
    "generate_scenario",
    "mahalanobis_sq",
    "medcouple",
    "symbolic_cov",
]
