"""Numerical checks of intrinsic hypercontractivity bounds for 1-D Schrödinger operators."""

from hypercon.constants import LsiParams
from hypercon.errors import (
    ConditionFailed,
    ConfigError,
    DomainError,
    HyperconError,
    TailDivergence,
)
from hypercon.grid import Grid, solve

__version__ = "0.1.0"

__all__ = [
    "ConditionFailed",
    "ConfigError",
    "DomainError",
    "Grid",
    "HyperconError",
    "LsiParams",
    "TailDivergence",
    "solve",
]
