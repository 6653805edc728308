"""Correlated projection superoperators and generalized Lindblad dynamics."""

from .evolution import ComponentState, Trajectory, evolve_expm, evolve_rk, reduced_density
from .generator import ExtendedLindblad, GeneralizedLindblad, embed, rhs
from .operators import DimPair
from .projection import CorrelatedProjection, ValidationReport, validate
from .twoband import Rates, TwoBandModel

__all__ = [
    "ComponentState",
    "CorrelatedProjection",
    "DimPair",
    "ExtendedLindblad",
    "GeneralizedLindblad",
    "Rates",
    "Trajectory",
    "TwoBandModel",
    "ValidationReport",
    "embed",
    "evolve_expm",
    "evolve_rk",
    "reduced_density",
    "rhs",
    "validate",
]
