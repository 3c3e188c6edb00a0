"""Stability certificates for ODE equilibria from conserved quantities."""
from .fields import EquilibriumPoint, PolyScalarField, PolyVectorField, lie_derivative, validate_conservation
from .methods import (
    AnalysisProblem,
    Method,
    Outcome,
    arnold_check,
    energy_casimir_check,
    equivalence_harness,
    ortega_ratiu_check,
)
from .numkit import Definiteness, SubspaceBasis, SymmetricMatrix

__version__ = "0.1.0"

__all__ = [
    "AnalysisProblem",
    "Definiteness",
    "EquilibriumPoint",
    "Method",
    "Outcome",
    "PolyScalarField",
    "PolyVectorField",
    "SubspaceBasis",
    "SymmetricMatrix",
    "arnold_check",
    "energy_casimir_check",
    "equivalence_harness",
    "lie_derivative",
    "ortega_ratiu_check",
    "validate_conservation",
]
