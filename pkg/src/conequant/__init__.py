"""Classical and quantum motion on a double cone: symmetry certification,
first integrals and Schrodinger spectra."""

__version__ = "0.1.0"

from .conemodel import (
    ExactSolutionParams,
    Model,
    ModelParams,
    State,
    integrate,
    noether_integrals,
)
from .spectrum import PdeVariant, Variant, solve_bound_states
from .symmetry import builtin_generators, determining_residual, generator

__all__ = [
    "ExactSolutionParams",
    "Model",
    "ModelParams",
    "State",
    "integrate",
    "noether_integrals",
    "PdeVariant",
    "Variant",
    "solve_bound_states",
    "builtin_generators",
    "determining_residual",
    "generator",
]
