"""nlslab: a desk-scale spectral laboratory for the nonlinear Schrodinger
equation with combined power and Hartree nonlinearities,

    i u_t + Lap u = lam1 |u|^p u + lam2 (|x|^-gamma * |u|^2) u,

on a periodic box. Provides split-step evolution, ground states with sharp
interpolation constants, conservation/virial/blow-up/scattering diagnostics,
and a rule-based regime classifier, all driven by a small CLI.
"""

from .errors import (
    BoundaryContamination,
    DegenerateInput,
    InsufficientSamples,
    InvalidConfig,
    InvalidExponent,
    InvalidGrid,
    MissingConstants,
    NlsLabError,
    NoConvergence,
    NonFinite,
)
from .grid import ComplexField, GridSpec, RealField, make_grid
from .dynamics import EquationParams, EvolutionConfig, EvolveResult, evolve
from .ground_state import GroundState, SharpConstants, flow_ground_state, shoot_R, sharp_constants

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "NlsLabError",
    "InvalidGrid",
    "InvalidExponent",
    "InvalidConfig",
    "NonFinite",
    "NoConvergence",
    "BoundaryContamination",
    "DegenerateInput",
    "MissingConstants",
    "InsufficientSamples",
    "GridSpec",
    "ComplexField",
    "RealField",
    "make_grid",
    "EquationParams",
    "EvolutionConfig",
    "EvolveResult",
    "evolve",
    "GroundState",
    "SharpConstants",
    "shoot_R",
    "flow_ground_state",
    "sharp_constants",
]
