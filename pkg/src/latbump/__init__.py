"""Lattice-indexed bilinear multipliers, the trilinear B-norm and bump tooling."""

from .bumps import BumpSpec
from .errors import (ConfigError, DimensionMismatch, GridError, LatbumpError,
                     NumericalError, PreconditionError)
from .grid import GridBox, SampledField
from .lattice import LatticeMatrix
from .trilinear import TrilinearEstimate, bnorm_ascent, bnorm_oracle, bnorm_upper, trilinear_value

__all__ = [
    "BumpSpec", "ConfigError", "DimensionMismatch", "GridBox", "GridError", "LatbumpError",
    "LatticeMatrix", "NumericalError", "PreconditionError", "SampledField",
    "TrilinearEstimate", "bnorm_ascent", "bnorm_oracle", "bnorm_upper", "trilinear_value",
]
__version__ = "0.1.0"
