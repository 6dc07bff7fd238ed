"""Weighted Sobolev trace machinery and Steklov solvers on cuspidal domains."""

from . import errors
from .geometry import (
    BoundaryFace,
    CuspMap,
    DomainParams,
    ExponentSet,
    FaceChart,
    cusp_map,
    derived_exponents,
    validate_params,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "BoundaryFace",
    "CuspMap",
    "DomainParams",
    "ExponentSet",
    "FaceChart",
    "cusp_map",
    "derived_exponents",
    "validate_params",
    "__version__",
]
