"""Finite-element verification of the single bound state of a hard-wall pair on the half-line."""
from .geometry import (
    BoundaryTag,
    DomainKind,
    DomainSpec,
    GeometryError,
    Mesh,
    PairParameters,
    make_domain,
    reflect_or_translate_nodes,
    triangulate,
)

__version__ = "0.1.0"
