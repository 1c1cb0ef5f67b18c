"""Numerical laboratory for connections on group bundles.

Parallel transport, holonomy, curvature, group-connection checks, cocycles,
gauge pushforwards and flat-connection monodromy, all in global charts.
"""

from holonomy_lab.errors import (
    BoundaryProximityError,
    ChartEscapeError,
    CompositionError,
    DomainError,
    GeometryError,
    HolonomyLabError,
    NotFlatError,
    PreconditionError,
    ScenarioError,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryProximityError",
    "ChartEscapeError",
    "CompositionError",
    "DomainError",
    "GeometryError",
    "HolonomyLabError",
    "NotFlatError",
    "PreconditionError",
    "ScenarioError",
]
