"""Exception hierarchy. Every error carries enough context for a report."""

from __future__ import annotations

import numpy as np


class HolonomyLabError(Exception):
    """Base class for all errors raised by the package."""

    kind = "error"

    def context(self) -> dict:
        return {"kind": self.kind, "message": str(self)}


class DomainError(HolonomyLabError, ValueError):
    kind = "domain"


class BoundaryProximityError(HolonomyLabError, ValueError):
    """A finite-difference stencil reached outside the chart interior."""

    kind = "boundary_proximity"


class CompositionError(HolonomyLabError, ValueError):
    kind = "composition"


class GeometryError(HolonomyLabError, ValueError):
    kind = "geometry"


class PreconditionError(HolonomyLabError, ValueError):
    kind = "precondition"


class NotFlatError(HolonomyLabError, ValueError):
    kind = "not_flat"


class ScenarioError(HolonomyLabError, ValueError):
    """Schema or name-resolution failure in a scenario file."""

    kind = "schema"

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path

    def context(self) -> dict:
        return {**super().context(), "path": self.path}


class ChartEscapeError(HolonomyLabError, ArithmeticError):
    """A lifted curve left the fiber chart (or base domain) at parameter ``t``."""

    kind = "escape"

    def __init__(self, t: float, point, where: str = "fiber chart"):
        self.t = float(t)
        self.point = np.asarray(point, dtype=float).tolist()
        self.where = where
        super().__init__(f"solution left the {where} at t*={self.t:.17g}, point={self.point}")

    def context(self) -> dict:
        return {**super().context(), "t_star": self.t, "point": self.point, "where": self.where}
