"""Curvature from the bracket of horizontal lifts, and from small loop holonomy.

For coordinate fields ``X_i``, ``X_j`` (whose base bracket vanishes) the
curvature is half the vertical field ``[X_i~, X_j~]``:

    R_ij = 1/2 (d_i G_j - d_j G_i + (D_g G_j) G_i - (D_g G_i) G_j)

with ``G_k = gamma(x, g) e_k``. The loop side estimates ``[X_i~, X_j~](g)`` as the
derivative at 0 of ``eps -> hol(square of side sqrt(eps))(g)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from holonomy_lab.bundle import Connection
from holonomy_lab.errors import GeometryError
from holonomy_lab.numerics import FD_STEP, directional_derivative
from holonomy_lab.transport import DEFAULT_STEPS, PathSpec, holonomy, polyline

DEFAULT_EPS0 = 0.04


class FitQualityWarning(UserWarning):
    pass


def _unit(m: int, k: int) -> np.ndarray:
    e = np.zeros(m)
    e[k] = 1.0
    return e


def curvature(conn: Connection, x, i: int, j: int, g, h: float = FD_STEP) -> np.ndarray:
    """R(d_i, d_j) at ``(x, g)``; ``g`` may be batched."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    m = conn.base_dim
    if i == j:
        return np.zeros(np.broadcast_shapes(x.shape[:-1], g.shape[:-1]) + (conn.fiber_dim,))

    def col(k):
        return lambda xx, gg: conn.matrix(xx, gg)[..., :, k]

    Gi, Gj = col(i), col(j)
    gi, gj = Gi(x, g), Gj(x, g)
    di_Gj = directional_derivative(lambda xx: Gj(xx, g), x, _unit(m, i), h)
    dj_Gi = directional_derivative(lambda xx: Gi(xx, g), x, _unit(m, j), h)
    Dg_Gj = directional_derivative(lambda gg: Gj(x, gg), g, gi, h)
    Dg_Gi = directional_derivative(lambda gg: Gi(x, gg), g, gj, h)
    return 0.5 * (di_Gj - dj_Gi + Dg_Gj - Dg_Gi)


@dataclass(frozen=True, eq=False)
class CurvatureValue:
    """Curvature 2-form evaluated on ``(v1, v2)`` at ``x``: a vertical field on the fiber."""

    conn: Connection
    x: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def field(self, g) -> np.ndarray:
        m = self.conn.base_dim
        out = 0.0
        for i in range(m):
            for j in range(i + 1, m):
                w = self.v1[i] * self.v2[j] - self.v1[j] * self.v2[i]
                if w != 0.0:
                    out = out + w * curvature(self.conn, self.x, i, j, g)
        return out + 0.0 * np.asarray(g, dtype=float)

    __call__ = field


def curvature_form(conn: Connection, x, v1, v2) -> CurvatureValue:
    return CurvatureValue(conn, np.asarray(x, dtype=float), np.asarray(v1, dtype=float), np.asarray(v2, dtype=float))


def curvature_sup(conn: Connection, count: int = 50, seed: int = 0, points=None) -> float:
    """Max |R_ij| over seeded (x, g) samples and all coordinate pairs."""
    rng = np.random.default_rng(seed)
    xs = conn.bundle.base.sample(count, rng) if points is None else np.asarray(points)
    gs = conn.bundle.sample_fiber(len(xs), rng)
    m = conn.base_dim
    worst = 0.0
    for x, g in zip(xs, gs):
        for i in range(m):
            for j in range(i + 1, m):
                worst = max(worst, float(np.max(np.abs(curvature(conn, x, i, j, g)))))
    return worst


def commutator_loop(x, i: int, j: int, eps: float, base=None, edge_samples: int = 65) -> PathSpec:
    """Square loop x -> +d e_i -> +d e_j -> -d e_i -> -d e_j with d = sqrt(eps)."""
    if eps <= 0:
        raise GeometryError("eps must be positive")
    if i == j:
        raise GeometryError("commutator loop needs two distinct directions")
    x = np.asarray(x, dtype=float)
    d = np.sqrt(eps)
    ei, ej = _unit(x.size, i) * d, _unit(x.size, j) * d
    loop = polyline([x, x + ei, x + ei + ej, x + ej], closed=True, name=f"commutator(eps={eps:g},{i},{j})")
    if base is not None:
        t = np.linspace(0.0, 1.0, 4 * edge_samples + 1)
        pts = loop(t)
        if not np.all(base.contains(pts)):
            raise GeometryError(f"commutator loop of side {d:.3g} at {x.tolist()} leaves the base domain")
    return loop


def _extrapolate_to_zero(s: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Value at 0 of the interpolating polynomial through (s_k, q_k)."""
    est = 0.0
    for k in range(len(s)):
        w = 1.0
        for l in range(len(s)):
            if l != k:
                w *= (0.0 - s[l]) / (s[k] - s[l])
        est = est + w * q[k]
    return est


@dataclass(frozen=True)
class SlopeEstimate:
    estimate: np.ndarray
    residual: float
    eps: tuple
    quotients: np.ndarray
    well_behaved: bool = True
    notes: list = field(default_factory=list)


def default_eps_list(eps0: float = DEFAULT_EPS0) -> list:
    return [eps0 * f for f in (1.0, 0.5, 0.25, 0.125)]


def ambrose_singer_slope(conn: Connection, x, i: int, j: int, g, eps_list=None, steps: int = DEFAULT_STEPS) -> SlopeEstimate:
    """Derivative at eps = 0 of hol(commutator_loop(eps))(g).

    The difference quotients expand in powers of sqrt(eps), so the extrapolation
    fits a polynomial in sqrt(eps) through all of them. ``residual`` is the gap
    between that fit and the one that drops the largest eps.
    """
    eps = sorted((float(e) for e in (eps_list or default_eps_list())), reverse=True)
    g = np.asarray(g, dtype=float)
    quotients = []
    for e in eps:
        loop = commutator_loop(x, i, j, e, base=conn.bundle.base)
        quotients.append((holonomy(conn, loop, steps).transport(g) - g) / e)
    q = np.array(quotients)
    s = np.sqrt(np.array(eps))
    est = _extrapolate_to_zero(s, q)
    if len(eps) > 2:
        residual = float(np.max(np.abs(est - _extrapolate_to_zero(s[1:], q[1:]))))
    else:
        residual = float(np.max(np.abs(q[-1] - q[0])))
    gaps = [float(np.max(np.abs(qk - est))) for qk in q]
    monotone = all(b <= a + 1e-10 for a, b in zip(gaps, gaps[1:]))
    notes = []
    if not monotone:
        notes.append("difference quotients do not approach the extrapolated value monotonically")
        warnings.warn(notes[-1], FitQualityWarning, stacklevel=2)
    return SlopeEstimate(np.asarray(est), residual, tuple(eps), q, monotone, notes)


def slope_report_row(conn: Connection, x, i: int, j: int, g, eps_list=None, steps: int = DEFAULT_STEPS) -> dict:
    bracket = 2.0 * curvature(conn, x, i, j, g)
    fit = ambrose_singer_slope(conn, x, i, j, g, eps_list, steps)
    return {
        "x": np.asarray(x, dtype=float).tolist(),
        "i": int(i),
        "j": int(j),
        "g": np.asarray(g, dtype=float).tolist(),
        "bracket_value": bracket.tolist(),
        "loop_estimate": fit.estimate.tolist(),
        "abs_error": float(np.max(np.abs(bracket - fit.estimate))),
        "fit_residual": fit.residual,
        "fit_well_behaved": fit.well_behaved,
    }

