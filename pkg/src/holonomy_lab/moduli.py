"""Flat group connections on an annulus and their monodromy.

The annulus ``r0 < |x| < r1`` has fundamental group Z, generated by the unit
circle through ``x0 = (1, 0)``. A representation is given by a group-morphism
vector field ``w`` on the fiber group; its time-1 flow is the image of the
generator, and ``gamma(x, g) v = w(g) dtheta(v) / 2 pi`` is the flat group
connection whose monodromy reproduces it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from holonomy_lab.bundle import Connection, GroupBundle
from holonomy_lab.curvature import curvature_sup
from holonomy_lab.errors import DomainError, NotFlatError, PreconditionError
from holonomy_lab.groupconn import CocycleForm, cocycle_check
from holonomy_lab.groups import LieGroupModel
from holonomy_lab.numerics import FD_STEP, sup_norm
from holonomy_lab.transport import DEFAULT_STEPS, PathSpec, _integrate, circle, ellipse, join, segment

X0 = (1.0, 0.0)
FLAT_TOL = 1e-6
HOMOTOPY_TOL = 1e-5


@dataclass(frozen=True)
class AnnulusBase:
    r0: float = 0.5
    r1: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.r0 < self.r1:
            raise DomainError(f"annulus needs 0 < r0 < r1, got r0={self.r0}, r1={self.r1}")

    @property
    def dim(self) -> int:
        return 2

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        return (r > self.r0) & (r < self.r1) & np.all(np.isfinite(x), axis=-1)

    def check(self, x, what="base point"):
        if not np.all(self.contains(x)):
            raise DomainError(f"{what} {np.asarray(x).tolist()} is outside the annulus ({self.r0}, {self.r1})")

    def sample(self, count: int, rng: np.random.Generator, shrink: float = 0.9) -> np.ndarray:
        mid, half = 0.5 * (self.r0 + self.r1), 0.5 * (self.r1 - self.r0) * shrink
        r = mid + half * rng.uniform(-1.0, 1.0, size=count)
        th = rng.uniform(0.0, 2 * np.pi, size=count)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)

    def circulation_error(self, samples: int = 4096) -> float:
        """|loop integral of dtheta over the CCW unit circle - 2 pi| (periodic trapezoid rule)."""
        th = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
        pts = np.stack([np.cos(th), np.sin(th)], axis=-1)
        vel = np.stack([-np.sin(th), np.cos(th)], axis=-1)
        total = np.sum(np.sum(angle_form(pts) * vel, axis=-1)) * (2 * np.pi / samples)
        return abs(total - 2 * np.pi)


def angle_form(x) -> np.ndarray:
    """Coefficients of dtheta = (-y dx + x dy) / (x^2 + y^2)."""
    x = np.asarray(x, dtype=float)
    r2 = x[..., 0] ** 2 + x[..., 1] ** 2
    return np.stack([-x[..., 1] / r2, x[..., 0] / r2], axis=-1)


# --- loops ------------------------------------------------------------------


def generator_loop(x0=X0) -> PathSpec:
    """CCW circle through ``x0`` around the origin."""
    x0 = np.asarray(x0, dtype=float)
    return circle((0.0, 0.0), float(np.hypot(*x0)), start_angle=float(np.arctan2(x0[1], x0[0])), name="unit_circle")


def homotopic_loops(x0=X0) -> dict:
    """Loops at ``x0 = (1, 0)`` freely homotopic to the generator, made based by a radial spoke."""
    x0 = np.asarray(x0, dtype=float)
    if np.max(np.abs(x0 - np.asarray(X0))) > 0:
        raise PreconditionError("homotopic loop family is defined for base point (1, 0)")
    out = {"unit_circle": generator_loop(x0)}
    far = np.array([1.5, 0.0])
    out["circle_r1.5"] = join(segment(x0, far), circle((0.0, 0.0), 1.5), segment(far, x0), name="circle_r1.5")
    tip = np.array([1.2, 0.0])
    out["ellipse_1.2x0.8"] = join(segment(x0, tip), ellipse((0.0, 0.0), 1.2, 0.8), segment(tip, x0), name="ellipse_1.2x0.8")
    return out


def contractible_loop(x0=X0) -> PathSpec:
    """Small CCW circle through ``x0`` that does not enclose the hole."""
    x0 = np.asarray(x0, dtype=float)
    return circle(x0 + np.array([0.3, 0.0]), 0.3, start_angle=np.pi, name="contractible")


# --- automorphisms ------------------------------------------------------------


@dataclass
class AutomorphismEstimate:
    """A fiber-group map sampled on a seeded grid, with its identity-differential.

    ``fn`` evaluates the map off the grid (used for conjugation).
    """

    group: LieGroupModel
    grid: np.ndarray
    values: np.ndarray
    dId: np.ndarray
    identity_error: float
    homomorphism_residual: float
    fn: Optional[Callable] = None
    name: str = "automorphism"
    extra: dict = field(default_factory=dict)

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.dId))

    def map(self, g) -> np.ndarray:
        if self.fn is None:
            raise PreconditionError(f"{self.name} is only known on its grid")
        return self.fn(np.asarray(g, dtype=float))

    def invariants_hold(self, tol: float = 1e-6) -> bool:
        return self.identity_error < 1e-8 and self.homomorphism_residual < tol and np.isfinite(self.condition_number)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "group": self.group.name,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "dId": self.dId.tolist(),
            "condition_number": self.condition_number,
            "identity_error": self.identity_error,
            "homomorphism_residual": self.homomorphism_residual,
            **self.extra,
        }


def automorphism_grid(G: LieGroupModel, count: int = 16, seed: int = 0) -> np.ndarray:
    """Identity, identity + each unit vector (when inside the chart), then seeded samples."""
    e = np.asarray(G.identity, dtype=float)
    pts = [e]
    for k in range(G.dim):
        u = e.copy()
        u[k] += 1.0
        if G.contains(u):
            pts.append(u)
    rng = np.random.default_rng(seed)
    return np.concatenate([np.array(pts), G.sample(count, rng)])


def _grid_points(G: LieGroupModel, count: int, seed: int, h: float = FD_STEP):
    grid = automorphism_grid(G, count, seed)
    rng = np.random.default_rng(seed + 1)
    left, right = G.sample(count, rng), G.sample(count, rng)
    e = np.asarray(G.identity, dtype=float)
    stencil = np.concatenate([e + h * np.eye(G.dim), e - h * np.eye(G.dim)])
    parts = [grid, left, right, G.mul(left, right), stencil]
    sizes = [len(p) for p in parts]
    return np.concatenate(parts), sizes, h


def _assemble(G, points, sizes, h, values, fn, name) -> AutomorphismEstimate:
    cuts = np.cumsum(sizes)[:-1]
    grid, left, right, prod, stencil = np.split(points, cuts)
    vg, vl, vr, vp, vs = np.split(values, cuts)
    n = G.dim
    dId = ((vs[:n] - vs[n:]) / (2 * h)).T
    return AutomorphismEstimate(
        group=G,
        grid=grid,
        values=vg,
        dId=dId,
        identity_error=sup_norm(vg[0] - G.identity),
        homomorphism_residual=sup_norm(vp - G.mul(vl, vr)),
        fn=fn,
        name=name,
    )


def estimate_automorphism(G: LieGroupModel, fn: Callable, count: int = 16, seed: int = 0, name="automorphism") -> AutomorphismEstimate:
    """Sample ``fn`` (batched) on the automorphism grid in a single call."""
    points, sizes, h = _grid_points(G, count, seed)
    return _assemble(G, points, sizes, h, np.asarray(fn(points), dtype=float), fn, name)


# --- representations ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RepresentationSpec:
    """Generator of Z acting through the time-1 flow of the morphism field ``w``.

    ``flow(g, t)`` is an optional closed form; otherwise the flow is integrated
    with RK4.
    """

    group: LieGroupModel
    w: Callable
    flow: Optional[Callable] = None
    name: str = "rep"
    flow_steps: int = 2000

    def field(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        return np.broadcast_to(np.asarray(self.w(g), dtype=float), g.shape)

    def flow_at(self, g, t: float = 1.0) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if self.flow is not None:
            return np.broadcast_to(np.asarray(self.flow(g, t), dtype=float), g.shape).copy()
        n = self.flow_steps
        dt = t / n
        y = g.copy()
        for _ in range(n):
            k1 = self.field(y)
            k2 = self.field(y + 0.5 * dt * k1)
            k3 = self.field(y + 0.5 * dt * k2)
            k4 = self.field(y + dt * k3)
            y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return y

    def log_derivative(self, base=None) -> CocycleForm:
        """Right-logarithmic derivative of ``w`` weighted by dtheta / 2 pi."""
        G = self.group
        bundle = GroupBundle.trivial(base or AnnulusBase(), G)

        def theta(x, g):
            return G.dR_inv(g, self.field(g))[..., :, None] * angle_form(x)[..., None, :] / (2 * np.pi)

        return CocycleForm(bundle, theta, name=f"log({self.name})")

    def invariants(self, base=None, count: int = 200, seed: int = 0) -> dict:
        base = base or AnnulusBase()
        coc = cocycle_check(self.log_derivative(base), count, seed)
        aut = estimate_automorphism(self.group, self.flow_at, seed=seed, name=f"flow({self.name})")
        return {
            "cocycle_residual": coc.max_residual,
            "flow_identity_error": aut.identity_error,
            "flow_homomorphism_residual": aut.homomorphism_residual,
            "flow_condition_number": aut.condition_number,
            "passed": coc.passed and aut.invariants_hold(),
        }


def build_from_representation(rep: RepresentationSpec, base: AnnulusBase = None, check: bool = True, seed: int = 0) -> Connection:
    """Flat group connection ``gamma(x, g) v = w(g) dtheta(x)(v) / 2 pi``."""
    base = base or AnnulusBase()
    if check:
        inv = rep.invariants(base, seed=seed)
        if not inv["passed"]:
            raise PreconditionError(f"representation {rep.name} fails its invariants: {inv}")
    bundle = GroupBundle.trivial(base, rep.group, name=f"{rep.group.name} over annulus")

    return Connection.factored(
        bundle,
        lambda g: rep.field(g)[..., :, None],
        lambda x: angle_form(x)[..., None, :] / (2 * np.pi),
        name=f"H[{rep.name}]",
    )


def flatness_gate(conn: Connection, count: int = 20, seed: int = 0, tol: float = FLAT_TOL) -> float:
    worst = curvature_sup(conn, count, seed)
    if worst >= tol:
        raise NotFlatError(f"{conn.name} has curvature {worst:.3e} >= {tol:g} on the annulus sample")
    return worst


def monodromy(conn: Connection, steps: int = DEFAULT_STEPS, count: int = 16, seed: int = 0, check_flat: bool = True, x0=X0) -> AutomorphismEstimate:
    """Holonomy of the generator, checked against homotopic and contractible loops.

    ``extra`` records the flatness value, the discrepancy of each homotopic loop
    from the generator, and the identity error of the contractible loop.
    """
    flat = flatness_gate(conn, seed=seed) if check_flat else None
    G = conn.bundle.group
    if G is None:
        raise PreconditionError("monodromy needs a bundle with a base-independent group")
    points, sizes, h = _grid_points(G, count, seed)
    loops = homotopic_loops(x0)
    gen = loops["unit_circle"]
    values = _integrate(conn, gen, points, steps)
    est = _assemble(G, points, sizes, h, values, lambda g: _integrate(conn, gen, g, steps), name=f"mon({conn.name})")
    homotopy = {}
    for label, loop in loops.items():
        if label != "unit_circle":
            homotopy[label] = sup_norm(_integrate(conn, loop, est.grid, steps) - est.values)
    contractible = sup_norm(_integrate(conn, contractible_loop(x0), est.grid, steps) - est.grid)
    est.extra = {
        "flatness": flat,
        "homotopy_discrepancy": homotopy,
        "max_homotopy_discrepancy": max(homotopy.values()),
        "contractible_identity_error": contractible,
    }
    return est


@dataclass
class RoundtripResult:
    sup_error: float
    rows: list
    estimate: AutomorphismEstimate
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.sup_error < self.tol)

    def verdict(self) -> str:
        return f"ROUNDTRIP: {'PASS' if self.passed else 'FAIL'} (sup_error={self.sup_error:.3e})"


def roundtrip_check(rep: RepresentationSpec, base: AnnulusBase = None, steps: int = DEFAULT_STEPS, count: int = 16, seed: int = 0, tol: float = 1e-5) -> RoundtripResult:
    """Monodromy of the connection built from ``rep`` against the time-1 flow of ``w``."""
    conn = build_from_representation(rep, base, seed=seed)
    est = monodromy(conn, steps, count, seed)
    expected = rep.flow_at(est.grid, 1.0)
    err = np.max(np.abs(est.values - expected), axis=-1)
    rows = [{"index": k, "g": est.grid[k].tolist(), "monodromy": est.values[k].tolist(), "flow": expected[k].tolist(), "error": float(err[k])} for k in range(len(err))]
    return RoundtripResult(float(err.max()), rows, est, tol)


def compare_automorphisms(a1: AutomorphismEstimate, a2: AutomorphismEstimate, conj=None) -> float:
    """Sup over the grid of ``a1`` of ``|a1(g) - c(a2(c^-1(g)))|``.

    ``conj`` is a pair ``(c, c_inv)`` of batched maps; identity when absent.
    """
    if a1.group.name != a2.group.name or a1.group.dim != a2.group.dim:
        raise PreconditionError("automorphisms act on different groups")
    if conj is None:
        if a2.grid.shape == a1.grid.shape and np.array_equal(a2.grid, a1.grid):
            other = a2.values
        else:
            other = a2.map(a1.grid)
    else:
        c, c_inv = conj
        other = np.asarray(c(a2.map(np.asarray(c_inv(a1.grid), dtype=float))), dtype=float)
    return sup_norm(a1.values - other)

