"""Group connections: the multiplicativity residual, cocycle differences,
the affine action of cocycle-valued 1-forms, and flow trivializations.

A connection on a group bundle is a group connection when multiplication and
inversion carry horizontal vectors to horizontal vectors. Both conditions are
checked through the chain rule: for horizontal ``(v, G_g v)`` and ``(v, G_h v)``
the curve ``s -> mul(x + s v, g + s G_g v, h + s G_h v)`` must leave ``g h`` with
velocity ``G_{gh} v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from holonomy_lab.bundle import Connection, GroupBundle, SectionSpec
from holonomy_lab.errors import ChartEscapeError, PreconditionError
from holonomy_lab.numerics import FD_STEP, as_box, directional_derivative, in_box, matvec, sample_box, sup_norm
from holonomy_lab.transport import DEFAULT_STEPS, PathSpec, _integrate, constant, polyline, reverse

GRID_SIZE = 200
GROUP_TOL = 1e-6


def _require_law(bundle: GroupBundle):
    if not bundle.has_group_law:
        raise PreconditionError(f"{bundle.name} has no fiberwise group law")


def _checked_mul(bundle, x, g, h):
    out = np.asarray(bundle.mul(x, g, h), dtype=float)
    if not np.all(bundle.contains(out)):
        raise ChartEscapeError(0.0, out if out.ndim == 1 else out[np.argmin(bundle.contains(out))], where="fiber chart (multiplication)")
    return out


def _split_call(fn, sizes):
    """Turn ``fn(a, b, ...)`` into a function of the concatenated coordinates."""
    cuts = np.cumsum(sizes)[:-1]

    def f(p):
        return fn(*np.split(p, cuts, axis=-1))

    return f


def _joint(*arrays):
    arrays = [np.asarray(a, dtype=float) for a in arrays]
    batch = np.broadcast_shapes(*(a.shape[:-1] for a in arrays))
    return np.concatenate([np.broadcast_to(a, batch + a.shape[-1:]) for a in arrays], axis=-1)


def group_connection_residual(conn: Connection, x, g, h, v, step: float = FD_STEP) -> np.ndarray:
    """``G(x, gh) v`` minus the velocity of the product of two horizontal curves."""
    bundle = conn.bundle
    _require_law(bundle)
    x, g, h, v = (np.asarray(a, dtype=float) for a in (x, g, h, v))
    gh = _checked_mul(bundle, x, g, h)
    lhs = conn.horizontal(x, gh, v)
    m, n = conn.base_dim, conn.fiber_dim
    p = _joint(x, g, h)
    d = _joint(v, conn.horizontal(x, g, v), conn.horizontal(x, h, v))
    rhs = directional_derivative(_split_call(bundle.mul, (m, n, n)), p, d, step)
    return lhs - rhs


def inversion_residual(conn: Connection, x, g, v, step: float = FD_STEP) -> np.ndarray:
    """``G(x, g^-1) v`` minus the velocity of the inverse of a horizontal curve."""
    bundle = conn.bundle
    _require_law(bundle)
    x, g, v = (np.asarray(a, dtype=float) for a in (x, g, v))
    ginv = np.asarray(bundle.inv(x, g), dtype=float)
    lhs = conn.horizontal(x, ginv, v)
    p = _joint(x, g)
    d = _joint(v, conn.horizontal(x, g, v))
    rhs = directional_derivative(_split_call(bundle.inv, (conn.base_dim, conn.fiber_dim)), p, d, step)
    return lhs - rhs


@dataclass
class CheckReport:
    """Per-sample residual table and a verdict against ``tol``."""

    label: str
    rows: list
    max_residual: float
    tol: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_residual < self.tol)

    def verdict(self) -> str:
        return f"{self.label}: {'PASS' if self.passed else 'FAIL'} (max_residual={self.max_residual:.3e})"


def _grid(bundle: GroupBundle, count: int, seed: int, region=None):
    rng = np.random.default_rng(seed)
    if region is None:
        x = bundle.base.sample(count, rng)
    else:
        x = sample_box(as_box(region), count, rng)
    g = bundle.sample_fiber(count, rng)
    h = bundle.sample_fiber(count, rng)
    v = rng.uniform(-1.0, 1.0, size=(count, bundle.base.dim))
    return x, g, h, v


def group_connection_check(conn: Connection, count: int = GRID_SIZE, seed: int = 0, tol: float = GROUP_TOL, region=None) -> CheckReport:
    """Sup of both group-connection residuals over a seeded grid of (x, g, h, v)."""
    x, g, h, v = _grid(conn.bundle, count, seed, region)
    mres = np.max(np.abs(group_connection_residual(conn, x, g, h, v)), axis=-1)
    ires = np.max(np.abs(inversion_residual(conn, x, g, v)), axis=-1)
    rows = [
        {"index": k, "x": x[k].tolist(), "g": g[k].tolist(), "h": h[k].tolist(), "v": v[k].tolist(),
         "mul_residual": float(mres[k]), "inv_residual": float(ires[k])}
        for k in range(count)
    ]
    worst = float(max(mres.max(), ires.max()))
    details = {"max_mul_residual": float(mres.max()), "max_inv_residual": float(ires.max()), "samples": count, "seed": seed}
    return CheckReport("GROUP_CONNECTION", rows, worst, tol, details)


def is_group_connection(conn: Connection, count: int = GRID_SIZE, seed: int = 0, tol: float = GROUP_TOL) -> bool:
    return group_connection_check(conn, count, seed, tol).passed


# --- cocycles ---------------------------------------------------------------


def _columnwise(op, x, g, M):
    """Apply ``op(x, g, vector)`` to every column of the (..., n, m) matrix ``M``."""
    x = np.asarray(x, dtype=float)[..., None, :]
    g = np.asarray(g, dtype=float)[..., None, :]
    cols = np.swapaxes(np.asarray(M, dtype=float), -1, -2)
    return np.swapaxes(np.asarray(op(x, g, cols), dtype=float), -1, -2)


@dataclass(frozen=True, eq=False)
class CocycleForm:
    """1-form on the base with values in algebra cocycles: ``theta(x, g)`` is (n, m)."""

    bundle: GroupBundle
    theta: Callable
    name: str = "theta"

    def matrix(self, x, g) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.asarray(g, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], g.shape[:-1]) + (self.bundle.fiber_dim, self.bundle.base.dim)
        return np.broadcast_to(np.asarray(self.theta(x, g), dtype=float), shape)

    def value(self, x, g, v) -> np.ndarray:
        return matvec(self.matrix(x, g), v)


def cocycle_residual(form: CocycleForm, x, g, h, v) -> np.ndarray:
    """``theta(gh) v - theta(g) v - adj(g, theta(h) v)``."""
    b = form.bundle
    x, g, h, v = (np.asarray(a, dtype=float) for a in (x, g, h, v))
    gh = _checked_mul(b, x, g, h)
    return form.value(x, gh, v) - form.value(x, g, v) - b.adjoint(x, g, form.value(x, h, v))


def cocycle_check(form: CocycleForm, count: int = GRID_SIZE, seed: int = 0, tol: float = GROUP_TOL) -> CheckReport:
    x, g, h, v = _grid(form.bundle, count, seed)
    res = np.max(np.abs(cocycle_residual(form, x, g, h, v)), axis=-1)
    at_e = np.max(np.abs(form.value(x, form.bundle.e(x), v)), axis=-1)
    rows = [
        {"index": k, "x": x[k].tolist(), "g": g[k].tolist(), "h": h[k].tolist(), "v": v[k].tolist(),
         "cocycle_residual": float(res[k]), "identity_value": float(at_e[k])}
        for k in range(count)
    ]
    worst = float(max(res.max(), at_e.max()))
    return CheckReport("COCYCLE", rows, worst, tol, {"max_cocycle_residual": float(res.max()), "max_identity_value": float(at_e.max()), "samples": count, "seed": seed})


def connection_difference(conn1: Connection, conn2: Connection, check: bool = True, count: int = GRID_SIZE, seed: int = 0) -> CocycleForm:
    """Right-logarithmic derivative of ``G1 - G2``: a cocycle-valued 1-form."""
    if conn1.bundle is not conn2.bundle:
        raise PreconditionError("connections live on different bundles")
    if check:
        for c in (conn1, conn2):
            rep = group_connection_check(c, count, seed)
            if not rep.passed:
                raise PreconditionError(f"{c.name} is not a group connection ({rep.verdict()})")
    b = conn1.bundle

    def theta(x, g):
        return _columnwise(b.dR_inv, x, g, conn1.matrix(x, g) - conn2.matrix(x, g))

    return CocycleForm(b, theta, name=f"{conn1.name} - {conn2.name}")


def add_cocycle(conn: Connection, form: CocycleForm, name=None) -> Connection:
    """``G'(x, g) v = G(x, g) v + dR_g(theta(x, g) v)``."""
    if form.bundle is not conn.bundle:
        raise PreconditionError("cocycle and connection live on different bundles")
    b = conn.bundle

    def gamma(x, g):
        return conn.matrix(x, g) + _columnwise(b.dR, x, g, form.matrix(x, g))

    return Connection(b, gamma, name=name or f"{conn.name} + {form.name}")


def affine_roundtrip(conn: Connection, form: CocycleForm, count: int = GRID_SIZE, seed: int = 0) -> dict:
    """Both round trips through the affine structure, as sup errors on samples."""
    rng = np.random.default_rng(seed)
    b = conn.bundle
    x, g = b.base.sample(count, rng), b.sample_fiber(count, rng)
    shifted = add_cocycle(conn, form)
    back = connection_difference(shifted, conn, check=False)
    again = add_cocycle(conn, connection_difference(shifted, conn, check=False))
    return {
        "theta_recovered": sup_norm(back.matrix(x, g) - form.matrix(x, g)),
        "gamma_recovered": sup_norm(again.matrix(x, g) - shifted.matrix(x, g)),
    }


def holonomy_morphism_residual(conn: Connection, loop: PathSpec, g, h, steps: int = DEFAULT_STEPS) -> float:
    """Sup of ``|hol(gh) - hol(g) hol(h)|``; ``g`` and ``h`` may be batched."""
    b = conn.bundle
    _require_law(b)
    x0 = loop.x0
    g, h = np.broadcast_arrays(np.atleast_2d(np.asarray(g, dtype=float)), np.atleast_2d(np.asarray(h, dtype=float)))
    k = len(g)
    gh = _checked_mul(b, x0, g, h)
    out = _integrate(conn, loop, np.concatenate([gh, g, h]), steps)
    return sup_norm(out[:k] - b.mul(x0, out[k:2 * k], out[2 * k:]))


# --- flow trivialization ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrivializationMap:
    """``psi(g, x) = (transport of g to the anchor fiber, x)`` over a cube.

    The transport path leaves ``x`` along axis 1 first, then axis 2 and so on,
    which realises the composition of coordinate flows in index order.
    """

    conn: Connection
    cube: np.ndarray
    anchor: np.ndarray
    steps: int = DEFAULT_STEPS

    def path_to_anchor(self, x) -> PathSpec:
        x = np.asarray(x, dtype=float)
        if not np.all(in_box(self.cube, x)):
            raise PreconditionError(f"{x.tolist()} is outside the trivializing cube")
        pts = [x.copy()]
        cur = x.copy()
        for k in range(x.size):
            if cur[k] != self.anchor[k]:
                cur = cur.copy()
                cur[k] = self.anchor[k]
                pts.append(cur)
        if len(pts) == 1:
            return constant(x, name="at anchor")
        return polyline(pts, name="axis path to anchor")

    def psi(self, g, x):
        """Anchor-fiber component of ``psi`` at base point ``x``; ``g`` may be batched."""
        return _integrate(self.conn, self.path_to_anchor(x), g, self.steps), np.asarray(x, dtype=float)

    def psi_inv(self, gp, x):
        return _integrate(self.conn, reverse(self.path_to_anchor(x)), gp, self.steps)

    def roundtrip_residual(self, count: int = 5, samples: int = 20, seed: int = 0) -> float:
        """``psi_inv(psi(g)) - g`` over seeded base points and fiber samples."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for x in sample_box(self.cube, count, rng):
            g = self.conn.bundle.sample_fiber(samples, rng)
            gp, _ = self.psi(g, x)
            worst = max(worst, sup_norm(self.psi_inv(gp, x) - g))
        return worst

    def homomorphism_residual(self, count: int = 5, samples: int = 20, seed: int = 0) -> float:
        """``psi(gh) - psi(g) psi(h)`` in the anchor fiber."""
        b = self.conn.bundle
        _require_law(b)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for x in sample_box(self.cube, count, rng):
            g, h = b.sample_fiber(samples, rng), b.sample_fiber(samples, rng)
            out, _ = self.psi(np.concatenate([_checked_mul(b, x, g, h), g, h]), x)
            prod = b.mul(self.anchor, out[samples:2 * samples], out[2 * samples:])
            worst = max(worst, sup_norm(out[:samples] - prod))
        return worst


def flow_trivialization(conn: Connection, cube, anchor=None, steps: int = DEFAULT_STEPS) -> TrivializationMap:
    cube = as_box(cube)
    base = conn.bundle.base
    corners = np.array(np.meshgrid(*cube)).reshape(cube.shape[0], -1).T
    if not np.all(base.contains(corners)):
        raise PreconditionError(f"cube {cube.tolist()} is not inside the base domain")
    anchor = cube.mean(axis=1) if anchor is None else np.asarray(anchor, dtype=float)
    if not np.all(in_box(cube, anchor)):
        raise PreconditionError("anchor must lie inside the cube")
    return TrivializationMap(conn, cube, anchor, int(steps))


# --- kernel jets ------------------------------------------------------------


def conjugation_residual(bundle: GroupBundle, s: SectionSpec, h: SectionSpec, x, v, step: float = FD_STEP) -> np.ndarray:
    """For ``s`` with ``s(x) = e``: derivative of ``h s h^-1`` at ``x`` minus ``adj(h(x), ds v)``."""
    _require_law(bundle)
    x, v = np.asarray(x, dtype=float), np.asarray(v, dtype=float)
    if sup_norm(s.value(x) - bundle.e(x)) > 1e-12:
        raise PreconditionError("the section must pass through the identity at x")

    def conj(y):
        hy = h.value(y)
        return bundle.mul(y, bundle.mul(y, hy, s.value(y)), bundle.inv(y, hy))

    lhs = directional_derivative(conj, x, v, step)
    ds = directional_derivative(s.value, x, v, step)
    return lhs - bundle.adjoint(x, h.value(x), ds)
