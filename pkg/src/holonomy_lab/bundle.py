"""Group bundles over chart bases and connections as Christoffel maps.

A connection is stored as ``gamma(x, g)``, an ``(n, m)`` matrix sending a base
tangent ``v`` to the fiber component of its horizontal lift at ``(x, g)``. The
horizontal space is ``{(v, gamma v)}``; the vertical projection and the
covariant derivative follow from it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from holonomy_lab.errors import DomainError
from holonomy_lab.groups import (
    SEMIDIRECT_CHART,
    SEMIDIRECT_SAMPLES,
    LieGroupModel,
    sd_adj,
    sd_d_left,
    sd_d_right,
    sd_d_right_inv,
    sd_inv,
    sd_mul,
)
from holonomy_lab.numerics import CHART_MARGIN, FD_STEP, as_box, in_box, jacobian, matvec, sample_box, stack_matrix


@dataclass(frozen=True, eq=False)
class BaseChart:
    box: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "box", as_box(self.box))

    @property
    def dim(self) -> int:
        return self.box.shape[0]

    def contains(self, x) -> np.ndarray:
        return in_box(self.box, x)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return sample_box(self.box, count, rng)

    def check(self, x, what="base point"):
        if not np.all(self.contains(x)):
            raise DomainError(f"{what} {np.asarray(x).tolist()} is not interior to the base box {self.box.tolist()}")


@dataclass(frozen=True, eq=False)
class GroupBundle:
    """Fiber bundle ``base x fiber_chart``, optionally with a fiberwise group law.

    ``mul(x, g, h)``, ``inv(x, g)`` and ``identity(x)`` may depend on the base
    point. When the law is base-independent, ``group`` holds the model and the
    algebra operations use its closed forms.
    """

    base: object
    fiber_dim: int
    fiber_chart: np.ndarray
    fiber_samples: np.ndarray
    mul: Optional[Callable] = None
    inv: Optional[Callable] = None
    identity: Optional[Callable] = None
    group: Optional[LieGroupModel] = None
    adj: Optional[Callable] = None
    d_left: Optional[Callable] = None
    d_right: Optional[Callable] = None
    d_right_inv: Optional[Callable] = None
    name: str = "bundle"

    @classmethod
    def trivial(cls, base, group: LieGroupModel, name: str = "") -> "GroupBundle":
        return cls(
            base=base,
            fiber_dim=group.dim,
            fiber_chart=group.chart,
            fiber_samples=group.sample_domain,
            mul=lambda x, g, h: group.mul(g, h),
            inv=lambda x, g: group.inv(g),
            identity=lambda x: np.broadcast_to(group.identity, np.shape(x)[:-1] + (group.dim,)).copy(),
            group=group,
            adj=lambda x, g, A: group.adjoint(g, A),
            d_left=lambda x, g, A: group.dL(g, A),
            d_right=lambda x, g, A: group.dR(g, A),
            d_right_inv=lambda x, g, w: group.dR_inv(g, w),
            name=name or f"{group.name}{list(group.params) if group.params else ''}",
        )

    @classmethod
    def plain(cls, base, fiber_dim: int, chart=None, samples=None, name="fiber bundle") -> "GroupBundle":
        chart = np.array([[-np.inf, np.inf]] * fiber_dim) if chart is None else as_box(chart)
        samples = np.array([[-2.0, 2.0]] * fiber_dim) if samples is None else as_box(samples)
        return cls(base=base, fiber_dim=fiber_dim, fiber_chart=chart, fiber_samples=samples, name=name)

    @property
    def has_group_law(self) -> bool:
        return self.mul is not None

    @property
    def base_independent(self) -> bool:
        return self.group is not None

    def contains(self, g, margin: float = CHART_MARGIN) -> np.ndarray:
        return in_box(self.fiber_chart, g, margin)

    def sample_fiber(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return sample_box(self.fiber_samples, count, rng, shrink=1.0)

    def check_fiber(self, g, what="fiber point"):
        if not np.all(self.contains(g)):
            raise DomainError(f"{what} {np.asarray(g).tolist()} is outside the fiber chart interior")

    def e(self, x) -> np.ndarray:
        return np.asarray(self.identity(np.asarray(x, dtype=float)), dtype=float)

    # Algebra operations at base point x, numeric where no closed form is attached.
    def adjoint(self, x, g, A):
        if self.adj is not None:
            return self.adj(x, g, A)
        A = np.asarray(A, dtype=float)
        ginv = self.inv(x, g)
        return _d0(lambda t: self.mul(x, self.mul(x, g, self.e(x) + t * A), ginv))

    def dL(self, x, g, A):
        if self.d_left is not None:
            return self.d_left(x, g, A)
        return _d0(lambda t: self.mul(x, g, self.e(x) + t * np.asarray(A, dtype=float)))

    def dR(self, x, g, A):
        if self.d_right is not None:
            return self.d_right(x, g, A)
        return _d0(lambda t: self.mul(x, self.e(x) + t * np.asarray(A, dtype=float), g))

    def dR_inv(self, x, g, w):
        if self.d_right_inv is not None:
            return self.d_right_inv(x, g, w)
        ginv = self.inv(x, g)
        g = np.asarray(g, dtype=float)
        return _d0(lambda t: self.mul(x, g + t * np.asarray(w, dtype=float), ginv))


def _d0(f, h: float = FD_STEP):
    return (np.asarray(f(h)) - np.asarray(f(-h))) / (2.0 * h)


def semidirect_bundle(base, lam: Callable, mu: Callable, name="semidirect") -> GroupBundle:
    """R+ semidirect R^2 bundle whose weights ``lam(x)``, ``mu(x)`` vary over the base."""

    def weights(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(lam(x), dtype=float), np.asarray(mu(x), dtype=float)

    def wrap(op):
        def f(x, *args):
            l, m = weights(x)
            return op(*args, l, m)

        return f

    return GroupBundle(
        base=base,
        fiber_dim=3,
        fiber_chart=SEMIDIRECT_CHART,
        fiber_samples=SEMIDIRECT_SAMPLES,
        mul=wrap(sd_mul),
        inv=wrap(sd_inv),
        identity=lambda x: np.broadcast_to([1.0, 0.0, 0.0], np.shape(x)[:-1] + (3,)).copy(),
        adj=wrap(sd_adj),
        d_left=wrap(sd_d_left),
        d_right=wrap(sd_d_right),
        d_right_inv=wrap(sd_d_right_inv),
        name=name,
    )


def smooth_step(u):
    """C-infinity step: 0 for u <= 0, exp(-1/u) for u > 0."""
    u = np.asarray(u, dtype=float)
    pos = u > 0
    return np.where(pos, np.exp(-1.0 / np.where(pos, u, 1.0)), 0.0)


@dataclass(frozen=True, eq=False)
class Connection:
    """Christoffel map ``gamma(x, g)``.

    Optionally ``gamma(x, g) = fiber_factor(g) @ base_factor(x)`` with shapes
    (n, r) and (r, m); the integrator then evaluates the base part once per path.
    """

    bundle: GroupBundle
    gamma: Callable
    name: str = "connection"
    fiber_factor: Optional[Callable] = None
    base_factor: Optional[Callable] = None

    @classmethod
    def factored(cls, bundle: GroupBundle, fiber_factor: Callable, base_factor: Callable, name: str = "connection") -> "Connection":
        def gamma(x, g):
            return np.matmul(np.asarray(fiber_factor(np.asarray(g, dtype=float)), dtype=float), np.asarray(base_factor(np.asarray(x, dtype=float)), dtype=float))

        return cls(bundle, gamma, name, fiber_factor, base_factor)

    @property
    def is_factored(self) -> bool:
        return self.fiber_factor is not None and self.base_factor is not None

    @property
    def base_dim(self) -> int:
        return self.bundle.base.dim

    @property
    def fiber_dim(self) -> int:
        return self.bundle.fiber_dim

    def matrix(self, x, g) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.asarray(g, dtype=float)
        out = np.asarray(self.gamma(x, g), dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], g.shape[:-1]) + (self.fiber_dim, self.base_dim)
        return np.broadcast_to(out, shape)

    def horizontal(self, x, g, v) -> np.ndarray:
        """Fiber component of the horizontal lift of ``v`` at ``(x, g)``."""
        return matvec(self.matrix(x, g), v)


def trivial_connection(bundle: GroupBundle, name="trivial") -> Connection:
    n, m = bundle.fiber_dim, bundle.base.dim
    return Connection(bundle, lambda x, g: np.zeros((n, m)), name=name)


def matrix_gamma(fn: Callable, n: int, m: int) -> Callable:
    """Wrap ``fn(x, g) -> nested rows`` into a broadcasting gamma."""
    def gamma(x, g):
        rows = fn(np.asarray(x, dtype=float), np.asarray(g, dtype=float))
        return stack_matrix(rows, np.broadcast_shapes(np.shape(x)[:-1], np.shape(g)[:-1]))

    return gamma


@dataclass(frozen=True, eq=False)
class SectionSpec:
    """Local section over a sub-box; ``deval`` defaults to central differences."""

    domain: np.ndarray
    eval: Callable
    deval: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "domain", as_box(self.domain))

    def value(self, x):
        return np.asarray(self.eval(np.asarray(x, dtype=float)), dtype=float)

    def derivative(self, x) -> np.ndarray:
        if self.deval is not None:
            return np.asarray(self.deval(np.asarray(x, dtype=float)), dtype=float)
        return jacobian(self.value, x)


def vertical_project(conn: Connection, x, g, w) -> np.ndarray:
    v_base, v_fiber = w
    return np.asarray(v_fiber, dtype=float) - conn.horizontal(x, g, v_base)


def horizontal_project(conn: Connection, x, g, w):
    v_base = np.asarray(w[0], dtype=float)
    return v_base, conn.horizontal(x, g, v_base)


def covariant_derivative(conn: Connection, s: SectionSpec, x, v) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(in_box(s.domain, x)):
        raise DomainError(f"point {x.tolist()} is outside the section domain {s.domain.tolist()}")
    return matvec(s.derivative(x), v) - conn.horizontal(x, s.value(x), v)


def lift_vector(conn: Connection, X: Callable, x, g):
    xv = np.asarray(X(np.asarray(x, dtype=float)), dtype=float)
    return xv, conn.horizontal(x, g, xv)


def connection_sanity(conn: Connection, count: int = 50, seed: int = 0, delta: float = 1e-6) -> dict:
    """Finite values and a small-perturbation continuity probe on seeded samples."""
    rng = np.random.default_rng(seed)
    x = conn.bundle.base.sample(count, rng)
    g = conn.bundle.sample_fiber(count, rng)
    G = conn.matrix(x, g)
    dx = delta * rng.standard_normal(x.shape)
    dg = delta * rng.standard_normal(g.shape)
    jump = np.abs(conn.matrix(x + dx, g + dg) - G)
    if not np.all(np.isfinite(G)):
        raise DomainError(f"{conn.name}: gamma is not finite on the sample set")
    return {"max_abs_gamma": float(np.max(np.abs(G))), "max_jump": float(np.max(jump))}
