"""Lie groups in a single global chart.

Algebra vectors are tangent vectors at the identity written in chart
coordinates. Every model supplies ``mul``/``inv``/``identity``; the other
operations (adjoint action, bracket, exponential, translation differentials)
may be given in closed form and otherwise fall back to central differences or
fixed-step RK4.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from holonomy_lab.errors import BoundaryProximityError
from holonomy_lab.numerics import CHART_MARGIN, FD_STEP, as_box, in_box, sample_box

EXP_STEPS_PER_UNIT = 256

Op = Optional[Callable]


@dataclass(frozen=True, eq=False)
class LieGroupModel:
    name: str
    dim: int
    chart: np.ndarray
    sample_domain: np.ndarray
    mul: Callable
    inv: Callable
    identity: np.ndarray
    abelian: bool = False
    params: tuple = ()
    adj: Op = None
    bracket: Op = None
    exp: Op = None
    d_left: Op = None
    d_right: Op = None
    d_right_inv: Op = None
    extra: dict = field(default_factory=dict)

    def contains(self, g, margin: float = CHART_MARGIN) -> np.ndarray:
        return in_box(self.chart, g, margin)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return sample_box(self.sample_domain, count, rng, shrink=1.0)

    # Closed form when available, numeric fallback otherwise.
    def adjoint(self, g, A):
        return self.adj(g, A) if self.adj is not None else numeric_adj(self, g, A)

    def lie_bracket(self, A, B):
        return self.bracket(A, B) if self.bracket is not None else numeric_bracket(self, A, B)

    def exponential(self, A, t=1.0):
        return self.exp(A, t) if self.exp is not None else rk4_exp(self, A, t)

    def dL(self, g, A):
        """Left-invariant field generated by ``A``, evaluated at ``g``."""
        return self.d_left(g, A) if self.d_left is not None else numeric_d_left(self, g, A)

    def dR(self, g, A):
        """Right-invariant field generated by ``A``, evaluated at ``g``."""
        return self.d_right(g, A) if self.d_right is not None else numeric_d_right(self, g, A)

    def dR_inv(self, g, w):
        """Right-logarithmic derivative: tangent vector at ``g`` back to the algebra."""
        if self.d_right_inv is not None:
            return self.d_right_inv(g, w)
        return numeric_d_right_inv(self, g, w)

    def __repr__(self) -> str:
        return f"LieGroupModel({self.name}{self.params if self.params else ''})"


def _d0(f, h: float = FD_STEP):
    return (np.asarray(f(h)) - np.asarray(f(-h))) / (2.0 * h)


def _scaled_step(g, h=FD_STEP):
    return h * max(1.0, float(np.max(np.abs(g)))) if np.size(g) else h


def _checked(model: LieGroupModel, *points):
    for p in points:
        if not np.all(model.contains(p)):
            raise BoundaryProximityError(f"{model!r}: finite-difference stencil left the chart interior")


def numeric_adj(model: LieGroupModel, g, A, h: float = FD_STEP):
    """d/dt at 0 of g exp(tA) g^-1 by central difference."""
    g = np.asarray(g, dtype=float)
    A = np.asarray(A, dtype=float)
    s = _scaled_step(g, h)
    ginv = model.inv(g)
    plus = model.mul(g, model.exponential(A, s))
    minus = model.mul(g, model.exponential(A, -s))
    _checked(model, plus, minus)
    return (model.mul(plus, ginv) - model.mul(minus, ginv)) / (2.0 * s)


def numeric_bracket(model: LieGroupModel, A, B, h: float = FD_STEP, adj: Op = None):
    """d/dt at 0 of adj(exp(tA), B)."""
    adj = adj or model.adjoint
    return _d0(lambda t: adj(model.exponential(A, t), B), h)


def numeric_d_left(model: LieGroupModel, g, A, h: float = FD_STEP):
    g = np.asarray(g, dtype=float)
    e = model.identity
    return _d0(lambda t: model.mul(g, e + t * np.asarray(A, dtype=float)), h)


def numeric_d_right(model: LieGroupModel, g, A, h: float = FD_STEP):
    g = np.asarray(g, dtype=float)
    e = model.identity
    return _d0(lambda t: model.mul(e + t * np.asarray(A, dtype=float), g), h)


def numeric_d_right_inv(model: LieGroupModel, g, w, h: float = FD_STEP):
    g = np.asarray(g, dtype=float)
    s = _scaled_step(g, h)
    ginv = model.inv(g)
    w = np.asarray(w, dtype=float)
    return (model.mul(g + s * w, ginv) - model.mul(g - s * w, ginv)) / (2.0 * s)


def rk4_exp(model: LieGroupModel, A, t=1.0, steps_per_unit: int = EXP_STEPS_PER_UNIT):
    """Integrate g' = dL_g(A) from the identity with fixed-step RK4."""
    A = np.asarray(A, dtype=float)
    g = np.broadcast_to(model.identity, A.shape).astype(float)
    t = float(t)
    n = max(1, int(np.ceil(abs(t) * steps_per_unit)))
    dt = t / n
    f = lambda y: model.dL(y, A)  # noqa: E731
    for _ in range(n):
        k1 = f(g)
        k2 = f(g + 0.5 * dt * k1)
        k3 = f(g + 0.5 * dt * k2)
        k4 = f(g + dt * k3)
        g = g + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return g


def expm1_ratio(z):
    """(e^z - 1)/z, continuous at 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-8
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 + 0.5 * z, np.expm1(safe) / safe)


# --- AdditiveR(n) -----------------------------------------------------------


def additive_r(n: int = 1) -> LieGroupModel:
    n = int(n)
    if n < 1:
        raise ValueError("AdditiveR needs n >= 1")
    chart = np.array([[-np.inf, np.inf]] * n)
    same = lambda g, A: np.broadcast_to(np.asarray(A, dtype=float), np.broadcast_shapes(np.shape(g), np.shape(A))).copy()  # noqa: E731
    return LieGroupModel(
        name="AdditiveR",
        dim=n,
        chart=chart,
        sample_domain=np.array([[-2.0, 2.0]] * n),
        mul=lambda g, h: np.asarray(g, dtype=float) + np.asarray(h, dtype=float),
        inv=lambda g: -np.asarray(g, dtype=float),
        identity=np.zeros(n),
        abelian=True,
        params=(n,),
        adj=same,
        bracket=lambda A, B: 0.0 * (np.asarray(A, dtype=float) + np.asarray(B, dtype=float)),
        exp=lambda A, t=1.0: float(t) * np.asarray(A, dtype=float),
        d_left=same,
        d_right=same,
        d_right_inv=same,
    )


# --- Aff1: (a, b), a > 0, (a,b)(a',b') = (aa', b + ab') ----------------------


def _split(g, k):
    g = np.asarray(g, dtype=float)
    return [g[..., i] for i in range(k)]


def _aff_mul(g, h):
    a, b = _split(g, 2)
    a2, b2 = _split(h, 2)
    return np.stack(np.broadcast_arrays(a * a2, b + a * b2), axis=-1)


def _aff_inv(g):
    a, b = _split(g, 2)
    return np.stack([1.0 / a, -b / a], axis=-1)


def _aff_adj(g, A):
    a, b = _split(g, 2)
    u1, u2 = _split(A, 2)
    return np.stack(np.broadcast_arrays(u1, a * u2 - b * u1), axis=-1)


def _aff_bracket(A, B):
    u1, u2 = _split(A, 2)
    v1, v2 = _split(B, 2)
    z = u1 * v2 - u2 * v1
    return np.stack([0.0 * z, z], axis=-1)


def _aff_exp(A, t=1.0):
    u1, u2 = _split(A, 2)
    t = float(t)
    return np.stack([np.exp(t * u1), t * u2 * expm1_ratio(t * u1)], axis=-1)


def _aff_dl(g, A):
    a, b = _split(g, 2)
    u1, u2 = _split(A, 2)
    return np.stack(np.broadcast_arrays(a * u1, a * u2), axis=-1)


def _aff_dr(g, A):
    a, b = _split(g, 2)
    u1, u2 = _split(A, 2)
    return np.stack(np.broadcast_arrays(a * u1, u2 + b * u1), axis=-1)


def _aff_dr_inv(g, w):
    a, b = _split(g, 2)
    w1, w2 = _split(w, 2)
    u1 = w1 / a
    return np.stack(np.broadcast_arrays(u1, w2 - b * u1), axis=-1)


def aff1() -> LieGroupModel:
    return LieGroupModel(
        name="Aff1",
        dim=2,
        chart=np.array([[0.0, np.inf], [-np.inf, np.inf]]),
        sample_domain=np.array([[0.5, 2.0], [-2.0, 2.0]]),
        mul=_aff_mul,
        inv=_aff_inv,
        identity=np.array([1.0, 0.0]),
        adj=_aff_adj,
        bracket=_aff_bracket,
        exp=_aff_exp,
        d_left=_aff_dl,
        d_right=_aff_dr,
        d_right_inv=_aff_dr_inv,
    )


# --- R+ semidirect R^2 with weights (lam, mu) --------------------------------
# (a,b,c)(a',b',c') = (aa', b + a^lam b', c + a^mu c'). The functions below take
# lam, mu as broadcastable arrays so the base-varying bundle can reuse them.


def sd_mul(g, h, lam, mu):
    a, b, c = _split(g, 3)
    a2, b2, c2 = _split(h, 3)
    return np.stack(np.broadcast_arrays(a * a2, b + np.power(a, lam) * b2, c + np.power(a, mu) * c2), axis=-1)


def sd_inv(g, lam, mu):
    a, b, c = _split(g, 3)
    return np.stack(np.broadcast_arrays(1.0 / a, -np.power(a, -lam) * b, -np.power(a, -mu) * c), axis=-1)


def sd_adj(g, A, lam, mu):
    a, b, c = _split(g, 3)
    u1, u2, u3 = _split(A, 3)
    return np.stack(
        np.broadcast_arrays(u1, np.power(a, lam) * u2 - lam * u1 * b, np.power(a, mu) * u3 - mu * u1 * c),
        axis=-1,
    )


def sd_bracket(A, B, lam, mu):
    u1, u2, u3 = _split(A, 3)
    v1, v2, v3 = _split(B, 3)
    return np.stack(
        np.broadcast_arrays(0.0 * u1 * v1, lam * (u1 * v2 - u2 * v1), mu * (u1 * v3 - u3 * v1)), axis=-1
    )


def sd_exp(A, t, lam, mu):
    u1, u2, u3 = _split(A, 3)
    t = float(t)
    return np.stack(
        np.broadcast_arrays(
            np.exp(t * u1), t * u2 * expm1_ratio(lam * t * u1), t * u3 * expm1_ratio(mu * t * u1)
        ),
        axis=-1,
    )


def sd_d_left(g, A, lam, mu):
    a, b, c = _split(g, 3)
    u1, u2, u3 = _split(A, 3)
    return np.stack(np.broadcast_arrays(a * u1, np.power(a, lam) * u2, np.power(a, mu) * u3), axis=-1)


def sd_d_right(g, A, lam, mu):
    a, b, c = _split(g, 3)
    u1, u2, u3 = _split(A, 3)
    return np.stack(np.broadcast_arrays(a * u1, u2 + lam * u1 * b, u3 + mu * u1 * c), axis=-1)


def sd_d_right_inv(g, w, lam, mu):
    a, b, c = _split(g, 3)
    w1, w2, w3 = _split(w, 3)
    u1 = w1 / a
    return np.stack(np.broadcast_arrays(u1, w2 - lam * u1 * b, w3 - mu * u1 * c), axis=-1)


SEMIDIRECT_CHART = np.array([[0.0, np.inf], [-np.inf, np.inf], [-np.inf, np.inf]])
SEMIDIRECT_SAMPLES = np.array([[0.5, 2.0], [-2.0, 2.0], [-2.0, 2.0]])


def semidirect(lam: float, mu: float) -> LieGroupModel:
    lam, mu = float(lam), float(mu)
    return LieGroupModel(
        name="SemidirectRplusR2",
        dim=3,
        chart=SEMIDIRECT_CHART,
        sample_domain=SEMIDIRECT_SAMPLES,
        mul=lambda g, h: sd_mul(g, h, lam, mu),
        inv=lambda g: sd_inv(g, lam, mu),
        identity=np.array([1.0, 0.0, 0.0]),
        params=(lam, mu),
        adj=lambda g, A: sd_adj(g, A, lam, mu),
        bracket=lambda A, B: sd_bracket(A, B, lam, mu),
        exp=lambda A, t=1.0: sd_exp(A, t, lam, mu),
        d_left=lambda g, A: sd_d_left(g, A, lam, mu),
        d_right=lambda g, A: sd_d_right(g, A, lam, mu),
        d_right_inv=lambda g, w: sd_d_right_inv(g, w, lam, mu),
    )


def custom_group(name, dim, mul, inv, identity, chart, sample_domain) -> LieGroupModel:
    """Group from bare callables; every derived operation uses the numeric fallback."""
    return LieGroupModel(
        name=name,
        dim=int(dim),
        chart=as_box(chart),
        sample_domain=as_box(sample_domain),
        mul=mul,
        inv=inv,
        identity=np.asarray(identity, dtype=float),
    )


def strip_closed_forms(model: LieGroupModel) -> LieGroupModel:
    """Same group law with every optional closed form removed (forces the numeric paths)."""
    return LieGroupModel(
        name=model.name,
        dim=model.dim,
        chart=model.chart,
        sample_domain=model.sample_domain,
        mul=model.mul,
        inv=model.inv,
        identity=model.identity,
        abelian=model.abelian,
        params=model.params,
    )


CATALOG = {
    "AdditiveR": (additive_r, (1,)),
    "Aff1": (aff1, ()),
    "SemidirectRplusR2": (semidirect, (1.0, 1.0)),
}


def catalog_group(name: str, params=()) -> LieGroupModel:
    """Look up a catalog entry by name and parameter tuple."""
    try:
        factory, default = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown group {name!r}; known: {sorted(CATALOG)}") from None
    params = tuple(params) if params else default
    if name == "AdditiveR":
        params = (int(params[0]),)
    return factory(*params)


def group_axiom_residuals(model: LieGroupModel, count: int = 100, seed: int = 0) -> dict:
    """Sup residuals of the group and algebra identities on seeded samples."""
    rng = np.random.default_rng(seed)
    g, h, k = (model.sample(count, rng) for _ in range(3))
    A, B, C = (rng.uniform(-1.0, 1.0, size=(count, model.dim)) for _ in range(3))
    s, t = rng.uniform(-1.0, 1.0, size=2)
    e = np.broadcast_to(model.identity, g.shape)
    mul, inv = model.mul, model.inv

    def sup(x):
        return float(np.max(np.abs(x)))

    br = model.lie_bracket
    jacobi = br(A, br(B, C)) + br(B, br(C, A)) + br(C, br(A, B))
    return {
        "left_identity": sup(mul(e, g) - g),
        "right_identity": sup(mul(g, e) - g),
        "inverse": sup(mul(g, inv(g)) - e),
        "associativity": sup(mul(mul(g, h), k) - mul(g, mul(h, k))),
        "adj_identity": sup(model.adjoint(e, A) - A),
        "adj_homomorphism": sup(model.adjoint(mul(g, h), A) - model.adjoint(g, model.adjoint(h, A))),
        "bracket_antisymmetry": sup(br(A, B) + br(B, A)),
        "jacobi": sup(jacobi),
        "exp_one_parameter": sup(model.exponential(A, s + t) - mul(model.exponential(A, s), model.exponential(A, t))),
    }
