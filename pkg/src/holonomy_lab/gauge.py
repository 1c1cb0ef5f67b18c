"""Principal connections on trivial principal bundles and the induced gauge connection.

Convention: with coefficients ``A(x)`` (algebra-valued 1-form in the global
trivialization), the horizontal lift on ``base x G`` is

    gamma_P(x, g) v = -dR_g(A(x) v),

which commutes with right translations. The gauge bundle ``base x G`` carries the
pointwise group law, and the frame ``p = (x, k)`` identifies its fiber with
``G`` through ``q = k h k^-1``. Transporting frames then gives

    gamma_Gau(x, q) v = (dL_q - dR_q)(A(x) v),

the infinitesimal conjugation flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from holonomy_lab.bundle import Connection, GroupBundle
from holonomy_lab.curvature import curvature
from holonomy_lab.groups import LieGroupModel
from holonomy_lab.numerics import directional_derivative, matvec, sup_norm
from holonomy_lab.transport import DEFAULT_STEPS, PathSpec, _integrate


@dataclass(frozen=True, eq=False)
class PrincipalConnection:
    base: object
    group: LieGroupModel
    A: Callable  # x (..., m) -> (..., k, m)
    name: str = "principal"
    bundle: GroupBundle = field(init=False, repr=False)

    def __post_init__(self):
        # shared by the principal and gauge connections so they compare by bundle identity
        object.__setattr__(self, "bundle", GroupBundle.trivial(self.base, self.group, name=f"{self.group.name} over base"))

    def coefficients(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.A(x), dtype=float)
        return np.broadcast_to(out, x.shape[:-1] + (self.group.dim, self.base.dim))

    def form(self, x, v) -> np.ndarray:
        return matvec(self.coefficients(x), v)


def _field_matrix(op, G: LieGroupModel, g) -> np.ndarray:
    """(n, n) matrix whose columns are ``op(g, e_k)``."""
    g = np.asarray(g, dtype=float)
    eye = np.eye(G.dim)
    return np.swapaxes(np.asarray(op(g[..., None, :], eye), dtype=float), -1, -2)


def principal_to_connection(pc: PrincipalConnection) -> Connection:
    G = pc.group
    return Connection.factored(pc.bundle, lambda g: -_field_matrix(G.dR, G, g), pc.coefficients, name=f"{pc.name} (principal lift)")


def induce_gauge_connection(pc: PrincipalConnection) -> Connection:
    G = pc.group
    n, m = G.dim, pc.base.dim
    if G.abelian:
        # conjugation is trivial, so the induced connection is the trivial one
        return Connection(pc.bundle, lambda x, g: np.zeros((n, m)), name=f"{pc.name} (gauge, abelian)")

    def conjugation_field(q):
        return _field_matrix(G.dL, G, q) - _field_matrix(G.dR, G, q)

    return Connection.factored(pc.bundle, conjugation_field, pc.coefficients, name=f"{pc.name} (gauge)")


def equivariance_residual(pc: PrincipalConnection, count: int = 50, seed: int = 0) -> float:
    """Formula-level check ``gamma_P(x, g k) v = d(R_k)_g gamma_P(x, g) v`` on samples."""
    rng = np.random.default_rng(seed)
    G = pc.group
    conn = principal_to_connection(pc)
    x = pc.base.sample(count, rng)
    g, k = G.sample(count, rng), G.sample(count, rng)
    v = rng.uniform(-1.0, 1.0, size=(count, pc.base.dim))
    lhs = conn.horizontal(x, G.mul(g, k), v)
    rhs = directional_derivative(lambda gg: G.mul(gg, k), g, conn.horizontal(x, g, v))
    return sup_norm(lhs - rhs)


def holonomy_equivariance_residual(pc: PrincipalConnection, loop: PathSpec, count: int = 20, seed: int = 0, steps: int = DEFAULT_STEPS) -> float:
    """``hol(g k) - hol(g) k`` on seeded samples."""
    rng = np.random.default_rng(seed)
    G = pc.group
    g, k = G.sample(count, rng), G.sample(count, rng)
    out = _integrate(principal_to_connection(pc), loop, np.concatenate([G.mul(g, k), g]), steps)
    return sup_norm(out[:count] - G.mul(out[count:], k))


def compare_holonomies(pc: PrincipalConnection, loop: PathSpec, count: int = 20, seed: int = 0, steps: int = DEFAULT_STEPS) -> float:
    """Sup over sampled ``q`` of ``|hol_Gau(q) - H q H^-1|`` with ``H = hol_P(e)``."""
    rng = np.random.default_rng(seed)
    G = pc.group
    q = G.sample(count, rng)
    H = _integrate(principal_to_connection(pc), loop, G.identity, steps)
    gauge = _integrate(induce_gauge_connection(pc), loop, q, steps)
    return sup_norm(gauge - G.mul(G.mul(H, q), G.inv(H)))


def pushforward_curvature(pc: PrincipalConnection, x, i: int, j: int, q) -> np.ndarray:
    """Principal curvature at the identity frame pushed through the conjugation action."""
    G = pc.group
    Re = curvature(principal_to_connection(pc), x, i, j, G.identity)
    q = np.asarray(q, dtype=float)
    return G.dR(q, Re) - G.dL(q, Re)


def compare_curvatures(pc: PrincipalConnection, x, i: int, j: int, q) -> float:
    gauge = curvature(induce_gauge_connection(pc), x, i, j, q)
    return sup_norm(gauge - pushforward_curvature(pc, x, i, j, q))
