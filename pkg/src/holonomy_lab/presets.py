"""Named bundles, connections, principal data and representations.

Everything a scenario file can reference by name lives here. Each factory takes
keyword parameters and builds a fresh object.
"""

from __future__ import annotations

import numpy as np

from holonomy_lab.bundle import BaseChart, Connection, GroupBundle, semidirect_bundle, smooth_step
from holonomy_lab.gauge import PrincipalConnection, induce_gauge_connection
from holonomy_lab.groups import additive_r, aff1
from holonomy_lab.moduli import AnnulusBase, RepresentationSpec, build_from_representation
from holonomy_lab.numerics import stack_matrix, stack_vector

BOX = ((-2.0, 2.0), (-2.0, 2.0))
PLATEAU_BOX = ((-1.0, 1.0), (-1.0, 1.0))
PLATEAU_FLAT_REGION = ((-1.0, 0.0), (-1.0, 0.0))


def _ones(g):
    return np.ones(np.shape(g)[:-1] + (1, 1))


def _g_column(g):
    return np.asarray(g, dtype=float)[..., :, None]


# --- AdditiveR(1) over the 2-box ----------------------------------------------


def scalar_bundle(box=BOX) -> GroupBundle:
    return GroupBundle.trivial(BaseChart(box), additive_r(1))


def ex_a(box=BOX, bundle=None) -> Connection:
    """gamma((x, y), g)(v1, v2) = x v2: translation by enclosed area, not a group connection."""
    bundle = bundle or scalar_bundle(box)
    return Connection.factored(bundle, _ones, lambda x: stack_matrix([[0.0, x[..., 0]]], x.shape[:-1]), name="exA")


def linear(A, box=BOX, bundle=None, name="linear") -> Connection:
    """gamma(x, g) v = g A(x) v for a callable ``A(x) -> (..., m)``."""
    bundle = bundle or scalar_bundle(box)
    return Connection.factored(bundle, _g_column, lambda x: np.asarray(A(x), dtype=float)[..., None, :], name=name)


def linear_default(box=BOX, bundle=None) -> Connection:
    """A = x2 dx1 + x1^2 dx2, curvature (2 x1 - 1) g / 2."""
    return linear(lambda x: stack_vector([x[..., 1], x[..., 0] ** 2], x.shape[:-1]), box, bundle, name="linear")


def linear_alt(box=BOX, bundle=None) -> Connection:
    """A = cos(x1) dx1 + x1 x2 dx2."""
    return linear(lambda x: stack_vector([np.cos(x[..., 0]), x[..., 0] * x[..., 1]], x.shape[:-1]), box, bundle, name="linear_alt")


def scaling(alpha=0.3, beta=-0.2, box=BOX, bundle=None) -> Connection:
    """Constant A = alpha dx1 + beta dx2 (flat)."""
    return linear(lambda x: stack_vector([alpha, beta], np.shape(x)[:-1]), box, bundle, name="scaling")


def exact_potential(x):
    """F = sin(x1) + x1 x2."""
    x = np.asarray(x, dtype=float)
    return np.sin(x[..., 0]) + x[..., 0] * x[..., 1]


def exact_linear(box=BOX, bundle=None) -> Connection:
    """A = dF with F = sin(x1) + x1 x2 (flat, trivialized by g exp(-(F(x) - F(p))))."""
    return linear(lambda x: stack_vector([np.cos(x[..., 0]) + x[..., 1], x[..., 0]], x.shape[:-1]), box, bundle, name="exact_linear")


# --- Aff1 over the 2-box ------------------------------------------------------


def aff1_bundle(box=BOX) -> GroupBundle:
    return GroupBundle.trivial(BaseChart(box), aff1())


def _aff1_b_column(g):
    g = np.asarray(g, dtype=float)
    return stack_matrix([[0.0 * g[..., 1]], [g[..., 1]]], g.shape[:-1])


def aff1_cocycle(box=BOX, bundle=None) -> Connection:
    """Trivial connection shifted by the cocycle (a, b) -> (0, b) times x2 dx1 + (1 + x1^2) dx2."""
    bundle = bundle or aff1_bundle(box)
    return Connection.factored(bundle, _aff1_b_column, lambda x: stack_matrix([[x[..., 1], 1.0 + x[..., 0] ** 2]], x.shape[:-1]), name="aff1_cocycle")


def aff1_principal_data(box=BOX) -> PrincipalConnection:
    """A(x) v = (x1 v2, x2 v1 + v2 / 2): nonzero circulation in the scaling direction."""
    return PrincipalConnection(BaseChart(box), aff1(), lambda x: stack_matrix([[0.0, x[..., 0]], [x[..., 1], 0.5]], x.shape[:-1]), name="aff1_principal")


def aff1_flat_principal_data(c1=0.4, c2=-0.7, box=BOX) -> PrincipalConnection:
    """Constant A in the scaling direction only: flat, trivial holonomy."""
    return PrincipalConnection(BaseChart(box), aff1(), lambda x: stack_matrix([[c1, c2], [0.0, 0.0]], np.shape(x)[:-1]), name="aff1_flat_principal")


def abelian_principal_data(box=BOX) -> PrincipalConnection:
    """AdditiveR(1) with A = x dy; unit-square holonomy is translation by -1."""
    return PrincipalConnection(BaseChart(box), additive_r(1), lambda x: stack_matrix([[0.0, x[..., 0]]], x.shape[:-1]), name="abelian_principal")


def aff1_gauge(box=BOX) -> Connection:
    return induce_gauge_connection(aff1_principal_data(box))


# --- R+ semidirect R^2 bundles ---------------------------------------------------


def semidirect_linear(box=BOX):
    """Weights lam = x1, mu = x2: the group law varies everywhere."""
    return semidirect_bundle(BaseChart(box), lambda x: x[..., 0], lambda x: x[..., 1], name="semidirect(x1, x2)")


def semidirect_plateau(box=PLATEAU_BOX):
    """lam = 1/2 + step(x1), mu = 3/2 + step(x2): constant exactly on x1 <= 0, x2 <= 0."""
    return semidirect_bundle(
        BaseChart(box),
        lambda x: 0.5 + smooth_step(x[..., 0]),
        lambda x: 1.5 + smooth_step(x[..., 1]),
        name="semidirect plateau",
    )


# --- representations on the annulus ---------------------------------------------


def rep_scale(factor=2.0) -> RepresentationSpec:
    """AdditiveR(1), w(g) = g ln(factor): generator acts by multiplication."""
    k = float(np.log(factor))
    return RepresentationSpec(additive_r(1), lambda g: k * np.asarray(g, dtype=float), lambda g, t: np.exp(k * t) * np.asarray(g, dtype=float), name=f"scale{factor:g}")


def _aff1_w(g):
    g = np.asarray(g, dtype=float)
    return np.stack([0.0 * g[..., 0], g[..., 1]], axis=-1)


def _aff1_flow(g, t):
    g = np.asarray(g, dtype=float)
    return np.stack([g[..., 0], np.exp(t) * g[..., 1]], axis=-1)


def rep_aff1() -> RepresentationSpec:
    """Aff1, w(a, b) = (0, b): generator acts by (a, b) -> (a, e b)."""
    return RepresentationSpec(aff1(), _aff1_w, _aff1_flow, name="aff1_b")


def rep_trivial(group="AdditiveR") -> RepresentationSpec:
    G = additive_r(1) if group == "AdditiveR" else aff1()
    return RepresentationSpec(G, lambda g: 0.0 * np.asarray(g, dtype=float), lambda g, t: np.asarray(g, dtype=float), name="trivial")


REPRESENTATIONS = {"scale": rep_scale, "aff1_b": rep_aff1, "trivial": rep_trivial}

CONNECTIONS = {
    "exA": ex_a,
    "linear": linear_default,
    "linear_alt": linear_alt,
    "scaling": scaling,
    "exact_linear": exact_linear,
    "aff1_cocycle": aff1_cocycle,
}

# fiber group (name, dim) each connection preset is written for
PRESET_FIBER = {
    "exA": ("AdditiveR", 1),
    "linear": ("AdditiveR", 1),
    "linear_alt": ("AdditiveR", 1),
    "scaling": ("AdditiveR", 1),
    "exact_linear": ("AdditiveR", 1),
    "aff1_cocycle": ("Aff1", 2),
}

PRINCIPALS = {
    "aff1_principal": aff1_principal_data,
    "aff1_flat_principal": aff1_flat_principal_data,
    "abelian_principal": abelian_principal_data,
}


def annulus_connection(rep_name: str, r0=0.5, r1=2.0, **params) -> Connection:
    return build_from_representation(REPRESENTATIONS[rep_name](**params), AnnulusBase(r0, r1))

