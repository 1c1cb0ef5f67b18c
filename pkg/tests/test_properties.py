"""Structural invariants checked on random inputs."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from holonomy_lab import presets
from holonomy_lab.groupconn import group_connection_residual, inversion_residual
from holonomy_lab.groups import aff1, semidirect
from holonomy_lab.moduli import build_from_representation
from holonomy_lab.transport import circle, holonomy, join, reverse, segment

coord = st.floats(-1.2, 1.2)
pos = st.floats(0.3, 3.0)
real = st.floats(-2.0, 2.0)
SETTINGS = settings(max_examples=25, deadline=None)


@SETTINGS
@given(coord, coord, pos, real, pos, real, st.floats(-1, 1), st.floats(-1, 1))
def test_group_connection_residuals_vanish(x1, x2, a, b, c, d, v1, v2):
    conn = presets.aff1_cocycle()
    x, v = np.array([x1, x2]), np.array([v1, v2])
    g, h = np.array([a, b]), np.array([c, d])
    assert np.max(np.abs(group_connection_residual(conn, x, g, h, v))) < 1e-6
    assert np.max(np.abs(inversion_residual(conn, x, g, v))) < 1e-6


@SETTINGS
@given(coord, coord, st.floats(-3, 3))
def test_path_then_reverse_is_identity(x1, x2, g):
    p = join(segment([0.0, 0.0], [x1, x2]), segment([x1, x2], [x2, -x1]))
    conn = presets.linear_alt()
    out = holonomy(conn, reverse(p), 300)(holonomy(conn, p, 300)([g]))
    np.testing.assert_allclose(out, [g], atol=1e-9)


@SETTINGS
@given(pos, real, pos, real, st.floats(0.2, 0.9))
def test_holonomy_of_group_connection_is_automorphism(a, b, c, d, r):
    conn = presets.aff1_cocycle()
    G = aff1()
    hol = holonomy(conn, circle([0.1, 0.0], r), 600)
    g, h = np.array([a, b]), np.array([c, d])
    np.testing.assert_allclose(hol(G.mul(g, h)), G.mul(hol(g), hol(h)), rtol=1e-9, atol=1e-9)


@SETTINGS
@given(pos, real, st.floats(0.6, 1.8))
def test_flat_monodromy_depends_on_class_only(a, b, r):
    conn = build_from_representation(presets.rep_aff1(), check=False)
    g = np.array([a, b])
    ref = holonomy(conn, circle(radius=r), 1500)(g)
    np.testing.assert_allclose(ref, [a, np.e * b], rtol=1e-9, atol=1e-9)


@SETTINGS
@given(st.floats(-2, 2), st.floats(-2, 2), pos, real, real, pos, real, real)
def test_semidirect_inverse_and_identity(lam, mu, a, b, c, d, e, f):
    G = semidirect(lam, mu)
    g = np.array([a, b, c])
    np.testing.assert_allclose(G.mul(g, G.inv(g)), G.identity, atol=1e-9)
    np.testing.assert_allclose(G.mul(G.identity, g), g, atol=1e-12)
    h = np.array([d, e, f])
    np.testing.assert_allclose(G.inv(G.mul(g, h)), G.mul(G.inv(h), G.inv(g)), rtol=1e-9, atol=1e-9)


@SETTINGS
@given(st.floats(0.2, 1.8), st.floats(0.0, 6.28))
def test_ex_a_holonomy_is_enclosed_area(r, start):
    out = holonomy(presets.ex_a(), circle(radius=r, start_angle=start), 1200)([0.0])
    np.testing.assert_allclose(out, [np.pi * r * r], rtol=1e-9)
