import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holonomy_lab import presets
from holonomy_lab.curvature import (
    FitQualityWarning,
    _extrapolate_to_zero,
    ambrose_singer_slope,
    commutator_loop,
    curvature,
    curvature_form,
    curvature_sup,
    default_eps_list,
    slope_report_row,
)
from holonomy_lab.errors import GeometryError

coord = st.floats(-1.5, 1.5)


def test_ex_a_curvature_is_one_half():
    np.testing.assert_allclose(curvature(presets.ex_a(), [0.3, -0.8], 0, 1, [4.0]), [0.5], atol=1e-9)
    np.testing.assert_allclose(curvature(presets.ex_a(), [0.3, -0.8], 1, 0, [4.0]), [-0.5], atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(coord, coord, st.floats(-3, 3))
def test_linear_curvature_closed_form(x1, x2, g):
    val = curvature(presets.linear_default(), [x1, x2], 0, 1, [g])
    np.testing.assert_allclose(val, [(2 * x1 - 1) * g / 2], atol=1e-8)


def test_aff1_cocycle_curvature_closed_form():
    x, g = np.array([0.7, -0.4]), np.array([1.5, 2.0])
    np.testing.assert_allclose(curvature(presets.aff1_cocycle(), x, 0, 1, g), [0.0, 2.0 * (2 * 0.7 - 1) / 2], atol=1e-8)


def test_flat_connections_have_zero_curvature():
    assert curvature_sup(presets.exact_linear()) < 1e-8
    assert curvature_sup(presets.scaling()) < 1e-12
    np.testing.assert_allclose(curvature(presets.ex_a(), [0.0, 0.0], 1, 1, [1.0]), [0.0])


def test_curvature_form_is_bilinear_and_alternating():
    conn = presets.linear_default()
    x, g = [0.4, 0.1], np.array([1.3])
    v1, v2, w = np.array([1.0, 2.0]), np.array([-0.5, 0.3]), np.array([0.2, 0.7])
    r = lambda a, b: curvature_form(conn, x, a, b)(g)
    np.testing.assert_allclose(r(v1, v2), -r(v2, v1), atol=1e-10)
    np.testing.assert_allclose(r(v1 + 2 * w, v2), r(v1, v2) + 2 * r(w, v2), atol=1e-10)
    np.testing.assert_allclose(r(v1, v1), 0.0, atol=1e-12)
    np.testing.assert_allclose(r([1.0, 0.0], [0.0, 1.0]), curvature(conn, x, 0, 1, g))


def test_extrapolation_exact_on_polynomials():
    s = np.array([1.0, 0.5, 0.25, 0.125])
    q = 3.0 - 2.0 * s + 0.5 * s**2 + s**3
    np.testing.assert_allclose(_extrapolate_to_zero(s, q), 3.0, atol=1e-12)


def test_commutator_loop_geometry():
    loop = commutator_loop([0.1, 0.2], 0, 1, 0.04)
    assert loop.is_closed()
    np.testing.assert_allclose(loop(0.25), [0.3, 0.2])
    np.testing.assert_allclose(loop(0.5), [0.3, 0.4])
    with pytest.raises(GeometryError):
        commutator_loop([0.1, 0.2], 0, 0, 0.04)
    with pytest.raises(GeometryError):
        commutator_loop([0.1, 0.2], 0, 1, -1.0)
    with pytest.raises(GeometryError):
        commutator_loop([1.9, 0.0], 0, 1, 0.04, base=presets.scalar_bundle().base)


def test_ex_a_slope_matches_bracket():
    fit = ambrose_singer_slope(presets.ex_a(), [0.0, 0.0], 0, 1, [0.0], steps=400)
    np.testing.assert_allclose(fit.estimate, [1.0], atol=1e-9)
    assert fit.well_behaved


@pytest.mark.parametrize("name", ["linear", "linear_alt", "aff1_cocycle"])
def test_slope_agrees_with_twice_curvature(name):
    conn = presets.CONNECTIONS[name]()
    g = conn.bundle.e([0.0, 0.0]) + 0.5
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FitQualityWarning)
        row = slope_report_row(conn, [0.3, -0.2], 0, 1, g, steps=400)
    assert row["abs_error"] < 1e-4


def test_default_eps_list_halves():
    assert default_eps_list(0.08) == [0.08, 0.04, 0.02, 0.01]
