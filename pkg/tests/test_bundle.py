import numpy as np
import pytest

from holonomy_lab import presets
from holonomy_lab.bundle import (
    BaseChart,
    Connection,
    GroupBundle,
    SectionSpec,
    connection_sanity,
    covariant_derivative,
    horizontal_project,
    lift_vector,
    matrix_gamma,
    smooth_step,
    trivial_connection,
    vertical_project,
)
from holonomy_lab.errors import DomainError
from holonomy_lab.groups import aff1


def test_ex_a_gamma_value():
    conn = presets.ex_a()
    np.testing.assert_allclose(conn.matrix([0.7, -0.2], [3.0]), [[0.0, 0.7]])
    np.testing.assert_allclose(conn.horizontal([0.7, -0.2], [3.0], [1.0, 2.0]), [1.4])


def test_factored_matches_full_gamma():
    conn = presets.linear_default()
    x, g = np.array([0.3, -1.1]), np.array([2.5])
    full = Connection(conn.bundle, lambda x, g: np.asarray(g)[..., :, None] * np.stack([x[..., 1], x[..., 0] ** 2], -1)[..., None, :])
    np.testing.assert_allclose(conn.matrix(x, g), full.matrix(x, g))
    assert conn.is_factored and not full.is_factored


def test_projections_split_a_tangent_vector():
    conn = presets.aff1_cocycle()
    x, g = np.array([0.4, 0.9]), np.array([1.5, -0.3])
    w = (np.array([0.2, -0.5]), np.array([1.0, 2.0]))
    hb, hf = horizontal_project(conn, x, g, w)
    vert = vertical_project(conn, x, g, w)
    np.testing.assert_allclose(hb, w[0])
    np.testing.assert_allclose(hf + vert, w[1])
    np.testing.assert_allclose(vertical_project(conn, x, g, (hb, hf)), 0.0, atol=1e-15)


def test_covariant_derivative_of_flat_section_vanishes():
    conn = presets.exact_linear()
    s = SectionSpec([[-1.0, 1.0], [-1.0, 1.0]], lambda x: np.exp(presets.exact_potential(x))[..., None] * 1.0)
    val = covariant_derivative(conn, s, [0.2, 0.3], [1.0, -0.4])
    np.testing.assert_allclose(val, 0.0, atol=1e-8)


def test_covariant_derivative_of_constant_section():
    conn = presets.linear_default()
    s = SectionSpec([[-1.0, 1.0], [-1.0, 1.0]], lambda x: np.full(np.shape(x)[:-1] + (1,), 2.0), lambda x: np.zeros((1, 2)))
    # -g A(x) v with A = (x2, x1^2)
    np.testing.assert_allclose(covariant_derivative(conn, s, [0.5, 0.25], [1.0, 1.0]), [-2.0 * (0.25 + 0.25)])


def test_covariant_derivative_outside_section_domain():
    conn = presets.linear_default()
    s = SectionSpec([[0.0, 1.0], [0.0, 1.0]], lambda x: np.ones(1))
    with pytest.raises(DomainError):
        covariant_derivative(conn, s, [1.5, 0.5], [1.0, 0.0])


def test_base_chart_check():
    base = BaseChart([[-1.0, 1.0], [0.0, 2.0]])
    base.check([0.0, 1.0])
    with pytest.raises(DomainError):
        base.check([0.0, 2.0])


def test_trivial_bundle_identity_and_samples():
    b = GroupBundle.trivial(BaseChart(presets.BOX), aff1())
    np.testing.assert_allclose(b.e([0.1, 0.2]), [1.0, 0.0])
    g = b.sample_fiber(30, np.random.default_rng(1))
    assert np.all(b.contains(g))
    assert b.has_group_law and b.base_independent


def test_plain_bundle_has_no_group_law():
    b = GroupBundle.plain(BaseChart(presets.BOX), 2)
    assert not b.has_group_law


def test_semidirect_bundle_law_depends_on_base():
    b = presets.semidirect_linear()
    g, h = np.array([2.0, 1.0, 1.0]), np.array([3.0, 1.0, 2.0])
    np.testing.assert_allclose(b.mul(np.array([2.0, -1.0]), g, h), [6.0, 5.0, 2.0])
    np.testing.assert_allclose(b.mul(np.array([0.0, 0.0]), g, h), [6.0, 2.0, 3.0])


def test_smooth_step_is_flat_on_the_left():
    u = np.array([-1.0, 0.0, 0.5, 1.0])
    np.testing.assert_allclose(smooth_step(u), [0.0, 0.0, np.exp(-2.0), np.exp(-1.0)])


def test_trivial_connection_and_matrix_gamma():
    b = presets.aff1_bundle()
    t = trivial_connection(b)
    assert t.matrix(np.zeros((4, 2)), np.ones((4, 2))).shape == (4, 2, 2)
    c = Connection(b, matrix_gamma(lambda x, g: [[x[..., 0], 0.0], [0.0, g[..., 1]]], 2, 2))
    np.testing.assert_allclose(c.matrix([0.5, 0.1], [1.0, 3.0]), [[0.5, 0.0], [0.0, 3.0]])


def test_lift_vector_and_sanity():
    conn = presets.ex_a()
    xv, gv = lift_vector(conn, lambda x: np.array([0.0, 1.0]), [0.3, 0.0], [0.0])
    np.testing.assert_allclose(gv, [0.3])
    info = connection_sanity(conn)
    assert info["max_abs_gamma"] <= 2.0 and info["max_jump"] < 1e-4
