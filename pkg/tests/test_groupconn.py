import numpy as np
import pytest

from holonomy_lab import presets
from holonomy_lab.bundle import Connection, SectionSpec, trivial_connection
from holonomy_lab.errors import PreconditionError
from holonomy_lab.groupconn import (
    CocycleForm,
    add_cocycle,
    affine_roundtrip,
    cocycle_check,
    cocycle_residual,
    conjugation_residual,
    connection_difference,
    flow_trivialization,
    group_connection_check,
    group_connection_residual,
    holonomy_morphism_residual,
    inversion_residual,
    is_group_connection,
)
from holonomy_lab.transport import circle, square_loop


def test_ex_a_witness_residuals():
    conn = presets.ex_a()
    x, e, v = np.array([1.0, 0.0]), np.array([0.0]), np.array([0.0, 1.0])
    np.testing.assert_allclose(group_connection_residual(conn, x, e, e, v), [-1.0], atol=1e-9)
    np.testing.assert_allclose(inversion_residual(conn, x, e, v), [2.0], atol=1e-9)


@pytest.mark.parametrize("name", ["linear", "linear_alt", "scaling", "exact_linear", "aff1_cocycle"])
def test_group_connections_pass(name):
    rep = group_connection_check(presets.CONNECTIONS[name](), count=60)
    assert rep.passed, rep.verdict()
    assert rep.verdict().startswith("GROUP_CONNECTION: PASS")
    assert len(rep.rows) == 60


def test_ex_a_fails_the_gate():
    rep = group_connection_check(presets.ex_a(), count=60)
    assert not rep.passed
    assert rep.details["max_mul_residual"] > 0.1
    assert not is_group_connection(presets.ex_a(), count=20)


def test_trivial_connection_on_varying_law():
    b = presets.semidirect_plateau()
    conn = trivial_connection(b)
    assert group_connection_check(conn, count=60, region=presets.PLATEAU_FLAT_REGION).passed
    assert not group_connection_check(conn, count=60).passed
    assert not group_connection_check(trivial_connection(presets.semidirect_linear()), count=60).passed


def test_scalar_cocycle_gives_linear_connection():
    b = presets.scalar_bundle()
    kappa = np.array([0.3, -1.2])
    form = CocycleForm(b, lambda x, g: np.asarray(g)[..., :, None] * kappa)
    assert cocycle_check(form, count=40).passed
    conn = add_cocycle(trivial_connection(b), form)
    np.testing.assert_allclose(conn.matrix([0.1, 0.2], [2.0]), [[0.6, -2.4]])
    assert group_connection_check(conn, count=40).passed


def test_non_cocycle_is_detected():
    b = presets.scalar_bundle()
    form = CocycleForm(b, lambda x, g: np.ones(np.shape(g)[:-1] + (1, 2)))
    np.testing.assert_allclose(cocycle_residual(form, [0.0, 0.0], [1.0], [2.0], [1.0, 0.0]), [-1.0])
    assert not cocycle_check(form, count=10).passed


def test_difference_of_group_connections_is_cocycle():
    b = presets.scalar_bundle()
    c1, c2 = presets.linear_default(bundle=b), presets.linear_alt(bundle=b)
    form = connection_difference(c1, c2, count=40)
    rep = cocycle_check(form, count=40)
    assert rep.passed, rep.verdict()
    # A1 - A2 = (x2 - cos x1, x1^2 - x1 x2), times g
    np.testing.assert_allclose(form.matrix([0.5, 1.0], [2.0]), [[2.0 * (1.0 - np.cos(0.5)), 2.0 * (0.25 - 0.5)]], atol=1e-12)


def test_difference_preconditions():
    b = presets.scalar_bundle()
    with pytest.raises(PreconditionError):
        connection_difference(presets.linear_default(), presets.linear_alt())
    with pytest.raises(PreconditionError):
        connection_difference(presets.ex_a(bundle=b), presets.linear_default(bundle=b), count=20)


def test_affine_roundtrip_aff1():
    b = presets.aff1_bundle()
    base = presets.aff1_cocycle(bundle=b)
    triv = trivial_connection(b)
    form = connection_difference(base, triv, count=40)
    assert cocycle_check(form, count=40).passed
    out = affine_roundtrip(triv, form)
    assert out["theta_recovered"] < 1e-12 and out["gamma_recovered"] < 1e-12


def test_holonomy_morphism():
    assert abs(holonomy_morphism_residual(presets.ex_a(), square_loop(), [0.5], [-0.2], steps=200) - 1.0) < 1e-10
    g = np.array([[1.3, 0.7], [0.6, -1.0]])
    h = np.array([[0.9, 0.2], [2.0, 0.5]])
    assert holonomy_morphism_residual(presets.aff1_cocycle(), circle([0.2, -0.1], 0.8), g, h, steps=800) < 1e-10


def test_flow_trivialization_of_exact_connection():
    conn = presets.exact_linear()
    cube = [[-1.0, 1.0], [-1.0, 1.0]]
    triv = flow_trivialization(conn, cube, anchor=[0.0, 0.0], steps=1000)
    x = np.array([0.6, -0.3])
    g = np.array([[1.0], [-2.5]])
    gp, _ = triv.psi(g, x)
    expected = g * np.exp(presets.exact_potential([0.0, 0.0]) - presets.exact_potential(x))
    np.testing.assert_allclose(gp, expected, rtol=1e-10)
    assert triv.roundtrip_residual(count=3, samples=5) < 1e-10
    assert triv.homomorphism_residual(count=3, samples=5) < 1e-10


def test_trivialization_of_trivial_connection_is_identity():
    b = presets.aff1_bundle()
    triv = flow_trivialization(trivial_connection(b), [[-1.0, 1.0], [-1.0, 1.0]], steps=50)
    g = np.array([1.4, -0.3])
    np.testing.assert_allclose(triv.psi(g, [0.5, 0.5])[0], g)
    assert triv.path_to_anchor([0.5, 0.5]).x1.tolist() == [0.0, 0.0]
    assert triv.path_to_anchor([0.0, 0.0]).is_closed()


def test_trivialization_preconditions():
    conn = presets.exact_linear()
    with pytest.raises(PreconditionError):
        flow_trivialization(conn, [[-1.0, 2.5], [-1.0, 1.0]])
    with pytest.raises(PreconditionError):
        flow_trivialization(conn, [[-1.0, 1.0], [-1.0, 1.0]], anchor=[1.5, 0.0])
    triv = flow_trivialization(conn, [[-1.0, 1.0], [-1.0, 1.0]])
    with pytest.raises(PreconditionError):
        triv.path_to_anchor([1.5, 0.0])


def test_conjugation_residual_vanishes():
    b = presets.aff1_bundle()
    s = SectionSpec(presets.BOX, lambda x: np.stack([np.exp(x[..., 0] * x[..., 1]), np.sin(x[..., 0])], -1))
    h = SectionSpec(presets.BOX, lambda x: np.stack([1.5 + 0.0 * x[..., 0], x[..., 1]], -1))
    res = conjugation_residual(b, s, h, np.array([0.0, 0.7]), np.array([1.0, -0.5]))
    np.testing.assert_allclose(res, 0.0, atol=1e-8)
    with pytest.raises(PreconditionError):
        conjugation_residual(b, s, h, np.array([0.5, 0.7]), np.array([1.0, 0.0]))


def test_plain_bundle_has_no_gate():
    from holonomy_lab.bundle import BaseChart, GroupBundle

    b = GroupBundle.plain(BaseChart(presets.BOX), 1)
    with pytest.raises(PreconditionError):
        group_connection_check(Connection(b, lambda x, g: np.zeros((1, 2))), count=5)
