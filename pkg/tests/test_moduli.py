import numpy as np
import pytest

from holonomy_lab import presets
from holonomy_lab.bundle import GroupBundle
from holonomy_lab.errors import DomainError, NotFlatError, PreconditionError
from holonomy_lab.groupconn import cocycle_check, group_connection_check
from holonomy_lab.groups import additive_r, aff1
from holonomy_lab.moduli import (
    AnnulusBase,
    RepresentationSpec,
    angle_form,
    automorphism_grid,
    build_from_representation,
    compare_automorphisms,
    contractible_loop,
    estimate_automorphism,
    flatness_gate,
    generator_loop,
    homotopic_loops,
    monodromy,
    roundtrip_check,
)


def test_annulus_geometry():
    base = AnnulusBase()
    assert base.circulation_error() < 1e-10
    assert base.contains([1.0, 0.0]) and not base.contains([0.3, 0.0]) and not base.contains([2.0, 0.0])
    with pytest.raises(DomainError):
        base.check([0.0, 0.1])
    with pytest.raises(DomainError):
        AnnulusBase(2.0, 1.0)
    assert np.all(base.contains(base.sample(100, np.random.default_rng(0))))
    np.testing.assert_allclose(angle_form([2.0, 0.0]), [0.0, 0.5])


def test_loops_are_based_at_x0():
    for loop in [generator_loop(), contractible_loop(), *homotopic_loops().values()]:
        assert loop.is_closed(1e-12)
        np.testing.assert_allclose(loop.x0, [1.0, 0.0], atol=1e-15)
    with pytest.raises(PreconditionError):
        homotopic_loops((0.0, 1.0))


def test_automorphism_grid_layout():
    grid = automorphism_grid(aff1(), count=4)
    np.testing.assert_allclose(grid[:3], [[1.0, 0.0], [2.0, 0.0], [1.0, 1.0]])
    assert len(grid) == 7


def test_estimate_linear_automorphism():
    est = estimate_automorphism(additive_r(1), lambda g: 2.0 * g, count=8)
    np.testing.assert_allclose(est.dId, [[2.0]], atol=1e-9)
    assert est.invariants_hold() and est.condition_number == pytest.approx(1.0)
    bad = estimate_automorphism(additive_r(1), lambda g: g + 1.0, count=8)
    assert bad.identity_error == pytest.approx(1.0) and not bad.invariants_hold()


def test_compare_automorphisms():
    G = additive_r(1)
    two = estimate_automorphism(G, lambda g: 2.0 * g, count=8)
    three = estimate_automorphism(G, lambda g: 3.0 * g, count=8)
    assert compare_automorphisms(two, three) >= 1.0
    assert compare_automorphisms(two, two) == 0.0
    assert compare_automorphisms(two, two, conj=(lambda g: 5.0 * g, lambda g: g / 5.0)) < 1e-12
    with pytest.raises(PreconditionError):
        compare_automorphisms(two, estimate_automorphism(aff1(), lambda g: g, count=4))


def test_log_derivative_is_cocycle():
    assert cocycle_check(presets.rep_aff1().log_derivative(), count=50).passed
    assert cocycle_check(presets.rep_scale(3.0).log_derivative(), count=50).passed


def test_built_connection_is_flat_group_connection():
    conn = build_from_representation(presets.rep_aff1())
    assert group_connection_check(conn, count=50).passed
    assert flatness_gate(conn) < 1e-6


def test_trivial_representation_has_identity_monodromy():
    est = monodromy(build_from_representation(presets.rep_trivial("Aff1")), steps=200, count=6)
    np.testing.assert_allclose(est.values, est.grid, atol=1e-14)
    np.testing.assert_allclose(est.dId, np.eye(2), atol=1e-9)


def test_scale_monodromy_and_homotopy_invariance():
    conn = build_from_representation(presets.rep_scale(2.0))
    est = monodromy(conn, steps=2000, count=6)
    np.testing.assert_allclose(est.values, 2.0 * est.grid, rtol=1e-9)
    np.testing.assert_allclose(est.dId, [[2.0]], atol=1e-8)
    assert est.extra["max_homotopy_discrepancy"] < 1e-8
    assert est.extra["contractible_identity_error"] < 1e-10


def test_roundtrip_aff1():
    res = roundtrip_check(presets.rep_aff1(), steps=2000, count=6)
    assert res.passed, res.verdict()
    np.testing.assert_allclose(res.estimate.dId, np.diag([1.0, np.e]), atol=1e-7)
    assert res.verdict().startswith("ROUNDTRIP: PASS")


def test_numeric_flow_matches_closed_form():
    rep = presets.rep_aff1()
    bare = RepresentationSpec(rep.group, rep.w, name="numeric")
    g = np.array([[1.5, 0.4], [0.7, -1.1]])
    np.testing.assert_allclose(bare.flow_at(g), rep.flow_at(g), rtol=1e-12)


def test_curved_connection_rejected():
    bundle = GroupBundle.trivial(AnnulusBase(), additive_r(1))
    with pytest.raises(NotFlatError):
        monodromy(presets.linear_default(bundle=bundle), steps=100, count=4)


def test_bad_representation_rejected():
    # w(g) = 1 is not a group-morphism field on AdditiveR
    rep = RepresentationSpec(additive_r(1), lambda g: np.ones_like(np.asarray(g, dtype=float)), name="shift")
    with pytest.raises(PreconditionError):
        build_from_representation(rep)
