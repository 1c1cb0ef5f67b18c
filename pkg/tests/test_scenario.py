import json
from pathlib import Path

import numpy as np
import pytest

from holonomy_lab.errors import ScenarioError
from holonomy_lab.scenario import Workspace, load, validate
from holonomy_lab.transport import holonomy

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def ws(data):
    return Workspace(validate(data))


BASE = {"base": {"box": [[-2, 2], [-2, 2]]}, "bundle": {"group": "AdditiveR", "params": [1]}}


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_scenarios_load(path):
    load(path)


def test_expression_connection_matches_preset():
    w = load(SCENARIOS / "exA.json")
    conn = w.connection()
    np.testing.assert_allclose(holonomy(conn, w.path("unit_square"), 200)([0.0]), [1.0], atol=1e-12)
    np.testing.assert_allclose(w.point(), [0.3, 0.2])
    np.testing.assert_allclose(w.fiber_points(conn.bundle), [[0.0]])


def test_run_defaults_and_flags():
    w = ws({**BASE, "connections": {"c": {"preset": "linear"}}, "run": {"tol": 1e-3, "steps": 50}})
    assert w.steps() == 50 and w.steps(7) == 7
    assert w.seed() == 42 and w.seed(3) == 3
    assert w.tol() == 1e-3 and w.tol(1e-9) == 1e-9
    assert ws({**BASE, "connections": {"c": {"preset": "linear"}}}).tol(default=1e-5) == 1e-5
    np.testing.assert_allclose(w.point(), [0.0, 0.0])
    assert w.pairs() == [(0, 1)]


@pytest.mark.parametrize(
    "data, loc",
    [
        ({**BASE, "extra": 1}, "extra"),
        ({**BASE, "run": {"steps": 0}}, "run.steps"),
        ({**BASE, "connections": {"c": {"gamma": [["0", "x1"]], "trivial": True}}}, "connections.c"),
        ({**BASE, "paths": {"p": {"type": "spiral"}}}, "paths.p.type"),
        ({"base": {"box": [[-1, 1]]}, "annulus": {}}, "<root>"),
    ],
)
def test_schema_errors_carry_location(data, loc):
    with pytest.raises(ScenarioError) as info:
        validate(data)
    assert info.value.path == loc


@pytest.mark.parametrize(
    "data, loc",
    [
        ({**BASE, "connections": {"c": {"gamma": [["0", "q"]]}}}, "connections.c.gamma[0][1]"),
        ({**BASE, "connections": {"c": {"gamma": [["0", "ln(x1)"]]}}}, "connections.c.gamma"),
        ({**BASE, "connections": {"c": {"preset": "nope"}}}, "connections.c.preset"),
        ({**BASE, "connections": {"c": {"preset": "aff1_cocycle"}}}, "connections.c.preset"),
        ({**BASE, "paths": {"a": {"type": "reverse", "of": "b"}, "b": {"type": "reverse", "of": "a"}}}, "paths.a"),
        ({**BASE, "paths": {"s": {"type": "segment", "start": [0, 0]}}}, "paths.s.end"),
        ({**BASE, "bundle": {"group": "SO3"}}, "bundle.group"),
        ({**BASE, "run": {"point": [0.0]}, "connections": {"c": {"preset": "linear"}}}, "run.point"),
    ],
)
def test_resolution_errors_carry_location(data, loc):
    with pytest.raises(ScenarioError) as info:
        w = ws(data)
        w.point()
    assert info.value.path.startswith(loc), info.value.path


def test_unknown_names_on_lookup():
    w = ws({**BASE, "connections": {"c": {"preset": "linear"}}})
    with pytest.raises(ScenarioError):
        w.path("missing")
    with pytest.raises(ScenarioError):
        w.connection("missing")
    with pytest.raises(ScenarioError):
        w.principal
    with pytest.raises(ScenarioError):
        w.automorphism("missing")


def test_unreadable_and_invalid_files(tmp_path):
    with pytest.raises(ScenarioError):
        load(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError) as info:
        load(bad)
    assert "invalid JSON" in str(info.value)


def test_representation_and_automorphisms():
    w = load(SCENARIOS / "aff1_rep.json")
    rep = w.representation
    np.testing.assert_allclose(rep.flow_at(np.array([2.0, 1.0])), [2.0, np.e])
    fmap, inv = w.automorphism("shift")
    np.testing.assert_allclose(inv(fmap(np.array([1.0, 0.5]))), [1.0, 0.5])
    assert w.automorphism("expected")[1] is None
    assert w.is_annulus and w.point().tolist() == [1.0, 0.0]


def test_custom_group_and_semidirect_bundle(tmp_path):
    data = {
        "base": {"box": [[-1, 1]]},
        "bundle": {"custom": {"dim": 1, "mul": ["g1 * h1"], "inv": ["1 / g1"], "identity": [1.0], "chart": [[0, None]], "samples": [[0.5, 2.0]]}},
        "connections": {"c": {"gamma": [["g1 * x1"]]}},
    }
    w = ws(data)
    assert w.bundle.fiber_dim == 1 and w.bundle.has_group_law
    sd = load(SCENARIOS / "semidirect_expr.json")
    np.testing.assert_allclose(sd.bundle.mul(np.array([2.0, -1.0]), np.array([2.0, 1.0, 1.0]), np.array([3.0, 1.0, 2.0])), [6.0, 5.0, 2.0])
    p = tmp_path / "s.json"
    p.write_text(json.dumps(data))
    assert load(p).source == str(p)
