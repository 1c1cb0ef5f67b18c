import numpy as np
import pytest

from holonomy_lab import presets
from holonomy_lab.bundle import Connection
from holonomy_lab.errors import ChartEscapeError, CompositionError, DomainError
from holonomy_lab.transport import (
    arc,
    circle,
    concat,
    constant,
    ellipse,
    holonomy,
    join,
    lift_path,
    polyline,
    reverse,
    segment,
    square_loop,
)


def test_concat_runs_second_argument_first():
    p = segment([1.0, 0.0], [1.0, 1.0], name="p")
    q = segment([0.0, 0.0], [1.0, 0.0], name="q")
    pq = concat(p, q)
    np.testing.assert_allclose(pq(0.25), [0.5, 0.0])
    np.testing.assert_allclose(pq(0.75), [1.0, 0.5])
    np.testing.assert_allclose(pq.derivative(0.25), [2.0, 0.0])


def test_join_quarter_layout():
    a = segment([0.0, 0.0], [1.0, 0.0])
    b = segment([1.0, 0.0], [1.0, 1.0])
    c = segment([1.0, 1.0], [0.0, 1.0])
    path = join(a, b, c)
    np.testing.assert_allclose(path(0.25), [1.0, 0.0])
    np.testing.assert_allclose(path(0.5), [1.0, 1.0])
    np.testing.assert_allclose(path(0.75), [0.5, 1.0])


def test_concat_rejects_mismatched_endpoints():
    with pytest.raises(CompositionError):
        concat(segment([5.0, 0.0], [6.0, 0.0]), segment([0.0, 0.0], [1.0, 0.0]))


def test_reverse_and_closed_paths():
    sq = square_loop()
    r = reverse(sq)
    assert sq.is_closed() and r.is_closed()
    np.testing.assert_allclose(r(0.25), sq(0.75))
    np.testing.assert_allclose(r.derivative(0.3), -sq.derivative(0.7))
    np.testing.assert_allclose(sq(0.25), [1.0, 0.0])


def test_curve_shapes():
    np.testing.assert_allclose(circle([1.0, 0.0], 0.5)(0.25), [1.0, 0.5], atol=1e-15)
    np.testing.assert_allclose(circle(radius=1.0, clockwise=True)(0.25), [0.0, -1.0], atol=1e-15)
    np.testing.assert_allclose(ellipse(semi_x=2.0, semi_y=0.5)(0.25), [0.0, 0.5], atol=1e-15)
    np.testing.assert_allclose(arc(theta0=0.0, theta1=np.pi)(1.0), [-1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(polyline([[0, 0], [1, 0], [1, 1]])(0.5), [1.0, 0.0])
    assert polyline([[0, 0], [1, 0], [1, 1]], closed=True).is_closed()
    np.testing.assert_allclose(constant([0.3, 0.4]).derivative(0.6), [0.0, 0.0])


def test_ex_a_unit_square_translates_by_one():
    hol = holonomy(presets.ex_a(), square_loop(), steps=400)
    np.testing.assert_allclose(hol([0.0]), [1.0], atol=1e-12)
    np.testing.assert_allclose(holonomy(presets.ex_a(), reverse(square_loop()), 400)([0.0]), [-1.0], atol=1e-12)


@pytest.mark.parametrize("r", [0.3, 1.0, 1.7])
def test_ex_a_circle_translates_by_area(r):
    hol = holonomy(presets.ex_a(), circle(radius=r), steps=2000)
    np.testing.assert_allclose(hol([0.5]), [0.5 + np.pi * r * r], atol=1e-10)


def test_linear_square_holonomy_closed_form():
    # A = x2 dx1 + x1^2 dx2: circulation over [0.5, 1.5] x [0, 1] is the integral of 2 x1 - 1, i.e. 1
    hol = holonomy(presets.linear_default(), square_loop((0.5, 0.0)), steps=1000)
    np.testing.assert_allclose(hol([2.0]), [2.0 * np.e], rtol=1e-8)


def test_composed_path_holonomy_is_composition():
    conn = presets.aff1_cocycle()
    p = segment([0.0, 0.0], [0.6, 0.4])
    q = arc([0.6, 0.0], 0.4, np.pi / 2, np.pi)
    g0 = np.array([1.2, -0.4])
    whole = holonomy(conn, join(p, q), 4000)(g0)
    parts = holonomy(conn, q, 2000)(holonomy(conn, p, 2000)(g0))
    np.testing.assert_allclose(whole, parts, atol=1e-12)


def test_aff1_cocycle_circle_frozen_value():
    # independent high-order reference; closed form 0.7 exp((2 cx - 1) pi r^2)
    loop = circle([0.2, -0.1], 0.8)
    out = holonomy(presets.aff1_cocycle(), loop, 4000)([1.3, 0.7])
    np.testing.assert_allclose(out, [1.3, 0.20949686102268922], rtol=1e-10)
    np.testing.assert_allclose(out[1], 0.7 * np.exp((2 * 0.2 - 1) * np.pi * 0.64), rtol=1e-10)


def test_batched_transport():
    g0 = np.array([[0.0], [1.0], [-2.0]])
    out = holonomy(presets.ex_a(), square_loop(), 200)(g0)
    np.testing.assert_allclose(out, g0 + 1.0, atol=1e-12)


def test_lift_path_samples_and_doubling_delta():
    lc = lift_path(presets.linear_default(), square_loop((0.5, 0.0)), [1.0], steps=200, verify=True)
    assert lc.params[0] == 0.0 and abs(lc.params[-1] - 1.0) < 1e-12
    assert len(lc.points) == len(lc.params)
    assert lc.doubling_delta < 1e-6
    np.testing.assert_allclose(lc.endpoint, [np.e], rtol=1e-6)


def test_chart_escape_reports_time():
    bundle = presets.aff1_bundle()
    conn = Connection(bundle, lambda x, g: np.broadcast_to(np.array([[-3.0, 0.0], [0.0, 0.0]]), np.shape(g)[:-1] + (2, 2)))
    with pytest.raises(ChartEscapeError) as info:
        holonomy(conn, segment([0.0, 0.0], [1.0, 0.0]), 3000)([1.0, 0.0])
    assert abs(info.value.t - 1.0 / 3.0) < 1e-3


def test_path_leaving_base_raises():
    with pytest.raises(DomainError):
        holonomy(presets.ex_a(), circle(radius=2.5), 100)([0.0])


def test_initial_point_outside_chart():
    with pytest.raises(ChartEscapeError):
        holonomy(presets.aff1_cocycle(), square_loop(), 100)([-1.0, 0.0])


def test_rk4_error_scales_fourth_order():
    conn = presets.aff1_cocycle()
    loop = circle([0.2, -0.1], 0.8)
    exact = 0.7 * np.exp((2 * 0.2 - 1) * np.pi * 0.64)
    e1 = abs(holonomy(conn, loop, 40)([1.3, 0.7])[1] - exact)
    e2 = abs(holonomy(conn, loop, 80)([1.3, 0.7])[1] - exact)
    assert 10 < e1 / e2 < 22
