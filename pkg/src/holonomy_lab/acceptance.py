"""Acceptance suite: ten end-to-end checks with fixed tolerances.

Each check returns a :class:`CriterionResult` with the measured quantities; the
CLI ``acceptance`` command and the test suite both run them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from holonomy_lab import presets
from holonomy_lab.bundle import trivial_connection
from holonomy_lab.curvature import ambrose_singer_slope, curvature
from holonomy_lab.gauge import compare_curvatures, compare_holonomies, induce_gauge_connection
from holonomy_lab.groupconn import (
    affine_roundtrip,
    cocycle_check,
    connection_difference,
    flow_trivialization,
    group_connection_check,
    group_connection_residual,
    holonomy_morphism_residual,
)
from holonomy_lab.groups import group_axiom_residuals, semidirect
from holonomy_lab.moduli import roundtrip_check
from holonomy_lab.numerics import sup_norm
from holonomy_lab.transport import DEFAULT_STEPS, arc, circle, ellipse, holonomy, polyline, square_loop

SEED = 20240


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        detail = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{self.number:2d}] {'PASS' if self.passed else 'FAIL'} {self.title} ({detail}) {self.seconds:.1f}s"

    def as_row(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed, **{k: v for k, v in self.measured.items()}}


def _fmt(v):
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def random_loops(count: int, seed: int, half: float = 1.5) -> list:
    """Seeded closed loops inside the (-half, half)^2 box: polygons, circles and ellipses."""
    rng = np.random.default_rng(seed)
    loops = []
    for k in range(count):
        kind = k % 3
        if kind == 0:
            pts = rng.uniform(-half, half, size=(int(rng.integers(3, 6)), 2))
            loops.append(polyline(pts, closed=True, name=f"polygon{k}"))
        elif kind == 1:
            r = rng.uniform(0.1, 0.6)
            c = rng.uniform(-half + r, half - r, size=2)
            loops.append(circle(c, r, rng.uniform(0, 2 * np.pi), clockwise=bool(rng.integers(2)), name=f"circle{k}"))
        else:
            a, b = rng.uniform(0.1, 0.6, size=2)
            c = rng.uniform(-half + 0.6, half - 0.6, size=2)
            loops.append(ellipse(c, a, b, rng.uniform(0, 2 * np.pi), name=f"ellipse{k}"))
    return loops


def criterion_1(steps=DEFAULT_STEPS) -> CriterionResult:
    worst = 0.0
    rng = np.random.default_rng(SEED)
    for bundle in (presets.scalar_bundle(), presets.aff1_bundle()):
        conn = trivial_connection(bundle)
        g = bundle.sample_fiber(10, rng)
        for loop in random_loops(10, SEED + bundle.fiber_dim):
            worst = max(worst, sup_norm(holonomy(conn, loop, steps)(g) - g))
    return CriterionResult(1, "trivial connection: 20 seeded loops have identity holonomy", worst < 1e-10, {"sup_error": worst, "loops": 20})


def criterion_2(steps=DEFAULT_STEPS) -> CriterionResult:
    conn = presets.ex_a()
    rng = np.random.default_rng(SEED)
    g = rng.uniform(-2, 2, size=(10, 1))
    hol_err = sup_norm(holonomy(conn, square_loop(), steps)(g) - (g + 1.0))
    xs = rng.uniform(-1.5, 1.5, size=(20, 2))
    curv_err = max(sup_norm(curvature(conn, x, 0, 1, g) - 0.5) for x in xs)
    fit = ambrose_singer_slope(conn, np.array([0.3, 0.2]), 0, 1, np.array([0.7]), steps=steps)
    slope_err = sup_norm(fit.estimate - 1.0)
    ok = hol_err < 1e-9 and curv_err < 1e-8 and slope_err < 1e-4
    return CriterionResult(2, "linear-in-x example: holonomy g+1, curvature 1/2, loop slope 1", ok,
                           {"holonomy_error": hol_err, "curvature_error": curv_err, "slope_error": slope_err})


def criterion_3(steps=None) -> CriterionResult:
    # On the unit square or a single circle RK4 integrates this connection exactly,
    # so the order is measured on a multi-turn arc where the error is visible.
    conn = presets.ex_a()
    omega = 20.0
    path = arc((0.0, 0.0), 1.0, 0.0, omega)
    exact = omega / 2 + np.sin(2 * omega) / 4
    counts = [250, 500, 1000, 2000]
    errs = [abs(float(holonomy(conn, path, n)(np.array([0.0]))[0]) - exact) for n in counts]
    slope = float(np.polyfit(np.log(counts), np.log(errs), 1)[0])
    return CriterionResult(3, "RK4 endpoint error decays as steps^-4", abs(slope + 4) <= 0.5, {"slope": slope, "error_at_250": errs[0], "error_at_2000": errs[-1]})


def criterion_4(steps=None) -> CriterionResult:
    lin = group_connection_check(presets.linear_default())
    witness = group_connection_residual(presets.ex_a(), np.array([1.0, 0.0]), np.array([0.0]), np.array([0.0]), np.array([0.0, 1.0]))
    w = sup_norm(witness)
    exa = group_connection_check(presets.ex_a())
    ok = lin.passed and w >= 0.5 and not exa.passed
    return CriterionResult(4, "group-connection gate accepts linear, rejects the x dy example", ok,
                           {"linear_residual": lin.max_residual, "witness_residual": w, "exA_grid_residual": exa.max_residual})


def _connection_pairs():
    b = presets.scalar_bundle()
    ab = presets.aff1_bundle()
    return [
        (presets.linear_default(bundle=b), presets.linear_alt(bundle=b)),
        (presets.aff1_cocycle(bundle=ab), trivial_connection(ab)),
    ]


def criterion_5(steps=None) -> CriterionResult:
    coc, trip = 0.0, 0.0
    for c1, c2 in _connection_pairs():
        form = connection_difference(c1, c2)
        coc = max(coc, cocycle_check(form, count=200).max_residual)
        trip = max(trip, *affine_roundtrip(c2, form).values())
        trip = max(trip, *affine_roundtrip(c1, form).values())
    return CriterionResult(5, "connection differences are cocycles; affine round trip", coc < 1e-6 and trip < 1e-6, {"cocycle_residual": coc, "roundtrip_error": trip})


def accepted_group_connections() -> list:
    return [
        presets.linear_default(),
        presets.scaling(),
        presets.exact_linear(),
        presets.aff1_cocycle(),
        induce_gauge_connection(presets.aff1_principal_data()),
    ]


def criterion_6(steps=DEFAULT_STEPS) -> CriterionResult:
    worst, count = 0.0, 0
    loops = random_loops(5, SEED + 6)
    names = []
    for conn in accepted_group_connections():
        if not group_connection_check(conn).passed:
            return CriterionResult(6, "holonomy is a group morphism", False, {"rejected": conn.name})
        names.append(conn.name)
        rng = np.random.default_rng(SEED)
        g, h = conn.bundle.sample_fiber(20, rng), conn.bundle.sample_fiber(20, rng)
        for loop in loops:
            worst = max(worst, holonomy_morphism_residual(conn, loop, g, h, steps))
            count += 1
    return CriterionResult(6, "holonomy is a group morphism", worst < 1e-6, {"sup_residual": worst, "connections": len(names), "loops": count})


def criterion_7(steps=DEFAULT_STEPS) -> CriterionResult:
    pc = presets.aff1_principal_data()
    hol = max(compare_holonomies(pc, loop, 20, SEED, steps) for loop in (square_loop(), circle((0.3, -0.2), 0.9)))
    rng = np.random.default_rng(SEED)
    xs = rng.uniform(-1.5, 1.5, size=(5, 2))
    q = pc.group.sample(10, rng)
    curv = max(compare_curvatures(pc, x, 0, 1, q) for x in xs)
    ab = presets.abelian_principal_data()
    gauge = induce_gauge_connection(ab)
    x, g = ab.base.sample(50, rng), ab.group.sample(50, rng)
    exact_zero = bool(np.all(gauge.matrix(x, g) == 0.0))
    ok = hol < 1e-6 and curv < 1e-5 and exact_zero
    return CriterionResult(7, "gauge holonomy and curvature are pushforwards; abelian gauge is trivial", ok,
                           {"holonomy_discrepancy": hol, "curvature_discrepancy": curv, "abelian_exactly_zero": exact_zero})


def criterion_8(steps=DEFAULT_STEPS) -> CriterionResult:
    scale = roundtrip_check(presets.rep_scale(2.0), steps=steps, tol=1e-9)
    aff = roundtrip_check(presets.rep_aff1(), steps=steps, tol=1e-5)
    homotopy = max(scale.estimate.extra["max_homotopy_discrepancy"], aff.estimate.extra["max_homotopy_discrepancy"])
    contractible = max(scale.estimate.extra["contractible_identity_error"], aff.estimate.extra["contractible_identity_error"])
    dId = float(scale.estimate.dId[0, 0])
    ok = scale.passed and aff.passed and homotopy < 1e-5 and contractible < 1e-6 and abs(dId - 2.0) < 1e-6
    return CriterionResult(8, "monodromy of the representation connection is the representation", ok,
                           {"scale_error": scale.sup_error, "aff1_error": aff.sup_error, "homotopy": homotopy, "contractible": contractible, "dId": dId})


def criterion_9(steps=DEFAULT_STEPS) -> CriterionResult:
    conn = presets.exact_linear()
    T = flow_trivialization(conn, [[-1.0, 1.0], [-1.0, 1.0]], steps=steps)
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for x in rng.uniform(-0.9, 0.9, size=(5, 2)):
        g = rng.uniform(-2, 2, size=(20, 1))
        gp, _ = T.psi(g, x)
        expected = g * np.exp(-(presets.exact_potential(x) - presets.exact_potential(T.anchor)))
        worst = max(worst, sup_norm(gp - expected))
    hom = T.homomorphism_residual(count=3, samples=20, seed=SEED)
    return CriterionResult(9, "flow trivialization of an exact linear connection", worst < 1e-6 and hom < 1e-6, {"psi_error": worst, "homomorphism_residual": hom})


def criterion_10(steps=None) -> CriterionResult:
    rng = np.random.default_rng(SEED)
    axioms = 0.0
    for lam, mu in rng.uniform(-2.0, 2.0, size=(10, 2)):
        axioms = max(axioms, max(group_axiom_residuals(semidirect(lam, mu), seed=int(rng.integers(1 << 30))).values()))
    plateau = trivial_connection(presets.semidirect_plateau())
    flat = group_connection_check(plateau, region=presets.PLATEAU_FLAT_REGION)
    varying = [group_connection_check(plateau, region=r) for r in (((0.2, 1.0), (-1.0, 1.0)), ((-1.0, 1.0), (0.2, 1.0)))]
    linear_w = group_connection_check(trivial_connection(presets.semidirect_linear()))
    ok = axioms < 1e-9 and flat.passed and not any(v.passed for v in varying) and not linear_w.passed
    return CriterionResult(10, "semidirect family: group axioms; trivial gamma is a group connection only where weights are constant", ok,
                           {"axiom_residual": axioms, "constant_region": flat.max_residual,
                            "varying_region_min": min(v.max_residual for v in varying), "linear_weights_bundle": linear_w.max_residual})


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def run_one(k: int, steps=None) -> CriterionResult:
    fn = CRITERIA[k - 1]
    t0 = time.perf_counter()
    res = fn(steps) if steps is not None else fn()
    res.seconds = time.perf_counter() - t0
    return res


def run_all(steps=None) -> list:
    return [run_one(k, steps) for k in range(1, len(CRITERIA) + 1)]
