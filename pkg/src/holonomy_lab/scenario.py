"""Scenario files: a JSON document describing base, bundle, connections and paths.

The document is validated with pydantic (errors carry the path to the offending
field) and then resolved into live objects by :class:`Workspace`. Coefficient
functions are expression strings over ``x1..xm`` (base), ``g1..gn`` and
``h1..hn`` (fiber points) and ``t`` (flow time).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from holonomy_lab import presets
from holonomy_lab.bundle import BaseChart, Connection, GroupBundle, semidirect_bundle, trivial_connection
from holonomy_lab.errors import ScenarioError
from holonomy_lab.expressions import ExprMatrix, variable_names
from holonomy_lab.gauge import PrincipalConnection, induce_gauge_connection, principal_to_connection
from holonomy_lab.groupconn import CocycleForm, add_cocycle
from holonomy_lab.groups import catalog_group, custom_group
from holonomy_lab.moduli import AnnulusBase, RepresentationSpec, build_from_representation
from holonomy_lab.transport import DEFAULT_STEPS, PathSpec, arc, circle, ellipse, join, polyline, reverse, segment, square_loop

Expr = Union[str, float]
Interval = Tuple[float, float]


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BoxSpec(Strict):
    box: List[Interval] = Field(min_length=1)


class AnnulusSpec(Strict):
    r0: float = 0.5
    r1: float = 2.0


class CustomGroupSpec(Strict):
    dim: int = Field(ge=1)
    mul: List[Expr]
    inv: List[Expr]
    identity: List[float]
    chart: Optional[List[Tuple[Optional[float], Optional[float]]]] = None
    samples: Optional[List[Interval]] = None


class SemidirectSpec(Strict):
    lam: Expr = Field(alias="lambda")
    mu: Expr


class BundleSpec(Strict):
    group: Optional[str] = None
    params: List[float] = Field(default_factory=list)
    preset: Optional[Literal["semidirect_linear", "semidirect_plateau"]] = None
    semidirect: Optional[SemidirectSpec] = None
    custom: Optional[CustomGroupSpec] = None

    @model_validator(mode="after")
    def one_kind(self):
        kinds = [k for k in ("group", "preset", "semidirect", "custom") if getattr(self, k) is not None]
        if len(kinds) != 1:
            raise ValueError(f"give exactly one of group, preset, semidirect, custom (got {kinds or 'none'})")
        return self


class AddCocycleSpec(Strict):
    connection: str
    cocycle: str


class ConnectionSpec(Strict):
    preset: Optional[str] = None
    params: Dict[str, float] = Field(default_factory=dict)
    gamma: Optional[List[List[Expr]]] = None
    trivial: Optional[bool] = None
    representation: Optional[bool] = None
    principal: Optional[Literal["lift", "gauge"]] = None
    add_cocycle: Optional[AddCocycleSpec] = None

    @model_validator(mode="after")
    def one_kind(self):
        kinds = [k for k in ("preset", "gamma", "trivial", "representation", "principal", "add_cocycle") if getattr(self, k) not in (None, False)]
        if len(kinds) != 1:
            raise ValueError(f"give exactly one of preset, gamma, trivial, representation, principal, add_cocycle (got {kinds or 'none'})")
        return self


class CocycleSpec(Strict):
    theta: List[List[Expr]]


class PathItem(Strict):
    type: Literal["square", "segment", "polyline", "circle", "arc", "ellipse", "join", "reverse"]
    origin: Optional[List[float]] = None
    side: float = 1.0
    clockwise: bool = False
    start: Optional[List[float]] = None
    end: Optional[List[float]] = None
    points: Optional[List[List[float]]] = None
    closed: bool = False
    center: Optional[List[float]] = None
    radius: float = 1.0
    start_angle: float = 0.0
    theta0: float = 0.0
    theta1: float = float(2 * np.pi)
    turns: float = 1.0
    semi_x: float = 1.0
    semi_y: float = 1.0
    parts: Optional[List[str]] = None
    of: Optional[str] = None


class PrincipalSpec(Strict):
    group: Optional[str] = None
    params: List[float] = Field(default_factory=list)
    A: Optional[List[List[Expr]]] = None
    preset: Optional[str] = None

    @model_validator(mode="after")
    def one_kind(self):
        if (self.preset is None) == (self.A is None):
            raise ValueError("give either preset or group + A")
        if self.A is not None and self.group is None:
            raise ValueError("A needs a group")
        return self


class RepresentationModel(Strict):
    group: Optional[str] = None
    params: List[float] = Field(default_factory=list)
    generator_flow: Optional[List[Expr]] = None
    flow: Optional[List[Expr]] = None
    preset: Optional[str] = None
    preset_params: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def one_kind(self):
        if (self.preset is None) == (self.generator_flow is None):
            raise ValueError("give either preset or group + generator_flow")
        if self.generator_flow is not None and self.group is None:
            raise ValueError("generator_flow needs a group")
        return self


class AutomorphismSpec(Strict):
    map: List[Expr]
    inverse: Optional[List[Expr]] = None


class RunSpec(Strict):
    steps: Optional[int] = Field(default=None, ge=1)
    tol: Optional[float] = Field(default=None, gt=0)
    seed: Optional[int] = None
    point: Optional[List[float]] = None
    fiber_point: Optional[List[float]] = None
    fiber_points: Optional[List[List[float]]] = None
    pairs: Optional[List[Tuple[int, int]]] = None
    eps0: float = Field(default=0.04, gt=0)
    loop: Optional[str] = None
    loops: Optional[List[str]] = None
    cocycle: Optional[str] = None
    cube: Optional[List[Interval]] = None
    anchor: Optional[List[float]] = None
    region: Optional[List[Interval]] = None
    samples: int = Field(default=20, ge=1)
    grid: int = Field(default=16, ge=1)


class ScenarioModel(Strict):
    name: str = "scenario"
    base: Optional[BoxSpec] = None
    annulus: Optional[AnnulusSpec] = None
    bundle: Optional[BundleSpec] = None
    connections: Dict[str, ConnectionSpec] = Field(default_factory=dict)
    connection: Optional[str] = None
    cocycles: Dict[str, CocycleSpec] = Field(default_factory=dict)
    paths: Dict[str, PathItem] = Field(default_factory=dict)
    principal: Optional[PrincipalSpec] = None
    representation: Optional[RepresentationModel] = None
    automorphisms: Dict[str, AutomorphismSpec] = Field(default_factory=dict)
    run: RunSpec = Field(default_factory=RunSpec)

    @model_validator(mode="after")
    def one_base(self):
        if self.base is not None and self.annulus is not None:
            raise ValueError("give base or annulus, not both")
        return self


def _loc(err) -> str:
    return ".".join(str(p) for p in err["loc"]) or "<root>"


def validate(data) -> ScenarioModel:
    try:
        return ScenarioModel.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        more = f" (+{exc.error_count() - 1} more)" if exc.error_count() > 1 else ""
        raise ScenarioError(first["msg"] + more, _loc(first)) from None


def load(path) -> "Workspace":
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", str(p)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg} at line {exc.lineno}", str(p)) from None
    return Workspace(validate(data), source=str(p))


def _interval_box(spec) -> np.ndarray:
    return np.array([[-np.inf if lo is None else lo, np.inf if hi is None else hi] for lo, hi in spec], dtype=float)


class Workspace:
    """Resolved scenario; objects are built on first use and cached by name."""

    def __init__(self, model: ScenarioModel, source: str = "<memory>"):
        self.model = model
        self.source = source
        self._connections: Dict[str, Connection] = {}
        self._bundle = None
        self._paths: Dict[str, PathSpec] = {}
        self._principal = None
        self._rep = None
        self._building = set()
        self.base = self._make_base()
        if model.bundle is not None:
            self.bundle
        for name in model.paths:
            self.path(name)
        for name in model.connections:
            self.connection(name)
        for name in model.cocycles:
            self.cocycle(name)
        if model.principal is not None:
            self.principal
        if model.representation is not None:
            self.representation
        for name in model.automorphisms:
            self.automorphism(name)

    # -- base and bundle ----------------------------------------------------
    def _make_base(self):
        m = self.model
        if m.base is not None:
            try:
                return BaseChart(m.base.box)
            except ValueError as exc:
                raise ScenarioError(str(exc), "base.box") from None
        if m.annulus is not None:
            try:
                return AnnulusBase(m.annulus.r0, m.annulus.r1)
            except ValueError as exc:
                raise ScenarioError(str(exc), "annulus") from None
        if m.representation is not None:
            return AnnulusBase()
        return BaseChart(presets.BOX)

    @property
    def is_annulus(self) -> bool:
        return isinstance(self.base, AnnulusBase)

    def _group(self, name, params, where):
        try:
            return catalog_group(name, params)
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(str(exc).strip("'\""), where) from None

    @property
    def bundle(self) -> GroupBundle:
        if self._bundle is None:
            self._bundle = self._make_bundle()
        return self._bundle

    def _make_bundle(self) -> GroupBundle:
        spec = self.model.bundle
        if spec is None:
            if self.model.principal is not None:
                return self.principal.bundle
            raise ScenarioError("scenario does not define a bundle", "bundle")
        if spec.group is not None:
            return GroupBundle.trivial(self.base, self._group(spec.group, spec.params, "bundle.group"))
        if spec.preset is not None:
            if self.model.base is not None:
                box = self.model.base.box
                return getattr(presets, spec.preset)(box)
            return getattr(presets, spec.preset)()
        m = self.base.dim
        xs = variable_names("x", m)
        if spec.semidirect is not None:
            lam = ExprMatrix.parse([spec.semidirect.lam], xs, "bundle.semidirect.lambda")
            mu = ExprMatrix.parse([spec.semidirect.mu], xs, "bundle.semidirect.mu")
            self._check_total(lam, "bundle.semidirect.lambda", fiber=None)
            self._check_total(mu, "bundle.semidirect.mu", fiber=None)
            return semidirect_bundle(self.base, lambda x: lam.vector(x=x)[..., 0], lambda x: mu.vector(x=x)[..., 0], name="semidirect (expressions)")
        c = spec.custom
        n = c.dim
        gs, hs = variable_names("g", n), variable_names("h", n)
        for key, val in (("mul", c.mul), ("inv", c.inv), ("identity", c.identity)):
            if len(val) != n:
                raise ScenarioError(f"needs {n} entries", f"bundle.custom.{key}")
        mul = ExprMatrix.parse(c.mul, gs + hs + xs, "bundle.custom.mul")
        inv = ExprMatrix.parse(c.inv, gs + xs, "bundle.custom.inv")
        chart = _interval_box(c.chart) if c.chart else np.array([[-np.inf, np.inf]] * n)
        samples = np.asarray(c.samples, dtype=float) if c.samples else np.array([[-2.0, 2.0]] * n)
        if len(chart) != n or len(samples) != n:
            raise ScenarioError(f"chart and samples need {n} intervals", "bundle.custom")
        group = custom_group("custom", n, lambda g, h: mul.vector(g=g, h=h), lambda g: inv.vector(g=g), c.identity, chart, samples)
        if mul.rows and any(v.startswith("x") for row in mul.rows for e in row for v in e.variables()):
            bundle = GroupBundle(
                base=self.base, fiber_dim=n, fiber_chart=chart, fiber_samples=samples,
                mul=lambda x, g, h: mul.vector(x=x, g=g, h=h),
                inv=lambda x, g: inv.vector(x=x, g=g),
                identity=lambda x: np.broadcast_to(np.asarray(c.identity, dtype=float), np.shape(x)[:-1] + (n,)).copy(),
                name="custom (base-dependent)",
            )
        else:
            bundle = GroupBundle.trivial(self.base, group, name="custom")
        self._check_total(mul, "bundle.custom.mul", fiber=bundle, pair=True)
        return bundle

    def _samples(self, fiber, count=32, seed=0):
        rng = np.random.default_rng(seed)
        x = self.base.sample(count, rng)
        if fiber is None:
            return x, None, None
        return x, fiber.sample_fiber(count, rng), fiber.sample_fiber(count, rng)

    def _check_total(self, expr: ExprMatrix, where: str, fiber=None, pair=False, extra=None):
        x, g, h = self._samples(fiber)
        blocks = {"x": x}
        if g is not None:
            blocks["g"] = g
            if pair:
                blocks["h"] = h
        if extra:
            blocks.update(extra)
        with np.errstate(all="ignore"):
            val = expr.matrix(**blocks)
        if not np.all(np.isfinite(val)):
            raise ScenarioError("expression is not finite on the declared domain", where)

    # -- connections --------------------------------------------------------
    @property
    def default_connection(self) -> str:
        m = self.model
        if m.connection is not None:
            if m.connection not in m.connections:
                raise ScenarioError(f"unknown connection {m.connection!r}", "connection")
            return m.connection
        if m.connections:
            return sorted(m.connections)[0]
        raise ScenarioError("scenario defines no connections", "connections")

    def connection(self, name: Optional[str] = None) -> Connection:
        name = name or self.default_connection
        if name in self._connections:
            return self._connections[name]
        if name not in self.model.connections:
            raise ScenarioError(f"unknown connection {name!r} (known: {sorted(self.model.connections)})", "connections")
        if name in self._building:
            raise ScenarioError("connection definitions are circular", f"connections.{name}")
        self._building.add(name)
        try:
            conn = self._make_connection(name, self.model.connections[name])
        finally:
            self._building.discard(name)
        self._connections[name] = conn
        return conn

    def _make_connection(self, name, spec: ConnectionSpec) -> Connection:
        where = f"connections.{name}"
        if spec.preset is not None:
            factory = presets.CONNECTIONS.get(spec.preset)
            if factory is None:
                raise ScenarioError(f"unknown preset {spec.preset!r} (known: {sorted(presets.CONNECTIONS)})", where + ".preset")
            need = presets.PRESET_FIBER.get(spec.preset)
            b = self.bundle
            if need and (b.group is None or b.group.name != need[0] or b.fiber_dim != need[1] or b.base.dim != 2):
                raise ScenarioError(f"preset {spec.preset!r} needs a {need[0]}({need[1]}) bundle over a 2-dimensional base", where + ".preset")
            try:
                return factory(bundle=b, **spec.params)
            except TypeError as exc:
                raise ScenarioError(str(exc), where + ".params") from None
        if spec.trivial:
            return trivial_connection(self.bundle, name=name)
        if spec.representation:
            if not self.is_annulus:
                raise ScenarioError("representation connections need an annulus base", where)
            return build_from_representation(self.representation, self.base)
        if spec.principal is not None:
            pc = self.principal
            return principal_to_connection(pc) if spec.principal == "lift" else induce_gauge_connection(pc)
        if spec.add_cocycle is not None:
            return add_cocycle(self.connection(spec.add_cocycle.connection), self.cocycle(spec.add_cocycle.cocycle), name=name)
        b = self.bundle
        n, m = b.fiber_dim, self.base.dim
        mat = self._fiber_matrix(spec.gamma, (n, m), where + ".gamma")
        return Connection(b, lambda x, g: mat.matrix(x=x, g=g), name=name)

    def _fiber_matrix(self, rows, shape, where) -> ExprMatrix:
        n, m = shape
        if len(rows) != n or any(len(r) != m for r in rows):
            raise ScenarioError(f"expected a {n} x {m} matrix", where)
        mat = ExprMatrix.parse(rows, variable_names("x", m) + variable_names("g", n), where)
        self._check_total(mat, where, fiber=self.bundle)
        return mat

    def cocycle(self, name: str) -> CocycleForm:
        if name not in self.model.cocycles:
            raise ScenarioError(f"unknown cocycle {name!r} (known: {sorted(self.model.cocycles)})", "cocycles")
        b = self.bundle
        mat = self._fiber_matrix(self.model.cocycles[name].theta, (b.fiber_dim, self.base.dim), f"cocycles.{name}.theta")
        return CocycleForm(b, lambda x, g: mat.matrix(x=x, g=g), name=name)

    # -- paths ----------------------------------------------------------------
    def path(self, name: str) -> PathSpec:
        if name in self._paths:
            return self._paths[name]
        if name not in self.model.paths:
            raise ScenarioError(f"unknown path {name!r} (known: {sorted(self.model.paths)})", "paths")
        if name in self._building:
            raise ScenarioError("path definitions are circular", f"paths.{name}")
        self._building.add(name)
        try:
            p = self._make_path(name, self.model.paths[name])
        except (ValueError, TypeError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(str(exc), f"paths.{name}") from None
        finally:
            self._building.discard(name)
        self._paths[name] = p
        return p

    def _make_path(self, name, s: PathItem) -> PathSpec:
        where = f"paths.{name}"

        def need(field):
            val = getattr(s, field)
            if val is None:
                raise ScenarioError(f"{s.type} needs {field!r}", f"{where}.{field}")
            return val

        if s.type == "square":
            return square_loop(s.origin or (0.0, 0.0), s.side, s.clockwise, name=name)
        if s.type == "segment":
            return segment(need("start"), need("end"), name=name)
        if s.type == "polyline":
            return polyline(need("points"), s.closed, name=name)
        if s.type == "circle":
            return circle(s.center or (0.0, 0.0), s.radius, s.start_angle, s.clockwise, s.turns, name=name)
        if s.type == "arc":
            return arc(s.center or (0.0, 0.0), s.radius, s.theta0, s.theta1, name=name)
        if s.type == "ellipse":
            return ellipse(s.center or (0.0, 0.0), s.semi_x, s.semi_y, s.start_angle, s.clockwise, name=name)
        if s.type == "join":
            return join(*(self.path(p) for p in need("parts")), name=name)
        return reverse(self.path(need("of")), name=name)

    # -- principal data and representations ------------------------------------
    @property
    def principal(self) -> PrincipalConnection:
        if self._principal is None:
            spec = self.model.principal
            if spec is None:
                raise ScenarioError("scenario does not define principal data", "principal")
            if spec.preset is not None:
                factory = presets.PRINCIPALS.get(spec.preset)
                if factory is None:
                    raise ScenarioError(f"unknown preset {spec.preset!r} (known: {sorted(presets.PRINCIPALS)})", "principal.preset")
                self._principal = factory(box=self.model.base.box) if self.model.base is not None else factory()
            else:
                G = self._group(spec.group, spec.params, "principal.group")
                m = self.base.dim
                if len(spec.A) != G.dim or any(len(r) != m for r in spec.A):
                    raise ScenarioError(f"expected a {G.dim} x {m} matrix", "principal.A")
                A = ExprMatrix.parse(spec.A, variable_names("x", m), "principal.A")
                self._check_total(A, "principal.A")
                self._principal = PrincipalConnection(self.base, G, lambda x: A.matrix(x=x), name="principal")
        return self._principal

    @property
    def representation(self) -> RepresentationSpec:
        if self._rep is None:
            spec = self.model.representation
            if spec is None:
                raise ScenarioError("scenario does not define a representation", "representation")
            if spec.preset is not None:
                factory = presets.REPRESENTATIONS.get(spec.preset)
                if factory is None:
                    raise ScenarioError(f"unknown preset {spec.preset!r} (known: {sorted(presets.REPRESENTATIONS)})", "representation.preset")
                self._rep = factory(**spec.preset_params)
            else:
                G = self._group(spec.group, spec.params, "representation.group")
                gs = variable_names("g", G.dim)
                if len(spec.generator_flow) != G.dim:
                    raise ScenarioError(f"needs {G.dim} entries", "representation.generator_flow")
                w = ExprMatrix.parse(spec.generator_flow, gs, "representation.generator_flow")
                flow = None
                if spec.flow is not None:
                    if len(spec.flow) != G.dim:
                        raise ScenarioError(f"needs {G.dim} entries", "representation.flow")
                    fmat = ExprMatrix.parse(spec.flow, gs + ["t"], "representation.flow")
                    flow = lambda g, t: fmat.vector(g=g, t=float(t))  # noqa: E731
                self._rep = RepresentationSpec(G, lambda g: w.vector(g=g), flow, name="representation")
        return self._rep

    def fiber_group(self):
        if self.model.representation is not None and self.model.bundle is None:
            return self.representation.group
        if self.bundle.group is None:
            raise ScenarioError("this command needs a base-independent fiber group", "bundle")
        return self.bundle.group

    def automorphism(self, name: str):
        """``(map, inverse)`` batched callables for a named fiber automorphism."""
        if name not in self.model.automorphisms:
            raise ScenarioError(f"unknown automorphism {name!r} (known: {sorted(self.model.automorphisms)})", "automorphisms")
        spec = self.model.automorphisms[name]
        G = self.fiber_group()
        gs = variable_names("g", G.dim)
        where = f"automorphisms.{name}"
        if len(spec.map) != G.dim or (spec.inverse is not None and len(spec.inverse) != G.dim):
            raise ScenarioError(f"maps need {G.dim} entries", where)
        fmap = ExprMatrix.parse(spec.map, gs, where + ".map")
        inv = ExprMatrix.parse(spec.inverse, gs, where + ".inverse") if spec.inverse is not None else None
        return (lambda g: fmap.vector(g=g)), (None if inv is None else (lambda g: inv.vector(g=g)))

    # -- run parameters --------------------------------------------------------
    def steps(self, flag=None) -> int:
        return int(flag if flag is not None else self.model.run.steps or DEFAULT_STEPS)

    def seed(self, flag=None) -> int:
        if flag is not None:
            return int(flag)
        return 42 if self.model.run.seed is None else int(self.model.run.seed)

    def tol(self, flag=None, default=1e-6) -> float:
        if flag is not None:
            return float(flag)
        return float(self.model.run.tol) if self.model.run.tol is not None else default

    def point(self) -> np.ndarray:
        if self.model.run.point is not None:
            p = np.asarray(self.model.run.point, dtype=float)
            if p.shape != (self.base.dim,):
                raise ScenarioError(f"needs {self.base.dim} coordinates", "run.point")
            return p
        if self.is_annulus:
            return np.array([1.0, 0.0])
        return self.base.box.mean(axis=1)

    def fiber_points(self, bundle: GroupBundle) -> np.ndarray:
        run = self.model.run
        if run.fiber_points is not None:
            pts = np.asarray(run.fiber_points, dtype=float)
        elif run.fiber_point is not None:
            pts = np.asarray([run.fiber_point], dtype=float)
        else:
            pts = np.asarray([bundle.e(self.point())], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != bundle.fiber_dim:
            raise ScenarioError(f"fiber points need {bundle.fiber_dim} coordinates", "run.fiber_points")
        return pts

    def pairs(self):
        if self.model.run.pairs is not None:
            for i, j in self.model.run.pairs:
                if not (0 <= i < self.base.dim and 0 <= j < self.base.dim and i != j):
                    raise ScenarioError(f"invalid direction pair ({i}, {j})", "run.pairs")
            return [tuple(p) for p in self.model.run.pairs]
        m = self.base.dim
        return [(i, j) for i in range(m) for j in range(i + 1, m)]
