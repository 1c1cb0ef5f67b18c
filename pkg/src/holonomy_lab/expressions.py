"""Small arithmetic expression trees for user-supplied coefficient functions.

Grammar: numbers, variables, ``+ - * / **`` (``^`` is accepted for power),
unary minus, and the functions ``exp ln log sin cos sqrt pow``. Text is parsed
with :mod:`ast` and every node is checked against the grammar, so no Python
evaluation ever happens. Trees evaluate on numpy arrays and thus broadcast.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

import numpy as np

from holonomy_lab.errors import ScenarioError
from holonomy_lab.numerics import stack_matrix

FUNCTIONS = {
    "exp": (np.exp, 1),
    "ln": (np.log, 1),
    "log": (np.log, 1),
    "sin": (np.sin, 1),
    "cos": (np.cos, 1),
    "sqrt": (np.sqrt, 1),
    "pow": (np.power, 2),
}
CONSTANTS = {"pi": np.pi, "e": np.e}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_SYMBOLS = {np.add: "+", np.subtract: "-", np.multiply: "*", np.divide: "/", np.power: "**"}


class Expr:
    def evaluate(self, env: dict):
        raise NotImplementedError

    def variables(self) -> set:
        return set()


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def evaluate(self, env):
        return self.value

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def evaluate(self, env):
        return env[self.name]

    def variables(self):
        return {self.name}

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def evaluate(self, env):
        return -np.asarray(self.arg.evaluate(env))

    def variables(self):
        return self.arg.variables()

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class BinOp(Expr):
    op: object
    left: Expr
    right: Expr

    def evaluate(self, env):
        return self.op(self.left.evaluate(env), self.right.evaluate(env))

    def variables(self):
        return self.left.variables() | self.right.variables()

    def __str__(self):
        return f"({self.left} {_SYMBOLS[self.op]} {self.right})"


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple

    def evaluate(self, env):
        fn, _ = FUNCTIONS[self.name]
        return fn(*(a.evaluate(env) for a in self.args))

    def variables(self):
        out = set()
        for a in self.args:
            out |= a.variables()
        return out

    def __str__(self):
        return f"{self.name}({', '.join(map(str, self.args))})"


def _convert(node, allowed, path):
    if isinstance(node, ast.Expression):
        return _convert(node.body, allowed, path)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return Const(float(node.value))
    if isinstance(node, ast.Name):
        if node.id in CONSTANTS:
            return Const(CONSTANTS[node.id])
        if node.id not in allowed:
            raise ScenarioError(f"unknown variable {node.id!r} (allowed: {', '.join(sorted(allowed)) or 'none'})", path)
        return Var(node.id)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        arg = _convert(node.operand, allowed, path)
        return Neg(arg) if isinstance(node.op, ast.USub) else arg
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return BinOp(_BINOPS[type(node.op)], _convert(node.left, allowed, path), _convert(node.right, allowed, path))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name = node.func.id
        if name not in FUNCTIONS:
            raise ScenarioError(f"unknown function {name!r}", path)
        if len(node.args) != FUNCTIONS[name][1]:
            raise ScenarioError(f"{name} takes {FUNCTIONS[name][1]} argument(s)", path)
        return Call(name, tuple(_convert(a, allowed, path) for a in node.args))
    raise ScenarioError(f"unsupported syntax {type(node).__name__}", path)


def parse(text, allowed=(), path: str = "") -> Expr:
    """Parse ``text`` (or a bare number) into an expression tree."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return Const(float(text))
    if not isinstance(text, str):
        raise ScenarioError(f"expected an expression string or number, got {type(text).__name__}", path)
    try:
        # ^ would parse as xor, which binds looser than + and *
        tree = ast.parse(text.strip().replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ScenarioError(f"cannot parse {text!r}: {exc.msg}", path) from None
    return _convert(tree, set(allowed), path)


def variable_names(prefix: str, count: int) -> list:
    return [f"{prefix}{k + 1}" for k in range(count)]


def bind(blocks: dict) -> tuple:
    """Environment from named coordinate blocks, e.g. ``{"x": x, "g": g, "t": 0.5}``.

    Array blocks ``(..., k)`` become ``x1..xk``; scalars bind by name. Returns the
    environment and the broadcast batch shape.
    """
    env, shapes = {}, []
    for prefix, arr in blocks.items():
        a = np.asarray(arr, dtype=float)
        if a.ndim == 0:
            env[prefix] = a
            continue
        shapes.append(a.shape[:-1])
        for k in range(a.shape[-1]):
            env[f"{prefix}{k + 1}"] = a[..., k]
    return env, np.broadcast_shapes(*shapes) if shapes else ()


@dataclass(frozen=True)
class ExprMatrix:
    """Matrix (or vector, with one column) of expressions evaluated on blocks."""

    rows: tuple

    @classmethod
    def parse(cls, rows, allowed, path=""):
        if not isinstance(rows, (list, tuple)) or not rows:
            raise ScenarioError("expected a non-empty list", path)
        if not isinstance(rows[0], (list, tuple)):
            rows = [[r] for r in rows]
        width = len(rows[0])
        out = []
        for a, row in enumerate(rows):
            if not isinstance(row, (list, tuple)) or len(row) != width:
                raise ScenarioError(f"row {a} must have {width} entries", path)
            out.append(tuple(parse(e, allowed, f"{path}[{a}][{b}]") for b, e in enumerate(row)))
        return cls(tuple(out))

    @property
    def shape(self):
        return len(self.rows), len(self.rows[0])

    def matrix(self, **blocks) -> np.ndarray:
        env, batch = bind(blocks)
        return stack_matrix([[e.evaluate(env) for e in row] for row in self.rows], batch)

    def vector(self, **blocks) -> np.ndarray:
        return self.matrix(**blocks)[..., 0]

    def __str__(self):
        return "[" + "; ".join(", ".join(map(str, r)) for r in self.rows) + "]"
