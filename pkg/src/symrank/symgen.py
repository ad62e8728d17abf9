"""Symbolic feature generation: operator registries, layered composition
architectures, canonical deduplication, and evaluation to a FeatureMatrix.

A binary layer applies every binary operator to unordered pairs with
repetition (i <= j) for commutative operators and ordered pairs otherwise;
a unary layer applies every unary operator to every expression, with "id"
leaving the expression unchanged. Commutative canonical ordering makes
x1+x2 and x2+x1 one feature. No algebraic simplification beyond that is
performed: x1+x1 stays x1+x1.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

import numpy as np

from .core import Dataset, Expression, FeatureMatrix, binary, unary, var
from .errors import DimensionMismatch, PartialOperatorDomain

__all__ = [
    "Architecture",
    "BinaryOp",
    "GenerationReport",
    "OperatorSet",
    "UnaryOp",
    "build_operator_set",
    "expand_binary",
    "expand_unary",
    "generate",
    "generate_report",
    "label_correct",
    "parse_univariate",
    "sin_affine",
    "unary_from_expr",
]

VALUE_DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class UnaryOp:
    name: str
    fn: object  # vectorized callable


@dataclass(frozen=True)
class BinaryOp:
    name: str
    fn: object
    commutative: bool = False
    partial: bool = False


def _cube(x):
    return np.asarray(x) ** 3


def _square(x):
    return np.asarray(x) ** 2


def _identity(x):
    return np.asarray(x)


BUILTIN_UNARY = {
    "id": UnaryOp("id", _identity),
    "square": UnaryOp("square", _square),
    "cube": UnaryOp("cube", _cube),
    "sin": UnaryOp("sin", np.sin),
    "cos": UnaryOp("cos", np.cos),
    "exp": UnaryOp("exp", np.exp),
}

BUILTIN_BINARY = {
    "+": BinaryOp("+", np.add, commutative=True),
    "-": BinaryOp("-", np.subtract),
    "*": BinaryOp("*", np.multiply, commutative=True),
    "/": BinaryOp("/", np.divide, partial=True),
}


def _fmt_num(v: float) -> str:
    return f"{v:g}"


def sin_affine(a: float, b: float = 0.0) -> UnaryOp:
    """Parameterized unary map sin(a*x + b), named e.g. sin(4x+0.2)."""
    a, b = float(a), float(b)
    if b == 0.0:
        name = f"sin({_fmt_num(a)}x)"
    else:
        sign = "+" if b > 0 else "-"
        name = f"sin({_fmt_num(a)}x{sign}{_fmt_num(abs(b))})"

    def fn(x, _a=a, _b=b):
        return np.sin(_a * np.asarray(x) + _b)

    return UnaryOp(name, fn)


@dataclass(frozen=True)
class OperatorSet:
    """Named unary and binary maps used to compose features."""

    unary: tuple[UnaryOp, ...]
    binary: tuple[BinaryOp, ...]

    def __post_init__(self):
        names = [op.name for op in self.unary] + [op.name for op in self.binary]
        if len(set(names)) != len(names):
            raise DimensionMismatch("operator names must be unique")

    def unary_table(self) -> dict:
        return {op.name: op.fn for op in self.unary}

    def binary_table(self) -> dict:
        return {op.name: op.fn for op in self.binary}


def build_operator_set(unary_names, binary_names) -> OperatorSet:
    """Assemble an OperatorSet from built-in names and/or op objects."""
    u_ops = []
    for entry in unary_names:
        if isinstance(entry, UnaryOp):
            u_ops.append(entry)
        elif entry in BUILTIN_UNARY:
            u_ops.append(BUILTIN_UNARY[entry])
        else:
            raise DimensionMismatch(f"unknown unary operator {entry!r}")
    b_ops = []
    for entry in binary_names:
        if isinstance(entry, BinaryOp):
            b_ops.append(entry)
        elif entry in BUILTIN_BINARY:
            b_ops.append(BUILTIN_BINARY[entry])
        else:
            raise DimensionMismatch(f"unknown binary operator {entry!r}")
    return OperatorSet(tuple(u_ops), tuple(b_ops))


@dataclass(frozen=True)
class Architecture:
    """Layer order string over {u, b}, applied left to right.

    "bu" is the binary-then-unary architecture, "ub" the reverse; free-form
    orders like "ubb" are allowed.
    """

    order: str

    def __post_init__(self):
        if not self.order or any(c not in "ub" for c in self.order):
            raise DimensionMismatch(
                f"architecture must be a nonempty string over 'u'/'b', got {self.order!r}")


# ---------------------------------------------------------------------------
# layer expansion
# ---------------------------------------------------------------------------

def _dedup(exprs) -> list[Expression]:
    seen: set[str] = set()
    out: list[Expression] = []
    for e in exprs:
        key = e.canonical()
        if key not in seen:
            seen.add(key)
            out.append(e)
    return out


def expand_binary(exprs, ops: OperatorSet) -> list[Expression]:
    """One binary layer: op(e_i, e_j) over pairs, canonicalized, deduplicated.

    Commutative operators enumerate unordered pairs with repetition (i <= j);
    non-commutative ones enumerate all ordered pairs.
    """
    if not exprs:
        raise DimensionMismatch("binary layer needs a nonempty expression list")
    m = len(exprs)
    out: list[Expression] = []
    for op in ops.binary:
        if op.commutative:
            for i in range(m):
                for j in range(i, m):
                    out.append(binary(op.name, exprs[i], exprs[j]))
        else:
            for i in range(m):
                for j in range(m):
                    out.append(binary(op.name, exprs[i], exprs[j]))
    return _dedup(out)


def expand_unary(exprs, ops: OperatorSet) -> list[Expression]:
    """One unary layer: op(e) per operator, with "id" passing e through."""
    if not exprs:
        raise DimensionMismatch("unary layer needs a nonempty expression list")
    out: list[Expression] = []
    for e in exprs:
        for op in ops.unary:
            out.append(e if op.name == "id" else unary(op.name, e))
    return _dedup(out)


def raw_binary_count(m: int, ops: OperatorSet) -> int:
    """Ordered pair count before canonical dedup: one per op per (i, j)."""
    return len(ops.binary) * m * m


def raw_unary_count(m: int, ops: OperatorSet) -> int:
    return len(ops.unary) * m


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenerationReport:
    """Feature matrix plus per-layer counts and evaluation diagnostics."""

    features: FeatureMatrix
    layer_counts: tuple[dict, ...]  # per layer: kind, raw, distinct
    dropped: tuple[dict, ...]       # expression, reason
    constant_columns: tuple[int, ...]


def generate_report(ds: Dataset, arch: Architecture, ops: OperatorSet,
                    value_dedup: bool = False) -> GenerationReport:
    """Apply the architecture's layers to the base variables and evaluate.

    Expressions whose evaluation leaves the data's domain (division by zero,
    overflow) are dropped and recorded. With ``value_dedup`` set, a later
    column whose evaluated vector matches an earlier one within 1e-12
    componentwise is dropped as well. Constant columns are kept but flagged;
    scoring treats them as worst-ranked.
    """
    exprs: list[Expression] = [var(j) for j in range(ds.d)]
    layer_counts: list[dict] = []
    for kind in arch.order:
        m = len(exprs)
        if kind == "b":
            exprs = expand_binary(exprs, ops)
            raw = raw_binary_count(m, ops)
        else:
            exprs = expand_unary(exprs, ops)
            raw = raw_unary_count(m, ops)
        layer_counts.append({"kind": kind, "raw": raw, "distinct": len(exprs)})

    unary_table = ops.unary_table()
    binary_table = ops.binary_table()
    kept: list[Expression] = []
    columns: list[np.ndarray] = []
    dropped: list[dict] = []
    for e in exprs:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            col = np.asarray(e.evaluate(ds.x, unary_table, binary_table), dtype=float)
        if col.shape != (ds.n,):
            raise DimensionMismatch(
                f"{e.canonical()} evaluated to shape {col.shape}, expected ({ds.n},)")
        if not np.isfinite(col).all():
            dropped.append({"expression": e.canonical(),
                            "reason": "left operator domain on this data"})
            continue
        if value_dedup and any(
                np.all(np.abs(col - prev) <= VALUE_DEDUP_TOL) for prev in columns):
            dropped.append({"expression": e.canonical(),
                            "reason": "duplicate values of an earlier column"})
            continue
        kept.append(e)
        columns.append(col)
    if not kept:
        raise PartialOperatorDomain("every generated feature left its domain")
    z = np.column_stack(columns)
    z.setflags(write=False)
    constant = tuple(j for j in range(z.shape[1]) if np.all(z[:, j] == z[0, j]))
    return GenerationReport(FeatureMatrix(z, tuple(kept)), tuple(layer_counts),
                            tuple(dropped), constant)


def generate(ds: Dataset, arch: Architecture, ops: OperatorSet,
             value_dedup: bool = False) -> FeatureMatrix:
    return generate_report(ds, arch, ops, value_dedup).features


def label_correct(exprs, active_variables) -> np.ndarray:
    """True where an expression references only active variables."""
    active = frozenset(int(v) for v in active_variables)
    return np.array([e.variables() <= active for e in exprs], dtype=bool)


# ---------------------------------------------------------------------------
# univariate expression strings
# ---------------------------------------------------------------------------

_ALLOWED_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
                   ast.Div: np.divide, ast.Pow: np.power}
_ALLOWED_UNARYOPS = {ast.UAdd: lambda v: v, ast.USub: np.negative}


def parse_univariate(expr: str, functions: dict | None = None):
    """Compile an arithmetic expression string in one variable ``x``.

    Supports numbers, x, + - * / **, parentheses, and calls to registered
    unary names (defaults to the built-in table). Returns a vectorized
    callable. Raises DimensionMismatch on anything outside that grammar.
    """
    funcs = {name: op.fn for name, op in BUILTIN_UNARY.items()}
    if functions:
        funcs.update(functions)
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise DimensionMismatch(f"cannot parse {expr!r}: {exc}") from None

    def compile_node(node):
        if isinstance(node, ast.Expression):
            return compile_node(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            value = float(node.value)
            return lambda x: value
        if isinstance(node, ast.Name):
            if node.id == "x":
                return lambda x: x
            raise DimensionMismatch(f"unknown name {node.id!r} in {expr!r}")
        if isinstance(node, ast.UnaryOp) and type(node.op) in _ALLOWED_UNARYOPS:
            fn = _ALLOWED_UNARYOPS[type(node.op)]
            operand = compile_node(node.operand)
            return lambda x: fn(operand(x))
        if isinstance(node, ast.BinOp) and type(node.op) in _ALLOWED_BINOPS:
            fn = _ALLOWED_BINOPS[type(node.op)]
            lhs, rhs = compile_node(node.left), compile_node(node.right)
            return lambda x: fn(lhs(x), rhs(x))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            if node.func.id not in funcs or node.keywords or len(node.args) != 1:
                raise DimensionMismatch(f"unsupported call in {expr!r}")
            fn = funcs[node.func.id]
            arg = compile_node(node.args[0])
            return lambda x: fn(arg(x))
        raise DimensionMismatch(f"unsupported syntax in {expr!r}")

    body = compile_node(tree)

    def evaluate(x, _body=body):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(_body(x), dtype=float), x.shape).copy()

    return evaluate


def unary_from_expr(expr: str) -> UnaryOp:
    """Register an arbitrary univariate expression string as a unary map."""
    canonical = expr.replace(" ", "")
    return UnaryOp(canonical, parse_univariate(expr))
