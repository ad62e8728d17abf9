"""Shared domain types: datasets, expressions, rankings, partitions, intervals.

All types are immutable after construction (arrays are marked read-only) and
safe to share across concurrent workers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySide,
    NonFiniteData,
    TiesInResponse,
)

__all__ = [
    "Dataset",
    "Expression",
    "FeatureMatrix",
    "Interval",
    "Partition2",
    "RankPermutation",
    "build_dataset",
    "derive_rng",
    "load_csv",
    "make_partition2",
    "sort_by_response",
    "var",
    "unary",
    "binary",
]

COMMUTATIVE_BINARY_OPS = frozenset({"+", "*"})


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Expression:
    """A symbolic feature: a variable, or an operator applied to children.

    Commutative binary operators store their operands sorted by canonical
    serialization, so x1+x2 and x2+x1 are one expression. Construct through
    :func:`var`, :func:`unary` and :func:`binary`, which canonicalize.
    """

    kind: str  # "var" | "unary" | "binary"
    op: str = ""
    index: int = -1
    children: tuple["Expression", ...] = ()

    def canonical(self) -> str:
        if self.kind == "var":
            return f"x{self.index + 1}"
        if self.kind == "unary":
            inner = self.children[0].canonical()
            if self.children[0].kind == "binary":
                inner = inner[1:-1]  # binary serializations carry their own parens
            return f"{self.op}({inner})"
        left, right = (c.canonical() for c in self.children)
        return f"({left}{self.op}{right})"

    def variables(self) -> frozenset[int]:
        if self.kind == "var":
            return frozenset({self.index})
        return frozenset().union(*(c.variables() for c in self.children))

    def evaluate(self, x: np.ndarray, unary_ops, binary_ops) -> np.ndarray:
        """Evaluate row-wise on an (n, d) input matrix.

        ``unary_ops`` / ``binary_ops`` map operator names to vectorized
        callables; see :mod:`symrank.symgen` for the built-in table.
        """
        if self.kind == "var":
            return np.asarray(x)[:, self.index]
        if self.kind == "unary":
            return np.asarray(unary_ops[self.op](
                self.children[0].evaluate(x, unary_ops, binary_ops)))
        lhs = self.children[0].evaluate(x, unary_ops, binary_ops)
        rhs = self.children[1].evaluate(x, unary_ops, binary_ops)
        return np.asarray(binary_ops[self.op](lhs, rhs))

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.canonical()


def var(index: int) -> Expression:
    if index < 0:
        raise DimensionMismatch(f"variable index must be >= 0, got {index}")
    return Expression("var", index=index)


def unary(op: str, child: Expression) -> Expression:
    return Expression("unary", op=op, children=(child,))


def binary(op: str, left: Expression, right: Expression) -> Expression:
    if op in COMMUTATIVE_BINARY_OPS and right.canonical() < left.canonical():
        left, right = right, left
    return Expression("binary", op=op, children=(left, right))


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dataset:
    """An (N, d) input matrix with a tie-free response vector.

    Responses must be strictly distinct; everything downstream (oracle
    partitions, rank statistics) relies on a strict order of y.
    Construct with :func:`build_dataset`.
    """

    x: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def build_dataset(x, y, names=None) -> Dataset:
    """Validate and freeze a dataset.

    Raises TiesInResponse when y has exact duplicates, DimensionMismatch on
    shape disagreements and NonFiniteData on NaN/inf entries.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch(f"x must be 2-D, got shape {x.shape}")
    if y.ndim != 1:
        raise DimensionMismatch(f"y must be 1-D, got shape {y.shape}")
    n, d = x.shape
    if n < 1 or d < 1:
        raise DimensionMismatch(f"need at least one row and one column, got {x.shape}")
    if y.shape[0] != n:
        raise DimensionMismatch(f"x has {n} rows but y has {y.shape[0]}")
    if not np.isfinite(x).all() or not np.isfinite(y).all():
        raise NonFiniteData("dataset entries must be finite")
    if np.unique(y).size != n:
        raise TiesInResponse("response vector contains exact ties")
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(d))
    else:
        names = tuple(str(c) for c in names)
        if len(names) != d:
            raise DimensionMismatch(f"{len(names)} column names for {d} columns")
    return Dataset(_readonly(x), _readonly(y), names)


@dataclass(frozen=True)
class FeatureMatrix:
    """Evaluated symbolic features: an (N, q) matrix paired with expressions."""

    z: np.ndarray
    exprs: tuple[Expression, ...]

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def q(self) -> int:
        return self.z.shape[1]

    def column_names(self) -> tuple[str, ...]:
        return tuple(e.canonical() for e in self.exprs)


# ---------------------------------------------------------------------------
# rankings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RankPermutation:
    """A permutation of 0..N-1 stored as the ordered index list."""

    order: tuple[int, ...]

    def __post_init__(self):
        n = len(self.order)
        if sorted(self.order) != list(range(n)):
            raise DimensionMismatch("order is not a permutation of 0..N-1")

    def __len__(self) -> int:
        return len(self.order)


def sort_by_response(ds: Dataset) -> RankPermutation:
    """Indices that put the responses in strictly increasing order."""
    order = np.argsort(ds.y, kind="stable")
    return RankPermutation(tuple(int(i) for i in order))


# ---------------------------------------------------------------------------
# 2-partitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Partition2:
    """A 2-way split of response indices with cached group means and SSE.

    Index sets are stored sorted ascending for deterministic iteration.
    """

    left: tuple[int, ...]
    right: tuple[int, ...]
    mean_left: float
    mean_right: float
    sse_left: float
    sse_right: float

    @property
    def total_sse(self) -> float:
        return self.sse_left + self.sse_right


def _group_stats(y: np.ndarray, idx: tuple[int, ...]) -> tuple[float, float]:
    vals = y[list(idx)]
    mean = float(vals.mean())
    return mean, float(np.sum((vals - mean) ** 2))


def make_partition2(y, left, right=None) -> Partition2:
    """Build a validated Partition2 of ``range(len(y))`` from one side.

    ``right`` defaults to the complement of ``left``.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    left = tuple(sorted(int(i) for i in left))
    if right is None:
        right = tuple(i for i in range(n) if i not in set(left))
    else:
        right = tuple(sorted(int(i) for i in right))
    if not left or not right:
        raise EmptySide("both partition sides must be nonempty")
    if set(left) & set(right):
        raise DimensionMismatch("partition sides overlap")
    if set(left) | set(right) != set(range(n)):
        raise DimensionMismatch("partition sides must cover all indices")
    mean_l, sse_l = _group_stats(y, left)
    mean_r, sse_r = _group_stats(y, right)
    return Partition2(left, right, mean_l, mean_r, sse_l, sse_r)


# ---------------------------------------------------------------------------
# intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """A real interval with per-endpoint closedness flags."""

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if self.lo > self.hi:
            raise DimensionMismatch(f"interval lo {self.lo} > hi {self.hi}")
        if self.lo == self.hi and not (self.lo_closed and self.hi_closed):
            raise DimensionMismatch("a point interval needs both endpoints closed")

    def contains(self, x: float) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.lo_closed:
            return False
        if x == self.hi and not self.hi_closed:
            return False
        return True

    def intersect(self, other: "Interval") -> "Interval | None":
        """Intersection, or None when empty."""
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return None
        lo_closed = self.contains(lo) and other.contains(lo)
        hi_closed = self.contains(hi) and other.contains(hi)
        if lo == hi and not (lo_closed and hi_closed):
            return None
        return Interval(lo, hi, lo_closed, hi_closed)

    def __str__(self) -> str:
        lb = "[" if self.lo_closed else "("
        rb = "]" if self.hi_closed else ")"
        return f"{lb}{self.lo}, {self.hi}{rb}"


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------

def derive_rng(seed: int, *stream: int) -> np.random.Generator:
    """Derive an independent generator for (seed, stream...).

    Repeat streams keyed this way are reproducible and safe to draw from in
    parallel: the stream key feeds SeedSequence's spawn key.
    """
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    )


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def load_csv(path, response: str) -> Dataset:
    """Read a headed CSV into a Dataset.

    The ``response`` column becomes y; every other column must be numeric and
    becomes an input column, in header order. Raises DimensionMismatch with
    the offending row number on malformed input.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DimensionMismatch(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if response not in header:
            raise DimensionMismatch(f"{path}: no column named {response!r}")
        y_col = header.index(response)
        x_cols = [j for j in range(len(header)) if j != y_col]
        if not x_cols:
            raise DimensionMismatch(f"{path}: no input columns besides {response!r}")
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DimensionMismatch(
                    f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
            try:
                values = [float(c) for c in row]
            except ValueError as exc:
                raise DimensionMismatch(f"{path}: row {lineno}: {exc}") from None
            xs.append([values[j] for j in x_cols])
            ys.append(values[y_col])
    if not xs:
        raise DimensionMismatch(f"{path}: no data rows")
    return build_dataset(np.array(xs), np.array(ys), [header[j] for j in x_cols])
