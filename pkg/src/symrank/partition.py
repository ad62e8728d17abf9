"""Oracle 2-partitions of the response: fixed-size and varying-size optima,
swap-gain analysis, and brute-force enumeration for verification.

For fixed group sizes the within-group SSE objective has exactly two
candidate minimizers: the lowest-i block of the sorted responses (with its
complement) and the highest-i block. Comparing the two losses gives the
global optimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import Partition2, make_partition2
from .errors import (
    EmptySide,
    MembershipViolation,
    SizeOutOfRange,
    TooLarge,
    TooSmall,
)

__all__ = [
    "OracleFixedSize",
    "apply_swap",
    "brute_force_best_2partition",
    "loss",
    "oracle_fixed_size",
    "oracle_varying_size",
    "swap_gain",
]

# relative tolerance for declaring the two fixed-size candidates tied
TIE_RTOL = 1e-12


def loss(p: Partition2, y) -> float:
    """SS(P1) + SS(P2), recomputed from y (ignores the cached fields)."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if not p.left or not p.right:
        raise EmptySide("both partition sides must be nonempty")
    if sorted(p.left + p.right) != list(range(n)):
        raise EmptySide(f"partition does not cover 0..{n - 1} exactly")
    total = 0.0
    for side in (p.left, p.right):
        vals = y[list(side)]
        total += float(np.sum((vals - vals.mean()) ** 2))
    return total


@dataclass(frozen=True)
class OracleFixedSize:
    """The two fixed-size candidates and which one wins.

    ``winner`` is "prefix" or "suffix"; on an exact loss tie the prefix is
    reported with ``tie`` set.
    """

    prefix: Partition2
    suffix: Partition2
    winner: str
    tie: bool

    @property
    def best(self) -> Partition2:
        return self.prefix if self.winner == "prefix" else self.suffix


def oracle_fixed_size(y, i: int) -> OracleFixedSize:
    """Optimal 2-partition with group sizes (i, n-i).

    The prefix candidate puts the i smallest responses in the first group;
    the suffix candidate puts the i largest there. These are the only
    minimizers among all size-(i, n-i) partitions. Requires n > 4 and
    min(i, n-i) >= 2 so both group variances are defined.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if n <= 4:
        raise SizeOutOfRange(f"need n > 4, got n={n}")
    if min(i, n - i) < 2:
        raise SizeOutOfRange(f"need min(i, n-i) >= 2, got i={i}, n={n}")
    order = np.argsort(y, kind="stable")
    prefix = make_partition2(y, order[:i])
    suffix = make_partition2(y, order[n - i:])
    lp, ls = prefix.total_sse, suffix.total_sse
    scale = max(abs(lp), abs(ls), 1.0)
    if abs(lp - ls) <= TIE_RTOL * scale:
        return OracleFixedSize(prefix, suffix, "prefix", True)
    winner = "prefix" if lp < ls else "suffix"
    return OracleFixedSize(prefix, suffix, winner, False)


def brute_force_best_2partition(y, i: int) -> Partition2:
    """Exhaustive minimizer over all C(n, i) partitions of sizes (i, n-i).

    Independent check for :func:`oracle_fixed_size`; guarded to n <= 16.
    Loss ties are broken by lexicographic order of the first group.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if n > 16:
        raise TooLarge(f"exhaustive enumeration is guarded to n <= 16, got n={n}")
    if not 1 <= i < n:
        raise SizeOutOfRange(f"need 1 <= i < n, got i={i}, n={n}")
    best: Partition2 | None = None
    best_key: tuple | None = None
    for left in combinations(range(n), i):
        cand = make_partition2(y, left)
        key = (cand.total_sse, cand.left)
        if best_key is None or key < best_key:
            best, best_key = cand, key
    assert best is not None
    return best


def oracle_varying_size(y) -> tuple[int, Partition2]:
    """Optimal 2-partition over all contiguous splits of the sorted responses.

    Minimizes the two-group SSE over split sizes i in 1..n-1 (groups are the
    i smallest responses and the rest); returns (i*, partition). Exact loss
    ties go to the smallest i. Requires n > 4.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if n <= 4:
        raise TooSmall(f"need n > 4, got n={n}")
    order = np.argsort(y, kind="stable")
    ys = y[order]
    s1 = np.cumsum(ys)
    s2 = np.cumsum(ys**2)
    sizes = np.arange(1, n)
    sse_left = s2[:-1] - s1[:-1] ** 2 / sizes
    sse_right = (s2[-1] - s2[:-1]) - (s1[-1] - s1[:-1]) ** 2 / (n - sizes)
    losses = sse_left + sse_right
    i_star = int(np.argmin(losses)) + 1  # argmin returns first minimum
    return i_star, make_partition2(y, order[:i_star])


def apply_swap(y, p: Partition2, a: int, b: int) -> Partition2:
    """The partition with a (from the left side) and b (right) exchanged."""
    if a not in p.left:
        raise MembershipViolation(f"index {a} is not in the left side")
    if b not in p.right:
        raise MembershipViolation(f"index {b} is not in the right side")
    new_left = tuple(sorted(set(p.left) - {a} | {b}))
    return make_partition2(y, new_left)


def swap_gain(y, p: Partition2, a: int, b: int) -> float:
    """Loss reduction from exchanging a and b; positive means improvement."""
    y = np.asarray(y, dtype=float)
    return loss(p, y) - loss(apply_swap(y, p, a, b), y)
