"""Piecewise-monotone transform analysis: refined monotone intervals,
pre-image counting, per-interval case classification, and the signed
preference probability between two transforms.

Interval convention: segments and refined intervals are half-open [a, b)
except the final one, which is closed. Under the continuous input measures
used here the endpoint convention carries zero probability. Pre-image
counting, by contrast, uses the closed range of a transform over the
interval's closure, so a splitting value landing exactly on a range endpoint
counts as one pre-image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Interval
from .errors import (
    CaseThreePresent,
    DimensionMismatch,
    DomainMismatch,
    IntervalSpansBreakpoint,
    MergeableSegments,
    NotMonotone,
    NotRefinedInterval,
    UnboundedTransform,
)
from .symgen import parse_univariate

__all__ = [
    "MonotoneSegment",
    "PiecewiseMonotone",
    "PreferenceReport",
    "TabulatedCDF",
    "UniformCDF",
    "classify_interval",
    "find_preimage",
    "load_piecewise",
    "offset_shift",
    "piecewise_monotone",
    "preference_probability",
    "preimage_count",
    "refine",
    "shift",
]

MONOTONE_GRID_POINTS = 101
DEFAULT_BISECT_TOL = 1e-10


@dataclass(frozen=True)
class MonotoneSegment:
    interval: Interval
    expr: str
    fn: object  # vectorized callable
    direction: str  # "increasing" | "decreasing"


@dataclass(frozen=True)
class PiecewiseMonotone:
    """A transform that is strictly monotone on each of finitely many pieces.

    Build with :func:`piecewise_monotone`, which checks each declared
    direction on a grid and rejects breakpoint partitions that are not
    minimal (adjacent segments that would merge into one monotone piece).
    """

    domain: Interval
    breakpoints: tuple[float, ...]
    segments: tuple[MonotoneSegment, ...]

    def __call__(self, x: float) -> float:
        return float(self.segment_at(x).fn(np.asarray(x, dtype=float)))

    def segment_at(self, x: float) -> MonotoneSegment:
        if not self.domain.contains(x):
            raise DomainMismatch(f"{x} outside domain {self.domain}")
        for seg in self.segments[:-1]:
            if x < seg.interval.hi:
                return seg
        return self.segments[-1]


def _segment_intervals(lo: float, hi: float, breakpoints) -> list[Interval]:
    edges = [lo, *breakpoints, hi]
    out = []
    for i in range(len(edges) - 1):
        last = i == len(edges) - 2
        out.append(Interval(edges[i], edges[i + 1], True, last))
    return out


def piecewise_monotone(domain, breakpoints, exprs, directions) -> PiecewiseMonotone:
    """Validate and build a piecewise-monotone transform.

    ``domain`` is a (lo, hi) pair or Interval; ``breakpoints`` the interior
    segment boundaries in ascending order; ``exprs`` one expression string
    per segment; ``directions`` the declared direction per segment.
    Strict monotonicity is spot-checked on a 101-point grid per segment.
    """
    if isinstance(domain, Interval):
        dom = domain
    else:
        lo, hi = (float(v) for v in domain)
        dom = Interval(lo, hi)
    if dom.lo >= dom.hi:
        raise DimensionMismatch("domain must have positive length")
    breakpoints = tuple(float(b) for b in breakpoints)
    if any(b2 <= b1 for b1, b2 in zip(breakpoints, breakpoints[1:])):
        raise DimensionMismatch("breakpoints must be strictly ascending")
    if breakpoints and (breakpoints[0] <= dom.lo or breakpoints[-1] >= dom.hi):
        raise DimensionMismatch("breakpoints must lie strictly inside the domain")
    exprs = list(exprs)
    directions = list(directions)
    n_seg = len(breakpoints) + 1
    if len(exprs) != n_seg or len(directions) != n_seg:
        raise DimensionMismatch(
            f"{len(breakpoints)} breakpoints require {n_seg} segments, "
            f"got {len(exprs)} expressions and {len(directions)} directions")

    segments = []
    for interval, expr, direction in zip(
            _segment_intervals(dom.lo, dom.hi, breakpoints), exprs, directions):
        if direction not in ("increasing", "decreasing"):
            raise DimensionMismatch(f"direction must be increasing/decreasing, got {direction!r}")
        fn = parse_univariate(expr) if isinstance(expr, str) else expr
        grid = np.linspace(interval.lo, interval.hi, MONOTONE_GRID_POINTS)
        vals = np.asarray(fn(grid), dtype=float)
        if not np.isfinite(vals).all():
            raise NotMonotone(f"{expr!r} is not finite on {interval}")
        diffs = np.diff(vals)
        ok = np.all(diffs > 0) if direction == "increasing" else np.all(diffs < 0)
        if not ok:
            raise NotMonotone(f"{expr!r} is not strictly {direction} on {interval}")
        segments.append(MonotoneSegment(
            interval, expr if isinstance(expr, str) else "<callable>", fn, direction))

    # minimal-cardinality check: same-direction neighbors must not continue
    # monotonically across the breakpoint
    for a, b in zip(segments, segments[1:]):
        if a.direction != b.direction:
            continue
        va = float(a.fn(np.asarray(a.interval.hi, dtype=float)))
        vb = float(b.fn(np.asarray(b.interval.lo, dtype=float)))
        continues = va <= vb if a.direction == "increasing" else va >= vb
        if continues:
            raise MergeableSegments(
                f"segments around x={a.interval.hi} merge into one {a.direction} piece")

    return PiecewiseMonotone(dom, breakpoints, tuple(segments))


def load_piecewise(doc: dict) -> PiecewiseMonotone:
    """Build a transform from its JSON document.

    Schema: {"domain": [lo, hi], "breakpoints": [...],
             "segments": [{"expr": str, "direction": str}, ...]}.
    """
    segments = doc["segments"]
    return piecewise_monotone(
        doc["domain"], doc.get("breakpoints", ()),
        [s["expr"] for s in segments], [s["direction"] for s in segments])


# ---------------------------------------------------------------------------
# refinement and pre-images
# ---------------------------------------------------------------------------

def refine(t1: PiecewiseMonotone, t2: PiecewiseMonotone) -> list[Interval]:
    """Intersections of the two transforms' monotone pieces, ascending.

    Both transforms are monotone on every returned interval; the intervals
    partition the common domain.
    """
    if (t1.domain.lo, t1.domain.hi) != (t2.domain.lo, t2.domain.hi):
        raise DomainMismatch(f"domains differ: {t1.domain} vs {t2.domain}")
    edges = sorted(set(t1.breakpoints) | set(t2.breakpoints))
    return _segment_intervals(t1.domain.lo, t1.domain.hi, edges)


def _enclosing_segment(t: PiecewiseMonotone, interval: Interval) -> MonotoneSegment:
    for seg in t.segments:
        if seg.interval.lo <= interval.lo and interval.hi <= seg.interval.hi:
            return seg
    raise IntervalSpansBreakpoint(
        f"{interval} crosses a breakpoint of the transform")


def _closed_range(seg: MonotoneSegment, interval: Interval) -> tuple[float, float]:
    va = float(seg.fn(np.asarray(interval.lo, dtype=float)))
    vb = float(seg.fn(np.asarray(interval.hi, dtype=float)))
    return (va, vb) if va <= vb else (vb, va)


def preimage_count(t: PiecewiseMonotone, c: float, interval: Interval,
                   tol: float = DEFAULT_BISECT_TOL) -> int:
    """1 when c lies in the closed range of t over the interval, else 0.

    The interval must sit inside a single monotone segment. When the count
    is 1, :func:`find_preimage` locates the pre-image by bisection.
    """
    seg = _enclosing_segment(t, interval)
    lo_r, hi_r = _closed_range(seg, interval)
    del tol  # counting needs only the range; tol applies to location
    return 1 if lo_r <= c <= hi_r else 0


def find_preimage(t: PiecewiseMonotone, c: float, interval: Interval,
                  tol: float = DEFAULT_BISECT_TOL) -> float | None:
    """Bisection solve of t(x) = c on the interval, or None when no pre-image."""
    seg = _enclosing_segment(t, interval)
    lo_r, hi_r = _closed_range(seg, interval)
    if not lo_r <= c <= hi_r:
        return None
    a, b = interval.lo, interval.hi
    fa = float(seg.fn(np.asarray(a, dtype=float)))
    if fa == c:
        return a
    increasing = seg.direction == "increasing"
    while b - a > tol:
        mid = 0.5 * (a + b)
        fm = float(seg.fn(np.asarray(mid, dtype=float)))
        if fm == c:
            return mid
        if (fm < c) == increasing:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def classify_interval(t1: PiecewiseMonotone, t2: PiecewiseMonotone,
                      c1: float, c2: float, interval: Interval) -> str:
    """Case label by pre-image counts of (c1, c2) on a refined interval.

    "both-zero": neither transform can split inside the interval, so the two
    rules compare equal there. "t1-only"/"t2-only": the transform with the
    pre-image is preferred. "both-one": data-dependent; compare the actual
    split losses at the pulled-back thresholds (see tree.best_split).
    """
    members = {(iv.lo, iv.hi) for iv in refine(t1, t2)}
    if (interval.lo, interval.hi) not in members:
        raise NotRefinedInterval(f"{interval} is not a refined interval")
    n1 = preimage_count(t1, c1, interval)
    n2 = preimage_count(t2, c2, interval)
    return {(0, 0): "both-zero", (1, 0): "t1-only",
            (0, 1): "t2-only", (1, 1): "both-one"}[(n1, n2)]


# ---------------------------------------------------------------------------
# preference probability
# ---------------------------------------------------------------------------

class UniformCDF:
    """CDF of the uniform distribution on [lo, hi]."""

    def __init__(self, lo: float, hi: float):
        if not hi > lo:
            raise DimensionMismatch("uniform support must have positive length")
        self.lo, self.hi = float(lo), float(hi)

    def __call__(self, x: float) -> float:
        return float(np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0))


class TabulatedCDF:
    """User CDF given as tabulated (x, probability) pairs.

    Evaluates by monotone linear interpolation; probabilities must be
    nondecreasing within [0, 1].
    """

    def __init__(self, xs, ps):
        xs = np.asarray(xs, dtype=float)
        ps = np.asarray(ps, dtype=float)
        if xs.ndim != 1 or xs.shape != ps.shape or xs.size < 2:
            raise DimensionMismatch("need matching 1-D tables with >= 2 points")
        if np.any(np.diff(xs) <= 0):
            raise DimensionMismatch("x table must be strictly increasing")
        if np.any(np.diff(ps) < 0) or ps[0] < 0 or ps[-1] > 1:
            raise DimensionMismatch("probability table must be nondecreasing in [0, 1]")
        self.xs, self.ps = xs, ps

    def __call__(self, x: float) -> float:
        return float(np.interp(x, self.xs, self.ps))


@dataclass(frozen=True)
class PreferenceReport:
    """Refined intervals where each transform holds the only pre-image, and
    the signed probability of preferring the first transform."""

    intervals_pref_1: tuple[Interval, ...]
    intervals_pref_2: tuple[Interval, ...]
    p_value: float  # signed preference probability in [-1, 1]


def preference_probability(t1: PiecewiseMonotone, t2: PiecewiseMonotone,
                           c: float, measure=None) -> PreferenceReport:
    """Signed probability that splitting prefers t1 over t2 at value c.

    p = P(union of intervals where only t1 has a pre-image) minus
    P(union where only t2 does) under the supplied input CDF (default:
    uniform on the domain). Raises CaseThreePresent when some refined
    interval gives both transforms a pre-image; shifting t1 by
    :func:`offset_shift` removes that case.
    """
    if measure is None:
        measure = UniformCDF(t1.domain.lo, t1.domain.hi)
    pref1, pref2 = [], []
    for interval in refine(t1, t2):
        n1 = preimage_count(t1, c, interval)
        n2 = preimage_count(t2, c, interval)
        if n1 == 1 and n2 == 1:
            raise CaseThreePresent(
                f"both transforms have a pre-image of {c} on {interval}")
        if n1 == 1:
            pref1.append(interval)
        elif n2 == 1:
            pref2.append(interval)
    p1 = sum(measure(iv.hi) - measure(iv.lo) for iv in pref1)
    p2 = sum(measure(iv.hi) - measure(iv.lo) for iv in pref2)
    return PreferenceReport(tuple(pref1), tuple(pref2), float(p1 - p2))


def offset_shift(t1: PiecewiseMonotone, t2: PiecewiseMonotone) -> float:
    """Constant c0 = sup t2 - inf t1 + 1.

    Adding c0 to t1 leaves its split behavior unchanged while guaranteeing
    that no shared splitting value gives both transforms a pre-image on the
    same refined interval.
    """
    # strict monotonicity puts segment extremes at the segment endpoints
    def extremes(t: PiecewiseMonotone) -> tuple[float, float]:
        values = []
        for seg in t.segments:
            values.append(float(seg.fn(np.asarray(seg.interval.lo, dtype=float))))
            values.append(float(seg.fn(np.asarray(seg.interval.hi, dtype=float))))
        arr = np.asarray(values)
        if not np.isfinite(arr).all():
            raise UnboundedTransform("transform is unbounded on its domain")
        return float(arr.min()), float(arr.max())

    _, sup2 = extremes(t2)
    inf1, _ = extremes(t1)
    return sup2 - inf1 + 1.0


def shift(t: PiecewiseMonotone, c0: float) -> PiecewiseMonotone:
    """The transform t + c0 (same pieces, same directions)."""
    segments = tuple(
        MonotoneSegment(seg.interval, f"({seg.expr})+{c0:g}",
                        (lambda x, _f=seg.fn, _c=c0: np.asarray(_f(x)) + _c),
                        seg.direction)
        for seg in t.segments)
    return PiecewiseMonotone(t.domain, t.breakpoints, segments)
