"""Rank statistics: the concordant divergence, classical correlations, and
the pairwise ranking quality metric with its optimal permutation.

All functions are pure and safe for concurrent invocation on shared inputs.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from .core import RankPermutation
from .errors import LengthMismatch, TiesInResponse, TiesPresent, ZeroVariance

__all__ = [
    "bayes_permutation",
    "chatterjee_xi",
    "kendall_tau",
    "pearson",
    "ranking_metric_T",
    "spearman",
    "t0_divergence",
    "t0_divergence_fast",
]


def _paired(u, y) -> tuple[np.ndarray, np.ndarray]:
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    if u.ndim != 1 or y.ndim != 1 or u.shape[0] != y.shape[0]:
        raise LengthMismatch(f"paired vectors of shapes {u.shape} and {y.shape}")
    if u.shape[0] < 2:
        raise LengthMismatch("need at least two observations")
    return u, y


# ---------------------------------------------------------------------------
# concordant divergence
# ---------------------------------------------------------------------------

def t0_divergence(u, y) -> float:
    """Concordant divergence between a feature column and the response.

    Accumulates |y_i - y_j| over pairs whose feature order disagrees with the
    response order, scaled by 2/(n(n-1)). Per unordered pair: a strictly
    discordant pair contributes 2|dy|, a feature-tied pair contributes |dy|,
    a concordant pair contributes 0. Zero exactly when the feature ranks the
    responses concordantly with strict feature order; always >= 0.

    This is the O(n^2) pair-enumeration reference path.
    """
    u, y = _paired(u, y)
    n = u.shape[0]
    if np.unique(y).size != n:
        raise TiesInResponse("response vector contains exact ties")
    du = u[:, None] - u[None, :]
    dy = y[:, None] - y[None, :]
    ady = np.abs(dy)
    # ordered pairs (i, j): 1(u_i >= u_j) 1(y_i < y_j) + 1(u_i < u_j) 1(y_i >= y_j)
    hits = ((du >= 0) & (dy < 0)) | ((du < 0) & (dy >= 0))
    np.fill_diagonal(hits, False)
    total = float(np.sum(ady, where=hits))
    return 2.0 * total / (n * (n - 1))


class _Fenwick:
    """Prefix sums over feature ranks carrying (count, sum of y)."""

    def __init__(self, size: int):
        self.count = [0] * (size + 1)
        self.ysum = [0.0] * (size + 1)

    def add(self, i: int, y: float) -> None:
        i += 1
        while i < len(self.count):
            self.count[i] += 1
            self.ysum[i] += y
            i += i & (-i)

    def prefix(self, i: int) -> tuple[int, float]:
        """count and y-sum over ranks 0..i inclusive."""
        i += 1
        c, s = 0, 0.0
        while i > 0:
            c += self.count[i]
            s += self.ysum[i]
            i -= i & (-i)
        return c, s


def t0_divergence_fast(u, y) -> float:
    """O(n log n) path for :func:`t0_divergence`; agrees with the reference.

    Processes points in increasing response order, counting earlier points
    with strictly larger (weight 2) or equal (weight 1) feature value via a
    Fenwick tree over dense feature ranks.
    """
    u, y = _paired(u, y)
    n = u.shape[0]
    if np.unique(y).size != n:
        raise TiesInResponse("response vector contains exact ties")
    order = np.argsort(y, kind="stable")
    u_sorted = u[order]
    y_sorted = y[order]
    _, ranks = np.unique(u_sorted, return_inverse=True)
    n_ranks = int(ranks.max()) + 1
    tree = _Fenwick(n_ranks)
    total = 0.0
    all_count, all_sum = 0, 0.0
    for j in range(n):
        r = int(ranks[j])
        yj = float(y_sorted[j])
        le_count, le_sum = tree.prefix(r)
        if r > 0:
            lt_count, lt_sum = tree.prefix(r - 1)
        else:
            lt_count, lt_sum = 0, 0.0
        gt_count = all_count - le_count
        gt_sum = all_sum - le_sum
        eq_count = le_count - lt_count
        eq_sum = le_sum - lt_sum
        # earlier points have smaller y, so each pair contributes y_j - y_i
        total += 2.0 * (yj * gt_count - gt_sum) + (yj * eq_count - eq_sum)
        tree.add(r, yj)
        all_count += 1
        all_sum += yj
    return 2.0 * total / (n * (n - 1))


# ---------------------------------------------------------------------------
# classical correlations
# ---------------------------------------------------------------------------

def kendall_tau(u, y) -> float:
    """(concordant - discordant) / C(n, 2); tied-feature pairs count as neither."""
    u, y = _paired(u, y)
    n = u.shape[0]
    prod = np.sign(u[:, None] - u[None, :]) * np.sign(y[:, None] - y[None, :])
    upper = np.triu_indices(n, k=1)
    vals = prod[upper]
    concordant = int(np.sum(vals > 0))
    discordant = int(np.sum(vals < 0))
    return (concordant - discordant) / (n * (n - 1) / 2)


def pearson(u, y) -> float:
    """Standard sample Pearson correlation; raises ZeroVariance on constants."""
    u, y = _paired(u, y)
    du = u - u.mean()
    dy = y - y.mean()
    su = float(np.sqrt(np.sum(du**2)))
    sy = float(np.sqrt(np.sum(dy**2)))
    if su == 0.0 or sy == 0.0:
        raise ZeroVariance("pearson needs nonzero variance in both arguments")
    return float(np.dot(du, dy) / (su * sy))


def spearman(u, y) -> float:
    """Pearson correlation of rank vectors, with midranks on ties."""
    u, y = _paired(u, y)
    return pearson(rankdata(u, method="average"), rankdata(y, method="average"))


def chatterjee_xi(u, y) -> float:
    """Chatterjee's rank coefficient, tie-free variant.

    Sorts pairs by the feature, ranks the responses in that order and returns
    1 - 3 * sum |r_{i+1} - r_i| / (n^2 - 1). Raises TiesPresent on any tie in
    either argument.
    """
    u, y = _paired(u, y)
    n = u.shape[0]
    if np.unique(u).size != n or np.unique(y).size != n:
        raise TiesPresent("tie-free variant: u and y must both be tie-free")
    order = np.argsort(u, kind="stable")
    y_by_u = y[order]
    r = rankdata(y_by_u, method="ordinal")
    return 1.0 - 3.0 * float(np.sum(np.abs(np.diff(r)))) / (n * n - 1)


# ---------------------------------------------------------------------------
# ranking quality
# ---------------------------------------------------------------------------

def ranking_metric_T(perm: RankPermutation, cond_means) -> float:
    """Average pairwise conditional-mean gap under a permutation.

    (2/(N(N-1))) sum_{i<i'} (mu[j_i] - mu[j_{i'}]) where j is the permutation
    order; in position i the mean appears with net coefficient N-1-2i.
    """
    mu = np.asarray(cond_means, dtype=float)
    order = np.asarray(perm.order, dtype=int)
    n = mu.shape[0]
    if order.shape[0] != n:
        raise LengthMismatch(f"permutation of length {order.shape[0]} for {n} means")
    if n < 2:
        raise LengthMismatch("need at least two observations")
    coef = n - 1 - 2 * np.arange(n)
    return 2.0 * float(np.dot(coef, mu[order])) / (n * (n - 1))


def bayes_permutation(cond_means) -> RankPermutation:
    """Permutation sorting conditional means descending (ties: by index).

    This permutation maximizes :func:`ranking_metric_T` for the given means.
    """
    mu = np.asarray(cond_means, dtype=float)
    order = np.argsort(-mu, kind="stable")
    return RankPermutation(tuple(int(i) for i in order))
