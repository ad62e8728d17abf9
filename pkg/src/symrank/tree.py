"""CART regression trees: best-split search, split comparison in log space,
complete-tree growth, induced rankings, and a bootstrap split-frequency
importance.

Split convention: the left child takes z <= C. Thresholds are restricted to
observed column values within the node, excluding the node maximum so both
children are nonempty. Ties are broken toward the smallest coordinate, then
the smallest threshold, so trees are fully reproducible.

Candidate splits are never compared through the exponentiated likelihood
ratio; comparisons stay on loss differences (its logarithm) to avoid
overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, FeatureMatrix, RankPermutation, derive_rng
from .errors import (
    ColumnMismatch,
    EmptySide,
    InadmissibleRule,
    Unsplittable,
)

__all__ = [
    "SplitRule",
    "TreeNode",
    "best_split",
    "ensemble_importance",
    "grow_tree",
    "induced_permutation",
    "log_principal_decision_ratio",
    "predict",
    "predict_rows",
    "split_means",
    "split_rule_loss",
    "tree_from_json",
    "tree_to_json",
]


@dataclass(frozen=True)
class SplitRule:
    """Split the k-th column at threshold C: left child is z[:, k] <= C."""

    coordinate: int
    threshold: float


@dataclass(frozen=True)
class TreeNode:
    """A node over a set of training-sample indices.

    Internal nodes carry a split and two children; leaves carry the sample
    mean of their enclosed responses. ``n_features`` records the training
    width so prediction can validate inputs.
    """

    indices: tuple[int, ...]
    n_features: int
    split: "SplitRule | None" = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    mean: float = float("nan")

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    def leaves(self) -> list["TreeNode"]:
        if self.is_leaf:
            return [self]
        return self.left.leaves() + self.right.leaves()

    def internal_nodes(self) -> list["TreeNode"]:
        if self.is_leaf:
            return []
        return [self] + self.left.internal_nodes() + self.right.internal_nodes()


def _matrix(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.x
    if isinstance(data, FeatureMatrix):
        return data.z
    z = np.asarray(data, dtype=float)
    if z.ndim != 2:
        raise ColumnMismatch(f"predictor matrix must be 2-D, got shape {z.shape}")
    return z


def split_means(y, left_mask) -> tuple[float, float]:
    """Per-side response means; both sides must be nonempty."""
    y = np.asarray(y, dtype=float)
    left_mask = np.asarray(left_mask, dtype=bool)
    if not left_mask.any() or left_mask.all():
        raise EmptySide("both split sides must be nonempty")
    return float(y[left_mask].mean()), float(y[~left_mask].mean())


def _column_split_losses(z_sorted: np.ndarray, y_sorted: np.ndarray) -> np.ndarray:
    """Two-sided SSE for every cut position, inf where the cut is inadmissible.

    Position m (1-based) puts the m smallest column values on the left; a cut
    is admissible only between distinct column values.
    """
    n = y_sorted.shape[0]
    s1 = np.cumsum(y_sorted, axis=0)
    s2 = np.cumsum(y_sorted**2, axis=0)
    sizes = np.arange(1, n, dtype=float)[:, None]
    sse_l = s2[:-1] - s1[:-1] ** 2 / sizes
    sse_r = (s2[-1] - s2[:-1]) - (s1[-1] - s1[:-1]) ** 2 / (n - sizes)
    losses = sse_l + sse_r
    losses[z_sorted[:-1] >= z_sorted[1:]] = np.inf
    return losses


def best_split(data, y) -> SplitRule:
    """The (coordinate, threshold) minimizing the two-sided SSE.

    Scans every coordinate and every admissible observed threshold; exact
    loss ties resolve to the smallest coordinate, then smallest threshold.
    Raises Unsplittable when y is constant, fewer than two samples, or no
    column has two distinct values.
    """
    z = _matrix(data)
    y = np.asarray(y, dtype=float)
    n, q = z.shape
    if n < 2 or np.all(y == y[0]):
        raise Unsplittable("node needs >= 2 samples and non-constant response")
    order = np.argsort(z, axis=0, kind="stable")
    z_sorted = np.take_along_axis(z, order, axis=0)
    y_sorted = y[order]
    losses = _column_split_losses(z_sorted, y_sorted)  # (n-1, q)
    col_pos = np.argmin(losses, axis=0)  # first minimum: smallest threshold
    col_best = losses[col_pos, np.arange(q)]
    k = int(np.argmin(col_best))  # first minimum: smallest coordinate
    if not np.isfinite(col_best[k]):
        raise Unsplittable("no column admits a two-sided split")
    m = int(col_pos[k])
    return SplitRule(k, float(z_sorted[m, k]))


def split_rule_loss(data, y, rule: SplitRule) -> float:
    """Two-sided SSE of a rule on this node.

    A threshold that sends every sample to one side scores the parent SSE
    (the empty side contributes nothing), matching the indicator sums that
    define the loss. Raises InadmissibleRule for an invalid coordinate or a
    non-finite threshold.
    """
    z = _matrix(data)
    y = np.asarray(y, dtype=float)
    if not 0 <= rule.coordinate < z.shape[1]:
        raise InadmissibleRule(f"coordinate {rule.coordinate} out of range")
    if not np.isfinite(rule.threshold):
        raise InadmissibleRule(f"threshold {rule.threshold} is not finite")
    mask = z[:, rule.coordinate] <= rule.threshold
    total = 0.0
    for side in (mask, ~mask):
        if side.any():
            vals = y[side]
            total += float(np.sum((vals - vals.mean()) ** 2))
    return total


def log_principal_decision_ratio(data, y, rule1: SplitRule, rule2: SplitRule) -> float:
    """loss(rule2) - loss(rule1); positive means rule1 fits better."""
    return split_rule_loss(data, y, rule2) - split_rule_loss(data, y, rule1)


def grow_tree(data, y, depth: int, min_leaf: int = 1) -> TreeNode:
    """Recursively split until depth K, size < 2*min_leaf, or unsplittable.

    Degenerate nodes become leaves carrying the sample mean.
    """
    z = _matrix(data)
    y = np.asarray(y, dtype=float)
    q = z.shape[1]

    def build(idx: np.ndarray, remaining: int) -> TreeNode:
        node_idx = tuple(int(i) for i in idx)
        y_node = y[idx]
        if remaining <= 0 or idx.size < 2 * min_leaf:
            return TreeNode(node_idx, q, mean=float(y_node.mean()))
        try:
            rule = best_split(z[idx], y_node)
        except Unsplittable:
            return TreeNode(node_idx, q, mean=float(y_node.mean()))
        mask = z[idx, rule.coordinate] <= rule.threshold
        left = build(idx[mask], remaining - 1)
        right = build(idx[~mask], remaining - 1)
        return TreeNode(node_idx, q, split=rule, left=left, right=right)

    return build(np.arange(z.shape[0]), depth)


def predict(tree: TreeNode, row) -> float:
    """Route a single row to its leaf mean."""
    row = np.asarray(row, dtype=float).ravel()
    if row.shape[0] != tree.n_features:
        raise ColumnMismatch(
            f"row has {row.shape[0]} columns, tree was grown on {tree.n_features}")
    node = tree
    while not node.is_leaf:
        rule = node.split
        node = node.left if row[rule.coordinate] <= rule.threshold else node.right
    return node.mean


def predict_rows(tree: TreeNode, data) -> np.ndarray:
    z = _matrix(data)
    return np.array([predict(tree, z[i]) for i in range(z.shape[0])])


def induced_permutation(tree: TreeNode, data) -> RankPermutation:
    """Rows sorted by predicted score descending, stable on ties."""
    scores = predict_rows(tree, data)
    order = np.argsort(-scores, kind="stable")
    return RankPermutation(tuple(int(i) for i in order))


def ensemble_importance(data, y, n_trees: int, depth: int, seed: int,
                        bootstrap: bool = True) -> np.ndarray:
    """Fraction of internal splits using each column, over a bootstrap forest.

    Each tree is grown on a bootstrap resample of the rows (or the full data
    when ``bootstrap`` is off); frequencies are split counts normalized by
    the total number of splits in the ensemble.
    """
    z = _matrix(data)
    y = np.asarray(y, dtype=float)
    if n_trees < 1:
        raise Unsplittable(f"need n_trees >= 1, got {n_trees}")
    n, q = z.shape
    counts = np.zeros(q)
    for t in range(n_trees):
        if bootstrap:
            rows = derive_rng(seed, t).integers(0, n, size=n)
            zt, yt = z[rows], y[rows]
        else:
            zt, yt = z, y
        tree = grow_tree(zt, yt, depth)
        for node in tree.internal_nodes():
            counts[node.split.coordinate] += 1
    total = counts.sum()
    return counts / total if total > 0 else counts


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def tree_to_json(tree: TreeNode) -> dict:
    """JSON document: node list in depth-first preorder plus the width."""
    nodes: list[dict] = []

    def walk(node: TreeNode) -> None:
        if node.is_leaf:
            nodes.append({"mean": node.mean})
        else:
            nodes.append({"coordinate": node.split.coordinate,
                          "threshold": node.split.threshold})
            walk(node.left)
            walk(node.right)

    walk(tree)
    return {"n_features": tree.n_features, "nodes": nodes}


def tree_from_json(doc: dict) -> TreeNode:
    """Rebuild a tree for prediction; training indices are not persisted."""
    nodes = doc["nodes"]
    q = int(doc["n_features"])
    pos = 0

    def build() -> TreeNode:
        nonlocal pos
        entry = nodes[pos]
        pos += 1
        if "mean" in entry:
            return TreeNode((), q, mean=float(entry["mean"]))
        rule = SplitRule(int(entry["coordinate"]), float(entry["threshold"]))
        left = build()
        right = build()
        return TreeNode((), q, split=rule, left=left, right=right)

    tree = build()
    if pos != len(nodes):
        raise ColumnMismatch(f"{len(nodes) - pos} trailing nodes in tree document")
    return tree
