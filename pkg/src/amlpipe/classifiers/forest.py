"""Random forest of CART-style trees with exact midpoint split search.

Each tree draws its bootstrap sample and per-node feature subsets from a
generator derived solely from (seed, tree index), so refitting reproduces
the identical forest and trees could be built in parallel without changing
the result. Candidate thresholds are midpoints between consecutive distinct
sorted values; a node splits only if the best split strictly decreases the
weighted Gini impurity, otherwise it becomes a leaf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray    # (nodes,) int32; -1 marks a leaf
    threshold: np.ndarray  # (nodes,) float64
    left: np.ndarray       # (nodes,) int32
    right: np.ndarray      # (nodes,) int32
    value: np.ndarray      # (nodes,) float64; P(label 1) among node rows


@dataclass(frozen=True)
class ForestParams:
    trees: tuple[Tree, ...]
    n_features: int
    seed: int


def gini(p1: float) -> float:
    """Binary Gini impurity 2*p*(1-p); 0.5 at a balanced node, 0 when pure."""
    return 2.0 * p1 * (1.0 - p1)


class _TreeBuilder:
    def __init__(self, X, y, max_depth, min_leaf, n_sub_features, rng):
        self.X = X
        self.y = y
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.n_sub = n_sub_features
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _new_node(self, p1: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(p1)
        return len(self.feature) - 1

    def _best_split(self, idx: np.ndarray, parent_gini: float):
        """Best (feature, threshold, weighted gini) over a feature subsample;
        None when no candidate strictly decreases impurity."""
        m = self.X.shape[1]
        feats = self.rng.choice(m, size=min(self.n_sub, m), replace=False)
        sub = self.X[np.ix_(idx, feats)]
        labels = self.y[idx]
        n = len(idx)
        total_ones = labels.sum()

        best = None  # (weighted_gini, feature, threshold)
        for pos, f in enumerate(feats):
            values = sub[:, pos]
            order = np.argsort(values, kind="stable")
            sv = values[order]
            sy = labels[order]
            ones_left = np.cumsum(sy)[:-1]
            n_left = np.arange(1, n)
            n_right = n - n_left
            valid = (sv[:-1] < sv[1:]) & (n_left >= self.min_leaf) & (n_right >= self.min_leaf)
            if not valid.any():
                continue
            p_left = ones_left / n_left
            p_right = (total_ones - ones_left) / n_right
            weighted = (
                n_left * 2.0 * p_left * (1.0 - p_left)
                + n_right * 2.0 * p_right * (1.0 - p_right)
            ) / n
            weighted = np.where(valid, weighted, np.inf)
            pos_best = int(np.argmin(weighted))
            score = float(weighted[pos_best])
            if score < parent_gini - 1e-12 and (best is None or score < best[0]):
                thr = 0.5 * (sv[pos_best] + sv[pos_best + 1])
                # Adjacent floats can round the midpoint onto the upper
                # value; fall back to the lower so both children stay
                # non-empty under the x <= thr test.
                if thr >= sv[pos_best + 1]:
                    thr = sv[pos_best]
                best = (score, int(f), float(thr))
        return best

    def grow(self, idx: np.ndarray, depth: int) -> int:
        p1 = float(self.y[idx].mean())
        node = self._new_node(p1)
        if depth >= self.max_depth or len(idx) < 2 * self.min_leaf or p1 in (0.0, 1.0):
            return node
        best = self._best_split(idx, gini(p1))
        if best is None:
            return node
        _, f, thr = best
        go_left = self.X[idx, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self.grow(idx[go_left], depth + 1)
        self.right[node] = self.grow(idx[~go_left], depth + 1)
        return node

    def build(self) -> Tree:
        self.grow(np.arange(len(self.y), dtype=np.intp), 0)
        return Tree(
            feature=np.array(self.feature, dtype=np.int32),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int32),
            right=np.array(self.right, dtype=np.int32),
            value=np.array(self.value, dtype=np.float64),
        )


def fit(X, y, n_trees: int, max_depth: int, min_leaf: int, bootstrap: bool,
        seed: int) -> ForestParams:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, m = X.shape
    n_sub = math.ceil(math.sqrt(m))
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng((seed, t))
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n, dtype=np.intp)
        builder = _TreeBuilder(X[rows], y[rows], max_depth, min_leaf, n_sub, rng)
        trees.append(builder.build())
    return ForestParams(trees=tuple(trees), n_features=m, seed=seed)


def _tree_predict(tree: Tree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(len(X), dtype=np.int32)
    rows = np.arange(len(X))
    active = tree.feature[node] >= 0
    while active.any():
        cur = node[active]
        r = rows[active]
        go_left = X[r, tree.feature[cur]] <= tree.threshold[cur]
        node[active] = np.where(go_left, tree.left[cur], tree.right[cur])
        active = tree.feature[node] >= 0
    return tree.value[node]


def predict_proba(params: ForestParams, X) -> np.ndarray:
    """Mean of per-tree leaf class fractions, aggregated in tree order."""
    X = np.asarray(X, dtype=np.float64)
    total = np.zeros(len(X))
    for tree in params.trees:
        total += _tree_predict(tree, X)
    return total / len(params.trees)
