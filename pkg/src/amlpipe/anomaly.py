"""Unsupervised detectors: per-feature Gaussian density and isolation forest.

The Gaussian model fits independent per-feature means and population
variances on rows believed normal, scores rows by total log-density (the
product of per-feature densities underflows beyond ~20 features, so all
thresholding happens in log space), and flags rows whose log-density falls
below a threshold chosen to maximize F1 on mixed cross-validation data.

The isolation forest isolates rows with random axis-aligned splits; short
average path lengths mean easy isolation. With E(h) the mean path length
over trees and c(n) the average unsuccessful-BST search length, the score is
s = 2^(-E(h)/c(psi)) in (0, 1); higher is more anomalous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .data_model import LabelValue
from .errors import SchemaMismatch, SingleClassCv, TooFewRows, UnsetThreshold

EULER_GAMMA = 0.5772156649

VARIANCE_FLOOR = 1e-9


# --- Gaussian density model ----------------------------------------------

@dataclass(frozen=True)
class GaussianModel:
    """Independent per-feature Gaussians. ``epsilon_log`` is ln(epsilon) of
    the positive density threshold epsilon; None until selected."""

    mean: np.ndarray
    variance: np.ndarray
    epsilon_log: float | None = None

    @property
    def n_features(self) -> int:
        return len(self.mean)


def fit_gaussian(X_normal) -> GaussianModel:
    """Fit means and floored population variances on normal rows only."""
    X = np.asarray(X_normal, dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise TooFewRows("Gaussian fitting needs at least 2 rows")
    return GaussianModel(
        mean=X.mean(axis=0),
        variance=np.maximum(X.var(axis=0), VARIANCE_FLOOR),
    )


def log_density(model: GaussianModel, x) -> np.ndarray | float:
    """Sum over features of -0.5*ln(2*pi*var) - (x-mean)^2/(2*var)."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != model.n_features:
        raise SchemaMismatch(
            f"model has {model.n_features} features, input has {arr.shape[1]}"
        )
    var = model.variance
    scores = (-0.5 * (np.log(2.0 * np.pi * var) + (arr - model.mean) ** 2 / var)).sum(axis=1)
    return float(scores[0]) if single else scores


def _f1_for_flags(n_flagged_pos: np.ndarray, n_flagged_neg: np.ndarray, n_pos: int
                  ) -> np.ndarray:
    tp = n_flagged_pos
    fp = n_flagged_neg
    fn = n_pos - tp
    denom = 2 * tp + fp + fn
    return np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1), 0.0)


def select_epsilon(model: GaussianModel, X_cv, y_cv: Sequence) -> float:
    """Log-space density threshold maximizing F1 of flag = (log_density < eps).

    Candidates are 1000 evenly spaced values between the min and max CV
    log-density; ties resolve to the smaller threshold (fewer flags).
    """
    y = np.array([int(v) for v in y_cv])
    if len(np.unique(y)) < 2:
        raise SingleClassCv("cross-validation data must mix normal and suspicious rows")
    densities = log_density(model, X_cv)
    candidates = np.linspace(densities.min(), densities.max(), 1000)

    pos_sorted = np.sort(densities[y == 1])
    neg_sorted = np.sort(densities[y == 0])
    flagged_pos = np.searchsorted(pos_sorted, candidates, side="left")
    flagged_neg = np.searchsorted(neg_sorted, candidates, side="left")
    f1 = _f1_for_flags(flagged_pos, flagged_neg, len(pos_sorted))
    return float(candidates[int(np.argmax(f1))])


# --- isolation forest -----------------------------------------------------

def c_factor(n: int) -> float:
    """Average unsuccessful-search path length in a BST of n points.

    By convention c(1) = 0 and c(2) = 1 (exact harmonic number); beyond that
    the harmonic approximation H(i) ~ ln(i) + Euler-Mascheroni is used.
    """
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    harmonic = math.log(n - 1) + EULER_GAMMA
    return 2.0 * harmonic - 2.0 * (n - 1) / n


@dataclass(frozen=True)
class IsolationTree:
    feature: np.ndarray     # (nodes,) int32; -1 marks a leaf
    split: np.ndarray       # (nodes,) float64
    left: np.ndarray        # (nodes,) int32
    right: np.ndarray       # (nodes,) int32
    leaf_adjust: np.ndarray  # (nodes,) float64; c(node size) at leaves
    depth: np.ndarray       # (nodes,) int32


@dataclass(frozen=True)
class IsolationForestModel:
    trees: tuple[IsolationTree, ...]
    psi: int                 # effective subsample size
    n_features: int
    seed: int
    threshold: float = 0.6   # score threshold s*

    @property
    def c_psi(self) -> float:
        return c_factor(self.psi)


class _IsoBuilder:
    def __init__(self, X, rng, height_limit):
        self.X = X
        self.rng = rng
        self.height_limit = height_limit
        self.feature: list[int] = []
        self.split: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaf_adjust: list[float] = []
        self.depth: list[int] = []

    def _new_node(self, size: int, depth: int) -> int:
        self.feature.append(-1)
        self.split.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_adjust.append(c_factor(size))
        self.depth.append(depth)
        return len(self.feature) - 1

    def grow(self, idx: np.ndarray, depth: int) -> int:
        node = self._new_node(len(idx), depth)
        if len(idx) <= 1 or depth >= self.height_limit:
            return node
        sub = self.X[idx]
        mins = sub.min(axis=0)
        maxs = sub.max(axis=0)
        candidates = np.flatnonzero(mins < maxs)
        if len(candidates) == 0:
            return node
        f = int(candidates[self.rng.integers(0, len(candidates))])
        split = float(self.rng.uniform(mins[f], maxs[f]))
        go_left = sub[:, f] < split
        if go_left.all() or not go_left.any():
            return node
        self.feature[node] = f
        self.split[node] = split
        self.left[node] = self.grow(idx[go_left], depth + 1)
        self.right[node] = self.grow(idx[~go_left], depth + 1)
        return node

    def build(self) -> IsolationTree:
        return IsolationTree(
            feature=np.array(self.feature, dtype=np.int32),
            split=np.array(self.split, dtype=np.float64),
            left=np.array(self.left, dtype=np.int32),
            right=np.array(self.right, dtype=np.int32),
            leaf_adjust=np.array(self.leaf_adjust, dtype=np.float64),
            depth=np.array(self.depth, dtype=np.int32),
        )


def fit_iforest(X, t: int = 100, psi: int = 256, seed: int = 0) -> IsolationForestModel:
    """Build t isolation trees on seeded subsamples of min(psi, n) rows.

    Splits pick a uniformly random non-constant feature and a uniform split
    value between its node min and max; growth stops at height
    ceil(log2(psi)) or node size 1.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise TooFewRows("isolation forest needs at least 2 rows")
    n = len(X)
    effective = min(psi, n)
    height_limit = math.ceil(math.log2(effective)) if effective > 1 else 0
    trees = []
    for index in range(t):
        rng = np.random.default_rng((seed, index))
        rows = rng.choice(n, size=effective, replace=False)
        builder = _IsoBuilder(X[rows], rng, height_limit)
        builder.grow(np.arange(effective, dtype=np.intp), 0)
        trees.append(builder.build())
    return IsolationForestModel(
        trees=tuple(trees), psi=effective, n_features=X.shape[1], seed=seed
    )


def _tree_path_length(tree: IsolationTree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(len(X), dtype=np.int32)
    rows = np.arange(len(X))
    active = tree.feature[node] >= 0
    while active.any():
        cur = node[active]
        r = rows[active]
        go_left = X[r, tree.feature[cur]] < tree.split[cur]
        node[active] = np.where(go_left, tree.left[cur], tree.right[cur])
        active = tree.feature[node] >= 0
    return tree.depth[node] + tree.leaf_adjust[node]


def anomaly_score(model: IsolationForestModel, x) -> np.ndarray | float:
    """s = 2^(-E(h)/c(psi)); reaching a size-k leaf adds c(k) to the path."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != model.n_features:
        raise SchemaMismatch(
            f"model has {model.n_features} features, input has {arr.shape[1]}"
        )
    total = np.zeros(len(arr))
    for tree in model.trees:
        total += _tree_path_length(tree, arr)
    mean_path = total / len(model.trees)
    scores = np.exp2(-mean_path / model.c_psi)
    return float(scores[0]) if single else scores


def select_iforest_threshold(model: IsolationForestModel, X_cv, y_cv: Sequence) -> float:
    """Score threshold maximizing F1 of flag = (score > s*), by the same
    1000-candidate sweep as the Gaussian epsilon; ties resolve to the larger
    threshold (fewer flags)."""
    y = np.array([int(v) for v in y_cv])
    if len(np.unique(y)) < 2:
        raise SingleClassCv("cross-validation data must mix normal and suspicious rows")
    scores = anomaly_score(model, X_cv)
    candidates = np.linspace(scores.min(), scores.max(), 1000)

    pos_sorted = np.sort(scores[y == 1])
    neg_sorted = np.sort(scores[y == 0])
    flagged_pos = len(pos_sorted) - np.searchsorted(pos_sorted, candidates, side="right")
    flagged_neg = len(neg_sorted) - np.searchsorted(neg_sorted, candidates, side="right")
    f1 = _f1_for_flags(flagged_pos, flagged_neg, len(pos_sorted))
    best = len(candidates) - 1 - int(np.argmax(f1[::-1]))
    return float(candidates[best])


# --- flagging --------------------------------------------------------------

def flag(model, X, threshold: float | None = None) -> list[LabelValue]:
    """Suspicious where log-density < epsilon_log (Gaussian) or
    score > s* (isolation forest)."""
    if isinstance(model, GaussianModel):
        eps = threshold if threshold is not None else model.epsilon_log
        if eps is None:
            raise UnsetThreshold("Gaussian model has no epsilon; run select_epsilon")
        mask = log_density(model, X) < eps
    elif isinstance(model, IsolationForestModel):
        s_star = threshold if threshold is not None else model.threshold
        if s_star is None:
            raise UnsetThreshold("isolation forest has no score threshold")
        mask = anomaly_score(model, X) > s_star
    else:
        raise TypeError(f"unknown detector model {type(model)!r}")
    return [LabelValue.SUSPICIOUS if m else LabelValue.NORMAL for m in np.atleast_1d(mask)]


def with_threshold(model, value: float):
    """Copy of a detector model with its decision threshold set."""
    if isinstance(model, GaussianModel):
        return replace(model, epsilon_log=value)
    if isinstance(model, IsolationForestModel):
        return replace(model, threshold=value)
    raise TypeError(f"unknown detector model {type(model)!r}")
