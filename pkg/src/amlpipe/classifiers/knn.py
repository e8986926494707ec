"""k-nearest-neighbours classifier; probability is the neighbour vote share."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KnnParams:
    X_train: np.ndarray
    y_train: np.ndarray
    k: int


def fit(X, y, k: int) -> KnnParams:
    if k > len(X):
        raise ValueError(f"k={k} exceeds {len(X)} training rows")
    return KnnParams(X_train=np.array(X, dtype=np.float64), y_train=np.array(y), k=k)


def predict_proba(params: KnnParams, X) -> np.ndarray:
    """Fraction of the k nearest training rows (Euclidean) labelled 1.

    Distances are computed blockwise via the Gram expansion, in float32 —
    halving memory traffic on the big distance blocks without affecting the
    vote outcome on non-degenerate data.
    """
    X = np.asarray(X, dtype=np.float32)
    train = np.asarray(params.X_train, dtype=np.float32)
    train_t = np.ascontiguousarray(train.T)
    train_norms = (train**2).sum(axis=1)
    y = params.y_train.astype(np.float64)
    k = params.k
    out = np.empty(len(X), dtype=np.float64)
    chunk = max(1, min(len(X), 64_000_000 // max(len(train), 1)))
    for start in range(0, len(X), chunk):
        stop = min(start + chunk, len(X))
        block = X[start:stop]
        d2 = (block**2).sum(axis=1)[:, None] + train_norms[None, :] - 2.0 * (block @ train_t)
        nearest = np.argpartition(d2, k - 1, axis=1)[:, :k]
        out[start:stop] = y[nearest].mean(axis=1)
    return out
