"""k-means with k-means++ seeding, restarts, and an elbow-method selector.

The elbow is formalized as the k (2..k_max-1) maximizing the second
difference WCSS(k-1) - 2*WCSS(k) + WCSS(k+1), ties to the smaller k. Each k
in the elbow sweep gets one extra warm-start restart grown from the best
(k-1) centroids plus the farthest point, which makes the WCSS curve
non-increasing in k by construction.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, InternalError, KTooLarge


@dataclass(frozen=True)
class KMeansModel:
    centroids: np.ndarray
    assignments: np.ndarray
    wcss: float
    n_iter: int
    seed: int


@dataclass(frozen=True)
class ElbowReport:
    wcss: tuple[float, ...]  # index 0 holds k=1
    selected_k: int

    def second_differences(self) -> dict[int, float]:
        return {
            k: self.wcss[k - 2] - 2.0 * self.wcss[k - 1] + self.wcss[k]
            for k in range(2, len(self.wcss))
        }


def _squared_distances(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = (
        (X**2).sum(axis=1)[:, None]
        + (centroids**2).sum(axis=1)[None, :]
        - 2.0 * (X @ centroids.T)
    )
    return np.maximum(d2, 0.0)


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(0, n)]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centroids[j] = X[rng.integers(0, n)]
            continue
        choice = rng.choice(n, p=d2 / total)
        centroids[j] = X[choice]
        d2 = np.minimum(d2, ((X - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _lloyd(X: np.ndarray, centroids: np.ndarray, max_iter: int, seed: int
           ) -> KMeansModel:
    k = len(centroids)
    centroids = centroids.copy()
    assignments = np.full(len(X), -1, dtype=np.intp)
    prev_wcss = np.inf
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = _squared_distances(X, centroids)
        new_assign = d2.argmin(axis=1)

        # Reseed empty clusters to the point farthest from its centroid.
        taken = set(new_assign.tolist())
        for j in range(k):
            if j not in taken:
                farthest = int(d2[np.arange(len(X)), new_assign].argmax())
                centroids[j] = X[farthest]
                d2[:, j] = ((X - centroids[j]) ** 2).sum(axis=1)
                new_assign = d2.argmin(axis=1)
                taken = set(new_assign.tolist())

        wcss = float(d2[np.arange(len(X)), new_assign].sum())
        if wcss > prev_wcss * (1.0 + 1e-12) + 1e-9:
            raise InternalError("Lloyd iteration increased WCSS")
        if np.array_equal(new_assign, assignments):
            assignments = new_assign
            break
        assignments = new_assign
        prev_wcss = wcss
        for j in range(k):
            members = X[assignments == j]
            if len(members) > 0:
                centroids[j] = members.mean(axis=0)

    d2 = _squared_distances(X, centroids)
    assignments = d2.argmin(axis=1)
    wcss = float(d2[np.arange(len(X)), assignments].sum())
    return KMeansModel(
        centroids=centroids, assignments=assignments, wcss=wcss, n_iter=n_iter, seed=seed
    )


def kmeans_fit(
    X,
    k: int,
    seed: int = 0,
    restarts: int = 8,
    max_iter: int = 300,
    warm_start: np.ndarray | None = None,
) -> KMeansModel:
    """Best-of-restarts k-means; each restart uses k-means++ seeding from a
    generator derived from (seed, restart). ``warm_start`` adds one extra
    restart beginning at the given centroids."""
    X = np.asarray(X, dtype=np.float64)
    if k > len(X):
        raise KTooLarge(f"k={k} exceeds {len(X)} rows")
    if k < 1:
        raise ConfigError("k must be at least 1")

    best: KMeansModel | None = None
    starts: list[np.ndarray] = []
    for r in range(restarts):
        rng = np.random.default_rng((seed, k, r))
        starts.append(_kmeans_pp_init(X, k, rng))
    if warm_start is not None:
        starts.append(np.asarray(warm_start, dtype=np.float64))
    for centroids in starts:
        model = _lloyd(X, centroids, max_iter, seed)
        if best is None or model.wcss < best.wcss:
            best = model
    return best


def _farthest_point(X: np.ndarray, model: KMeansModel) -> np.ndarray:
    d2 = _squared_distances(X, model.centroids)
    per_row = d2[np.arange(len(X)), model.assignments]
    return X[int(per_row.argmax())]


def select_elbow_k(wcss: Sequence[float]) -> int:
    """The k in 2..k_max-1 maximizing the WCSS second difference
    WCSS(k-1) - 2*WCSS(k) + WCSS(k+1); ties go to the smaller k."""
    k_max = len(wcss)
    if k_max < 3:
        raise ConfigError("need WCSS values for at least k = 1..3")
    curvature = {
        k: wcss[k - 2] - 2.0 * wcss[k - 1] + wcss[k] for k in range(2, k_max)
    }
    return max(sorted(curvature), key=lambda k: (curvature[k], -k))


def elbow_select(X, k_max: int, seed: int = 0, restarts: int = 8) -> ElbowReport:
    """WCSS for k = 1..k_max and the elbow k by maximum second difference."""
    if k_max < 3:
        raise ConfigError("k_max must be at least 3 for an elbow estimate")
    X = np.asarray(X, dtype=np.float64)
    if k_max > len(X):
        raise KTooLarge(f"k_max={k_max} exceeds {len(X)} rows")

    wcss: list[float] = []
    previous: KMeansModel | None = None
    for k in range(1, k_max + 1):
        warm = None
        if previous is not None:
            warm = np.vstack([previous.centroids, _farthest_point(X, previous)])
        model = kmeans_fit(X, k, seed=seed, restarts=restarts, warm_start=warm)
        wcss.append(model.wcss)
        previous = model

    return ElbowReport(wcss=tuple(wcss), selected_k=select_elbow_k(wcss))


def elbow_to_csv(report: ElbowReport) -> str:
    buffer = io.StringIO()
    buffer.write("k,wcss,selected\n")
    for i, value in enumerate(report.wcss, start=1):
        marker = "1" if i == report.selected_k else "0"
        buffer.write(f"{i},{value:.6f},{marker}\n")
    return buffer.getvalue()
