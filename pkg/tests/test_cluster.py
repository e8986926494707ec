"""k-means and the elbow selector."""

import numpy as np
import pytest

from amlpipe.cluster import (
    elbow_select,
    elbow_to_csv,
    kmeans_fit,
    select_elbow_k,
)
from amlpipe.errors import ConfigError, KTooLarge


def test_kmeans_hand_example():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
    model = kmeans_fit(X, 2, seed=0)
    assert sorted(model.centroids.tolist()) == [[0.0, 0.5], [10.0, 0.5]]
    assert model.wcss == pytest.approx(1.0)


def test_kmeans_k_equals_n_gives_zero_wcss():
    X = np.random.default_rng(0).normal(0, 1, (6, 2))
    assert kmeans_fit(X, 6, seed=1).wcss == pytest.approx(0.0, abs=1e-12)


def test_kmeans_k1_is_global_mean():
    X = np.random.default_rng(1).normal(3, 2, (40, 3))
    model = kmeans_fit(X, 1, seed=2)
    assert np.allclose(model.centroids[0], X.mean(axis=0))


def test_kmeans_k_too_large():
    with pytest.raises(KTooLarge):
        kmeans_fit(np.zeros((3, 2)), 4, seed=0)


def test_kmeans_deterministic():
    X = np.random.default_rng(2).normal(0, 1, (100, 2))
    m1 = kmeans_fit(X, 3, seed=7)
    m2 = kmeans_fit(X, 3, seed=7)
    assert np.array_equal(m1.centroids, m2.centroids)
    assert m1.wcss == m2.wcss


def test_centroids_are_member_means_at_convergence():
    X = np.random.default_rng(3).normal(0, 1, (80, 2))
    model = kmeans_fit(X, 4, seed=3)
    for j in range(4):
        members = X[model.assignments == j]
        assert len(members) > 0
        assert np.allclose(model.centroids[j], members.mean(axis=0), atol=1e-9)


def test_elbow_two_blobs_selects_two():
    rng = np.random.default_rng(4)
    X = np.vstack([rng.normal(0, 0.8, (150, 2)), rng.normal(8, 0.8, (150, 2))])
    report = elbow_select(X, 6, seed=4)
    assert report.selected_k == 2


def test_elbow_three_blobs_selects_three():
    rng = np.random.default_rng(5)
    X = np.vstack(
        [
            rng.normal((0, 0), 0.7, (100, 2)),
            rng.normal((9, 0), 0.7, (100, 2)),
            rng.normal((0, 9), 0.7, (100, 2)),
        ]
    )
    assert elbow_select(X, 6, seed=5).selected_k == 3


def test_elbow_wcss_non_increasing():
    X = np.random.default_rng(6).normal(0, 1, (200, 3))
    report = elbow_select(X, 7, seed=6)
    for earlier, later in zip(report.wcss, report.wcss[1:]):
        assert later <= earlier + 1e-9


def test_elbow_requires_k_max_three():
    with pytest.raises(ConfigError):
        elbow_select(np.zeros((10, 2)), 2, seed=0)


def test_elbow_k_max_exceeding_rows():
    with pytest.raises(KTooLarge):
        elbow_select(np.zeros((4, 2)), 6, seed=0)


def test_select_elbow_tie_breaks_to_smaller_k():
    # A quadratic WCSS curve is strictly convex decreasing with uniform
    # curvature: every interior k ties, so the smallest wins.
    quadratic = [100.0, 81.0, 64.0, 49.0, 36.0, 25.0]
    assert select_elbow_k(quadratic) == 2


def test_select_elbow_peak_curvature():
    # Sharp bend at k = 3.
    assert select_elbow_k([100.0, 70.0, 20.0, 18.0, 17.0, 16.5]) == 3


def test_elbow_csv_output():
    rng = np.random.default_rng(7)
    X = np.vstack([rng.normal(0, 0.5, (50, 2)), rng.normal(5, 0.5, (50, 2))])
    report = elbow_select(X, 4, seed=8)
    text = elbow_to_csv(report)
    lines = text.splitlines()
    assert lines[0] == "k,wcss,selected"
    assert len(lines) == 5
    assert sum(1 for line in lines[1:] if line.endswith(",1")) == 1
