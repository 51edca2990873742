"""Barycentric and conditional projection, and retrieval scores.

Frozen weights below come from an independent double-loop evaluation of
the importance-weight formula on the fixed 3x2 instance shared with the
kernel tests (same kernels recomputed from scratch, no package code).
"""

import numpy as np
import pytest

from infoot import (PointSet, ProjectionRequest, ScoreMatrix,
                    barycentric_project, build_kde_model, conditional_project,
                    importance_scores, importance_weights, pairwise_distances)

X = PointSet(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]))
Y = PointSet(np.array([[1.0, 1.0], [2.0, 0.0]]))
PLAN = np.array([[0.20, 0.10], [0.05, 0.25], [0.25, 0.15]])
H = 0.5

W0 = np.array([0.15218557543472067, 0.1555839824801364])
W2 = np.array([0.22144754495208552, 0.16069335699442702])
PROJ0 = np.array([1.5055210253223876, 0.49447897467761276])


def _model(h=H):
    return build_kde_model(pairwise_distances(X, X),
                           pairwise_distances(Y, Y, kind="intra-target"), h)


def test_barycentric_matches_loop_oracle():
    rng = np.random.default_rng(7)
    g = rng.uniform(0.1, 1.0, (5, 4))
    ys = PointSet(rng.normal(size=(4, 3)))
    proj = barycentric_project(g, ys)
    for i in range(5):
        expect = np.zeros(3)
        for j in range(4):
            expect += g[i, j] * ys.points[j]
        expect /= g[i].sum()
        np.testing.assert_allclose(proj[i], expect, atol=1e-14)


def test_barycentric_rejects_zero_mass_row():
    g = np.array([[0.5, 0.5], [0.0, 0.0]])
    with pytest.raises(ValueError, match="zero-mass"):
        barycentric_project(g, Y)


def test_barycentric_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        barycentric_project(np.ones((3, 3)) / 9, Y)


def test_importance_weights_frozen_values():
    model = _model()
    np.testing.assert_allclose(importance_weights(model, PLAN, 0, Y), W0,
                               atol=1e-15)
    np.testing.assert_allclose(importance_weights(model, PLAN, 2, Y), W2,
                               atol=1e-15)


def test_conditional_projection_frozen_value():
    proj = conditional_project(_model(), PLAN, 0, Y)
    np.testing.assert_allclose(proj[0], PROJ0, atol=1e-14)


def test_weights_positive_and_normalization():
    model = _model()
    w = importance_weights(model, PLAN, 1, Y)
    assert np.all(w > 0)
    wn = importance_weights(model, PLAN, 1, Y, normalize=True)
    assert abs(wn.sum() - 1.0) < 1e-12
    np.testing.assert_allclose(wn, w / w.sum(), atol=1e-15)


def test_conditional_approaches_barycentric():
    # On distinct points the conditional map collapses to the barycentric
    # one as the projection bandwidth shrinks; the gap must be monotone.
    model = _model()
    bary = barycentric_project(PLAN, Y)
    gaps = []
    for h_proj in (0.3, 0.1, 0.03, 0.01, 1e-3):
        cond = conditional_project(model, PLAN, None, Y, h_proj)
        gaps.append(float(np.abs(cond - bary).max()))
    assert all(a >= b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-6


def test_out_of_sample_duplicate_matches_in_sample():
    model = _model()
    w_in = importance_weights(model, PLAN, 1, Y)
    w_out = importance_weights(model, PLAN, X.points[1], Y, source_points=X)
    np.testing.assert_allclose(w_out, w_in, atol=1e-12)


def test_query_distances_path_matches_coordinates():
    model = _model()
    q = np.array([0.3, 0.7])
    d = np.sqrt(((X.points - q) ** 2).sum(axis=1))
    w_coords = importance_weights(model, PLAN, q, Y, source_points=X)
    w_dist = importance_weights(model, PLAN, q, Y, query_distances=d)
    np.testing.assert_allclose(w_dist, w_coords, atol=1e-15)


def test_out_of_sample_needs_source_info():
    with pytest.raises(ValueError, match="supply"):
        importance_weights(_model(), PLAN, np.array([0.1, 0.2]), Y)


def test_bad_queries_and_shapes():
    model = _model()
    with pytest.raises(ValueError, match="out of range"):
        importance_weights(model, PLAN, 3, Y)
    with pytest.raises(ValueError):
        importance_weights(model, np.ones((2, 2)) / 4, 0, Y)
    with pytest.raises(ValueError):
        importance_weights(model, PLAN, 0, Y, h_proj=0.0)
    with pytest.raises(ValueError):
        importance_weights(model, PLAN, np.array([0.1, 0.2]), Y,
                           query_distances=np.array([1.0, -1.0, 2.0]))


def test_importance_scores_batches_all_queries():
    model = _model()
    scores = importance_scores(model, PLAN, None, Y)
    assert scores.shape == (3, 2)
    assert scores.normalized
    row0 = importance_weights(model, PLAN, 0, Y, normalize=True)
    np.testing.assert_allclose(scores.values[0], row0, atol=1e-15)
    # index-array and coordinate-batch specs
    sub = importance_scores(model, PLAN, np.array([2, 0]), Y)
    np.testing.assert_allclose(sub.values[0], scores.values[2], atol=1e-15)
    coords = importance_scores(model, PLAN, X.points[:2], Y, source_points=X)
    np.testing.assert_allclose(coords.values, scores.values[:2], atol=1e-12)


def test_scores_identical_across_thread_counts(monkeypatch):
    model = _model()
    rng = np.random.default_rng(13)
    queries = rng.normal(size=(6, 2))
    results = []
    for threads in ("1", "4"):
        monkeypatch.setenv("INFOOT_THREADS", threads)
        scores = importance_scores(model, PLAN, queries, Y, source_points=X)
        results.append(scores.values)
    np.testing.assert_array_equal(results[0], results[1])


def test_projection_request_validation():
    req = ProjectionRequest()
    assert req.mode == "conditional"
    with pytest.raises(ValueError):
        ProjectionRequest(mode="nearest")
    with pytest.raises(ValueError):
        ProjectionRequest(bandwidth=-1.0)
    with pytest.raises(ValueError):
        ProjectionRequest(indices=[0], coordinates=[[0.0, 0.0]])
    with pytest.raises(ValueError):
        ProjectionRequest(mode="barycentric", coordinates=[[0.0, 0.0]])
    req = ProjectionRequest(coordinates=[0.5, 0.5])
    assert req.coordinates.shape == (1, 2)


def test_score_matrix_validation():
    with pytest.raises(ValueError):
        ScoreMatrix(np.array([1.0, 2.0]), normalized=False)
    with pytest.raises(ValueError):
        ScoreMatrix(np.array([[1.0, -0.5]]), normalized=False)
    with pytest.raises(ValueError, match="sum to 1"):
        ScoreMatrix(np.array([[0.4, 0.4]]), normalized=True)
    ok = ScoreMatrix(np.array([[0.4, 0.6]]), normalized=True)
    assert ok.shape == (1, 2)


def test_projection_stays_in_target_hull():
    rng = np.random.default_rng(29)
    xs = PointSet(rng.normal(size=(8, 2)))
    ys = PointSet(rng.normal(size=(6, 2)))
    g = rng.uniform(0.1, 1.0, (8, 6))
    g /= g.sum()
    model = build_kde_model(pairwise_distances(xs, xs),
                            pairwise_distances(ys, ys, kind="intra-target"),
                            0.5)
    proj = conditional_project(model, g, None, ys)
    lo, hi = ys.points.min(axis=0), ys.points.max(axis=0)
    assert np.all(proj >= lo - 1e-12) and np.all(proj <= hi + 1e-12)
