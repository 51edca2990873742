"""Mapping source points into the target domain.

Two projectors share one coupling: the barycentric map averages target
points with plan weights, while the conditional map averages them with
importance weights

    w_j(x) ∝ f_plan(x, y_j) / (f_X(x) * f_Y(y_j)),

the ratio of the KDE joint to the KDE marginals. The conditional map is
defined for any query point, not just training samples, degrades
gracefully around outliers, and recovers the barycentric map as its
bandwidth shrinks. The same weights double as similarity scores for
retrieval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ._parallel import parallel_map
from .kernels import KdeModel, gaussian_kernel
from .points import PointSet
from .solver import JOINT_FLOOR

__all__ = [
    "ProjectionRequest",
    "ScoreMatrix",
    "barycentric_project",
    "importance_weights",
    "importance_scores",
    "conditional_project",
]

_ROW_SUM_TOL = 1e-10
_MODES = ("barycentric", "conditional")


@dataclass(frozen=True)
class ProjectionRequest:
    """How source queries should be mapped into the target domain.

    ``indices`` selects in-sample queries, ``coordinates`` supplies
    out-of-sample rows (conditional mode only); leaving both unset maps
    every training source point. ``bandwidth`` overrides the solver
    bandwidth for the conditional weights and is ignored by the
    barycentric map.
    """

    mode: str = "conditional"
    bandwidth: float | None = None
    indices: np.ndarray | None = None
    coordinates: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ValueError("projection bandwidth must be positive")
        if self.indices is not None and self.coordinates is not None:
            raise ValueError("pass either indices or coordinates, not both")
        if self.coordinates is not None:
            if self.mode != "conditional":
                raise ValueError("out-of-sample queries need conditional mode")
            coords = np.atleast_2d(np.asarray(self.coordinates, dtype=float))
            object.__setattr__(self, "coordinates", coords)
        if self.indices is not None:
            object.__setattr__(self, "indices",
                               np.asarray(self.indices, dtype=int))


@dataclass(frozen=True)
class ScoreMatrix:
    """Importance weights of queries against every target sample."""

    values: np.ndarray
    normalized: bool

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("score matrix must be 2-d")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("scores must be finite and nonnegative")
        if self.normalized:
            dev = np.max(np.abs(vals.sum(axis=1) - 1.0))
            if dev > _ROW_SUM_TOL:
                raise ValueError(f"normalized rows must sum to 1, max dev {dev:.3e}")
        object.__setattr__(self, "values", vals)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _plan_values(plan) -> np.ndarray:
    return np.asarray(getattr(plan, "values", plan), dtype=float)


def barycentric_project(coupling, targets: PointSet) -> np.ndarray:
    """Map each source sample to the plan-weighted mean of the targets."""
    g = _plan_values(coupling)
    if g.shape[1] != targets.n:
        raise ValueError(f"plan has {g.shape[1]} columns for {targets.n} targets")
    row_mass = g.sum(axis=1)
    if np.any(row_mass <= 0):
        raise ValueError("plan has a zero-mass row; cannot project it")
    return (g @ targets.points) / row_mass[:, None]


def _target_side(model: KdeModel, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Target Gram and its row sums at bandwidth ``h`` (reusing the fitted scale)."""
    if h == model.bandwidth:
        ky = model.gram_y.values
    else:
        ky = gaussian_kernel(model.dist_y.values, h, model.gram_y.scale)
        np.fill_diagonal(ky, 1.0)
    return ky, ky.sum(axis=1)


def _source_row(model: KdeModel, query, h: float,
                source_points: PointSet | None,
                query_distances=None) -> np.ndarray:
    """Kernel row of one query against the training source samples."""
    if isinstance(query, (int, np.integer)):
        i = int(query)
        if not 0 <= i < model.n:
            raise ValueError(f"in-sample index {i} out of range [0, {model.n})")
        if h == model.bandwidth:
            return model.gram_x.values[i]
        row = gaussian_kernel(model.dist_x.values[i], h, model.gram_x.scale)
        row[i] = 1.0
        return row
    if query_distances is not None:
        d = np.asarray(query_distances, dtype=float)
        if d.shape != (model.n,):
            raise ValueError(f"query distances must have shape ({model.n},)")
        if np.any(d < 0):
            raise ValueError("query distances must be nonnegative")
        return gaussian_kernel(d, h, model.gram_x.scale)
    if source_points is None:
        raise ValueError(
            "out-of-sample query on a domain without coordinates: supply "
            "source_points for the euclidean metric, or query_distances "
            "holding the distances from the query to every training point")
    x = np.asarray(query, dtype=float).reshape(1, -1)
    if x.shape[1] != source_points.d:
        raise ValueError(f"query has {x.shape[1]} features, source has "
                         f"{source_points.d}")
    d = cdist(x, source_points.points)[0]
    return gaussian_kernel(d, h, model.gram_x.scale)


def importance_weights(model: KdeModel, coupling, query, targets: PointSet,
                       h_proj: float | None = None, *,
                       source_points: PointSet | None = None,
                       query_distances=None,
                       normalize: bool = False) -> np.ndarray:
    """Importance weights of one query against every target sample.

    ``query`` is an integer index of a training source point, or a
    coordinate row for an unseen point (then ``source_points`` or
    ``query_distances`` must be given). ``h_proj`` defaults to the
    bandwidth the model was fitted with. Weights are strictly positive up
    to floating-point underflow; ``normalize=True`` rescales them to a
    probability row.
    """
    g = _plan_values(coupling)
    if g.shape != (model.n, model.m):
        raise ValueError(f"plan shape {g.shape} does not match model "
                         f"({model.n}, {model.m})")
    if targets.n != model.m:
        raise ValueError(f"targets have {targets.n} rows, model expects {model.m}")
    h = model.bandwidth if h_proj is None else float(h_proj)
    if h <= 0:
        raise ValueError("projection bandwidth must be positive")
    ky, my = _target_side(model, h)
    kx = _source_row(model, query, h, source_points, query_distances)
    fx = kx.sum()
    joint_row = np.maximum((kx @ g) @ ky.T, JOINT_FLOOR)
    weights = joint_row / (fx * my)
    if normalize:
        weights = weights / weights.sum()
    return weights


def importance_scores(model: KdeModel, coupling, queries, targets: PointSet,
                      h_proj: float | None = None, *,
                      source_points: PointSet | None = None,
                      normalize: bool = True) -> ScoreMatrix:
    """Batch :func:`importance_weights`; queries are scored independently."""
    query_list = _as_query_list(model, queries)
    rows = parallel_map(
        lambda query: importance_weights(
            model, coupling, query, targets, h_proj,
            source_points=source_points, normalize=normalize),
        query_list)
    return ScoreMatrix(np.vstack(rows), normalized=normalize)


def conditional_project(model: KdeModel, coupling, queries, targets: PointSet,
                        h_proj: float | None = None, *,
                        source_points: PointSet | None = None) -> np.ndarray:
    """Map queries to the importance-weighted mean of the target samples.

    The weights form a convex combination, so projections stay inside the
    hull of the targets. With a shrinking ``h_proj`` on distinct points the
    in-sample map approaches :func:`barycentric_project`.
    """
    scores = importance_scores(model, coupling, queries, targets, h_proj,
                               source_points=source_points, normalize=True)
    return scores.values @ targets.points


def _as_query_list(model: KdeModel, queries) -> list:
    """Normalize a query spec into a list of indices and/or coordinate rows."""
    if queries is None:
        return list(range(model.n))
    if isinstance(queries, (int, np.integer)):
        return [int(queries)]
    arr = np.asarray(queries)
    if arr.ndim == 1 and np.issubdtype(arr.dtype, np.integer):
        return [int(i) for i in arr]
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    return [row for row in arr]
