"""Sample containers and CSV ingestion.

A :class:`PointSet` bundles a domain's samples with optional class labels
and per-sample marginal weights. Weights default to the uniform histogram
and always sum to one, so they can be used directly as Sinkhorn marginals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = ["PointSet", "load_points_csv", "uniform_weights"]

_WEIGHT_SUM_TOL = 1e-12


def uniform_weights(n: int) -> np.ndarray:
    """Uniform histogram of length ``n``."""
    if n < 1:
        raise ValueError("need at least one sample")
    return np.full(n, 1.0 / n)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PointSet:
    """Samples from one domain.

    Parameters
    ----------
    points : ndarray, shape (n, d)
        Feature rows, one per sample.
    labels : ndarray of int, shape (n,), optional
        Class ids used only for evaluation and class-conditional costs.
    weights : ndarray, shape (n,), optional
        Nonnegative marginal masses summing to one. Uniform by default.
    """

    points: np.ndarray
    labels: np.ndarray | None = None
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be 2-d (n, d), got shape {pts.shape}")
        n, d = pts.shape
        if n < 1 or d < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite entries")
        object.__setattr__(self, "points", _readonly(pts))

        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int)
            if labels.shape != (n,):
                raise ValueError(f"labels must have shape ({n},), got {labels.shape}")
            object.__setattr__(self, "labels", _readonly(labels))

        if self.weights is None:
            w = uniform_weights(n)
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (n,):
                raise ValueError(f"weights must have shape ({n},), got {w.shape}")
            if np.any(w < 0):
                raise ValueError("weights must be nonnegative")
            if abs(w.sum() - 1.0) > _WEIGHT_SUM_TOL:
                raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def load_points_csv(path) -> PointSet:
    """Read a point set from CSV.

    Expects a header row naming the feature columns; an optional trailing
    ``label`` column holds integer class ids. One sample per row.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    has_labels = header and header[-1].strip().lower() == "label"
    ncols = len(header)
    data = np.empty((len(rows), ncols))
    for i, row in enumerate(rows):
        if len(row) != ncols:
            raise ValueError(f"{path}: row {i + 2} has {len(row)} fields, expected {ncols}")
        try:
            data[i] = [float(v) for v in row]
        except ValueError as exc:
            raise ValueError(f"{path}: row {i + 2}: {exc}") from None
    if has_labels:
        labels = data[:, -1]
        if np.any(labels != np.round(labels)):
            raise ValueError(f"{path}: label column must hold integers")
        return PointSet(data[:, :-1], labels=labels.astype(int))
    return PointSet(data)


def save_points_csv(path, ps: PointSet) -> None:
    """Write a point set in the format read by :func:`load_points_csv`."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        cols = [f"x{i}" for i in range(ps.d)]
        if ps.labels is not None:
            writer.writerow(cols + ["label"])
            for row, lab in zip(ps.points, ps.labels):
                writer.writerow([repr(float(v)) for v in row] + [int(lab)])
        else:
            writer.writerow(cols)
            for row in ps.points:
                writer.writerow([repr(float(v)) for v in row])
