"""Seeded synthetic scenario generators and the class-conditional cost.

Samples come from a Gaussian mixture whose modes sit on a circle; the
target draws from the same modes, optionally rotated, with optional far
outliers appended. Cluster ids ride along as labels for evaluation and for
the class-conditional source cost; the solvers themselves never read them.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy.spatial.distance import cdist

from .kernels import DistanceMatrix
from .points import PointSet

__all__ = [
    "GeneratorConfig",
    "ClusterSample",
    "gen_clusters",
    "gen_two_cluster",
    "class_conditional_cost",
]

DEFAULT_CLASS_PENALTY = 5000.0
OUTLIER_ID = -1


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of the mixture sampler; ``seed`` is mandatory.

    ``sizes`` gives per-cluster source counts; ``target_sizes`` defaults to
    the same. ``identity`` copies the source samples verbatim into the
    target (before outliers), for self-adaptation baselines. Outliers are
    placed at ``outlier_scale`` times the clean target's RMS radius.
    """

    sizes: tuple[int, ...]
    seed: int
    target_sizes: tuple[int, ...] | None = None
    separation: float = 2.0
    spread: float = 0.3
    rotation: float = 0.0
    outliers: int = 0
    outlier_scale: float = 10.0
    identity: bool = False

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("sizes must be a nonempty tuple of counts >= 1")
        object.__setattr__(self, "sizes", sizes)
        if self.target_sizes is not None:
            tsizes = tuple(int(s) for s in self.target_sizes)
            if len(tsizes) != len(sizes) or any(s < 1 for s in tsizes):
                raise ValueError("target_sizes must match the cluster count "
                                 "with counts >= 1")
            object.__setattr__(self, "target_sizes", tsizes)
        if self.identity and self.target_sizes is not None \
                and self.target_sizes != sizes:
            raise ValueError("identity targets copy the source sizes")
        if self.spread < 0 or self.separation <= 0:
            raise ValueError("spread must be >= 0 and separation > 0")
        if self.outliers < 0 or self.outlier_scale <= 0:
            raise ValueError("outliers must be >= 0 with positive scale")

    @property
    def n_clusters(self) -> int:
        return len(self.sizes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ClusterSample:
    """Generated pair of domains with evaluation-only ground truth."""

    source: PointSet
    target: PointSet
    source_ids: np.ndarray
    target_ids: np.ndarray
    centers: np.ndarray
    data_sigma: float
    outlier_indices: np.ndarray

    @property
    def target_outliers(self) -> np.ndarray:
        return self.target.points[self.outlier_indices]


def _mode_centers(k: int, separation: float) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(k) / k
    return separation * np.column_stack([np.cos(angles), np.sin(angles)])


def _sample_mixture(rng, centers, sizes, spread) -> tuple[np.ndarray, np.ndarray]:
    parts = []
    ids = []
    for c, size in enumerate(sizes):
        parts.append(centers[c] + spread * rng.standard_normal((size, 2)))
        ids.append(np.full(size, c, dtype=int))
    return np.vstack(parts), np.concatenate(ids)


def gen_clusters(cfg: GeneratorConfig) -> ClusterSample:
    """Draw a source/target pair from the configured Gaussian mixture.

    Same config, same output, bit for bit. The target is rotated about the
    origin by ``cfg.rotation``; outliers (cluster id -1) are appended last.
    """
    rng = np.random.default_rng(cfg.seed)
    centers = _mode_centers(cfg.n_clusters, cfg.separation)

    src, src_ids = _sample_mixture(rng, centers, cfg.sizes, cfg.spread)
    if cfg.identity:
        tgt, tgt_ids = src.copy(), src_ids.copy()
    else:
        tsizes = cfg.target_sizes if cfg.target_sizes is not None else cfg.sizes
        tgt, tgt_ids = _sample_mixture(rng, centers, tsizes, cfg.spread)
    if cfg.rotation != 0.0:
        c, s = np.cos(cfg.rotation), np.sin(cfg.rotation)
        rot = np.array([[c, -s], [s, c]])
        tgt = tgt @ rot.T

    centroid = tgt.mean(axis=0)
    data_sigma = float(np.sqrt(np.mean(np.sum((tgt - centroid) ** 2, axis=1))))
    out_start = tgt.shape[0]
    if cfg.outliers > 0:
        angles = rng.uniform(0.0, 2.0 * np.pi, cfg.outliers)
        radius = cfg.outlier_scale * data_sigma
        pts = centroid + radius * np.column_stack([np.cos(angles), np.sin(angles)])
        tgt = np.vstack([tgt, pts])
        tgt_ids = np.concatenate([tgt_ids, np.full(cfg.outliers, OUTLIER_ID)])

    return ClusterSample(
        source=PointSet(src, labels=src_ids),
        target=PointSet(tgt, labels=tgt_ids),
        source_ids=src_ids,
        target_ids=tgt_ids,
        centers=centers,
        data_sigma=data_sigma,
        outlier_indices=np.arange(out_start, tgt.shape[0]),
    )


def gen_two_cluster(cfg: GeneratorConfig) -> ClusterSample:
    """Two-mode convenience wrapper around :func:`gen_clusters`."""
    if cfg.n_clusters != 2:
        raise ValueError(f"expected 2 clusters, got {cfg.n_clusters}")
    return gen_clusters(cfg)


def class_conditional_cost(points: PointSet,
                           penalty: float = DEFAULT_CLASS_PENALTY) -> DistanceMatrix:
    """Intra-domain euclidean distances plus a flat class-mismatch penalty.

    Entry ``(i, j)`` is ``||x_i - x_j|| + penalty * [label_i != label_j]``,
    which keeps same-class samples kernel-close while pushing different
    classes far apart.
    """
    if points.labels is None:
        raise ValueError("class-conditional cost needs labeled points")
    if penalty < 0:
        raise ValueError("penalty must be nonnegative")
    d = cdist(points.points, points.points)
    np.fill_diagonal(d, 0.0)
    mismatch = points.labels[:, None] != points.labels[None, :]
    return DistanceMatrix(d + penalty * mismatch, kind="intra-source")
