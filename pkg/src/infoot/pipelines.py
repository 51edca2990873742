"""End-to-end scenario runs: spec parsing, fitting, projecting, scoring.

An :class:`ExperimentSpec` is the single JSON-serializable description of a
run (what data to generate, how to solve, how to project). The pipeline
functions consume a spec and return an :class:`EvalReport` plus the
artifacts the CLI writes out. Everything here is deterministic given the
spec: seeds are mandatory and the only timing information lives in the
report's ``wall_time`` field.
"""

from __future__ import annotations

import json
import subprocess
import time
from dataclasses import dataclass, fields, replace
from itertools import permutations
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from ._parallel import parallel_map
from ._version import __version__
from .datasets import (DEFAULT_CLASS_PENALTY, ClusterSample, GeneratorConfig,
                       class_conditional_cost, gen_clusters)
from .kernels import KdeModel, build_kde_model, pairwise_distances
from .points import PointSet
from .projection import (ProjectionRequest, ScoreMatrix, barycentric_project,
                         conditional_project, importance_scores)
from .solver import AlignmentResult, SolverConfig, solve_fused_infoot

__all__ = [
    "SCENARIOS",
    "DEFAULT_BANDWIDTH_GRID",
    "PRECISION_KS",
    "ExperimentSpec",
    "EvalReport",
    "FitResult",
    "load_spec",
    "spec_from_dict",
    "version_stamp",
    "stratified_holdout",
    "nn_classify",
    "cluster_coherence",
    "precision_at_k",
    "outlier_hits",
    "fit_alignment",
    "project_source",
    "solve_pipeline",
    "project_pipeline",
    "adaptation_pipeline",
    "retrieval_pipeline",
    "circular_validation",
    "validate_bandwidth_pipeline",
]

SCENARIOS = ("point_cloud", "outliers", "imbalance", "adaptation", "retrieval")
DEFAULT_BANDWIDTH_GRID = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
PRECISION_KS = (1, 5, 15)
HOLDOUT_FRACTION = 0.1

# Metrics with these prefixes are fractions and must stay inside [0, 1].
_FRACTION_PREFIXES = ("accuracy", "coherence", "p_at_", "score", "agreement")


@dataclass(frozen=True)
class ExperimentSpec:
    """Complete, reproducible description of one experiment run."""

    scenario: str
    generator: GeneratorConfig
    solver: SolverConfig
    projection: ProjectionRequest
    bandwidth_grid: tuple[float, ...] = DEFAULT_BANDWIDTH_GRID
    class_penalty: float = DEFAULT_CLASS_PENALTY
    out: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, "
                             f"got {self.scenario!r}")
        grid = tuple(float(h) for h in self.bandwidth_grid)
        if not grid or any(h <= 0 for h in grid):
            raise ValueError("bandwidth_grid must be nonempty with positive "
                             "entries")
        object.__setattr__(self, "bandwidth_grid", grid)
        if self.class_penalty < 0:
            raise ValueError("class_penalty must be nonnegative")

    @property
    def uses_class_cost(self) -> bool:
        return self.scenario in ("adaptation", "imbalance")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "generator": self.generator.to_dict(),
            "solver": self.solver.to_dict(),
            "projection": {"mode": self.projection.mode,
                           "bandwidth": self.projection.bandwidth},
            "bandwidth_grid": list(self.bandwidth_grid),
            "class_penalty": self.class_penalty,
            "out": self.out,
        }


def _check_keys(section: str, data: dict, allowed: set[str]) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ValueError(f"unknown {section} keys: {', '.join(unknown)}")


def spec_from_dict(data: dict) -> ExperimentSpec:
    """Build a spec from parsed JSON, rejecting unknown or missing keys."""
    if not isinstance(data, dict):
        raise ValueError("spec root must be a JSON object")
    _check_keys("spec", data, {"scenario", "generator", "solver",
                               "projection", "bandwidth_grid",
                               "class_penalty", "out"})
    for key in ("scenario", "generator"):
        if key not in data:
            raise ValueError(f"spec is missing required key {key!r}")

    gen_data = dict(data["generator"])
    gen_fields = {f.name for f in fields(GeneratorConfig)}
    _check_keys("generator", gen_data, gen_fields)
    if "seed" not in gen_data:
        raise ValueError("generator.seed is required; every run must be "
                         "reproducible")
    if "sizes" not in gen_data:
        raise ValueError("generator.sizes is required")
    gen_data["sizes"] = tuple(gen_data["sizes"])
    if gen_data.get("target_sizes") is not None:
        gen_data["target_sizes"] = tuple(gen_data["target_sizes"])
    generator = GeneratorConfig(**gen_data)

    solver_data = dict(data.get("solver", {}))
    _check_keys("solver", solver_data, {f.name for f in fields(SolverConfig)})
    solver_data.setdefault("seed", generator.seed)
    solver = SolverConfig(**solver_data)

    proj_data = dict(data.get("projection", {}))
    _check_keys("projection", proj_data, {"mode", "bandwidth"})
    projection = ProjectionRequest(**proj_data)

    return ExperimentSpec(
        scenario=data["scenario"],
        generator=generator,
        solver=solver,
        projection=projection,
        bandwidth_grid=tuple(data.get("bandwidth_grid",
                                      DEFAULT_BANDWIDTH_GRID)),
        class_penalty=float(data.get("class_penalty",
                                     DEFAULT_CLASS_PENALTY)),
        out=data.get("out"),
    )


def load_spec(path) -> ExperimentSpec:
    """Read and validate an experiment spec from a JSON file."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValueError(f"{path}:{err.lineno}: invalid JSON: {err.msg}") \
            from None
    return spec_from_dict(data)


def version_stamp() -> str:
    """Package version, plus the short git revision when inside a checkout."""
    stamp = __version__
    try:
        proc = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True, text=True, timeout=10,
            cwd=Path(__file__).resolve().parent)
        if proc.returncode == 0 and proc.stdout.strip():
            stamp = f"{stamp}+g{proc.stdout.strip()}"
    except OSError:
        pass
    return stamp


@dataclass(frozen=True)
class EvalReport:
    """Metrics of one run together with the fully resolved configuration."""

    scenario: str
    metrics: dict
    config: dict
    version: str
    wall_time: float

    def __post_init__(self):
        for key, value in self.metrics.items():
            value = float(value)
            if not np.isfinite(value):
                raise ValueError(f"metric {key!r} is not finite")
            if key.startswith(_FRACTION_PREFIXES) \
                    and not -1e-12 <= value <= 1.0 + 1e-12:
                raise ValueError(f"metric {key!r}={value} outside [0, 1]")
        if self.wall_time < 0:
            raise ValueError("wall_time must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "metrics": {k: float(v) for k, v in self.metrics.items()},
            "config": self.config,
            "version": self.version,
            "wall_time": self.wall_time,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def stratified_holdout(labels, fraction: float = HOLDOUT_FRACTION,
                       seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Split indices into (train, test) with per-class sampling.

    Each class contributes about ``fraction`` of its members to the test
    side, at least one when it has two or more members. Both index arrays
    come back sorted, so downstream order does not depend on the draw.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size < 2:
        raise ValueError("need a 1-d label vector with at least two samples")
    if not 0 < fraction < 1:
        raise ValueError("holdout fraction must lie in (0, 1)")
    rng = np.random.default_rng([seed, 0x5EED])
    test_parts = []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        k = int(round(fraction * idx.size))
        if idx.size > 1:
            k = min(max(k, 1), idx.size - 1)
        else:
            k = 0
        if k > 0:
            test_parts.append(rng.choice(idx, size=k, replace=False))
    if not test_parts:
        raise ValueError("holdout produced no test samples; classes are "
                         "too small")
    test = np.sort(np.concatenate(test_parts))
    train = np.setdiff1d(np.arange(labels.size), test)
    return train, test


def nn_classify(train_points, train_labels, query_points) -> np.ndarray:
    """1-nearest-neighbour labels; ties go to the lowest training index."""
    train = np.atleast_2d(np.asarray(train_points, dtype=float))
    queries = np.atleast_2d(np.asarray(query_points, dtype=float))
    d = cdist(queries, train)
    return np.asarray(train_labels)[d.argmin(axis=1)]


def cluster_coherence(plan, source_ids, target_ids) -> float:
    """Fraction of coupling mass on the best one-to-one cluster pairing.

    Mass touching outlier samples (id < 0) counts toward the total but can
    never be coherent, so heavy outlier attraction lowers the score.
    """
    g = np.asarray(getattr(plan, "values", plan), dtype=float)
    source_ids = np.asarray(source_ids)
    target_ids = np.asarray(target_ids)
    src_classes = np.unique(source_ids[source_ids >= 0])
    tgt_classes = np.unique(target_ids[target_ids >= 0])
    if src_classes.size != tgt_classes.size:
        raise ValueError("coherence needs the same number of clusters on "
                         "both sides")
    k = src_classes.size
    mass = np.empty((k, k))
    for a, ca in enumerate(src_classes):
        rows = g[source_ids == ca]
        for b, cb in enumerate(tgt_classes):
            mass[a, b] = rows[:, target_ids == cb].sum()
    # Cluster counts are tiny, so exact enumeration is the simplest oracle.
    best = max(sum(mass[i, perm[i]] for i in range(k))
               for perm in permutations(range(k)))
    return float(best / g.sum())


def precision_at_k(scores, query_labels, target_labels,
                   ks=PRECISION_KS) -> dict[int, float]:
    """Mean fraction of same-class targets among the top-k scored ones.

    Ranking sorts by descending score with ties resolved toward the lower
    target index (stable sort), so results do not depend on sort internals.
    """
    vals = np.asarray(getattr(scores, "values", scores), dtype=float)
    query_labels = np.asarray(query_labels)
    target_labels = np.asarray(target_labels)
    if vals.ndim != 2 or vals.shape != (query_labels.size, target_labels.size):
        raise ValueError("scores must be (n_queries, n_targets)")
    m = vals.shape[1]
    for k in ks:
        if not 1 <= int(k) <= m:
            raise ValueError(f"k={k} out of range for {m} targets")
    order = np.argsort(-vals, axis=1, kind="stable")
    result = {}
    for k in ks:
        top = target_labels[order[:, :int(k)]]
        result[int(k)] = float((top == query_labels[:, None]).mean())
    return result


def outlier_hits(projected, outliers, radius: float) -> int:
    """Count projections that land within ``radius`` of any outlier."""
    projected = np.atleast_2d(np.asarray(projected, dtype=float))
    outliers = np.atleast_2d(np.asarray(outliers, dtype=float))
    if outliers.size == 0:
        return 0
    d = cdist(projected, outliers)
    return int(np.count_nonzero(d.min(axis=1) < radius))


@dataclass(frozen=True)
class FitResult:
    """A solved alignment bundled with the KDE state it was solved under."""

    model: KdeModel
    result: AlignmentResult
    source: PointSet
    target: PointSet


def fit_alignment(source: PointSet, target: PointSet, cfg: SolverConfig,
                  class_penalty: float | None = None) -> FitResult:
    """Solve the fused objective between two point sets.

    The cross cost is always the plain euclidean one (target labels are
    never assumed known). ``class_penalty`` switches the source
    intra-domain metric to the class-conditional one, which requires
    labeled source points.
    """
    if class_penalty is not None:
        dx = class_conditional_cost(source, class_penalty)
    else:
        dx = pairwise_distances(source, source, kind="intra-source")
    dy = pairwise_distances(target, target, kind="intra-target")
    cross = pairwise_distances(source, target, kind="cross")
    result = solve_fused_infoot(cross.values, dx, dy,
                                source.weights, target.weights, cfg)
    model = build_kde_model(dx, dy, cfg.bandwidth)
    return FitResult(model=model, result=result, source=source, target=target)


def project_source(fit: FitResult,
                   request: ProjectionRequest) -> np.ndarray:
    """Map every training source point per the requested projection mode."""
    if request.mode == "barycentric":
        return barycentric_project(fit.result.coupling, fit.target)
    return conditional_project(fit.model, fit.result.coupling, None,
                               fit.target, request.bandwidth)


def _base_metrics(fit: FitResult, source_ids, target_ids) -> dict:
    return {
        "coherence": cluster_coherence(fit.result.coupling,
                                       source_ids, target_ids),
        "mi": fit.result.mi_trace[-1],
        "objective": fit.result.objective_trace[-1],
        "converged": float(fit.result.converged),
        "outer_iterations": float(fit.result.iterations),
    }


def _report(spec: ExperimentSpec, metrics: dict, start: float) -> EvalReport:
    return EvalReport(
        scenario=spec.scenario,
        metrics=metrics,
        config=spec.to_dict(),
        version=version_stamp(),
        wall_time=time.perf_counter() - start,
    )


def solve_pipeline(spec: ExperimentSpec
                   ) -> tuple[EvalReport, FitResult, ClusterSample]:
    """Generate data per the spec and solve the unsupervised alignment."""
    start = time.perf_counter()
    sample = gen_clusters(spec.generator)
    fit = fit_alignment(sample.source, sample.target, spec.solver)
    metrics = _base_metrics(fit, sample.source_ids, sample.target_ids)
    return _report(spec, metrics, start), fit, sample


def project_pipeline(spec: ExperimentSpec
                     ) -> tuple[EvalReport, FitResult, ClusterSample,
                                np.ndarray]:
    """Solve, then project every source point into the target domain.

    When the sample carries outliers the report counts projections landing
    within half the clean RMS radius of any outlier, for both the requested
    mode and its counterpart (so robustness can be compared off one run).
    """
    start = time.perf_counter()
    sample = gen_clusters(spec.generator)
    fit = fit_alignment(sample.source, sample.target, spec.solver)
    projected = project_source(fit, spec.projection)
    metrics = _base_metrics(fit, sample.source_ids, sample.target_ids)
    if sample.outlier_indices.size:
        radius = sample.data_sigma / 2.0
        cond = project_source(fit, replace(spec.projection,
                                           mode="conditional"))
        bary = project_source(fit, replace(spec.projection,
                                           mode="barycentric"))
        metrics["outlier_hit_count_conditional"] = float(
            outlier_hits(cond, sample.target_outliers, radius))
        metrics["outlier_hit_count_barycentric"] = float(
            outlier_hits(bary, sample.target_outliers, radius))
    return _report(spec, metrics, start), fit, sample, projected


def adaptation_pipeline(spec: ExperimentSpec
                        ) -> tuple[EvalReport, FitResult, ClusterSample,
                                   np.ndarray]:
    """Label transfer across domains, scored on held-out target points.

    Protocol: hold out a stratified tenth of the target (labels hidden
    during fitting), align the source against the remaining targets with
    the class-conditional source metric, project the source per the spec,
    then 1-NN classify the held-out targets against the projected source.
    """
    start = time.perf_counter()
    sample = gen_clusters(spec.generator)
    train_idx, test_idx = stratified_holdout(sample.target_ids,
                                             HOLDOUT_FRACTION,
                                             spec.generator.seed)
    train_target = PointSet(sample.target.points[train_idx],
                            labels=sample.target_ids[train_idx])
    fit = fit_alignment(sample.source, train_target, spec.solver,
                        class_penalty=spec.class_penalty)
    projected = project_source(fit, spec.projection)
    predicted = nn_classify(projected, sample.source_ids,
                            sample.target.points[test_idx])
    accuracy = float(np.mean(predicted == sample.target_ids[test_idx]))
    metrics = _base_metrics(fit, sample.source_ids,
                            sample.target_ids[train_idx]) | {
        "accuracy": accuracy,
        "n_train": float(train_idx.size),
        "n_test": float(test_idx.size),
    }
    return _report(spec, metrics, start), fit, sample, projected


def retrieval_pipeline(spec: ExperimentSpec
                       ) -> tuple[EvalReport, FitResult, ClusterSample,
                                  ScoreMatrix]:
    """Cross-domain retrieval scored by precision at k in {1, 5, 15}.

    A stratified tenth of the source becomes out-of-sample queries; the
    alignment is fit fully unsupervised on the rest. Each query ranks all
    targets by its importance weights and precision counts same-class hits.
    """
    start = time.perf_counter()
    sample = gen_clusters(spec.generator)
    train_idx, query_idx = stratified_holdout(sample.source_ids,
                                              HOLDOUT_FRACTION,
                                              spec.generator.seed)
    train_source = PointSet(sample.source.points[train_idx],
                            labels=sample.source_ids[train_idx])
    fit = fit_alignment(train_source, sample.target, spec.solver)
    scores = importance_scores(fit.model, fit.result.coupling,
                               sample.source.points[query_idx],
                               fit.target, spec.projection.bandwidth,
                               source_points=train_source)
    precisions = precision_at_k(scores, sample.source_ids[query_idx],
                                sample.target_ids)
    metrics = {
        "converged": float(fit.result.converged),
        "n_queries": float(query_idx.size),
    }
    for k, value in precisions.items():
        metrics[f"p_at_{k}"] = value
    return _report(spec, metrics, start), fit, sample, scores


def circular_validation(source: PointSet, target: PointSet,
                        cfg: SolverConfig, grid,
                        projection: ProjectionRequest | None = None,
                        class_penalty: float | None = None
                        ) -> tuple[float, list[tuple[float, float]]]:
    """Pick the kernel bandwidth without target labels.

    For each candidate h: solve source to target, project the source and
    pseudo-label every target by 1-NN; then solve the reverse direction
    treating the pseudo-labels as ground truth, project back and classify
    the source points. The score is the fraction of source points whose
    round-trip label survives. Returns the best h (ties prefer smaller h)
    and the full (h, score) list in ascending h order.
    """
    if source.labels is None:
        raise ValueError("circular validation needs labeled source points")
    grid = sorted(float(h) for h in grid)
    if not grid or grid[0] <= 0:
        raise ValueError("bandwidth grid must be nonempty with positive "
                         "entries")
    projection = projection or ProjectionRequest()

    def score_one(h: float) -> float:
        cfg_h = replace(cfg, bandwidth=h)
        forward = fit_alignment(source, target, cfg_h,
                                class_penalty=class_penalty)
        pseudo = nn_classify(project_source(forward, projection),
                             source.labels, target.points)
        pseudo_target = PointSet(target.points, labels=pseudo,
                                 weights=target.weights)
        reverse = fit_alignment(pseudo_target, source, cfg_h,
                                class_penalty=class_penalty)
        predicted = nn_classify(project_source(reverse, projection),
                                pseudo, source.points)
        return float(np.mean(predicted == source.labels))

    scores = parallel_map(score_one, grid)
    best = int(np.argmax(scores))  # first occurrence = smallest h on ties
    return grid[best], list(zip(grid, scores))


def validate_bandwidth_pipeline(spec: ExperimentSpec
                                ) -> tuple[EvalReport, float,
                                           list[tuple[float, float]]]:
    """Run circular validation over the spec's bandwidth grid."""
    start = time.perf_counter()
    sample = gen_clusters(spec.generator)
    penalty = spec.class_penalty if spec.uses_class_cost else None
    chosen, pairs = circular_validation(sample.source, sample.target,
                                        spec.solver, spec.bandwidth_grid,
                                        spec.projection,
                                        class_penalty=penalty)
    metrics = {"chosen_bandwidth": chosen}
    for h, score in pairs:
        metrics[f"score_h_{h:g}"] = score
    return _report(spec, metrics, start), chosen, pairs
