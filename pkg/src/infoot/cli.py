"""Command-line entry point.

Every subcommand reads an experiment spec (JSON), applies flag overrides
and writes its artifacts into the output directory: ``report.json``
always, plus ``coupling.csv``, ``projection.csv``, ``scores.csv`` and
``plot_points.csv`` where the command produces them. Exit codes: 0 on
success, 1 on validation errors, 2 when a solve did not converge (the
artifacts are still written so the run can be inspected).
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .datasets import ClusterSample, gen_clusters
from .pipelines import (EvalReport, ExperimentSpec, adaptation_pipeline,
                        load_spec, project_pipeline, retrieval_pipeline,
                        solve_pipeline, validate_bandwidth_pipeline,
                        version_stamp)
from .points import save_points_csv

_COMMANDS = ("generate", "solve", "project", "adapt", "retrieve",
             "validate-bandwidth")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infoot",
        description="Mutual-information regularized transport between "
                    "sampled domains")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "sample the scenario data and write it out",
        "solve": "solve the alignment and write the coupling",
        "project": "solve, then map source points into the target domain",
        "adapt": "label-transfer run scored on held-out targets",
        "retrieve": "cross-domain retrieval scored by precision at k",
        "validate-bandwidth": "pick the kernel bandwidth by circular "
                              "validation",
    }
    for name in _COMMANDS:
        cmd = sub.add_parser(name, help=helps[name])
        cmd.add_argument("spec", help="path to the experiment spec JSON")
        cmd.add_argument("--lambda", dest="lam", type=float, default=None,
                         help="override the mutual-information weight")
        cmd.add_argument("--epsilon", type=float, default=None,
                         help="override the entropic strength")
        cmd.add_argument("--bandwidth", type=float, default=None,
                         help="override the kernel bandwidth")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override generator and solver seeds")
        cmd.add_argument("--mode", choices=("barycentric", "conditional"),
                         default=None, help="override the projection mode")
        cmd.add_argument("--out", default=None,
                         help="output directory (overrides the spec)")
    return parser


def _apply_overrides(spec: ExperimentSpec,
                     args: argparse.Namespace) -> ExperimentSpec:
    solver = spec.solver
    if args.lam is not None:
        solver = replace(solver, lam=args.lam)
    if args.epsilon is not None:
        solver = replace(solver, eps=args.epsilon)
    if args.bandwidth is not None:
        solver = replace(solver, bandwidth=args.bandwidth)
    generator = spec.generator
    if args.seed is not None:
        generator = replace(generator, seed=args.seed)
        solver = replace(solver, seed=args.seed)
    projection = spec.projection
    if args.mode is not None:
        projection = replace(projection, mode=args.mode)
    out = args.out if args.out is not None else spec.out
    return replace(spec, generator=generator, solver=solver,
                   projection=projection, out=out)


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_matrix(path: Path, values) -> None:
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    with open(path, "w") as fh:
        for row in vals:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_report(outdir: Path, report: EvalReport) -> None:
    (outdir / "report.json").write_text(report.to_json() + "\n")


def _write_projection(path: Path, projected) -> None:
    proj = np.atleast_2d(np.asarray(projected, dtype=float))
    with open(path, "w") as fh:
        fh.write("query_id," + ",".join(f"x{i}" for i in range(proj.shape[1]))
                 + "\n")
        for i, row in enumerate(proj):
            fh.write(f"{i}," + ",".join(_fmt(v) for v in row) + "\n")


def _write_plot_points(path: Path, sample: ClusterSample,
                       projected=None) -> None:
    """One row per sample: domain, index, cluster id, coordinates and (for
    source rows, when available) the projected coordinates."""
    d = sample.source.d
    proj = None if projected is None \
        else np.atleast_2d(np.asarray(projected, dtype=float))
    header = (["domain", "index", "cluster"]
              + [f"x{i}" for i in range(d)]
              + [f"proj_x{i}" for i in range(d)])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i, (row, cid) in enumerate(zip(sample.source.points,
                                           sample.source_ids)):
            coords = ",".join(_fmt(v) for v in row)
            if proj is not None and i < proj.shape[0]:
                extra = ",".join(_fmt(v) for v in proj[i])
            else:
                extra = ",".join("" for _ in range(d))
            fh.write(f"source,{i},{int(cid)},{coords},{extra}\n")
        blank = ",".join("" for _ in range(d))
        for j, (row, cid) in enumerate(zip(sample.target.points,
                                           sample.target_ids)):
            coords = ",".join(_fmt(v) for v in row)
            fh.write(f"target,{j},{int(cid)},{coords},{blank}\n")


def _cmd_generate(spec: ExperimentSpec, outdir: Path) -> int:
    start = time.perf_counter()
    sample = gen_clusters(spec.generator)
    save_points_csv(outdir / "points_source.csv", sample.source)
    save_points_csv(outdir / "points_target.csv", sample.target)
    _write_plot_points(outdir / "plot_points.csv", sample)
    report = EvalReport(scenario=spec.scenario, metrics={},
                        config=spec.to_dict(), version=version_stamp(),
                        wall_time=time.perf_counter() - start)
    _write_report(outdir, report)
    return 0


def _cmd_solve(spec: ExperimentSpec, outdir: Path) -> int:
    report, fit, sample = solve_pipeline(spec)
    _write_report(outdir, report)
    _write_matrix(outdir / "coupling.csv", fit.result.coupling.values)
    _write_plot_points(outdir / "plot_points.csv", sample)
    return 0 if fit.result.converged else 2


def _cmd_project(spec: ExperimentSpec, outdir: Path) -> int:
    report, fit, sample, projected = project_pipeline(spec)
    _write_report(outdir, report)
    _write_matrix(outdir / "coupling.csv", fit.result.coupling.values)
    _write_projection(outdir / "projection.csv", projected)
    _write_plot_points(outdir / "plot_points.csv", sample, projected)
    return 0 if fit.result.converged else 2


def _cmd_adapt(spec: ExperimentSpec, outdir: Path) -> int:
    report, fit, sample, projected = adaptation_pipeline(spec)
    _write_report(outdir, report)
    _write_matrix(outdir / "coupling.csv", fit.result.coupling.values)
    _write_projection(outdir / "projection.csv", projected)
    _write_plot_points(outdir / "plot_points.csv", sample, projected)
    return 0 if fit.result.converged else 2


def _cmd_retrieve(spec: ExperimentSpec, outdir: Path) -> int:
    report, fit, sample, scores = retrieval_pipeline(spec)
    _write_report(outdir, report)
    _write_matrix(outdir / "coupling.csv", fit.result.coupling.values)
    _write_matrix(outdir / "scores.csv", scores.values)
    _write_plot_points(outdir / "plot_points.csv", sample)
    return 0 if fit.result.converged else 2


def _cmd_validate(spec: ExperimentSpec, outdir: Path) -> int:
    report, _, _ = validate_bandwidth_pipeline(spec)
    _write_report(outdir, report)
    return 0


_HANDLERS = {
    "generate": _cmd_generate,
    "solve": _cmd_solve,
    "project": _cmd_project,
    "adapt": _cmd_adapt,
    "retrieve": _cmd_retrieve,
    "validate-bandwidth": _cmd_validate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = _apply_overrides(load_spec(args.spec), args)
        if spec.out is None:
            raise ValueError("no output directory: set --out or the spec's "
                             "'out' key")
        outdir = Path(spec.out)
        outdir.mkdir(parents=True, exist_ok=True)
        return _HANDLERS[args.command](spec, outdir)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
