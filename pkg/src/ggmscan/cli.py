"""Command-line surface.

Subcommands cover the full pipeline: fit a graph-constrained model, score
and sort subjects against it, run leave-one-out cross-validation, select the
regularization weight, benchmark a graph against random ones, compute the
z-score baseline, and generate synthetic cohorts.

Conventions: exit 0 on success, 2 on usage/input problems, 3 on numerical
failure; every failure also emits one JSON line on stderr. All outputs are
deterministic given flags and seeds; JSON reports carry an ISO-8601
timestamp unless --no-timestamp is passed. The GGM_THREADS environment
variable caps internal worker threads (0 = one per CPU; default 1).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from .anomaly import abnormality_map, flag_abnormal, mahalanobis, zscore_map
from .core import (
    FormatError,
    SolverConfig,
    SolverError,
    ValidationError,
)
from .evaluation import (
    default_rho_grid,
    loo_criterion,
    loocv,
    model_order,
    random_graph_benchmark,
    select_rho,
)
from .glasso import fit_model
from .io import (
    graph_to_dict,
    load_dataset,
    load_graph,
    load_model,
    save_dataset,
    save_graph,
    save_model,
    write_table_csv,
)
from .stats import chi2_cdf
from .svg import heat_map, line_plot
from .synth import make_default_cohort

REPORT_FORMAT_VERSION = 1


def _emit_error(code: int, kind: str, message) -> None:
    print(json.dumps({"code": code, "error": kind, "message": str(message)}),
          file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    """argparse with JSON-lines usage diagnostics."""

    def error(self, message):
        _emit_error(2, "usage", message)
        raise SystemExit(2)


def _workers() -> int:
    raw = os.environ.get("GGM_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"GGM_THREADS must be an integer, got {raw!r}") from None
    if value < 0:
        raise ValidationError(f"GGM_THREADS must be >= 0, got {value}")
    return value


def _report_header(args) -> dict:
    header = {"format_version": REPORT_FORMAT_VERSION}
    if not args.no_timestamp:
        header["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return header


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _grid(args) -> np.ndarray | None:
    explicit = args.rho_grid is not None
    ranged = any(v is not None for v in (args.rho_min, args.rho_max, args.rho_points))
    if explicit and ranged:
        raise ValidationError("pass either --rho-grid or --rho-min/--rho-max/--rho-points, not both")
    if explicit:
        try:
            values = [float(v) for v in args.rho_grid.split(",") if v.strip()]
        except ValueError:
            raise ValidationError(f"--rho-grid must be comma-separated numbers, got {args.rho_grid!r}") from None
        if not values:
            raise ValidationError("--rho-grid is empty")
        return np.asarray(values)
    if ranged:
        lo = args.rho_min if args.rho_min is not None else 1e-2
        hi = args.rho_max if args.rho_max is not None else 10.0
        points = args.rho_points if args.rho_points is not None else 20
        if not (0 < lo < hi):
            raise ValidationError(f"need 0 < --rho-min < --rho-max, got {lo}, {hi}")
        if points < 2:
            raise ValidationError(f"--rho-points must be >= 2, got {points}")
        return np.logspace(np.log10(lo), np.log10(hi), points)
    return None


def _solver_config(args) -> SolverConfig:
    return SolverConfig(tol=args.tol, max_sweeps=args.max_sweeps,
                        penalize_diagonal=not args.no_penalize_diagonal)


def _check_labels(model_labels, data_labels) -> None:
    if model_labels is None:
        if len(data_labels) == 0:
            raise ValidationError("dataset has no regions")
        return
    if len(model_labels) != len(data_labels):
        raise ValidationError(
            f"model has {len(model_labels)} regions, data has {len(data_labels)}"
        )
    for i, (a, b) in enumerate(zip(model_labels, data_labels)):
        if a != b:
            raise ValidationError(
                f"region label mismatch at index {i}: model {a!r} vs data {b!r}"
            )


def _outdir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit(args) -> int:
    if not (np.isfinite(args.rho) and args.rho >= 0):
        raise ValidationError(f"--rho must be a nonnegative real, got {args.rho}")
    data = load_dataset(args.data)
    graph = load_graph(args.graph)
    model = fit_model(data, graph, args.rho, _solver_config(args))
    save_model(model, args.out, data.region_labels)
    print(json.dumps({
        "objective": model.fit_stats.final_objective,
        "iterations": model.fit_stats.iterations,
        "model_order": model_order(model),
        "converged": model.fit_stats.converged,
        "out": args.out,
    }))
    if not model.fit_stats.converged:
        _emit_error(3, "non-convergence",
                    f"solver did not converge in {model.fit_stats.iterations} sweeps; "
                    f"model written to {args.out} with converged=false")
        return 3
    return 0


def cmd_score(args) -> int:
    model, labels = load_model(args.model)
    data = load_dataset(args.data)
    _check_labels(labels, data.region_labels)
    if data.d != model.d:
        raise ValidationError(f"data has {data.d} regions, model expects {model.d}")
    rows = []
    for i in range(data.n):
        dist = mahalanobis(model, data.values[i])
        rows.append((data.subject_ids[i], dist, dist * dist,
                     chi2_cdf(dist * dist, model.d)))
    write_table_csv(args.out, ["subject_id", "mahalanobis", "squared", "chi2_cdf_value"], rows)
    return 0


def cmd_sort(args) -> int:
    model, labels = load_model(args.model)
    data = load_dataset(args.data)
    _check_labels(labels, data.region_labels)
    if data.d != model.d:
        raise ValidationError(f"data has {data.d} regions, model expects {model.d}")
    amap = abnormality_map(model, data)
    report = _report_header(args)
    report["cutoff_level"] = 0.95
    report["subjects"] = []
    for i, sr in enumerate(amap.sort_results):
        flagged = sorted(flag_abnormal(sr))
        report["subjects"].append({
            "subject_id": data.subject_ids[i],
            "order": [data.region_labels[r] for r in sr.order],
            "order_indices": [int(r) for r in sr.order],
            "distances": [float(v) for v in sr.distances],
            "cutoff": sr.cutoff,
            "abnormality": [float(v) for v in sr.abnormality],
            "flagged": [data.region_labels[r] for r in flagged],
        })
    _write_json(args.out + ".json", report)
    write_table_csv(
        args.out + ".csv",
        ["region", *data.subject_ids],
        [[data.region_labels[r], *amap.a_matrix[r]] for r in range(model.d)],
    )
    if args.svg:
        heat_map(args.out + ".svg", amap.a_matrix, data.region_labels,
                 data.subject_ids, title="abnormality differentials")
    return 0


def _load_cohort(args):
    x = load_dataset(args.healthy)
    y = load_dataset(args.controls)
    z = load_dataset(args.patients)
    graph = load_graph(args.graph)
    return x, y, z, graph


def cmd_cv(args) -> int:
    x, y, z, graph = _load_cohort(args)
    report = loocv(x, y, z, graph, _grid(args), _solver_config(args), _workers())
    out = _outdir(args.out_dir)
    grid = report.rho_grid
    header = ["fold", *[repr(float(r)) for r in grid]]
    for name, curve in (("auc", report.auc), ("bic", report.bic_curve),
                        ("model_order", report.order_curve)):
        write_table_csv(os.path.join(out, f"{name}.csv"), header,
                        [[fid, *row] for fid, row in zip(report.fold_ids, curve.replicates)])
    lo_a, hi_a, med_a = report.auc_envelope
    lo_b, hi_b, med_b = report.bic_envelope
    write_table_csv(
        os.path.join(out, "envelope.csv"),
        ["rho", "auc_lower", "auc_median", "auc_upper", "bic_lower", "bic_median", "bic_upper"],
        [[grid[k], lo_a[k], med_a[k], hi_a[k], lo_b[k], med_b[k], hi_b[k]]
         for k in range(grid.size)],
    )
    summary = _report_header(args)
    summary.update({
        "n_folds": report.n_folds,
        "graph_kind": graph.kind.value,
        "rho_grid_min": float(grid[0]),
        "rho_grid_max": float(grid[-1]),
        "rho_grid": [float(v) for v in grid],
        "envelope_coverage": 0.9,
        "rho_hat": report.rho_hat,
        "sensitivity": report.sensitivity,
        "specificity": report.specificity,
        "mean_auc": [float(v) for v in report.auc.replicates.mean(axis=0)],
    })
    _write_json(os.path.join(out, "cv_report.json"), summary)
    if args.svg:
        line_plot(os.path.join(out, "auc_vs_rho.svg"), grid,
                  [report.auc.replicates.mean(axis=0)], ["mean AUC"],
                  title="cross-validated AUC", xlabel="rho", ylabel="AUC",
                  log_x=True, bands=[(lo_a, hi_a, "90%")])
        line_plot(os.path.join(out, "bic_vs_rho.svg"), grid,
                  [report.bic_curve.replicates.mean(axis=0)], ["mean BIC"],
                  title="training-fold BIC", xlabel="rho", ylabel="BIC",
                  log_x=True, bands=[(lo_b, hi_b, "90%")])
    return 0


def cmd_select_rho(args) -> int:
    data = load_dataset(args.data)
    graph = load_graph(args.graph)
    grid, criterion = loo_criterion(data, graph, _grid(args), _solver_config(args), _workers())
    finite = np.isfinite(criterion)
    if not finite.any():
        raise SolverError("no rho on the grid produced a full set of successful fits")
    rho_hat = float(grid[int(np.nanargmin(criterion))])
    report = _report_header(args)
    report.update({
        "rho_grid_min": float(grid[0]),
        "rho_grid_max": float(grid[-1]),
        "rho_grid": [float(v) for v in grid],
        "criterion": [float(v) if np.isfinite(v) else None for v in criterion],
        "rho_hat": rho_hat,
    })
    _write_json(args.out, report)
    print(json.dumps({"rho_hat": rho_hat}))
    return 0


def cmd_random_graphs(args) -> int:
    x, y, z, graph = _load_cohort(args)
    report = random_graph_benchmark(x, y, z, graph, args.count, _grid(args),
                                    _solver_config(args), args.seed, _workers())
    out = _outdir(args.out_dir)
    grid = report.rho_grid
    header = ["graph", *[repr(float(r)) for r in grid]]
    write_table_csv(os.path.join(out, "random_auc.csv"), header,
                    [[f"g{i:04d}", *row] for i, row in enumerate(report.auc.replicates)])
    write_table_csv(os.path.join(out, "random_bic.csv"), header,
                    [[f"g{i:04d}", *row] for i, row in enumerate(report.bic_curve.replicates)])
    summary = _report_header(args)
    summary.update({
        "seed": report.seed,
        "requested_count": args.count,
        "surviving_count": report.n_graphs,
        "reference_kind": graph.kind.value,
        "rho_grid": [float(v) for v in grid],
        "reference_auc": [float(v) for v in report.ref_auc],
        "reference_bic": [float(v) for v in report.ref_bic],
        "reference_auc_percentile": [float(v) for v in report.percentile],
        "envelopes": {
            str(int(c * 100)): {
                "auc_lower": [float(v) for v in report.auc_envelopes[c][0]],
                "auc_upper": [float(v) for v in report.auc_envelopes[c][1]],
                "bic_lower": [float(v) for v in report.bic_envelopes[c][0]],
                "bic_upper": [float(v) for v in report.bic_envelopes[c][1]],
            }
            for c in sorted(report.auc_envelopes)
        },
    })
    _write_json(os.path.join(out, "benchmark_report.json"), summary)
    if args.svg:
        bands = [(report.auc_envelopes[c][0], report.auc_envelopes[c][1],
                  f"{int(c * 100)}%") for c in sorted(report.auc_envelopes)]
        line_plot(os.path.join(out, "benchmark_auc.svg"), grid,
                  [report.ref_auc], ["reference graph"],
                  title="reference vs random graphs", xlabel="rho", ylabel="AUC",
                  log_x=True, bands=bands)
    return 0


def cmd_zscore(args) -> int:
    train = load_dataset(args.train)
    subjects = load_dataset(args.subjects)
    thresholds = None
    if args.thresholds:
        try:
            thresholds = tuple(float(v) for v in args.thresholds.split(",") if v.strip())
        except ValueError:
            raise ValidationError(
                f"--thresholds must be comma-separated numbers, got {args.thresholds!r}"
            ) from None
    zmap = zscore_map(train, subjects, thresholds)
    write_table_csv(
        args.out + ".csv",
        ["region", *subjects.subject_ids],
        [[train.region_labels[r], *zmap.z[r]] for r in range(train.d)],
    )
    report = _report_header(args)
    report.update({
        "thresholds": list(zmap.thresholds),
        "mean_abs_z": {sid: (float(v) if np.isfinite(v) else None)
                       for sid, v in zip(subjects.subject_ids, zmap.mean_abs)},
        "flags": {
            repr(t): [[train.region_labels[r], subjects.subject_ids[s]]
                      for r, s in zip(*np.nonzero(zmap.flags[t]))]
            for t in zmap.thresholds
        },
    })
    _write_json(args.out + ".json", report)
    if args.svg:
        heat_map(args.out + ".svg", np.abs(zmap.z), train.region_labels,
                 subjects.subject_ids, title="|z| map")
    return 0


def cmd_synth(args) -> int:
    cohort = make_default_cohort(
        seed=args.seed, rows=args.rows, cols=args.cols,
        n_healthy=args.n_healthy, n_controls=args.n_controls,
        n_patients=args.n_patients, regions_per_patient=args.regions_per_patient,
        magnitude_sigmas=args.magnitude,
        edge_weight_range=(args.weight_lo, args.weight_hi),
    )
    out = _outdir(args.out_dir)
    save_dataset(cohort.healthy, os.path.join(out, "healthy.csv"))
    save_dataset(cohort.controls, os.path.join(out, "controls.csv"))
    save_dataset(cohort.patients, os.path.join(out, "patients.csv"))
    save_graph(cohort.planted.graph, os.path.join(out, "graph.json"))
    save_model(cohort.planted.truth, os.path.join(out, "truth_model.json"),
               cohort.healthy.region_labels)
    report = _report_header(args)
    report.update({
        "seed": args.seed,
        "d": cohort.planted.graph.d,
        "lattice": [args.rows, args.cols],
        "magnitude_sigmas": cohort.magnitude_sigmas,
        "injected_regions": [sorted(int(r) for r in regions)
                             for regions in cohort.injected_regions],
    })
    _write_json(os.path.join(out, "cohort.json"), report)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the timestamp field from JSON reports")


def _add_solver(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-6, help="solver convergence threshold")
    p.add_argument("--max-sweeps", type=int, default=500, help="solver sweep limit")
    p.add_argument("--no-penalize-diagonal", action="store_true",
                   help="exclude the precision diagonal from the L1 penalty")


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho-grid", help="comma-separated rho values (increasing)")
    p.add_argument("--rho-min", type=float, help="log-spaced grid start (default 0.01)")
    p.add_argument("--rho-max", type=float, help="log-spaced grid end (default 10)")
    p.add_argument("--rho-points", type=int, help="log-spaced grid size (default 20)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ggmscan",
                     description="Graph-constrained Gaussian models for region-wise "
                                 "abnormality detection")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a model to a dataset under a prior graph")
    p.add_argument("--data", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--out", required=True)
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", help="Mahalanobis-score subjects against a model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("sort", help="sort each subject's regions from normal to abnormal")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True,
                   help="output prefix; writes <out>.json and <out>.csv")
    p.add_argument("--svg", action="store_true", help="also write a heat map SVG")
    _add_common(p)
    p.set_defaults(func=cmd_sort)

    p = sub.add_parser("cv", help="leave-one-out cross-validation over a rho grid")
    p.add_argument("--healthy", required=True)
    p.add_argument("--controls", required=True)
    p.add_argument("--patients", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--svg", action="store_true")
    _add_grid(p)
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("select-rho", help="pick rho by leave-one-out squared distance")
    p.add_argument("--data", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    _add_grid(p)
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_select_rho)

    p = sub.add_parser("random-graphs",
                       help="benchmark a graph against edge-matched random graphs")
    p.add_argument("--healthy", required=True)
    p.add_argument("--controls", required=True)
    p.add_argument("--patients", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--svg", action="store_true")
    _add_grid(p)
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_random_graphs)

    p = sub.add_parser("zscore", help="univariate z-score baseline")
    p.add_argument("--train", required=True)
    p.add_argument("--subjects", required=True)
    p.add_argument("--out", required=True,
                   help="output prefix; writes <out>.csv and <out>.json")
    p.add_argument("--thresholds", help="comma-separated |z| thresholds "
                                        "(default: 2 and the Bonferroni value)")
    p.add_argument("--svg", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_zscore)

    p = sub.add_parser("synth", help="generate a synthetic cohort with known truth")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--rows", type=int, default=5)
    p.add_argument("--cols", type=int, default=6)
    p.add_argument("--n-healthy", type=int, default=40)
    p.add_argument("--n-controls", type=int, default=15)
    p.add_argument("--n-patients", type=int, default=15)
    p.add_argument("--regions-per-patient", type=int, default=3)
    p.add_argument("--magnitude", type=float, default=1.5)
    p.add_argument("--weight-lo", type=float, default=0.3)
    p.add_argument("--weight-hi", type=float, default=0.9)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return int(args.func(args) or 0)
    except FileNotFoundError as exc:
        _emit_error(2, "missing-file", exc)
        return 2
    except (ValidationError, FormatError) as exc:
        _emit_error(2, "invalid-input", exc)
        return 2
    except SolverError as exc:
        _emit_error(3, "numerical", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
