"""Command-line interface: simulate, metrics, report.

Exit codes: 0 success; 2 configuration or input error; 3 at least one
degenerate condition (or a degenerate metric input); 4 unwritable output.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from .config import build_condition_specs, load_config, with_overrides
from .errors import (
    BresimError,
    ConfigError,
    DegenerateDistribution,
    ZeroTrueParameter,
)
from .harness import ConditionResult, run_grid_conditions
from .metrics import MetricReport, OverlapMode, compute_report
from .output import emit_outputs, format_metrics_table, read_metrics_csv

__all__ = ["entry"]

_WORKERS_ENV = "BRE_SIM_WORKERS"


def _error(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _env_workers() -> int | None:
    raw = os.environ.get(_WORKERS_ENV)
    if raw is None or raw == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{_WORKERS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{_WORKERS_ENV} must be >= 1, got {value}")
    return value


def _summary_line(result: ConditionResult) -> str:
    cid = result.condition_id
    primary = result.spec.track_params[0]
    n_ref = result.usable_reference[primary].size
    n_comp = result.usable_comparison[primary].size
    if result.degenerate:
        return (
            f"{cid}: DEGENERATE usable_ref={n_ref} usable_comp={n_comp} "
            f"(metrics suppressed)"
        )
    report = result.reports[primary]
    return (
        f"{cid}: re={report.re_percent:.2f}% overlap={report.iqr_overlap:.4f} "
        f"({report.overlap_case.name}) median_rb={report.median_rb:+.4f} "
        f"bre={report.bre:.4f} usable_ref={n_ref} usable_comp={n_comp}"
    )


def _cmd_simulate(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
        workers = args.workers if args.workers is not None else _env_workers()
        config = with_overrides(
            config,
            master_seed=args.seed,
            replications=args.reps,
            output_dir=args.output_dir,
            workers=workers,
        )
        specs = build_condition_specs(config)
    except ConfigError as exc:
        _error(str(exc))
        return 2
    results = run_grid_conditions(specs, workers=config.workers)
    try:
        paths = emit_outputs(results, config.output_dir)
    except OSError as exc:
        _error(f"cannot write outputs to {config.output_dir!r}: {exc}")
        return 4
    for result in results:
        print(_summary_line(result))
    print(
        f"wrote {paths['estimates']}, {paths['metrics']}, {paths['plotdata']}"
    )
    return 3 if any(r.degenerate for r in results) else 0


def _read_label_estimate_csv(
    path: str, ref_label: str, comp_label: str
) -> tuple[list[float], list[float]]:
    reference: list[float] = []
    comparison: list[float] = []
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path!r}: {exc}") from None
    for lineno, row in enumerate(rows, start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if lineno == 1 and [c.strip().lower() for c in row] == ["label", "estimate"]:
            continue
        if len(row) != 2:
            raise ConfigError(
                f"{path}:{lineno}: expected 'label,estimate', got {row!r}"
            )
        label, raw = row[0].strip(), row[1].strip()
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(
                f"{path}:{lineno}: estimate {raw!r} is not a number"
            ) from None
        if label == ref_label:
            reference.append(value)
        elif label == comp_label:
            comparison.append(value)
        else:
            raise ConfigError(
                f"{path}:{lineno}: unexpected label {label!r} "
                f"(expected {ref_label!r} or {comp_label!r})"
            )
    if not reference or not comparison:
        raise ConfigError(
            f"{path}: need at least one row for each of "
            f"{ref_label!r} and {comp_label!r}"
        )
    return reference, comparison


def _format_report(report: MetricReport, truth: float) -> str:
    return "\n".join(
        (
            f"true value      : {truth:g}",
            f"re_percent      : {report.re_percent:.6f}",
            f"iqr_overlap     : {report.iqr_overlap:.6f} ({report.overlap_case.name})",
            f"median_rb       : {report.median_rb:+.6f}",
            f"amrb            : {report.amrb:.6f}",
            f"bre             : {report.bre:.6f}",
            f"n_reference     : {report.n_reference}",
            f"n_comparison    : {report.n_comparison}",
        )
    )


def _cmd_metrics(args: argparse.Namespace) -> int:
    if args.truth == 0.0:
        _error(
            "ZeroTrueParameter: median relative bias is undefined for "
            "--truth 0"
        )
        return 2
    try:
        reference, comparison = _read_label_estimate_csv(
            args.input, args.reference_label, args.comparison_label
        )
        report = compute_report(
            reference, comparison, args.truth, mode=OverlapMode(args.mode)
        )
    except ZeroTrueParameter as exc:
        _error(f"ZeroTrueParameter: {exc}")
        return 2
    except DegenerateDistribution as exc:
        _error(f"degenerate input: {exc}")
        return 3
    except (ConfigError, BresimError) as exc:
        _error(str(exc))
        return 2
    print(_format_report(report, args.truth))
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        rows = read_metrics_csv(args.input)
    except OSError as exc:
        _error(f"cannot read {args.input!r}: {exc}")
        return 2
    required = {"condition_id", "param", "re_percent", "iqr_overlap",
                "overlap_case", "median_rb", "bre", "n_ref", "n_comp"}
    if rows and not required.issubset(rows[0].keys()):
        missing = sorted(required - set(rows[0].keys()))
        _error(f"{args.input}: missing column(s) {missing}")
        return 2
    print(format_metrics_table(rows))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bresim",
        description=(
            "Monte Carlo study of distribution-aware relative efficiency "
            "for planned missingness designs"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the condition grid from a config file")
    sim.add_argument("--config", required=True, help="key=value config file")
    sim.add_argument("--seed", type=int, default=None, help="override master_seed")
    sim.add_argument("--reps", type=int, default=None, help="override replications")
    sim.add_argument("--output-dir", default=None, help="override output directory")
    sim.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"worker processes (flag beats {_WORKERS_ENV} beats config)",
    )
    sim.set_defaults(func=_cmd_simulate)

    met = sub.add_parser(
        "metrics", help="compute the efficiency report for an external CSV"
    )
    met.add_argument("--input", required=True, help="CSV of label,estimate rows")
    met.add_argument("--truth", type=float, required=True, help="true parameter value")
    met.add_argument("--mode", choices=["paper", "symmetric"], default="paper")
    met.add_argument("--reference-label", default="reference")
    met.add_argument("--comparison-label", default="comparison")
    met.set_defaults(func=_cmd_metrics)

    rep = sub.add_parser("report", help="re-render the summary table of a metrics.csv")
    rep.add_argument("--input", required=True, help="path to metrics.csv")
    rep.set_defaults(func=_cmd_report)
    return parser


def entry(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(entry())
