"""Result serialization: estimates.csv, metrics.csv, plotdata.json.

All floats are written with 17 significant digits (``%.17g``) so every
value round-trips losslessly; files use LF line endings unconditionally.
The JSON emitter is hand-rolled for exactly that reason: the stdlib encoder
offers no control over float formatting, and byte-stable output across runs
and platforms is part of the interface contract.
"""

from __future__ import annotations

import csv
import math
import os
from typing import Iterable, Mapping, Sequence

from .harness import ConditionResult

__all__ = [
    "format_float",
    "write_estimates_csv",
    "write_metrics_csv",
    "write_plotdata_json",
    "emit_outputs",
    "read_estimates_csv",
    "read_metrics_csv",
    "format_metrics_table",
]

ESTIMATES_COLUMNS = (
    "condition_id,rho,n,rep,arm,converged,admissible,param,estimate"
)
METRICS_COLUMNS = (
    "condition_id,rho,n,param,re_percent,iqr_overlap,overlap_case,"
    "median_rb,amrb,bre,n_ref,n_comp,excluded_ref,excluded_comp"
)


def format_float(value: float) -> str:
    """17-significant-digit decimal form; lossless under float round-trip."""
    if math.isnan(value):
        return "nan"
    return "%.17g" % value


def _open_lf(path: str):
    return open(path, "w", encoding="utf-8", newline="")


def write_estimates_csv(path: str, results: Sequence[ConditionResult]) -> None:
    """One row per (replication, arm, tracked parameter), in grid order."""
    with _open_lf(path) as fh:
        fh.write(ESTIMATES_COLUMNS + "\n")
        for result in results:
            spec = result.spec
            prefix = f"{result.condition_id},{format_float(spec.rho)},{spec.n}"
            for rec in result.records:
                for arm_name, arm in (
                    ("reference", rec.reference),
                    ("comparison", rec.comparison),
                ):
                    flags = f"{int(arm.converged)},{int(arm.admissible)}"
                    for name, est in zip(spec.track_params, arm.estimates):
                        fh.write(
                            f"{prefix},{rec.rep},{arm_name},{flags},"
                            f"{name},{format_float(est)}\n"
                        )


def write_metrics_csv(path: str, results: Sequence[ConditionResult]) -> None:
    """One row per (condition, tracked parameter); degenerate conditions
    contribute no rows (their metrics are suppressed, not fabricated)."""
    with _open_lf(path) as fh:
        fh.write(METRICS_COLUMNS + "\n")
        for result in results:
            if result.degenerate:
                continue
            spec = result.spec
            for name in spec.track_params:
                report = result.reports[name]
                n_ref = result.usable_reference[name].size
                n_comp = result.usable_comparison[name].size
                fh.write(
                    ",".join(
                        (
                            result.condition_id,
                            format_float(spec.rho),
                            str(spec.n),
                            name,
                            format_float(report.re_percent),
                            format_float(report.iqr_overlap),
                            report.overlap_case.name,
                            format_float(report.median_rb),
                            format_float(report.amrb),
                            format_float(report.bre),
                            str(n_ref),
                            str(n_comp),
                            str(spec.replications - n_ref),
                            str(spec.replications - n_comp),
                        )
                    )
                    + "\n"
                )


def _json_escape(text: str) -> str:
    out = []
    for ch in text:
        if ch in ('"', "\\"):
            out.append("\\" + ch)
        elif ord(ch) < 0x20:
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def _json_floats(values: Iterable[float]) -> str:
    return "[" + ", ".join(format_float(v) for v in values) + "]"


def write_plotdata_json(path: str, results: Sequence[ConditionResult]) -> None:
    """Per-condition estimate and relative-bias arrays for figure rendering.

    Only usable (converged and admissible) estimates appear, so every array
    element is a finite JSON number.  Degenerate conditions keep their raw
    arrays but carry ``"degenerate": true`` so renderers can skip them.
    """
    lines = ["{", '  "conditions": [']
    for i, result in enumerate(results):
        spec = result.spec
        lines.append("    {")
        lines.append(f'      "condition_id": {_json_escape(result.condition_id)},')
        lines.append(f'      "rho": {format_float(spec.rho)},')
        lines.append(f'      "n": {spec.n},')
        lines.append(f'      "replications": {spec.replications},')
        lines.append(f'      "degenerate": {"true" if result.degenerate else "false"},')
        lines.append('      "params": {')
        for j, name in enumerate(spec.track_params):
            truth = spec.true_value(name)
            ref = result.usable_reference[name]
            comp = result.usable_comparison[name]
            rb_ref = (ref - truth) / truth
            rb_comp = (comp - truth) / truth
            body = [
                f'          "true_value": {format_float(truth)},',
                f'          "reference": {_json_floats(ref)},',
                f'          "comparison": {_json_floats(comp)},',
                f'          "relative_bias_reference": {_json_floats(rb_ref)},',
                f'          "relative_bias_comparison": {_json_floats(rb_comp)}',
            ]
            closer = "        }" + ("," if j < len(spec.track_params) - 1 else "")
            lines.append(f"        {_json_escape(name)}: {{")
            lines.extend(body)
            lines.append(closer)
        lines.append("      }")
        lines.append("    }" + ("," if i < len(results) - 1 else ""))
    lines.append("  ]")
    lines.append("}")
    with _open_lf(path) as fh:
        fh.write("\n".join(lines) + "\n")


def emit_outputs(results: Sequence[ConditionResult], output_dir: str) -> dict[str, str]:
    """Write all three files into output_dir (created if needed)."""
    if not results:
        raise ValueError("results must not be empty")
    os.makedirs(output_dir, exist_ok=True)
    paths = {
        "estimates": os.path.join(output_dir, "estimates.csv"),
        "metrics": os.path.join(output_dir, "metrics.csv"),
        "plotdata": os.path.join(output_dir, "plotdata.json"),
    }
    write_estimates_csv(paths["estimates"], results)
    write_metrics_csv(paths["metrics"], results)
    write_plotdata_json(paths["plotdata"], results)
    return paths


def read_estimates_csv(path: str) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def read_metrics_csv(path: str) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def format_metrics_table(rows: Sequence[Mapping[str, str]]) -> str:
    """Fixed-width human-readable rendering of metrics.csv rows."""
    headers = (
        "condition_id",
        "param",
        "re_percent",
        "iqr_overlap",
        "overlap_case",
        "median_rb",
        "bre",
        "n_ref",
        "n_comp",
    )
    display_rows = [headers]
    for row in rows:
        display_rows.append(
            tuple(
                f"{float(row[h]):.4f}"
                if h in ("re_percent", "iqr_overlap", "median_rb", "bre")
                else str(row[h])
                for h in headers
            )
        )
    widths = [max(len(r[i]) for r in display_rows) for i in range(len(headers))]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in display_rows
    ]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
