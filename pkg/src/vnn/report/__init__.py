"""Text, table and machine-readable renderings of run results."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import yaml  # type: ignore[import-untyped]
from rich.table import Table

from vnn.benchmark import BenchmarkResult
from vnn.grad_check import CheckFailure, CheckReport
from vnn.optim import TrainHistory

FAILURE_COLUMNS = ("site", "layer", "row", "col", "analytic", "numeric", "abs_err", "rel_err")


def _failure_row(failure: CheckFailure) -> dict[str, Any]:
    coord = failure.coord
    diff = abs(failure.analytic - failure.numeric)
    scale = max(abs(failure.analytic), abs(failure.numeric))
    return {
        "site": coord.site.value,
        "layer": coord.layer + 1,
        "row": coord.row + 1,
        "col": coord.col + 1,
        "analytic": failure.analytic,
        "numeric": failure.numeric,
        "abs_err": diff,
        "rel_err": diff / scale if scale > 0 else 0.0,
    }


def check_payload(report: CheckReport) -> dict[str, Any]:
    return {
        "summary": report.get_summary(),
        "failures": [_failure_row(f) for f in report.failures],
    }


def check_text(report: CheckReport) -> str:
    """Aligned plain-text rendering of a gradient check."""
    summary = report.get_summary()
    lines = [
        "Gradient check",
        "=" * 50,
        f"checked:     {summary['n_checked']}",
        f"failed:      {summary['n_failed']}",
        f"max rel err: {summary['max_rel_err']:.3e}",
        f"max abs err: {summary['max_abs_err']:.3e}",
        f"worst:       {summary['worst'] or '-'}",
    ]
    for failure in report.failures:
        lines.append(
            f"  {failure.coord.label():<24} analytic={failure.analytic:+.10e} "
            f"numeric={failure.numeric:+.10e}"
        )
    lines.append("PASS" if report.passed else "FAIL")
    return "\n".join(lines)


def check_table(report: CheckReport) -> Table:
    table = Table(title="Gradient Check Failures" if report.failures else "Gradient Check")
    if not report.failures:
        table.add_column("Checked")
        table.add_column("Max rel err")
        table.add_column("Max abs err")
        table.add_row(
            str(report.n_checked), f"{report.max_rel_err:.3e}", f"{report.max_abs_err:.3e}"
        )
        return table
    table.add_column("Coordinate")
    table.add_column("Analytic", justify="right")
    table.add_column("Numeric", justify="right")
    table.add_column("Rel err", justify="right", style="red")
    for failure in report.failures:
        row = _failure_row(failure)
        table.add_row(
            failure.coord.label(),
            f"{failure.analytic:.10e}",
            f"{failure.numeric:.10e}",
            f"{row['rel_err']:.3e}",
        )
    return table


def write_failure_csv(report: CheckReport, path: Path | str) -> None:
    """One row per failing coordinate, indices 1-based."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=FAILURE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for failure in report.failures:
            row = _failure_row(failure)
            writer.writerow(
                {
                    key: f"{value:.17g}" if isinstance(value, float) else value
                    for key, value in row.items()
                }
            )


def history_table(history: TrainHistory) -> Table:
    table = Table(title="Training")
    table.add_column("Epoch", justify="right")
    table.add_column("Train loss", justify="right")
    has_val = any(r.val_loss is not None for r in history.records)
    if has_val:
        table.add_column("Val loss", justify="right")
    for record in history.records:
        cells = [str(record.epoch), f"{record.train_loss:.6g}"]
        if has_val:
            cells.append("-" if record.val_loss is None else f"{record.val_loss:.6g}")
        table.add_row(*cells)
    return table


def write_history_yaml(history: TrainHistory, path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        yaml.dump(history.to_dict(), f, default_flow_style=False, sort_keys=False)


def benchmark_payload(results: list[BenchmarkResult], summary: dict[str, Any]) -> dict[str, Any]:
    return {
        "results": [
            {
                "task_name": r.task_name,
                "success": r.success,
                "duration_ms": r.duration_ms,
                "error_message": r.error_message,
                "metrics": r.metrics,
            }
            for r in results
        ],
        "summary": summary,
    }


def benchmark_json(results: list[BenchmarkResult], summary: dict[str, Any]) -> str:
    return json.dumps(benchmark_payload(results, summary), indent=2)


def benchmark_text(results: list[BenchmarkResult], summary: dict[str, Any]) -> str:
    lines = ["Benchmark Results", "=" * 50]
    for result in results:
        status = "PASS" if result.success else "FAIL"
        lines.append(f"\n{status} {result.task_name}: {result.duration_ms:.2f}ms")
        if result.error_message:
            lines.append(f"   {result.error_message}")
    lines.append(f"\nSuccess rate: {summary['success_rate']:.1%}")
    lines.append(f"Avg duration: {summary['avg_duration_ms']:.2f}ms")
    return "\n".join(lines)


def benchmark_table(results: list[BenchmarkResult]) -> Table:
    table = Table(title="Benchmark Results")
    table.add_column("Task")
    table.add_column("Status")
    table.add_column("Duration (ms)")
    table.add_column("Metrics")

    for result in results:
        status = "[green]✓[/green]" if result.success else "[red]✗[/red]"
        details = result.error_message or ", ".join(
            f"{key}={value}"
            for key, value in result.metrics.items()
            if not isinstance(value, dict)
        )
        table.add_row(result.task_name, status, f"{result.duration_ms:.1f}", details)
    return table
