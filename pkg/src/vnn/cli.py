"""CLI for training and inspecting variational neural networks."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np
from rich.console import Console
from rich.logging import RichHandler

from vnn.benchmark import DEFAULT_TASKS, run_benchmarks
from vnn.config import RunConfig, load_config
from vnn.errors import ConfigError, DataError, VNNError
from vnn.grad_check import DEFAULT_ABS_TOL, DEFAULT_H, DEFAULT_REL_TOL, check_run_config
from vnn.io import load_csv
from vnn.io.checkpoint import read_checkpoint, save_checkpoint
from vnn.io.export import export_activation, write_table
from vnn.loss import mean_loss
from vnn.network import OutputScaling
from vnn.optim import train as train_network
from vnn.report import (
    benchmark_json,
    benchmark_table,
    check_payload,
    check_table,
    history_table,
    write_failure_csv,
    write_history_yaml,
)

console = Console()
err_console = Console(stderr=True)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CHECK_FAILED = 3


def _configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, RichHandler):
            root.removeHandler(handler)
    root.addHandler(RichHandler(console=err_console, show_path=False))
    root.setLevel(level)


def _writable(path: Path | None) -> None:
    if path is not None and not path.parent.is_dir():
        raise DataError(f"output directory does not exist: {path.parent}")


def _parse_range(ctx: click.Context, param: click.Parameter, value: str) -> tuple[float, float]:
    lo, sep, hi = value.partition(":")
    try:
        if not sep:
            raise ValueError
        bounds = (float(lo), float(hi))
    except ValueError:
        raise click.BadParameter(f"expected A:B, got {value!r}") from None
    if not bounds[0] < bounds[1]:
        raise click.BadParameter(f"empty range {value!r}")
    return bounds


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for debug output")
def cli(verbose: int):
    """Variational neural networks: train, evaluate, check gradients."""
    _configure_logging(verbose)


@cli.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path), required=True)
@click.option("--data", "data_path", type=click.Path(path_type=Path), required=True)
@click.option("--val", "val_path", type=click.Path(path_type=Path), default=None)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--history", "history_path", type=click.Path(path_type=Path), default=None)
@click.option("--header", is_flag=True, help="Datasets start with a header row")
def train(
    config_path: Path,
    data_path: Path,
    val_path: Path | None,
    out_path: Path,
    history_path: Path | None,
    header: bool,
):
    """Train a network and save a checkpoint."""
    config = load_config(config_path)
    _writable(out_path)
    _writable(history_path)
    n_targets = config.layers[-1]
    train_set = load_csv(data_path, n_targets, has_header=header)
    val_set = load_csv(val_path, n_targets, has_header=header) if val_path else None

    net = config.build_network()
    err_console.print(
        f"[bold]Training {','.join(map(str, config.layers))} {config.basis.value} "
        f"M={config.m} on {len(train_set)} samples...[/bold]"
    )
    history = train_network(
        net,
        train_set.as_pair(),
        val_set.as_pair() if val_set else None,
        config.loss,
        config.train_config(),
    )
    save_checkpoint(net, out_path, loss=config.loss)
    if history_path:
        write_history_yaml(history, history_path)

    if history.records:
        console.print(history_table(history))
        console.print(f"Final training loss: {history.final_loss:.17g}")
    console.print(f"[green]Checkpoint saved to {out_path}[/green]")
    return EXIT_OK


@cli.command(name="eval")
@click.option("--model", "model_path", type=click.Path(path_type=Path), required=True)
@click.option("--data", "data_path", type=click.Path(path_type=Path), required=True)
@click.option("--header", is_flag=True, help="Dataset starts with a header row")
def evaluate(model_path: Path, data_path: Path, header: bool):
    """Report the mean loss of a checkpoint on a dataset."""
    checkpoint = read_checkpoint(model_path)
    net = checkpoint.network
    dataset = load_csv(data_path, net.widths[-1], has_header=header)
    samples = list(zip(dataset.features, dataset.targets))
    console.print(f"loss: {mean_loss(net, samples, checkpoint.loss):.17g}")
    if net.output_layer.scaling is OutputScaling.SOFTMAX:
        predicted = np.argmax(net.predict_batch(dataset.features), axis=1)
        accuracy = float(np.mean(predicted == np.argmax(dataset.targets, axis=1)))
        console.print(f"accuracy: {accuracy:.4f}")
    return EXIT_OK


@cli.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
@click.option("--seed", type=int, default=None, help="Overrides the config seed")
@click.option("--tol", type=float, default=DEFAULT_REL_TOL, help="Relative tolerance")
@click.option("--abs-tol", type=float, default=DEFAULT_ABS_TOL)
@click.option("--h", "step", type=float, default=DEFAULT_H, help="Finite-difference step")
@click.option("--report", "report_path", type=click.Path(path_type=Path), default=None)
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text")
def gradcheck(
    config_path: Path | None,
    seed: int | None,
    tol: float,
    abs_tol: float,
    step: float,
    report_path: Path | None,
    output_format: str,
):
    """Compare analytic gradients against finite differences."""
    _writable(report_path)
    config = load_config(config_path) if config_path else RunConfig()
    if step <= 0 or tol <= 0 or abs_tol <= 0:
        raise click.BadParameter("--h, --tol and --abs-tol must be > 0")
    report = check_run_config(config, h=step, rel_tol=tol, abs_tol=abs_tol, seed=seed)
    if report_path:
        write_failure_csv(report, report_path)

    if output_format == "json":
        console.print_json(json.dumps(check_payload(report)))
    else:
        console.print(check_table(report))
        summary = report.get_summary()
        console.print(
            f"\nChecked {summary['n_checked']} coordinates, {summary['n_failed']} failed"
        )
        if report.passed:
            console.print("[green]✓ Gradients match[/green]")
        else:
            console.print(f"[red]✗ Worst coordinate: {summary['worst']}[/red]")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


@cli.command(name="export-activation")
@click.option("--model", "model_path", type=click.Path(path_type=Path), required=True)
@click.option("--layer", type=click.IntRange(min=1), required=True, help="1-based layer")
@click.option("--neuron", type=click.IntRange(min=1), default=None, help="1-based neuron")
@click.option("--range", "x_range", callback=_parse_range, default="-1:1", help="A:B")
@click.option("--steps", type=int, default=101)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def export_activation_cmd(
    model_path: Path,
    layer: int,
    neuron: int | None,
    x_range: tuple[float, float],
    steps: int,
    out_path: Path,
):
    """Write x, F(x), F'(x) of a learned activation as CSV."""
    _writable(out_path)
    net = read_checkpoint(model_path).network
    table = export_activation(
        net,
        layer - 1,
        None if neuron is None else neuron - 1,
        x_range[0],
        x_range[1],
        steps,
    )
    write_table(table, out_path)
    console.print(f"[green]Activation table saved to {out_path}[/green]")
    return EXIT_OK


@cli.command()
@click.option("--task", "tasks", multiple=True, type=click.Choice(list(DEFAULT_TASKS)))
@click.option("--seeds", type=click.IntRange(min=1), default=5)
@click.option("--start-seed", type=click.IntRange(min=0), default=42)
@click.option("--epochs", type=click.IntRange(min=0), default=5000)
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text")
def benchmark(
    tasks: tuple[str, ...], seeds: int, start_seed: int, epochs: int, output_format: str
):
    """Run desk-scale benchmarks against conventional networks."""
    results, summary = run_benchmarks(
        list(tasks) or None, seeds=seeds, start_seed=start_seed, epochs=epochs
    )

    if output_format == "json":
        console.print_json(benchmark_json(results, summary))
    else:
        console.print(benchmark_table(results))
        console.print(f"\nSuccess rate: {summary['success_rate']:.1%}")
        console.print(f"Avg duration: {summary['avg_duration_ms']:.1f}ms")
    return EXIT_OK if summary["failed"] == 0 else EXIT_CHECK_FAILED


def cli_main(argv: list[str] | None = None) -> int:
    """Run the CLI and translate errors into exit codes."""
    try:
        result = cli.main(args=argv, prog_name="vnn", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    except ConfigError as e:
        err_console.print(f"[red]config error:[/red] {e}")
        return EXIT_USAGE
    except VNNError as e:
        err_console.print(f"[red]error:[/red] {e}")
        return EXIT_DATA
    except OSError as e:
        err_console.print(f"[red]error:[/red] {e}")
        return EXIT_DATA
    return result if isinstance(result, int) else EXIT_OK


def main():
    """Entry point for the CLI."""
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
