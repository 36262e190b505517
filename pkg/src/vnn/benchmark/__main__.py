"""Entry point for python -m vnn.benchmark."""

import argparse
import sys
from pathlib import Path

from vnn.benchmark import DEFAULT_TASKS, run_benchmarks
from vnn.report import benchmark_json, benchmark_text


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Desk-scale VNN benchmarks")
    parser.add_argument("--task", action="append", choices=DEFAULT_TASKS, dest="tasks")
    parser.add_argument("--seeds", type=int, default=5, help="Number of consecutive seeds")
    parser.add_argument("--start-seed", type=int, default=42)
    parser.add_argument("--epochs", type=int, default=5000)
    parser.add_argument("--format", choices=["text", "json"], default="text")
    parser.add_argument("--output", type=Path, help="Output file (default: stdout)")

    args = parser.parse_args(argv)

    results, summary = run_benchmarks(
        args.tasks, seeds=args.seeds, start_seed=args.start_seed, epochs=args.epochs
    )
    if args.format == "json":
        output = benchmark_json(results, summary)
    else:
        output = benchmark_text(results, summary)

    if args.output:
        args.output.write_text(output)
    else:
        print(output)

    return 0 if summary["success_rate"] == 1.0 else 3


if __name__ == "__main__":
    sys.exit(main())
