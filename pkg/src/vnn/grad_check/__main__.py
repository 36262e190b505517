"""Entry point for python -m vnn.grad_check."""

import argparse
import json
import sys
from pathlib import Path

from vnn.config import RunConfig, load_config
from vnn.errors import ConfigError, VNNError
from vnn.grad_check import DEFAULT_ABS_TOL, DEFAULT_H, DEFAULT_REL_TOL, check_run_config
from vnn.report import check_payload, check_text, write_failure_csv


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Finite-difference gradient check")
    parser.add_argument("config", type=Path, nargs="?", help="Run config (default: built-in)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--h", type=float, default=DEFAULT_H)
    parser.add_argument("--tol", type=float, default=DEFAULT_REL_TOL, help="Relative tolerance")
    parser.add_argument("--abs-tol", type=float, default=DEFAULT_ABS_TOL)
    parser.add_argument("--format", choices=["text", "json"], default="text")
    parser.add_argument("--report", type=Path, help="Failure table CSV")

    args = parser.parse_args(argv)

    try:
        config = load_config(args.config) if args.config else RunConfig()
        report = check_run_config(
            config, h=args.h, rel_tol=args.tol, abs_tol=args.abs_tol, seed=args.seed
        )
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (VNNError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    if args.format == "json":
        print(json.dumps(check_payload(report), indent=2))
    else:
        print(check_text(report))
    if args.report:
        write_failure_csv(report, args.report)

    return 0 if report.passed else 3


if __name__ == "__main__":
    sys.exit(main())
