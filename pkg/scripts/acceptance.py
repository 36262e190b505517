#!/usr/bin/env -S uv run python3
# /// script
# requires-python = ">=3.10"
# dependencies = [
#     "numpy>=1.24",
#     "pyyaml>=6.0",
#     "click>=8.0",
#     "rich>=13.0",
#     "pydantic>=2.0",
# ]
# ///
"""Acceptance run for vnn-toolkit.

Checks gradients over the configuration sweep, compares the closed-form
coefficient gradients with backprop, then runs the benchmarks and the code
quality tools.
"""

import subprocess
import sys
from pathlib import Path

import yaml  # type: ignore[import-untyped]


def run_command(cmd: list[str], cwd: Path | None = None) -> tuple[int, str, str]:
    """Run a command and return exit code, stdout, stderr."""
    result = subprocess.run(
        cmd,
        capture_output=True,
        text=True,
        cwd=str(cwd) if cwd else None,
    )
    return result.returncode, result.stdout, result.stderr


def main() -> int:
    """Run the acceptance checks and return exit code."""
    project_root = Path(__file__).parent.parent

    print("=" * 60)
    print("vnn-toolkit - Acceptance")
    print("=" * 60)
    print()

    # Check 1: gradient sweep
    print("[1/4] Checking gradients over the configuration sweep...")

    from vnn.config import config_from_mapping
    from vnn.grad_check import check_run_config

    sweep = yaml.safe_load((project_root / "tests" / "fixtures" / "sweep.yaml").read_text())
    failed_configs = 0
    for entry in sweep:
        report = check_run_config(config_from_mapping(entry))
        if not report.passed:
            failed_configs += 1
            print(f"  seed {entry['seed']}: {len(report.failures)} failures, worst {report.worst}")

    print(f"  Configurations: {len(sweep)}, failed: {failed_configs}")
    gradients_passed = failed_configs == 0
    print("  ✅ PASSED" if gradients_passed else "  ❌ FAILED")
    print()

    # Check 2: closed forms against the recursion
    print("[2/4] Comparing closed-form coefficient gradients with backprop...")

    import numpy as np

    from vnn.activation import ActivationMode
    from vnn.backprop import backward
    from vnn.backprop.closed_form import (
        alpha_grad_layer_closed_form,
        alpha_grad_neuron_closed_form,
    )
    from vnn.grad_check import random_samples

    worst_gap = 0.0
    for entry in sweep:
        config = config_from_mapping(entry)
        net = config.build_network()
        for x, t in random_samples(net, 2, config.loss, seed=config.seed):
            trace = net.forward(x)
            grads = backward(net, trace, t, config.loss)
            for k, layer in enumerate(net.hidden_layers):
                if not layer.trainable_alpha:
                    continue
                if layer.activation.mode is ActivationMode.LAYER:
                    closed = alpha_grad_layer_closed_form(net, trace, t, config.loss, k)
                    gap = np.max(np.abs(closed - grads.alphas[k][:, 0]))
                else:
                    closed = alpha_grad_neuron_closed_form(net, trace, t, config.loss, k)
                    gap = np.max(np.abs(closed - grads.alphas[k]))
                worst_gap = max(worst_gap, float(gap))

    print(f"  Largest difference: {worst_gap:.3e}")
    closed_form_passed = worst_gap <= 1e-12
    print("  ✅ PASSED" if closed_form_passed else "  ❌ FAILED")
    print()

    # Check 3: benchmarks
    print("[3/4] Running benchmarks...")

    from vnn.benchmark import run_benchmarks

    bench_results, bench_summary = run_benchmarks()

    for result in bench_results:
        print(f"  {result.task_name}: {'✅' if result.success else '❌'}")
    print(f"  Success rate: {bench_summary['success_rate']:.1%}")
    print(f"  Avg duration: {bench_summary['avg_duration_ms']:.1f}ms")

    benchmark_passed = bench_summary["success_rate"] == 1.0
    print("  ✅ PASSED" if benchmark_passed else "  ❌ FAILED")
    print()

    # Check 4: code quality
    print("[4/4] Running code quality checks...")

    quality_checks = []
    for label, cmd in (
        ("Ruff linting", ["ruff", "check", "src/"]),
        ("Black formatting", ["black", "--check", "src/"]),
        ("MyPy type check", ["mypy", "src/"]),
    ):
        exit_code, _, _ = run_command([sys.executable, "-m", *cmd], cwd=project_root)
        quality_checks.append((label, exit_code == 0))
        print(f"  {label}: {'✅' if exit_code == 0 else '❌'}")

    quality_passed = all(passed for _, passed in quality_checks)
    print("  ✅ PASSED" if quality_passed else "  ❌ FAILED: Some quality checks failed")

    print()
    print("=" * 60)
    print("Summary")
    print("=" * 60)

    all_passed = gradients_passed and closed_form_passed and benchmark_passed and quality_passed

    print(f"Gradient sweep: {'✅ PASSED' if gradients_passed else '❌ FAILED'}")
    print(f"Closed forms:   {'✅ PASSED' if closed_form_passed else '❌ FAILED'}")
    print(f"Benchmarks:     {'✅ PASSED' if benchmark_passed else '❌ FAILED'}")
    print(f"Code quality:   {'✅ PASSED' if quality_passed else '❌ FAILED'}")
    print()

    if all_passed:
        print("All acceptance checks passed.")
        return 0
    print("Some acceptance checks failed.")
    return 1


if __name__ == "__main__":
    sys.exit(main())
