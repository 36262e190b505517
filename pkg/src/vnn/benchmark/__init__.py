"""Desk-scale benchmarks comparing variational and conventional networks."""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from vnn.activation import ActivationMode
from vnn.backprop import batch_backward
from vnn.baseline import fixed_backward, fixed_forward, fixed_net_from, fixed_train
from vnn.basis import BasisFamily, BasisKind
from vnn.errors import TrainingDivergedError
from vnn.loss import LossKind
from vnn.network import Network
from vnn.optim import TrainConfig, train

logger = logging.getLogger(__name__)

XOR_FEATURES = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_TARGETS = np.array([[0.0], [1.0], [1.0], [0.0]])
XOR_LOSS_THRESHOLD = 0.05
REDUCTION_TOLERANCE = 1e-12
PASS_FRACTION = 0.6

DEFAULT_TASKS = ("xor_fourier", "xor_polynomial_paired", "baseline_reduction", "xor_vs_baseline")


@dataclass
class BenchmarkResult:
    """Result of a benchmark task."""

    task_name: str
    success: bool
    duration_ms: float
    error_message: str | None = None
    metrics: dict[str, Any] = field(default_factory=dict)


def _enough(passes: int, runs: int) -> bool:
    return runs > 0 and passes >= math.ceil(PASS_FRACTION * runs)


def xor_network(family: BasisFamily, seed: int) -> Network:
    """2-4-1 layer-mode network with identity output."""
    return Network.build([2, 4, 1], family, mode=ActivationMode.LAYER, seed=seed)


def train_xor(net: Network, cfg: TrainConfig) -> float | None:
    """Final XOR loss, or None when the run diverged."""
    try:
        history = train(net, (XOR_FEATURES, XOR_TARGETS), None, LossKind.MSE, cfg)
    except TrainingDivergedError as exc:
        logger.info("seed %d diverged: %s", cfg.seed, exc)
        return None
    return history.final_loss


class BenchmarkRunner:
    """Runs the benchmark tasks over consecutive seeds."""

    def __init__(self, seeds: int = 5, start_seed: int = 42, epochs: int = 5000):
        if seeds < 1:
            raise ValueError(f"seeds must be >= 1, got {seeds}")
        self.seeds = list(range(start_seed, start_seed + seeds))
        self.epochs = epochs
        self.results: list[BenchmarkResult] = []

    def _tasks(self) -> dict[str, Callable[[], tuple[bool, dict[str, Any]]]]:
        return {
            "xor_fourier": self._xor_fourier,
            "xor_polynomial_paired": self._xor_polynomial_paired,
            "baseline_reduction": self._baseline_reduction,
            "xor_vs_baseline": self._xor_vs_baseline,
        }

    def run_benchmarks(self, tasks: list[str] | None = None) -> list[BenchmarkResult]:
        """Run the named tasks (all by default) in order."""
        self.results = []
        known = self._tasks()
        for name in tasks or list(DEFAULT_TASKS):
            if name not in known:
                raise ValueError(f"unknown benchmark task {name!r}")
            self.results.append(self._run_task(name, known[name]))
        return self.results

    def _run_task(
        self, name: str, task: Callable[[], tuple[bool, dict[str, Any]]]
    ) -> BenchmarkResult:
        start_time = time.perf_counter()
        try:
            success, metrics = task()
        except Exception as e:
            logger.warning("benchmark %s failed: %s", name, e)
            return BenchmarkResult(
                task_name=name,
                success=False,
                duration_ms=(time.perf_counter() - start_time) * 1000,
                error_message=str(e),
            )
        duration = (time.perf_counter() - start_time) * 1000
        logger.info("benchmark %s: %s in %.0fms", name, "ok" if success else "FAILED", duration)
        return BenchmarkResult(
            task_name=name, success=success, duration_ms=duration, metrics=metrics
        )

    def _xor_fourier(self) -> tuple[bool, dict[str, Any]]:
        """Fourier M=4 XOR must reach the loss threshold on most seeds."""
        family = BasisFamily(BasisKind.FOURIER, 4, omega=1.0)
        losses = {}
        for seed in self.seeds:
            net = xor_network(family, seed)
            cfg = TrainConfig(lr_weights=0.5, lr_alpha=0.5, epochs=self.epochs, seed=seed)
            losses[seed] = train_xor(net, cfg)
        passes = sum(
            1 for loss in losses.values() if loss is not None and loss < XOR_LOSS_THRESHOLD
        )
        diverged = sum(1 for loss in losses.values() if loss is None)
        return _enough(passes, len(self.seeds)), {
            "final_loss": losses,
            "passes": passes,
            "diverged": diverged,
        }

    def _xor_polynomial_paired(self) -> tuple[bool, dict[str, Any]]:
        """Training coefficients should not be worse than freezing them.

        Each seed trains twin networks, one with trainable and one with frozen
        coefficients, from the same initialization. The x^2 member grows fast, so
        the XOR rate of 0.5 sends many polynomial runs to overflow before the
        pair can be compared; both twins use lr 0.1 for at most 2000 epochs.
        A diverged twin counts as a lost pair.
        """
        family = BasisFamily(BasisKind.POLYNOMIAL, 3)
        epochs = min(self.epochs, 2000)
        joint, fixed = {}, {}
        for seed in self.seeds:
            net = xor_network(family, seed)
            frozen_twin = net.clone()
            for lr_alpha, store, model in ((0.1, joint, net), (0.0, fixed, frozen_twin)):
                cfg = TrainConfig(lr_weights=0.1, lr_alpha=lr_alpha, epochs=epochs, seed=seed)
                store[seed] = train_xor(model, cfg)
        passes = sum(
            1
            for seed in self.seeds
            if joint[seed] is not None and fixed[seed] is not None and joint[seed] <= fixed[seed]
        )
        return _enough(passes, len(self.seeds)), {
            "joint_loss": joint,
            "frozen_loss": fixed,
            "passes": passes,
        }

    def _baseline_reduction(self, n_networks: int = 100) -> tuple[bool, dict[str, Any]]:
        """One-hot tanh classic networks agree with the fixed-activation MLP."""
        rng = np.random.default_rng(self.seeds[0])
        family = BasisFamily(BasisKind.CLASSIC, 4)
        worst = 0.0
        for index in range(n_networks):
            depth = int(rng.integers(1, 4))
            widths = [int(w) for w in rng.integers(2, 7, size=depth + 2)]
            net = Network.build(widths, family, frozen=range(depth), seed=int(rng.integers(2**31)))
            for layer in net.hidden_layers:
                layer.biases[...] = rng.uniform(-0.5, 0.5, size=layer.biases.shape)
            fnet = fixed_net_from(net)
            x = rng.uniform(-1.0, 1.0, size=widths[0])
            target = rng.uniform(-1.0, 1.0, size=widths[-1])
            worst = max(worst, float(np.max(np.abs(net.predict(x) - fixed_forward(fnet, x)))))
            grads = batch_backward(net, [(x, target)], LossKind.MSE)
            dWs, dbs = fixed_backward(fnet, x, target, "mse")
            for ours, theirs in zip([*grads.weights, *grads.biases], [*dWs, *dbs]):
                worst = max(worst, float(np.max(np.abs(ours - theirs))))
            logger.debug("reduction network %d widths %s: worst diff %.3g", index, widths, worst)
        return worst <= REDUCTION_TOLERANCE, {"networks": n_networks, "max_abs_diff": worst}

    def _xor_vs_baseline(self) -> tuple[bool, dict[str, Any]]:
        """Fourier VNN against a tanh MLP built from the same seed on XOR."""
        seed = self.seeds[0]
        classic = Network.build(
            [2, 4, 1], BasisFamily(BasisKind.CLASSIC, 4), frozen=[0], seed=seed
        )
        _, baseline_loss = fixed_train(
            fixed_net_from(classic),
            XOR_FEATURES,
            XOR_TARGETS,
            "mse",
            lr=0.5,
            epochs=self.epochs,
            batch_size=4,
            seed=seed,
        )
        net = xor_network(BasisFamily(BasisKind.FOURIER, 4), seed)
        cfg = TrainConfig(lr_weights=0.5, lr_alpha=0.5, epochs=self.epochs, seed=seed)
        vnn_loss = train_xor(net, cfg)
        success = vnn_loss is not None and math.isfinite(vnn_loss) and math.isfinite(baseline_loss)
        return success, {"vnn_loss": vnn_loss, "baseline_loss": baseline_loss, "seed": seed}

    def get_summary(self) -> dict:
        """Get benchmark summary."""
        if not self.results:
            return {"total_tasks": 0, "success_rate": 0, "avg_duration_ms": 0}

        total = len(self.results)
        successful = sum(1 for r in self.results if r.success)
        avg_duration = sum(r.duration_ms for r in self.results) / total

        return {
            "total_tasks": total,
            "successful": successful,
            "failed": total - successful,
            "success_rate": successful / total,
            "avg_duration_ms": avg_duration,
            "min_duration_ms": min(r.duration_ms for r in self.results),
            "max_duration_ms": max(r.duration_ms for r in self.results),
        }


def run_benchmarks(
    tasks: list[str] | None = None, seeds: int = 5, start_seed: int = 42, epochs: int = 5000
) -> tuple[list[BenchmarkResult], dict]:
    """Convenience function to run the benchmark suite."""
    runner = BenchmarkRunner(seeds=seeds, start_seed=start_seed, epochs=epochs)
    results = runner.run_benchmarks(tasks)
    summary = runner.get_summary()
    return results, summary
