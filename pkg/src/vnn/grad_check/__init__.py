"""Finite-difference gradient checker.

The oracle perturbs one parameter at a time on a private clone of the network
and re-runs only ``forward`` and ``loss_value``; it never touches the backward
code it is checking.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from vnn.backprop import GradientSet, Sample, batch_backward
from vnn.basis import BasisKind, FloatArray
from vnn.config import RunConfig
from vnn.errors import ShapeError
from vnn.loss import LossKind, loss_value
from vnn.network import Network, OutputScaling

logger = logging.getLogger(__name__)

DEFAULT_H = 1e-5
DEFAULT_REL_TOL = 1e-6
DEFAULT_ABS_TOL = 1e-8
MAX_COORDINATES = 10_000
KINK_MARGIN = 1e-4


class ParamSite(str, Enum):
    """Which parameter tensor a coordinate addresses."""

    WEIGHT = "weight"
    BIAS = "bias"
    ALPHA = "alpha"
    ALPHA_OUT = "alpha_out"


@dataclass(frozen=True)
class ParamCoordinate:
    """One scalar parameter: ``layer`` is 0-based, ``depth`` meaning the output layer."""

    site: ParamSite
    layer: int
    row: int
    col: int = 0

    def label(self) -> str:
        """1-based human-readable form, e.g. ``weight[2](1,3)``."""
        return f"{self.site.value}[{self.layer + 1}]({self.row + 1},{self.col + 1})"


@dataclass
class CheckFailure:
    coord: ParamCoordinate
    analytic: float
    numeric: float


@dataclass
class CheckReport:
    """Outcome of a gradient check."""

    n_checked: int = 0
    max_rel_err: float = 0.0
    max_abs_err: float = 0.0
    worst: ParamCoordinate | None = None
    failures: list[CheckFailure] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def get_summary(self) -> dict[str, Any]:
        return {
            "n_checked": self.n_checked,
            "n_failed": len(self.failures),
            "max_rel_err": self.max_rel_err,
            "max_abs_err": self.max_abs_err,
            "worst": self.worst.label() if self.worst else None,
            "passed": self.passed,
        }


def _tensor(net: Network, coord: ParamCoordinate) -> FloatArray:
    layer = net.layer(coord.layer) if 0 <= coord.layer <= net.depth else None
    if layer is None:
        raise ShapeError(f"layer {coord.layer + 1} does not exist")
    if coord.site is ParamSite.WEIGHT:
        return layer.weights
    if coord.site is ParamSite.BIAS:
        return layer.biases.reshape(-1, 1)
    if coord.site is ParamSite.ALPHA:
        if coord.layer >= net.depth:
            raise ShapeError("alpha coordinates address hidden layers only")
        return net.hidden_layers[coord.layer].activation.coeffs
    out_act = net.output_layer.activation
    if out_act is None or coord.layer != net.depth:
        raise ShapeError("alpha_out requires an output activation and the output layer index")
    return out_act.coeffs


def _check_coordinate(array: FloatArray, coord: ParamCoordinate) -> None:
    rows, cols = array.shape
    if not (0 <= coord.row < rows and 0 <= coord.col < cols):
        raise ShapeError(f"coordinate {coord.label()} outside shape {array.shape}")


def iter_coordinates(net: Network) -> Iterator[ParamCoordinate]:
    """Every trainable scalar parameter, in a fixed order."""
    for k in range(net.depth + 1):
        layer = net.layer(k)
        rows, cols = layer.weights.shape
        for r in range(rows):
            for c in range(cols):
                yield ParamCoordinate(ParamSite.WEIGHT, k, r, c)
        for r in range(layer.biases.shape[0]):
            yield ParamCoordinate(ParamSite.BIAS, k, r, 0)
        if k < net.depth:
            rows, cols = net.hidden_layers[k].activation.coeffs.shape
            for r in range(rows):
                for c in range(cols):
                    yield ParamCoordinate(ParamSite.ALPHA, k, r, c)
    out_act = net.output_layer.activation
    if out_act is not None:
        for r in range(out_act.coeffs.shape[0]):
            yield ParamCoordinate(ParamSite.ALPHA_OUT, net.depth, r, 0)


def is_frozen(net: Network, coord: ParamCoordinate) -> bool:
    """Whether ``coord`` addresses coefficients excluded from training."""
    if coord.site is ParamSite.ALPHA:
        return not net.hidden_layers[coord.layer].trainable_alpha
    if coord.site is ParamSite.ALPHA_OUT:
        return not net.output_layer.trainable_alpha
    return False


def analytic_value(grads: GradientSet, coord: ParamCoordinate) -> float:
    """Pick the gradient entry matching ``coord``."""
    if coord.site is ParamSite.WEIGHT:
        return float(grads.weights[coord.layer][coord.row, coord.col])
    if coord.site is ParamSite.BIAS:
        return float(grads.biases[coord.layer][coord.row])
    if coord.site is ParamSite.ALPHA:
        return float(grads.alphas[coord.layer][coord.row, coord.col])
    if grads.alpha_out is None:
        raise ShapeError("gradient set has no output coefficients")
    return float(grads.alpha_out[coord.row, 0])


def _batch_loss(net: Network, samples: Sequence[Sample], kind: LossKind | str) -> float:
    total = 0.0
    for x, target in samples:
        total += loss_value(kind, net.forward(x).output, target)
    return total / len(samples)


def numeric_partial_batch(
    net: Network,
    samples: Sequence[Sample],
    kind: LossKind | str,
    coord: ParamCoordinate,
    h: float = DEFAULT_H,
) -> float:
    """Central difference of the mean batch loss along one parameter."""
    if h <= 0:
        raise ValueError(f"step h must be > 0, got {h}")
    shifted = net.clone()
    array = _tensor(shifted, coord)
    _check_coordinate(array, coord)
    original = array[coord.row, coord.col]
    array[coord.row, coord.col] = original + h
    plus = _batch_loss(shifted, samples, kind)
    array[coord.row, coord.col] = original - h
    minus = _batch_loss(shifted, samples, kind)
    return (plus - minus) / (2.0 * h)


def numeric_partial(
    net: Network,
    x: FloatArray,
    target: FloatArray,
    kind: LossKind | str,
    coord: ParamCoordinate,
    h: float = DEFAULT_H,
) -> float:
    """(E(theta + h e) - E(theta - h e)) / 2h for a single sample.

    The perturbation happens on a clone, so ``net`` is left bitwise intact.
    """
    return numeric_partial_batch(net, [(x, target)], kind, coord, h)


def has_kinks(net: Network) -> bool:
    """Whether any activation contains the rectifier member."""
    families = [layer.activation.family for layer in net.hidden_layers]
    if net.output_layer.activation is not None:
        families.append(net.output_layer.activation.family)
    return any(f.kind is BasisKind.CLASSIC and f.size >= 4 for f in families)


def nudge_away_from_kinks(
    net: Network, samples: Sequence[Sample], margin: float = KINK_MARGIN, max_rounds: int = 20
) -> int:
    """Shift biases until no pre-activation sits within ``margin`` of 0.

    Only meaningful for families containing the rectifier; returns the number
    of bias adjustments made.
    """
    if not has_kinks(net):
        return 0
    adjustments = 0
    for _ in range(max_rounds):
        moved = False
        for x, _target in samples:
            trace = net.forward(x)
            levels = [*trace.nets]
            if net.output_layer.activation is not None:
                levels.append(trace.output_net)
            for k, nets in enumerate(levels):
                close = np.abs(nets) < margin
                if np.any(close):
                    net.layer(k).biases[close] += 10.0 * margin
                    adjustments += int(np.count_nonzero(close))
                    moved = True
        if not moved:
            break
    return adjustments


class GradientChecker:
    """Compares analytic gradients against central finite differences."""

    def __init__(
        self,
        h: float = DEFAULT_H,
        rel_tol: float = DEFAULT_REL_TOL,
        abs_tol: float = DEFAULT_ABS_TOL,
        max_coordinates: int = MAX_COORDINATES,
        seed: int = 0,
    ):
        if h <= 0 or rel_tol <= 0 or abs_tol <= 0:
            raise ValueError("h and tolerances must be > 0")
        self.h = h
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.max_coordinates = max_coordinates
        self.seed = seed

    def select_coordinates(self, net: Network) -> list[ParamCoordinate]:
        """All coordinates, or a seeded random subset when there are too many."""
        coords = list(iter_coordinates(net))
        if len(coords) <= self.max_coordinates:
            return coords
        rng = np.random.default_rng(self.seed)
        picked = np.sort(rng.choice(len(coords), size=self.max_coordinates, replace=False))
        return [coords[i] for i in picked]

    def is_failure(self, analytic: float, numeric: float) -> bool:
        diff = abs(analytic - numeric)
        scale = max(abs(analytic), abs(numeric))
        rel = diff / scale if scale > 0 else 0.0
        return diff > self.abs_tol and rel > self.rel_tol

    def check(
        self,
        net: Network,
        samples: Sequence[Sample],
        kind: LossKind | str,
        grads: GradientSet | None = None,
    ) -> CheckReport:
        """Check every (selected) coordinate; ``grads`` overrides the analytic side."""
        if grads is None:
            grads = batch_backward(net, samples, kind)
        report = CheckReport()
        for coord in self.select_coordinates(net):
            analytic = analytic_value(grads, coord)
            if is_frozen(net, coord):
                # held fixed during training, so its partial is 0 by definition
                numeric = 0.0
            else:
                numeric = numeric_partial_batch(net, samples, kind, coord, self.h)
            diff = abs(analytic - numeric)
            scale = max(abs(analytic), abs(numeric))
            rel = diff / scale if scale > 0 else 0.0
            report.n_checked += 1
            if diff > report.max_abs_err:
                report.max_abs_err = diff
            if rel > report.max_rel_err and diff > self.abs_tol:
                report.max_rel_err = rel
                report.worst = coord
            if self.is_failure(analytic, numeric):
                logger.debug(
                    "gradient mismatch at %s: analytic=%.17g numeric=%.17g",
                    coord.label(),
                    analytic,
                    numeric,
                )
                report.failures.append(CheckFailure(coord, analytic, numeric))
        logger.info(
            "checked %d coordinates, %d failures, max abs err %.3g",
            report.n_checked,
            len(report.failures),
            report.max_abs_err,
        )
        return report


def check_gradients(
    net: Network,
    samples: Sequence[Sample],
    kind: LossKind | str,
    h: float = DEFAULT_H,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    seed: int = 0,
    grads: GradientSet | None = None,
) -> CheckReport:
    """Convenience function to run a gradient check."""
    checker = GradientChecker(h=h, rel_tol=rel_tol, abs_tol=abs_tol, seed=seed)
    return checker.check(net, samples, kind, grads=grads)


def random_samples(net: Network, n: int, kind: LossKind | str, seed: int = 0) -> list[Sample]:
    """Seeded check inputs in [-1, 1] with targets valid for ``kind``.

    Cross-entropy gets one-hot targets, sigmoid and softmax outputs targets in
    [0, 1], identity outputs targets in [-1, 1].
    """
    kind = LossKind(kind)
    rng = np.random.default_rng(seed)
    d_in, d_out = net.widths[0], net.widths[-1]
    scaling = net.output_layer.scaling
    samples: list[Sample] = []
    for _ in range(n):
        x = rng.uniform(-1.0, 1.0, size=d_in)
        if kind is LossKind.CROSS_ENTROPY:
            target = np.zeros(d_out)
            target[rng.integers(d_out)] = 1.0
        elif scaling is OutputScaling.IDENTITY:
            target = rng.uniform(-1.0, 1.0, size=d_out)
        else:
            target = rng.uniform(0.0, 1.0, size=d_out)
        samples.append((x, target))
    return samples


def check_run_config(
    config: RunConfig,
    h: float = DEFAULT_H,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    seed: int | None = None,
) -> CheckReport:
    """Build the configured network and check it on ``n_samples`` random samples."""
    seed = config.seed if seed is None else seed
    net = config.model_copy(update={"seed": seed}).build_network()
    samples = random_samples(net, config.n_samples, config.loss, seed=seed)
    moved = nudge_away_from_kinks(net, samples)
    if moved:
        logger.debug("moved %d biases away from rectifier kinks", moved)
    return check_gradients(
        net, samples, config.loss, h=h, rel_tol=rel_tol, abs_tol=abs_tol, seed=seed
    )
