"""Loss functions E = sum_l e(t_l, output_l) and their output-layer gradients."""

from __future__ import annotations

from collections.abc import Iterable
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from vnn.basis import FloatArray
from vnn.errors import LossError, NonFiniteError
from vnn.network import ForwardTrace, OutputScaling, scaling_vjp

if TYPE_CHECKING:
    from vnn.network import Network

LOG_CLAMP = 1e-12
TARGET_SUM_TOLERANCE = 1e-9


class LossKind(str, Enum):
    """Supported losses."""

    MSE = "mse"
    CROSS_ENTROPY = "cross_entropy"


def default_loss_for(scaling: OutputScaling) -> LossKind:
    """Cross-entropy for softmax outputs, squared error otherwise."""
    if OutputScaling(scaling) is OutputScaling.SOFTMAX:
        return LossKind.CROSS_ENTROPY
    return LossKind.MSE


def check_pairing(kind: LossKind, scaling: OutputScaling) -> None:
    """Cross-entropy is only defined on softmax outputs."""
    if LossKind(kind) is LossKind.CROSS_ENTROPY and scaling is not OutputScaling.SOFTMAX:
        raise LossError(f"cross_entropy requires softmax output scaling, got {scaling.value}")


def _validate(kind: LossKind, output: FloatArray, target: FloatArray) -> None:
    if output.shape != target.shape:
        raise LossError(f"output has shape {output.shape} but target has shape {target.shape}")
    if kind is LossKind.CROSS_ENTROPY:
        if np.any(target < 0.0) or abs(float(np.sum(target)) - 1.0) > TARGET_SUM_TOLERANCE:
            raise LossError("cross_entropy target must be a probability vector")


def loss_value(kind: LossKind | str, output: FloatArray, target: FloatArray) -> float:
    """Per-sample loss.

    mse is sum((output - target)**2) / 2; cross_entropy is
    -sum(target * ln(max(output, 1e-12))).
    """
    kind = LossKind(kind)
    output = np.asarray(output, dtype=np.float64).reshape(-1)
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    _validate(kind, output, target)
    if kind is LossKind.MSE:
        diff = output - target
        return float(0.5 * np.dot(diff, diff))
    return float(-np.dot(target, np.log(np.maximum(output, LOG_CLAMP))))


def loss_scaling_grad(
    kind: LossKind | str, trace: ForwardTrace, target: FloatArray
) -> FloatArray:
    """Gradient of the loss with respect to the input of sigma.

    That input is F^(O)(net^(O)) when the output activation is on, else
    net^(O) itself.
    """
    kind = LossKind(kind)
    check_pairing(kind, trace.scaling)
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    _validate(kind, trace.output, target)
    if kind is LossKind.CROSS_ENTROPY:
        # softmax followed by cross-entropy collapses to output - target
        return trace.output - target
    return scaling_vjp(trace.scaling, trace.output, trace.output - target)


def loss_output_grad(kind: LossKind | str, trace: ForwardTrace, target: FloatArray) -> FloatArray:
    """g^(O) = dE/dnet^(O), through sigma and the optional F^(O)."""
    return trace.output_deriv * loss_scaling_grad(kind, trace, target)


def mean_loss(
    net: Network,
    samples: Iterable[tuple[FloatArray, FloatArray]],
    kind: LossKind | str,
) -> float:
    """Mean per-sample loss over ``samples`` in order."""
    total = 0.0
    count = 0
    for x, target in samples:
        total += loss_value(kind, net.predict(x), target)
        count += 1
    if count == 0:
        raise LossError("cannot average the loss over an empty set")
    value = total / count
    if not np.isfinite(value):
        raise NonFiniteError("mean loss is not finite")
    return value
