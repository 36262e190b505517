"""Plot-ready tables of learned activation curves."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vnn.activation import ActivationMode, VariationalActivation
from vnn.basis import FloatArray
from vnn.errors import ShapeError
from vnn.network import Network


@dataclass
class ActivationTable:
    """Columns x, F(x), F'(x) sampled on a uniform grid."""

    x: FloatArray
    value: FloatArray
    slope: FloatArray

    def rows(self) -> list[tuple[float, float, float]]:
        return [(float(a), float(b), float(c)) for a, b, c in zip(self.x, self.value, self.slope)]


def _activation_of(net: Network, layer: int) -> VariationalActivation:
    if 0 <= layer < net.depth:
        return net.hidden_layers[layer].activation
    if layer == net.depth and net.output_layer.activation is not None:
        return net.output_layer.activation
    raise ShapeError(f"layer {layer + 1} has no variational activation")


def export_activation(
    net: Network,
    layer: int,
    neuron: int | None,
    x_min: float,
    x_max: float,
    steps: int,
) -> ActivationTable:
    """Sample one learned activation.

    ``layer`` and ``neuron`` are 0-based; ``layer == net.depth`` addresses the
    output activation when it is enabled. A neuron index is required exactly
    when the layer runs in neuron mode.
    """
    act = _activation_of(net, layer)
    if steps < 2:
        raise ShapeError(f"steps must be >= 2, got {steps}")
    if not x_min < x_max:
        raise ShapeError(f"empty range {x_min}:{x_max}")
    if act.mode is ActivationMode.NEURON:
        if neuron is None:
            raise ShapeError(f"layer {layer + 1} is in neuron mode; a neuron index is required")
        if not 0 <= neuron < act.width:
            raise ShapeError(f"layer {layer + 1} has no neuron {neuron + 1}")
        coeffs = act.coeffs[:, neuron : neuron + 1]
    else:
        if neuron is not None:
            raise ShapeError(f"layer {layer + 1} is in layer mode; drop the neuron index")
        coeffs = act.coeffs

    grid = np.linspace(x_min, x_max, steps)
    # evaluate the single curve as a layer-mode activation spanning the grid
    curve = VariationalActivation(act.family, ActivationMode.LAYER, coeffs, steps)
    return ActivationTable(x=grid, value=curve.activate(grid), slope=curve.activate_deriv(grid))


def write_table(table: ActivationTable, path: Path | str) -> None:
    """CSV with a ``x,F,dF`` header and 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["x", "F", "dF"])
        for row in table.rows():
            writer.writerow([f"{v:.17g}" for v in row])
