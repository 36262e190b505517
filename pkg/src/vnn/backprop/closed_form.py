"""Literal matrix pipelines for the coefficient gradients.

These evaluate the closed-form expressions term by term instead of running the
backward recursion, so tests can confirm both give the same numbers.

Layer mode, hidden layer k of N (0-based):

    dE/dalpha^(k) = F^(k) W^(k+1) W~^(k+2) ... W~^(O) g

with [W~^(b)]_ij = w_ij^(b) * F'^(b-1)(net_i^(b-1)) and [F^(k)]_ij = f_i(net_j^(k)).

Neuron mode:

    dE/dalpha^(k) = F^(k) (.) ( W^(k+1) F'^(k+1) (.) ( ... (.) ( W^(O) g ) ) )

where ``(.)`` multiplies each column of its left operand elementwise with the
vector on its right.
"""

from __future__ import annotations

import numpy as np

from vnn.activation import ActivationMode
from vnn.basis import FloatArray
from vnn.errors import ShapeError
from vnn.loss import LossKind, loss_output_grad
from vnn.network import ForwardTrace, Network


def _check_layer(net: Network, layer_index: int, mode: ActivationMode) -> None:
    if not 0 <= layer_index < net.depth:
        raise ShapeError(f"hidden layer index {layer_index} out of range 0..{net.depth - 1}")
    actual = net.hidden_layers[layer_index].activation.mode
    if actual is not mode:
        raise ShapeError(
            f"layer {layer_index + 1} is in {actual.value} mode, {mode.value} mode required"
        )


def tilde_weights(net: Network, trace: ForwardTrace, beta: int) -> FloatArray:
    """W~^(beta): rows of W^(beta) scaled by F' of the source layer beta-1.

    ``beta`` is the 0-based index of the destination layer and must be >= 1
    (``net.depth`` selects the output layer).
    """
    source = net.hidden_layers[beta - 1]
    slopes = source.activation.activate_deriv(trace.nets[beta - 1])
    return net.layer(beta).weights * slopes[:, np.newaxis]


def columnwise(matrix: FloatArray, vector: FloatArray) -> FloatArray:
    """Multiply every column of ``matrix`` elementwise with ``vector``."""
    result = np.empty_like(matrix)
    for row in range(matrix.shape[0]):
        result[row, :] = matrix[row, :] * vector
    return result


def alpha_grad_layer_closed_form(
    net: Network,
    trace: ForwardTrace,
    target: FloatArray,
    kind: LossKind | str,
    layer_index: int,
) -> FloatArray:
    """Shared-coefficient gradient of hidden layer ``layer_index`` (length M)."""
    _check_layer(net, layer_index, ActivationMode.LAYER)
    g = loss_output_grad(kind, trace, target)
    # right-to-left: W~^(O) g, then the remaining W~ down to layer_index + 2
    v = g
    for beta in range(net.depth, layer_index + 1, -1):
        v = tilde_weights(net, trace, beta) @ v
    v = net.layer(layer_index + 1).weights @ v
    basis = net.hidden_layers[layer_index].activation.family.matrix(trace.nets[layer_index])
    return basis @ v


def alpha_grad_neuron_closed_form(
    net: Network,
    trace: ForwardTrace,
    target: FloatArray,
    kind: LossKind | str,
    layer_index: int,
) -> FloatArray:
    """Per-neuron coefficient gradient of hidden layer ``layer_index`` (M x width)."""
    _check_layer(net, layer_index, ActivationMode.NEURON)
    g = loss_output_grad(kind, trace, target)
    inner = net.output_layer.weights @ g
    for beta in range(net.depth - 1, layer_index, -1):
        layer = net.hidden_layers[beta]
        slopes = layer.activation.activate_deriv(trace.nets[beta])
        inner = layer.weights @ (slopes * inner)
    basis = net.hidden_layers[layer_index].activation.family.matrix(trace.nets[layer_index])
    return columnwise(basis, inner)
