"""Backward sweep for weights, biases and expansion coefficients.

The production path is the u/delta recursion:

    g      = dE/dnet^(O)
    u^(N)  = W^(O) g
    d^(L)  = F'^(L)(net^(L)) * u^(L)
    u^(L-1) = W^(L) d^(L)

from which every gradient is a local product. The literal matrix pipelines of
the coefficient gradients live in ``vnn.backprop.closed_form`` and serve as
cross-checks only.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from vnn.activation import ActivationMode
from vnn.basis import FloatArray
from vnn.errors import NonFiniteError, ShapeError
from vnn.loss import LossKind, loss_output_grad, loss_scaling_grad
from vnn.network import ForwardTrace, Network

Sample = tuple[FloatArray, FloatArray]


@dataclass
class GradientSet:
    """Gradients mirroring the network's parameters.

    ``weights``/``biases`` hold one entry per hidden layer followed by the
    output layer; ``alphas`` one entry per hidden layer; ``alpha_out`` is set
    only when the network has an output activation.
    """

    weights: list[FloatArray]
    biases: list[FloatArray]
    alphas: list[FloatArray]
    alpha_out: FloatArray | None = None

    @classmethod
    def zeros_like(cls, net: Network) -> GradientSet:
        layers = [*net.hidden_layers, net.output_layer]
        out_act = net.output_layer.activation
        return cls(
            weights=[np.zeros_like(layer.weights) for layer in layers],
            biases=[np.zeros_like(layer.biases) for layer in layers],
            alphas=[np.zeros_like(layer.activation.coeffs) for layer in net.hidden_layers],
            alpha_out=None if out_act is None else np.zeros_like(out_act.coeffs),
        )

    def arrays(self) -> list[FloatArray]:
        """All gradient arrays in a fixed order."""
        items = [*self.weights, *self.biases, *self.alphas]
        if self.alpha_out is not None:
            items.append(self.alpha_out)
        return items

    def add_(self, other: GradientSet) -> None:
        """In-place accumulation."""
        for mine, theirs in zip(self.arrays(), other.arrays()):
            mine += theirs

    def scale_(self, factor: float) -> None:
        for array in self.arrays():
            array *= factor

    def copy(self) -> GradientSet:
        return GradientSet(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            alphas=[a.copy() for a in self.alphas],
            alpha_out=None if self.alpha_out is None else self.alpha_out.copy(),
        )

    def check_shapes(self, net: Network) -> None:
        """Raise ShapeError unless every array matches the network's parameter."""
        expected = GradientSet.zeros_like(net)
        if len(self.arrays()) != len(expected.arrays()):
            raise ShapeError("gradient set does not match the network's parameter layout")
        for mine, ref in zip(self.arrays(), expected.arrays()):
            if mine.shape != ref.shape:
                raise ShapeError(f"gradient of shape {mine.shape} where {ref.shape} expected")

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(a))) if a.size else 0.0 for a in self.arrays())


@dataclass
class BackwardState:
    """Intermediate vectors of one backward sweep, indexed by hidden layer."""

    g_out: FloatArray
    u: list[FloatArray]
    delta: list[FloatArray]


def backward_state(
    net: Network, trace: ForwardTrace, target: FloatArray, kind: LossKind | str
) -> BackwardState:
    """Run the u/delta recursion from the output down to the first hidden layer."""
    if len(trace.nets) != net.depth:
        raise ShapeError(f"trace has {len(trace.nets)} hidden layers, network has {net.depth}")
    g_out = loss_output_grad(kind, trace, target)
    u: list[FloatArray] = [np.empty(0)] * net.depth
    delta: list[FloatArray] = [np.empty(0)] * net.depth
    upstream = net.output_layer.weights @ g_out
    for k in range(net.depth - 1, -1, -1):
        layer = net.hidden_layers[k]
        u[k] = upstream
        delta[k] = layer.activation.activate_deriv(trace.nets[k]) * upstream
        if k > 0:
            upstream = layer.weights @ delta[k]
    return BackwardState(g_out=g_out, u=u, delta=delta)


def _check_finite(array: FloatArray, layer: int, what: str) -> None:
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f"non-finite {what} gradient", layer=layer)


def backward(
    net: Network, trace: ForwardTrace, target: FloatArray, kind: LossKind | str
) -> GradientSet:
    """Single-sample gradients of the loss with respect to every parameter."""
    state = backward_state(net, trace, target, kind)
    grads = GradientSet.zeros_like(net)

    for k, layer in enumerate(net.hidden_layers):
        a_prev = trace.activation_in(k)
        grads.weights[k] = np.outer(a_prev, state.delta[k])
        grads.biases[k] = state.delta[k].copy()
        if layer.trainable_alpha:
            # f_i(net_j) * u_j, summed over j when the coefficients are shared
            per_neuron = layer.activation.family.matrix(trace.nets[k]) * state.u[k]
            if layer.activation.mode is ActivationMode.LAYER:
                grads.alphas[k] = np.sum(per_neuron, axis=1, keepdims=True)
            else:
                grads.alphas[k] = per_neuron
        for name, array in (
            ("weight", grads.weights[k]),
            ("bias", grads.biases[k]),
            ("coefficient", grads.alphas[k]),
        ):
            _check_finite(array, k + 1, name)

    n = net.depth
    out = net.output_layer
    grads.weights[n] = np.outer(trace.activation_in(n), state.g_out)
    grads.biases[n] = state.g_out.copy()
    if out.activation is not None and out.trainable_alpha:
        v = loss_scaling_grad(kind, trace, target)
        grads.alpha_out = (out.activation.family.matrix(trace.output_net) @ v).reshape(-1, 1)
    for array in (grads.weights[n], grads.biases[n]):
        _check_finite(array, n + 1, "output")
    if grads.alpha_out is not None:
        _check_finite(grads.alpha_out, n + 1, "output coefficient")
    return grads


def batch_backward(net: Network, samples: Sequence[Sample], kind: LossKind | str) -> GradientSet:
    """Mean of per-sample gradients, accumulated in sample order."""
    if len(samples) == 0:
        raise ShapeError("batch_backward needs at least one sample")
    total: GradientSet | None = None
    for x, target in samples:
        grads = backward(net, net.forward(x), target, kind)
        if total is None:
            total = grads
        else:
            total.add_(grads)
    assert total is not None
    if len(samples) > 1:
        total.scale_(1.0 / len(samples))
    return total
