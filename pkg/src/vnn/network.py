"""Dense feed-forward network with variational activations.

Weights follow the (source, destination) orientation: entry (j, l) of a weight
matrix connects neuron j of the previous layer to neuron l of this layer, so
``net = W.T @ a_prev + b``.
"""

from __future__ import annotations

import copy
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from vnn.activation import ActivationMode, VariationalActivation
from vnn.basis import BasisFamily, FloatArray
from vnn.errors import NonFiniteError, ShapeError


class OutputScaling(str, Enum):
    """Fixed output map sigma applied after the output net."""

    IDENTITY = "identity"
    SIGMOID = "sigmoid"
    SOFTMAX = "softmax"


def apply_scaling(scaling: OutputScaling, z: FloatArray) -> FloatArray:
    """Apply sigma to the (possibly activated) output net."""
    if scaling is OutputScaling.IDENTITY:
        return z.copy()
    if scaling is OutputScaling.SIGMOID:
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    shifted = np.exp(z - np.max(z))
    return shifted / np.sum(shifted)


def scaling_vjp(scaling: OutputScaling, out: FloatArray, upstream: FloatArray) -> FloatArray:
    """Vector-Jacobian product of sigma at ``out`` = sigma(z) with ``upstream``."""
    if scaling is OutputScaling.IDENTITY:
        return upstream.copy()
    if scaling is OutputScaling.SIGMOID:
        return upstream * out * (1.0 - out)
    # softmax Jacobian is diag(out) - out out^T
    return out * (upstream - np.dot(upstream, out))


@dataclass
class LayerSpec:
    """A hidden layer: weights (in x out), biases and its activation."""

    weights: FloatArray
    biases: FloatArray
    activation: VariationalActivation
    trainable_alpha: bool = True

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64)
        self.biases = np.array(self.biases, dtype=np.float64).reshape(-1)
        if self.weights.ndim != 2:
            raise ShapeError(f"weights must be a matrix, got shape {self.weights.shape}")
        if self.biases.shape != (self.out_width,):
            raise ShapeError(
                f"biases have shape {self.biases.shape}, expected ({self.out_width},)"
            )
        if self.activation.width != self.out_width:
            raise ShapeError(
                f"activation width {self.activation.width} != layer width {self.out_width}"
            )

    @property
    def in_width(self) -> int:
        return int(self.weights.shape[0])

    @property
    def out_width(self) -> int:
        return int(self.weights.shape[1])


@dataclass
class OutputLayer:
    """Output weights, biases, optional layer-mode activation F^(O) and sigma."""

    weights: FloatArray
    biases: FloatArray
    scaling: OutputScaling = OutputScaling.IDENTITY
    activation: VariationalActivation | None = None
    trainable_alpha: bool = True

    def __post_init__(self):
        self.scaling = OutputScaling(self.scaling)
        self.weights = np.array(self.weights, dtype=np.float64)
        self.biases = np.array(self.biases, dtype=np.float64).reshape(-1)
        if self.weights.ndim != 2:
            raise ShapeError(f"weights must be a matrix, got shape {self.weights.shape}")
        if self.biases.shape != (self.out_width,):
            raise ShapeError(
                f"output biases have shape {self.biases.shape}, expected ({self.out_width},)"
            )
        if self.activation is not None:
            if self.activation.mode is not ActivationMode.LAYER:
                raise ShapeError("the output activation supports layer mode only")
            if self.activation.width != self.out_width:
                raise ShapeError(
                    f"output activation width {self.activation.width} != {self.out_width}"
                )

    @property
    def in_width(self) -> int:
        return int(self.weights.shape[0])

    @property
    def out_width(self) -> int:
        return int(self.weights.shape[1])


@dataclass(frozen=True)
class ForwardTrace:
    """Everything one forward pass computed, as consumed by backprop.

    ``output_act`` is F^(O)(net^(O)) when the output activation is on, else
    a copy of ``output_net``; ``output_deriv`` is the matching F^(O)' (ones
    when off).
    """

    input: FloatArray
    nets: list[FloatArray]
    acts: list[FloatArray]
    output_net: FloatArray
    output_act: FloatArray
    output_deriv: FloatArray
    output: FloatArray
    scaling: OutputScaling

    def activation_in(self, layer: int) -> FloatArray:
        """Input of layer ``layer`` (0-based; ``len(nets)`` is the output layer)."""
        return self.input if layer == 0 else self.acts[layer - 1]


def _check_finite(values: FloatArray, layer: int, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"non-finite {what}", layer=layer)


@dataclass
class Network:
    """Multilayer perceptron whose hidden activations are variational."""

    hidden_layers: list[LayerSpec]
    output_layer: OutputLayer
    seed: int | None = None

    def __post_init__(self):
        if not self.hidden_layers:
            raise ShapeError("a network needs at least one hidden layer")
        layers: list[LayerSpec | OutputLayer] = [*self.hidden_layers, self.output_layer]
        for index in range(1, len(layers)):
            previous, current = layers[index - 1], layers[index]
            if previous.out_width != current.in_width:
                raise ShapeError(
                    f"layer {index} has {previous.out_width} outputs but layer "
                    f"{index + 1} expects {current.in_width} inputs"
                )

    @property
    def depth(self) -> int:
        """Number of hidden layers N."""
        return len(self.hidden_layers)

    @property
    def widths(self) -> list[int]:
        return [self.hidden_layers[0].in_width] + [
            layer.out_width for layer in [*self.hidden_layers, self.output_layer]
        ]

    @property
    def family(self) -> BasisFamily:
        return self.hidden_layers[0].activation.family

    def layer(self, index: int) -> LayerSpec | OutputLayer:
        """Layer by 0-based index, ``depth`` being the output layer."""
        if index == self.depth:
            return self.output_layer
        return self.hidden_layers[index]

    @classmethod
    def build(
        cls,
        widths: Sequence[int],
        family: BasisFamily,
        mode: ActivationMode | str = ActivationMode.LAYER,
        scaling: OutputScaling | str = OutputScaling.IDENTITY,
        variational_output: bool = False,
        frozen: Iterable[int] = (),
        freeze_output_alpha: bool = False,
        seed: int = 0,
    ) -> Network:
        """Randomly initialized network.

        Weights are drawn from U[-sqrt(6/(in+out)), +sqrt(6/(in+out))], biases
        start at 0 and coefficients follow ``VariationalActivation.initial``.
        ``frozen`` lists 0-based hidden layer indices whose coefficients are
        excluded from updates.
        """
        if len(widths) < 3:
            raise ShapeError("widths need an input, at least one hidden and an output width")
        if any(w < 1 for w in widths):
            raise ShapeError(f"layer widths must be positive, got {list(widths)}")
        frozen_layers = set(frozen)
        rng = np.random.default_rng(seed)
        hidden: list[LayerSpec] = []
        for index, (fan_in, fan_out) in enumerate(zip(widths[:-2], widths[1:-1])):
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            hidden.append(
                LayerSpec(
                    weights=rng.uniform(-bound, bound, size=(fan_in, fan_out)),
                    biases=np.zeros(fan_out),
                    activation=VariationalActivation.initial(family, mode, fan_out, rng),
                    trainable_alpha=index not in frozen_layers,
                )
            )
        fan_in, fan_out = widths[-2], widths[-1]
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        output = OutputLayer(
            weights=rng.uniform(-bound, bound, size=(fan_in, fan_out)),
            biases=np.zeros(fan_out),
            scaling=OutputScaling(scaling),
            activation=(
                VariationalActivation.initial(family, ActivationMode.LAYER, fan_out, rng)
                if variational_output
                else None
            ),
            trainable_alpha=not freeze_output_alpha,
        )
        return cls(hidden_layers=hidden, output_layer=output, seed=seed)

    def clone(self) -> Network:
        return copy.deepcopy(self)

    def forward(self, x: FloatArray) -> ForwardTrace:
        """Run one sample through the network, caching nets and activations."""
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.hidden_layers[0].in_width:
            raise ShapeError(
                f"input has {x.shape[0]} features, network expects "
                f"{self.hidden_layers[0].in_width}"
            )
        nets: list[FloatArray] = []
        acts: list[FloatArray] = []
        a = x
        for index, layer in enumerate(self.hidden_layers, start=1):
            net = layer.weights.T @ a + layer.biases
            _check_finite(net, index, "pre-activation")
            a = layer.activation.activate(net)
            _check_finite(a, index, "activation")
            nets.append(net)
            acts.append(a)

        out_index = self.depth + 1
        out = self.output_layer
        output_net = out.weights.T @ a + out.biases
        _check_finite(output_net, out_index, "output pre-activation")
        if out.activation is not None:
            output_act = out.activation.activate(output_net)
            output_deriv = out.activation.activate_deriv(output_net)
        else:
            output_act = output_net.copy()
            output_deriv = np.ones_like(output_net)
        output = apply_scaling(out.scaling, output_act)
        _check_finite(output, out_index, "output")
        return ForwardTrace(
            input=x,
            nets=nets,
            acts=acts,
            output_net=output_net,
            output_act=output_act,
            output_deriv=output_deriv,
            output=output,
            scaling=out.scaling,
        )

    def predict(self, x: FloatArray) -> FloatArray:
        """Network output for one sample."""
        return self.forward(x).output

    def predict_batch(self, features: FloatArray) -> FloatArray:
        """Row-wise ``predict`` over a samples x d matrix."""
        return np.stack([self.predict(row) for row in np.atleast_2d(features)])

    def parameter_count(self) -> int:
        total = 0
        for layer in self.hidden_layers:
            total += layer.weights.size + layer.biases.size + layer.activation.coeffs.size
        out = self.output_layer
        total += out.weights.size + out.biases.size
        if out.activation is not None:
            total += out.activation.coeffs.size
        return total


def forward(net: Network, x: FloatArray) -> ForwardTrace:
    """Forward pass with a full trace."""
    return net.forward(x)


def predict(net: Network, x: FloatArray) -> FloatArray:
    """Forward pass returning only the output."""
    return net.predict(x)
