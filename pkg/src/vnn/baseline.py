"""Conventional fixed-activation MLP with its own textbook backprop.

Nothing here reuses the variational backward code, so comparing the two
implementations is a meaningful check that a one-hot, frozen variational
network collapses to an ordinary one.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from vnn.basis import CLASSIC_MEMBERS, BasisKind, FloatArray
from vnn.errors import ShapeError
from vnn.network import Network

FIXED_ACTIVATIONS = CLASSIC_MEMBERS


def _act(kind: str, z: FloatArray) -> FloatArray:
    if kind == "identity":
        return z.copy()
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return np.maximum(z, 0.0)


def _act_slope(kind: str, z: FloatArray) -> FloatArray:
    if kind == "identity":
        return np.ones_like(z)
    if kind == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    if kind == "sigmoid":
        s = 1.0 / (1.0 + np.exp(-z))
        return s * (1.0 - s)
    return (z > 0.0).astype(np.float64)


@dataclass
class FixedNet:
    """Plain MLP: per hidden layer a fixed activation, then an output scaling."""

    weights: list[FloatArray]
    biases: list[FloatArray]
    activations: list[str]
    scaling: str = "identity"

    def __post_init__(self):
        n_layers = len(self.activations) + 1
        if len(self.weights) != n_layers or len(self.biases) != n_layers:
            raise ShapeError("FixedNet needs one weight/bias pair per hidden layer plus output")
        for kind in self.activations:
            if kind not in FIXED_ACTIVATIONS:
                raise ShapeError(f"unknown fixed activation {kind!r}")
        for index in range(1, len(self.weights)):
            if self.weights[index - 1].shape[1] != self.weights[index].shape[0]:
                raise ShapeError(f"layer {index} and {index + 1} widths do not chain")

    @property
    def widths(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]


def fixed_net_from(net: Network) -> FixedNet:
    """FixedNet with the same W, b as a classic-family network whose coefficients are one-hot."""
    activations = []
    for index, layer in enumerate(net.hidden_layers, start=1):
        act = layer.activation
        if act.family.kind is not BasisKind.CLASSIC:
            raise ShapeError(f"layer {index}: only classic-family networks reduce to FixedNet")
        column = act.coeffs[:, 0]
        if not np.all(act.coeffs == column[:, np.newaxis]):
            raise ShapeError(f"layer {index}: neurons use different activations")
        hot = np.flatnonzero(column)
        if hot.size != 1 or column[hot[0]] != 1.0:
            raise ShapeError(f"layer {index}: coefficients are not one-hot")
        activations.append(act.family.member_name(int(hot[0]) + 1))
    if net.output_layer.activation is not None:
        raise ShapeError("FixedNet has no output activation")
    layers = [*net.hidden_layers, net.output_layer]
    return FixedNet(
        weights=[layer.weights.copy() for layer in layers],
        biases=[layer.biases.copy() for layer in layers],
        activations=activations,
        scaling=net.output_layer.scaling.value,
    )


def _scale(scaling: str, z: FloatArray) -> FloatArray:
    if scaling == "identity":
        return z.copy()
    if scaling == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z - z.max())
    return e / e.sum()


def _forward_cache(fnet: FixedNet, x: FloatArray) -> tuple[list[FloatArray], list[FloatArray]]:
    zs: list[FloatArray] = []
    activations = [np.asarray(x, dtype=np.float64).reshape(-1)]
    if activations[0].shape[0] != fnet.widths[0]:
        raise ShapeError(
            f"input has {activations[0].shape[0]} features, expected {fnet.widths[0]}"
        )
    for W, b, kind in zip(fnet.weights[:-1], fnet.biases[:-1], fnet.activations):
        z = W.T @ activations[-1] + b
        zs.append(z)
        activations.append(_act(kind, z))
    zs.append(fnet.weights[-1].T @ activations[-1] + fnet.biases[-1])
    return zs, activations


def fixed_forward(fnet: FixedNet, x: FloatArray) -> FloatArray:
    """Network output for one sample."""
    zs, _ = _forward_cache(fnet, x)
    return _scale(fnet.scaling, zs[-1])


def _loss(kind: str, output: FloatArray, target: FloatArray) -> float:
    if kind == "mse":
        return float(0.5 * np.sum((output - target) ** 2))
    return float(-np.sum(target * np.log(np.maximum(output, 1e-12))))


def fixed_backward(
    fnet: FixedNet, x: FloatArray, target: FloatArray, kind: str
) -> tuple[list[FloatArray], list[FloatArray]]:
    """Gradients (dW per layer, db per layer) of the per-sample loss."""
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    zs, activations = _forward_cache(fnet, x)
    y = _scale(fnet.scaling, zs[-1])
    if y.shape != target.shape:
        raise ShapeError(f"target has shape {target.shape}, output has {y.shape}")

    if kind == "cross_entropy":
        dz = y - target
    elif fnet.scaling == "identity":
        dz = y - target
    elif fnet.scaling == "sigmoid":
        dz = (y - target) * y * (1.0 - y)
    else:
        dy = y - target
        dz = y * (dy - np.dot(dy, y))

    n_layers = len(fnet.weights)
    dWs: list[FloatArray] = [np.empty(0)] * n_layers
    dbs: list[FloatArray] = [np.empty(0)] * n_layers
    for index in range(n_layers - 1, -1, -1):
        dWs[index] = np.outer(activations[index], dz)
        dbs[index] = dz.copy()
        if index > 0:
            da = fnet.weights[index] @ dz
            dz = _act_slope(fnet.activations[index - 1], zs[index - 1]) * da
    return dWs, dbs


def fixed_train(
    fnet: FixedNet,
    features: FloatArray,
    targets: FloatArray,
    kind: str,
    lr: float,
    epochs: int,
    batch_size: int,
    seed: int,
    shuffle: bool = True,
) -> tuple[FixedNet, float]:
    """Mini-batch SGD on a copy of ``fnet``; returns it with its final mean loss.

    Batching and shuffling follow the same seeded procedure as the variational
    trainer so runs with frozen coefficients can be compared step by step.
    """
    fnet = copy.deepcopy(fnet)
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n = features.shape[0]
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        order = rng.permutation(n) if shuffle else np.arange(n)
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            sum_w = [np.zeros_like(w) for w in fnet.weights]
            sum_b = [np.zeros_like(b) for b in fnet.biases]
            for i in batch:
                dWs, dbs = fixed_backward(fnet, features[i], targets[i], kind)
                for acc, g in zip(sum_w, dWs):
                    acc += g
                for acc, g in zip(sum_b, dbs):
                    acc += g
            scale = 1.0 / len(batch)
            for W, g in zip(fnet.weights, sum_w):
                W -= lr * (g * scale if len(batch) > 1 else g)
            for b, g in zip(fnet.biases, sum_b):
                b -= lr * (g * scale if len(batch) > 1 else g)
    final = sum(_loss(kind, fixed_forward(fnet, features[i]), targets[i]) for i in range(n)) / n
    return fnet, final
