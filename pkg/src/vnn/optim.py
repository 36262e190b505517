"""Plain SGD on weights, biases and expansion coefficients, plus the epoch loop."""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from vnn.backprop import GradientSet, Sample, batch_backward
from vnn.basis import FloatArray
from vnn.errors import NonFiniteError, ShapeError, TrainingDivergedError
from vnn.loss import LossKind, check_pairing, mean_loss
from vnn.network import Network

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    """Hyperparameters of one training run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    lr_weights: float = Field(default=0.5, gt=0)
    lr_alpha: float = Field(default=0.5, ge=0)
    epochs: int = Field(default=5000, ge=0)
    batch_size: int = Field(default=4, ge=1)
    seed: int = Field(default=42, ge=0)
    shuffle: bool = True
    log_every: int = Field(default=100, ge=1)


@dataclass
class TrainRecord:
    epoch: int
    train_loss: float
    val_loss: float | None = None


@dataclass
class TrainHistory:
    """Logged losses in epoch order plus wall-clock duration."""

    records: list[TrainRecord] = field(default_factory=list)
    duration_s: float = 0.0

    @property
    def final_loss(self) -> float | None:
        return self.records[-1].train_loss if self.records else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "duration_s": self.duration_s,
            "records": [
                {"epoch": r.epoch, "train_loss": r.train_loss, "val_loss": r.val_loss}
                for r in self.records
            ],
        }


def sgd_step(net: Network, grads: GradientSet, lr_w: float, lr_a: float) -> None:
    """W -= lr_w dW, b -= lr_w db, alpha -= lr_a dAlpha for trainable layers."""
    grads.check_shapes(net)
    layers = [*net.hidden_layers, net.output_layer]
    updates: list[tuple[FloatArray, FloatArray]] = []
    for k, layer in enumerate(layers):
        updates.append((layer.weights, layer.weights - lr_w * grads.weights[k]))
        updates.append((layer.biases, layer.biases - lr_w * grads.biases[k]))
    for k, hidden in enumerate(net.hidden_layers):
        if hidden.trainable_alpha:
            coeffs = hidden.activation.coeffs
            updates.append((coeffs, coeffs - lr_a * grads.alphas[k]))
    out_act = net.output_layer.activation
    if out_act is not None and net.output_layer.trainable_alpha and grads.alpha_out is not None:
        updates.append((out_act.coeffs, out_act.coeffs - lr_a * grads.alpha_out))

    # validate everything before touching the network
    for index, (_, new) in enumerate(updates):
        if not np.all(np.isfinite(new)):
            raise NonFiniteError(f"non-finite parameter update (tensor {index + 1})")
    for target, new in updates:
        target[...] = new


def _as_samples(features: FloatArray, targets: FloatArray) -> list[Sample]:
    return [(features[i], targets[i]) for i in range(features.shape[0])]


def _check_widths(net: Network, features: FloatArray, targets: FloatArray) -> None:
    widths = net.widths
    if features.ndim != 2 or targets.ndim != 2 or features.shape[0] != targets.shape[0]:
        raise ShapeError("features and targets must be matrices with equal row counts")
    if features.shape[1] != widths[0] or targets.shape[1] != widths[-1]:
        raise ShapeError(
            f"dataset has {features.shape[1]} features and {targets.shape[1]} targets, "
            f"network expects {widths[0]} and {widths[-1]}"
        )


def iterate_batches(n: int, batch_size: int, order: FloatArray | None = None) -> list[list[int]]:
    """Split ``order`` (default 0..n-1) into consecutive batches; the last may be short."""
    indices = list(range(n)) if order is None else [int(i) for i in order]
    return [indices[start : start + batch_size] for start in range(0, n, batch_size)]


def train(
    net: Network,
    train_set: tuple[FloatArray, FloatArray],
    val_set: tuple[FloatArray, FloatArray] | None,
    kind: LossKind | str,
    cfg: TrainConfig,
    on_record: Callable[[TrainRecord], None] | None = None,
) -> TrainHistory:
    """Train ``net`` in place with mini-batch SGD.

    Each epoch optionally shuffles with a PCG64 generator seeded by
    ``cfg.seed``, applies ``batch_backward`` + ``sgd_step`` per batch, and
    logs the full-set mean loss every ``log_every`` epochs and at the last
    epoch.
    """
    kind = LossKind(kind)
    check_pairing(kind, net.output_layer.scaling)
    features, targets = (np.asarray(a, dtype=np.float64) for a in train_set)
    _check_widths(net, features, targets)
    samples = _as_samples(features, targets)
    val_samples: list[Sample] | None = None
    if val_set is not None:
        val_features, val_targets = (np.asarray(a, dtype=np.float64) for a in val_set)
        _check_widths(net, val_features, val_targets)
        val_samples = _as_samples(val_features, val_targets)

    history = TrainHistory()
    if cfg.epochs == 0:
        return history
    if not samples:
        raise ShapeError("training set is empty")

    rng = np.random.default_rng(cfg.seed)
    start = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(samples)) if cfg.shuffle else None
        try:
            for batch in iterate_batches(len(samples), cfg.batch_size, order):
                grads = batch_backward(net, [samples[i] for i in batch], kind)
                sgd_step(net, grads, cfg.lr_weights, cfg.lr_alpha)
        except NonFiniteError as exc:
            raise TrainingDivergedError(epoch, str(exc)) from exc

        if epoch % cfg.log_every == 0 or epoch == cfg.epochs:
            try:
                record = TrainRecord(
                    epoch=epoch,
                    train_loss=mean_loss(net, samples, kind),
                    val_loss=mean_loss(net, val_samples, kind) if val_samples else None,
                )
            except NonFiniteError as exc:
                raise TrainingDivergedError(epoch, str(exc)) from exc
            history.records.append(record)
            if record.val_loss is None:
                logger.info("epoch %d: train loss %.6g", epoch, record.train_loss)
            else:
                logger.info(
                    "epoch %d: train loss %.6g, val loss %.6g",
                    epoch,
                    record.train_loss,
                    record.val_loss,
                )
            if on_record is not None:
                on_record(record)
    history.duration_s = time.perf_counter() - start
    return history
