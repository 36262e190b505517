"""Line-oriented text checkpoints.

Layout::

    VNN 1
    basis = fourier
    M = 4
    omega = 1
    widths = 2,4,1
    modes = layer
    trainable = 1
    scaling = identity
    loss = mse
    variational_output = 0
    output_trainable = 1
    seed = 42
    tensor weights 1 2 4
    <row-major values, one matrix row per line>
    ...
    end

Tensors appear per hidden layer as ``weights``, ``biases``, ``alpha``, then the
output layer's ``weights``/``biases`` and, when enabled, ``alpha_out``. Values
are written with 17 significant digits so doubles round-trip exactly.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import TypeVar

import numpy as np

from vnn.activation import ActivationMode, VariationalActivation
from vnn.basis import BasisFamily, BasisKind, FloatArray
from vnn.errors import BasisError, CheckpointError, CheckpointVersionError, ShapeError
from vnn.io import bad_utf8_line
from vnn.loss import LossKind, default_loss_for
from vnn.network import LayerSpec, Network, OutputLayer, OutputScaling

logger = logging.getLogger(__name__)

T = TypeVar("T")

MAGIC = "VNN"
FORMAT_VERSION = 1
HEADER_KEYS = (
    "basis",
    "M",
    "omega",
    "widths",
    "modes",
    "trainable",
    "scaling",
    "loss",
    "variational_output",
    "output_trainable",
    "seed",
)


@dataclass
class Checkpoint:
    """A loaded checkpoint: the network plus header metadata."""

    network: Network
    loss: LossKind
    seed: int | None
    version: int = FORMAT_VERSION


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _flag(value: bool) -> str:
    return "1" if value else "0"


def _header_value(value: object) -> str:
    return _fmt(value) if isinstance(value, float) else str(value)


def format_checkpoint(net: Network, loss: LossKind | str | None = None) -> str:
    """Serialize ``net`` to the checkpoint text."""
    family = net.family
    loss_kind = LossKind(loss) if loss is not None else default_loss_for(net.output_layer.scaling)
    out = net.output_layer
    lines = [
        f"{MAGIC} {FORMAT_VERSION}",
        *(f"{key} = {_header_value(value)}" for key, value in family.describe().items()),
        f"widths = {','.join(str(w) for w in net.widths)}",
        f"modes = {','.join(layer.activation.mode.value for layer in net.hidden_layers)}",
        f"trainable = {','.join(_flag(layer.trainable_alpha) for layer in net.hidden_layers)}",
        f"scaling = {out.scaling.value}",
        f"loss = {loss_kind.value}",
        f"variational_output = {_flag(out.activation is not None)}",
        f"output_trainable = {_flag(out.trainable_alpha)}",
        f"seed = {'' if net.seed is None else net.seed}",
    ]

    def tensor(name: str, layer: int, array: FloatArray) -> None:
        matrix = np.atleast_2d(array)
        rows, cols = matrix.shape
        lines.append(f"tensor {name} {layer} {rows} {cols}")
        for row in matrix:
            lines.append(" ".join(_fmt(v) for v in row))

    for k, hidden in enumerate(net.hidden_layers, start=1):
        tensor("weights", k, hidden.weights)
        tensor("biases", k, hidden.biases.reshape(1, -1))
        tensor("alpha", k, hidden.activation.coeffs)
    n_out = net.depth + 1
    tensor("weights", n_out, out.weights)
    tensor("biases", n_out, out.biases.reshape(1, -1))
    if out.activation is not None:
        tensor("alpha_out", n_out, out.activation.coeffs)
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_checkpoint(net: Network, path: Path | str, loss: LossKind | str | None = None) -> None:
    """Write a checkpoint atomically (temp file, then rename)."""
    path = Path(path)
    temp_file = path.with_name(path.name + ".tmp")
    temp_file.write_text(format_checkpoint(net, loss), encoding="utf-8")
    try:
        temp_file.replace(path)
    except OSError:
        temp_file.unlink(missing_ok=True)
        raise
    logger.debug("saved checkpoint to %s", path)


class _Reader:
    """Line cursor that remembers 1-based line numbers."""

    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    @property
    def line_no(self) -> int:
        return self.pos + 1

    def peek(self) -> str | None:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def next(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise CheckpointError(f"truncated checkpoint: expected {what}", line=self.line_no)
        line = self.lines[self.pos]
        self.pos += 1
        return line


def _parse_magic(reader: _Reader) -> None:
    first = reader.next("magic line").strip()
    parts = first.split()
    if len(parts) != 2 or parts[0] != MAGIC:
        raise CheckpointVersionError(f"bad magic {first!r}, expected '{MAGIC} 1'", line=1)
    if parts[1] != str(FORMAT_VERSION):
        raise CheckpointVersionError(
            f"unsupported checkpoint version {parts[1]!r}, expected {FORMAT_VERSION}", line=1
        )


def _parse_header(reader: _Reader) -> tuple[dict[str, str], dict[str, int]]:
    header: dict[str, str] = {}
    where: dict[str, int] = {}
    while True:
        line = reader.peek()
        if line is None:
            raise CheckpointError("truncated checkpoint: no tensors", line=reader.line_no)
        if line.startswith("tensor "):
            break
        line_no = reader.line_no
        reader.next("header")
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in HEADER_KEYS:
            raise CheckpointError(f"unexpected header line {line!r}", line=line_no)
        if key in header:
            raise CheckpointError(f"duplicate header key {key!r}", line=line_no)
        header[key] = value.strip()
        where[key] = line_no
    missing = [key for key in HEADER_KEYS if key not in header]
    if missing:
        raise CheckpointError(f"missing header keys: {', '.join(missing)}", line=reader.line_no)
    return header, where


def _read_tensor(
    reader: _Reader, name: str, layer: int, shape: tuple[int, int]
) -> FloatArray:
    header_no = reader.line_no
    parts = reader.next(f"tensor {name} {layer}").split()
    if len(parts) != 5 or parts[0] != "tensor":
        raise CheckpointError(f"expected tensor {name} {layer}", line=header_no)
    try:
        found = (parts[1], int(parts[2]), (int(parts[3]), int(parts[4])))
    except ValueError:
        raise CheckpointError("malformed tensor header", line=header_no) from None
    if found[:2] != (name, layer):
        raise CheckpointError(
            f"expected tensor {name} {layer}, found {parts[1]} {parts[2]}", line=header_no
        )
    if found[2] != shape:
        raise CheckpointError(
            f"shape error: tensor {name} {layer} is {found[2][0]}x{found[2][1]}, header "
            f"implies {shape[0]}x{shape[1]}",
            line=header_no,
        )
    rows = []
    for _ in range(shape[0]):
        line_no = reader.line_no
        text = reader.next(f"row of tensor {name} {layer}")
        if text.startswith("tensor ") or text.strip() == "end":
            raise CheckpointError(
                f"shape error: tensor {name} {layer} has fewer than {shape[0]} rows",
                line=line_no,
            )
        fields = text.split()
        if len(fields) != shape[1]:
            raise CheckpointError(
                f"shape error: expected {shape[1]} values, found {len(fields)}", line=line_no
            )
        try:
            values = [float(v) for v in fields]
        except ValueError:
            raise CheckpointError("non-numeric tensor value", line=line_no) from None
        if not all(math.isfinite(v) for v in values):
            raise CheckpointError("non-finite tensor value", line=line_no)
        rows.append(values)
    return np.array(rows, dtype=np.float64).reshape(shape)


def _split_list(value: str, key: str, line: int) -> list[str]:
    items = [item.strip() for item in value.split(",") if item.strip()]
    if not items:
        raise CheckpointError(f"empty {key} list", line=line)
    return items


def parse_checkpoint(text: str) -> Checkpoint:
    """Parse checkpoint text; errors name the offending line."""
    reader = _Reader(text)
    _parse_magic(reader)
    header, where = _parse_header(reader)

    def field(key: str, convert: Callable[[str], T]) -> T:
        try:
            return convert(header[key])
        except (ValueError, BasisError) as exc:
            raise CheckpointError(f"invalid {key}: {exc}", line=where[key]) from exc

    def listed(key: str, convert: Callable[[str], T]) -> list[T]:
        return field(key, lambda v: [convert(i) for i in _split_list(v, key, where[key])])

    kind = field("basis", BasisKind)
    size = field("M", int)
    omega = field("omega", float)
    field("M", lambda _: BasisFamily(kind=kind, size=size))
    family = field("omega", lambda _: BasisFamily(kind=kind, size=size, omega=omega))
    widths = listed("widths", int)
    modes = listed("modes", ActivationMode)
    trainable = listed("trainable", lambda t: t == "1")
    scaling = field("scaling", OutputScaling)
    loss = field("loss", LossKind)
    variational_output = header["variational_output"] == "1"
    output_trainable = header["output_trainable"] == "1"
    seed = field("seed", lambda v: int(v) if v else None)

    depth = len(widths) - 2
    if depth < 1 or any(w < 1 for w in widths):
        raise CheckpointError(f"invalid widths {widths}", line=where["widths"])
    if len(modes) != depth or len(trainable) != depth:
        raise CheckpointError(
            f"modes/trainable list one entry per hidden layer ({depth})", line=where["modes"]
        )

    hidden: list[LayerSpec] = []
    try:
        for k in range(1, depth + 1):
            fan_in, fan_out = widths[k - 1], widths[k]
            weights = _read_tensor(reader, "weights", k, (fan_in, fan_out))
            biases = _read_tensor(reader, "biases", k, (1, fan_out))
            columns = 1 if modes[k - 1] is ActivationMode.LAYER else fan_out
            coeffs = _read_tensor(reader, "alpha", k, (family.size, columns))
            hidden.append(
                LayerSpec(
                    weights=weights,
                    biases=biases.reshape(-1),
                    activation=VariationalActivation(family, modes[k - 1], coeffs, fan_out),
                    trainable_alpha=trainable[k - 1],
                )
            )
        n_out = depth + 1
        weights = _read_tensor(reader, "weights", n_out, (widths[-2], widths[-1]))
        biases = _read_tensor(reader, "biases", n_out, (1, widths[-1]))
        out_act = None
        if variational_output:
            coeffs = _read_tensor(reader, "alpha_out", n_out, (family.size, 1))
            out_act = VariationalActivation(family, ActivationMode.LAYER, coeffs, widths[-1])
        output = OutputLayer(
            weights=weights,
            biases=biases.reshape(-1),
            scaling=scaling,
            activation=out_act,
            trainable_alpha=output_trainable,
        )
        network = Network(hidden_layers=hidden, output_layer=output, seed=seed)
    except ShapeError as exc:
        raise CheckpointError(f"shape error: {exc}", line=reader.line_no) from exc

    line_no = reader.line_no
    if reader.next("end marker").strip() != "end":
        raise CheckpointError("expected end marker", line=line_no)
    return Checkpoint(network=network, loss=loss, seed=seed)


def read_checkpoint(path: Path | str) -> Checkpoint:
    """Load a checkpoint with its metadata."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"no such checkpoint: {path}")
    data = path.read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CheckpointError("not valid UTF-8", line=bad_utf8_line(data, exc)) from None
    checkpoint = parse_checkpoint(text)
    logger.debug("loaded checkpoint from %s", path)
    return checkpoint


def load_checkpoint(path: Path | str) -> Network:
    """Load only the network from a checkpoint."""
    return read_checkpoint(path).network
