"""Run configuration files.

Two formats are accepted. Plain ``key = value`` lines::

    # XOR with a fourier basis
    layers = 2,4,1
    basis = fourier
    M = 4
    freeze_alpha = 1

and, for ``.yaml``/``.yml`` paths, a YAML mapping with the same keys. An empty
file yields the defaults. Unknown or duplicate keys are errors.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Literal

import yaml  # type: ignore[import-untyped]
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from vnn.activation import ActivationMode
from vnn.basis import CLASSIC_MEMBERS, BasisFamily, BasisKind
from vnn.errors import ConfigError
from vnn.io import bad_utf8_line
from vnn.loss import LossKind
from vnn.network import Network, OutputScaling
from vnn.optim import TrainConfig

logger = logging.getLogger(__name__)

YAML_SUFFIXES = (".yaml", ".yml")


def _split_ints(value: Any) -> Any:
    if isinstance(value, str):
        try:
            return [int(item) for item in value.split(",") if item.strip()]
        except ValueError:
            raise ValueError(f"expected a comma list of integers, got {value!r}") from None
    if isinstance(value, int) and not isinstance(value, bool):
        return [value]
    return value


class RunConfig(BaseModel):
    """Everything a ``train``/``gradcheck`` run needs."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    layers: list[int] = Field(default_factory=lambda: [2, 4, 1])
    basis: BasisKind = BasisKind.FOURIER
    m: int = Field(default=4, ge=1, alias="M")
    omega: float = Field(default=1.0, gt=0)
    mode: ActivationMode = ActivationMode.LAYER
    output: OutputScaling = OutputScaling.IDENTITY
    loss: LossKind = LossKind.MSE
    variational_output: bool = False
    lr_weights: float = Field(default=0.5, gt=0)
    lr_alpha: float = Field(default=0.5, ge=0)
    epochs: int = Field(default=5000, ge=0)
    batch_size: int = Field(default=4, ge=1)
    seed: int = Field(default=42, ge=0)
    shuffle: bool = True
    log_every: int = Field(default=100, ge=1)
    n_samples: int = Field(default=4, ge=1)
    freeze_alpha: list[int] | Literal["all"] = Field(default_factory=list)

    @field_validator("layers", mode="before")
    @classmethod
    def _parse_layers(cls, value: Any) -> Any:
        return _split_ints(value)

    @field_validator("freeze_alpha", mode="before")
    @classmethod
    def _parse_freeze(cls, value: Any) -> Any:
        if value is None:
            return []
        if isinstance(value, str) and value.strip().lower() == "all":
            return "all"
        return _split_ints(value)

    @model_validator(mode="after")
    def _check_combination(self) -> RunConfig:
        if len(self.layers) < 3:
            raise ValueError("layers needs an input, at least one hidden and an output width")
        if any(width < 1 for width in self.layers):
            raise ValueError(f"layer widths must be positive, got {self.layers}")
        if self.loss is LossKind.CROSS_ENTROPY and self.output is not OutputScaling.SOFTMAX:
            raise ValueError("loss cross_entropy requires output softmax")
        if self.basis is BasisKind.CLASSIC and self.m > len(CLASSIC_MEMBERS):
            raise ValueError(f"basis classic supports M <= {len(CLASSIC_MEMBERS)}")
        if isinstance(self.freeze_alpha, list):
            depth = len(self.layers) - 2
            for index in self.freeze_alpha:
                if not 1 <= index <= depth:
                    raise ValueError(
                        f"freeze_alpha index {index} outside hidden layers 1..{depth}"
                    )
        return self

    @property
    def depth(self) -> int:
        return len(self.layers) - 2

    @property
    def frozen_layers(self) -> list[int]:
        """0-based hidden layers whose coefficients are held fixed."""
        if self.freeze_alpha == "all":
            return list(range(self.depth))
        return sorted({index - 1 for index in self.freeze_alpha})

    def family(self) -> BasisFamily:
        return BasisFamily(kind=self.basis, size=self.m, omega=self.omega)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr_weights=self.lr_weights,
            lr_alpha=self.lr_alpha,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            shuffle=self.shuffle,
            log_every=self.log_every,
        )

    def build_network(self) -> Network:
        """Freshly initialized network seeded by ``seed``."""
        return Network.build(
            widths=self.layers,
            family=self.family(),
            mode=self.mode,
            scaling=self.output,
            variational_output=self.variational_output,
            frozen=self.frozen_layers,
            freeze_output_alpha=self.freeze_alpha == "all",
            seed=self.seed,
        )


def parse_key_values(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw.strip()!r}")
        if key in values:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def _format_validation_error(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(p) for p in error["loc"])
        message = error["msg"]
        parts.append(f"{location}: {message}" if location else message)
    return "; ".join(parts)


def config_from_mapping(values: dict[str, Any]) -> RunConfig:
    """Validate a raw mapping; every problem becomes a ``ConfigError``."""
    try:
        return RunConfig.model_validate(values)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {_format_validation_error(exc)}") from exc


def load_config(path: Path | str) -> RunConfig:
    """Read a config file in either supported format."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such config file: {path}")
    data = path.read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path}: line {bad_utf8_line(data, exc)}: not valid UTF-8") from None
    if path.suffix.lower() in YAML_SUFFIXES:
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        values: dict[str, Any] = {str(k): v for k, v in data.items()}
    else:
        values = dict(parse_key_values(text))
    config = config_from_mapping(values)
    logger.debug("loaded config from %s", path)
    return config
