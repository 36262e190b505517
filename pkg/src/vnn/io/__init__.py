"""Dataset ingestion and serialization.

Datasets are plain CSV: every row holds the features followed by
``n_targets`` target columns. Numbers use a dot decimal separator regardless
of locale.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vnn.basis import FloatArray
from vnn.errors import DataError

logger = logging.getLogger(__name__)

# ASCII decimals with a dot separator; nan and inf match so they are reported as non-finite
NUMBER = re.compile(
    r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?|[+-]?(?:nan|inf(?:inity)?)",
    re.IGNORECASE | re.ASCII,
)


@dataclass
class Dataset:
    """Features (samples x d), targets (samples x k) and optional column names."""

    features: FloatArray
    targets: FloatArray
    columns: list[str] | None = None

    def __post_init__(self):
        if self.features.shape[0] != self.targets.shape[0]:
            raise DataError(
                f"{self.features.shape[0]} feature rows but {self.targets.shape[0]} target rows"
            )

    def __len__(self) -> int:
        return int(self.features.shape[0])

    def as_pair(self) -> tuple[FloatArray, FloatArray]:
        return self.features, self.targets


def bad_utf8_line(data: bytes, exc: UnicodeDecodeError) -> int:
    """1-based line holding the first byte that is not valid UTF-8."""
    return data.count(b"\n", 0, exc.start) + 1


def _parse_field(text: str, line: int, column: int) -> float:
    if not NUMBER.fullmatch(text.strip()):
        raise DataError(f"non-numeric field {text!r}", line=line, column=column)
    value = float(text)
    if not math.isfinite(value):
        raise DataError(f"non-finite field {text!r}", line=line, column=column)
    return value


def load_csv(path: Path | str, n_targets: int, has_header: bool = False) -> Dataset:
    """Parse a numeric CSV whose last ``n_targets`` columns are targets.

    Errors name the 1-based line (and column for bad fields).
    """
    path = Path(path)
    if n_targets < 1:
        raise DataError(f"n_targets must be >= 1, got {n_targets}")
    if not path.is_file():
        raise DataError(f"no such file: {path}")

    rows: list[list[float]] = []
    columns: list[str] | None = None
    width: int | None = None
    data = path.read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError("not valid UTF-8", line=bad_utf8_line(data, exc)) from None

    with io.StringIO(text, newline="") as f:
        for line_no, record in enumerate(csv.reader(f), start=1):
            if not record or all(not field.strip() for field in record):
                continue
            if has_header and columns is None:
                columns = [field.strip() for field in record]
                width = len(columns)
                continue
            if width is None:
                width = len(record)
                if width < n_targets + 1:
                    raise DataError(
                        f"row has {width} fields, need at least {n_targets + 1}", line=line_no
                    )
            elif len(record) != width:
                raise DataError(
                    f"ragged row: {len(record)} fields, expected {width}", line=line_no
                )
            rows.append(
                [_parse_field(text, line_no, col) for col, text in enumerate(record, start=1)]
            )

    if not rows:
        raise DataError(f"no rows in {path}")
    data = np.array(rows, dtype=np.float64)
    logger.debug("loaded %d rows x %d columns from %s", data.shape[0], data.shape[1], path)
    return Dataset(
        features=data[:, :-n_targets].copy(),
        targets=data[:, -n_targets:].copy(),
        columns=columns,
    )


def save_csv(dataset: Dataset, path: Path | str) -> None:
    """Write features then targets per row with 17 significant digits."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if dataset.columns is not None:
            writer.writerow(dataset.columns)
        for x, t in zip(dataset.features, dataset.targets):
            writer.writerow([f"{v:.17g}" for v in (*x, *t)])
