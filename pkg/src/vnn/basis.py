"""Basis function families for variational activations.

A family is an ordered, finite list of scalar functions f_1..f_M together with
their analytic first derivatives. Member indices are 1-based in the public
helpers (``eval_basis``/``eval_basis_deriv``) and rows of ``matrix`` are in the
same order.

Index map per family:

* ``fourier``: f_1 = 1, then f_2k = sin(k*omega*x), f_2k+1 = cos(k*omega*x).
* ``polynomial``: f_i = x**(i - 1).
* ``classic``: [identity, tanh, logistic sigmoid, rectifier], M <= 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import numpy.typing as npt

from vnn.errors import BasisError

FloatArray = npt.NDArray[np.float64]

CLASSIC_MEMBERS = ("identity", "tanh", "sigmoid", "relu")


class BasisKind(str, Enum):
    """Supported basis families."""

    FOURIER = "fourier"
    POLYNOMIAL = "polynomial"
    CLASSIC = "classic"


def _sigmoid(x: FloatArray) -> FloatArray:
    # tanh form stays finite for any finite input
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True)
class BasisFamily:
    """An ordered finite family of basis functions."""

    kind: BasisKind
    size: int
    omega: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", BasisKind(self.kind))
        if self.size < 1:
            raise BasisError(f"basis size M must be >= 1, got {self.size}")
        if self.kind is BasisKind.CLASSIC and self.size > len(CLASSIC_MEMBERS):
            raise BasisError(f"classic family supports M <= 4, got {self.size}")
        if self.kind is BasisKind.FOURIER and not (
            math.isfinite(self.omega) and self.omega > 0
        ):
            raise BasisError(f"fourier omega must be finite and > 0, got {self.omega}")

    def _check_index(self, i: int) -> None:
        if not 1 <= i <= self.size:
            raise BasisError(f"basis index {i} out of range 1..{self.size}")

    def member_name(self, i: int) -> str:
        """Human-readable name of member ``i`` (1-based)."""
        self._check_index(i)
        if self.kind is BasisKind.CLASSIC:
            return CLASSIC_MEMBERS[i - 1]
        if self.kind is BasisKind.POLYNOMIAL:
            return f"x^{i - 1}"
        if i == 1:
            return "1"
        k = i // 2
        return f"{'sin' if i % 2 == 0 else 'cos'}({k}wx)"

    def values(self, i: int, x: FloatArray) -> FloatArray:
        """Evaluate member ``i`` elementwise on ``x``."""
        self._check_index(i)
        x = np.asarray(x, dtype=np.float64)
        if self.kind is BasisKind.FOURIER:
            if i == 1:
                return np.ones_like(x)
            k = i // 2
            if i % 2 == 0:
                return np.sin(k * self.omega * x)
            return np.cos(k * self.omega * x)
        if self.kind is BasisKind.POLYNOMIAL:
            return np.power(x, i - 1)
        member = CLASSIC_MEMBERS[i - 1]
        if member == "identity":
            return x.copy()
        if member == "tanh":
            return np.tanh(x)
        if member == "sigmoid":
            return _sigmoid(x)
        return np.maximum(x, 0.0)

    def derivatives(self, i: int, x: FloatArray) -> FloatArray:
        """Evaluate df_i/dx elementwise on ``x``. The rectifier has slope 0 at 0."""
        self._check_index(i)
        x = np.asarray(x, dtype=np.float64)
        if self.kind is BasisKind.FOURIER:
            if i == 1:
                return np.zeros_like(x)
            k = i // 2
            scale = k * self.omega
            if i % 2 == 0:
                return scale * np.cos(scale * x)
            return -scale * np.sin(scale * x)
        if self.kind is BasisKind.POLYNOMIAL:
            if i == 1:
                return np.zeros_like(x)
            return (i - 1) * np.power(x, i - 2)
        member = CLASSIC_MEMBERS[i - 1]
        if member == "identity":
            return np.ones_like(x)
        if member == "tanh":
            t = np.tanh(x)
            return 1.0 - t * t
        if member == "sigmoid":
            s = _sigmoid(x)
            return s * (1.0 - s)
        return np.where(x > 0.0, 1.0, 0.0)

    def matrix(self, nets: FloatArray) -> FloatArray:
        """Basis matrix with entry (i, j) = f_i(nets_j), shape (M, len(nets))."""
        nets = np.asarray(nets, dtype=np.float64)
        return np.stack([self.values(i, nets) for i in range(1, self.size + 1)])

    def derivative_matrix(self, nets: FloatArray) -> FloatArray:
        """Entry (i, j) = f_i'(nets_j), shape (M, len(nets))."""
        nets = np.asarray(nets, dtype=np.float64)
        return np.stack([self.derivatives(i, nets) for i in range(1, self.size + 1)])

    def identity_index(self) -> int | None:
        """1-based index of the member closest to the identity map, if any."""
        if self.kind is BasisKind.CLASSIC:
            return 1
        return 2 if self.size >= 2 else None

    def describe(self) -> dict[str, object]:
        """Descriptor written into checkpoint headers, in header order."""
        return {"basis": self.kind.value, "M": self.size, "omega": self.omega}


def eval_basis(family: BasisFamily, i: int, x: float) -> float:
    """Return f_i(x)."""
    return float(family.values(i, np.array([x], dtype=np.float64))[0])


def eval_basis_deriv(family: BasisFamily, i: int, x: float) -> float:
    """Return f_i'(x), computed analytically."""
    return float(family.derivatives(i, np.array([x], dtype=np.float64))[0])


def basis_matrix(family: BasisFamily, nets: FloatArray) -> FloatArray:
    """Return the M x m matrix [f_i(nets_j)]."""
    return family.matrix(nets)
