"""Variational activation functions F(x) = sum_i alpha_i f_i(x)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from vnn.basis import BasisFamily, BasisKind, FloatArray
from vnn.errors import ShapeError


class ActivationMode(str, Enum):
    """Whether coefficients are shared by a layer or owned by each neuron."""

    LAYER = "layer"
    NEURON = "neuron"


@dataclass
class VariationalActivation:
    """Trainable linear combination of basis functions.

    ``coeffs`` has shape (M, 1) in layer mode and (M, width) in neuron mode,
    column j holding the coefficients of neuron j.
    """

    family: BasisFamily
    mode: ActivationMode
    coeffs: FloatArray
    width: int

    def __post_init__(self):
        self.mode = ActivationMode(self.mode)
        self.coeffs = np.array(self.coeffs, dtype=np.float64)
        if self.coeffs.ndim == 1:
            self.coeffs = self.coeffs.reshape(-1, 1)
        if self.width < 1:
            raise ShapeError(f"activation width must be >= 1, got {self.width}")
        expected = (self.family.size, self.columns)
        if self.coeffs.shape != expected:
            raise ShapeError(
                f"coefficients have shape {self.coeffs.shape}, expected {expected} "
                f"for {self.mode.value} mode"
            )
        if not np.all(np.isfinite(self.coeffs)):
            raise ShapeError("coefficients must be finite")

    @property
    def columns(self) -> int:
        return 1 if self.mode is ActivationMode.LAYER else self.width

    @classmethod
    def initial(
        cls,
        family: BasisFamily,
        mode: ActivationMode | str,
        width: int,
        rng: np.random.Generator,
    ) -> VariationalActivation:
        """Coefficients that start near a conventional activation.

        Classic families start one-hot on tanh. Other families draw every
        coefficient from U[-0.5/M, 0.5/M] and set the identity-like member
        (x for polynomial, sin(wx)/w for fourier) to 1.
        """
        mode = ActivationMode(mode)
        columns = 1 if mode is ActivationMode.LAYER else width
        m = family.size
        if family.kind is BasisKind.CLASSIC:
            coeffs = np.zeros((m, columns))
            coeffs[1 if m >= 2 else 0, :] = 1.0
        else:
            bound = 0.5 / m
            coeffs = rng.uniform(-bound, bound, size=(m, columns))
            ident = family.identity_index()
            if ident is not None:
                scale = 1.0 / family.omega if family.kind is BasisKind.FOURIER else 1.0
                coeffs[ident - 1, :] = scale
        return cls(family=family, mode=mode, coeffs=coeffs, width=width)

    @classmethod
    def one_hot(
        cls, family: BasisFamily, mode: ActivationMode | str, width: int, index: int
    ) -> VariationalActivation:
        """Activation equal to the single member ``index`` (1-based)."""
        mode = ActivationMode(mode)
        columns = 1 if mode is ActivationMode.LAYER else width
        coeffs = np.zeros((family.size, columns))
        coeffs[index - 1, :] = 1.0
        return cls(family=family, mode=mode, coeffs=coeffs, width=width)

    def _check(self, nets: FloatArray) -> FloatArray:
        nets = np.asarray(nets, dtype=np.float64)
        if nets.shape != (self.width,):
            raise ShapeError(f"expected {self.width} pre-activations, got shape {nets.shape}")
        return nets

    def _broadcast(self) -> FloatArray:
        # identical arithmetic for both modes: neuron columns that are all equal
        # reproduce the layer-mode result bitwise
        return np.broadcast_to(self.coeffs, (self.family.size, self.width))

    def activate(self, nets: FloatArray) -> FloatArray:
        """Return F_j(nets_j) for every neuron j."""
        nets = self._check(nets)
        return np.sum(self._broadcast() * self.family.matrix(nets), axis=0)

    def activate_deriv(self, nets: FloatArray) -> FloatArray:
        """Return dF_j/dnet_j for every neuron j."""
        nets = self._check(nets)
        return np.sum(self._broadcast() * self.family.derivative_matrix(nets), axis=0)

    def copy(self) -> VariationalActivation:
        return VariationalActivation(
            family=self.family, mode=self.mode, coeffs=self.coeffs.copy(), width=self.width
        )


def activate(act: VariationalActivation, nets: FloatArray) -> FloatArray:
    """Evaluate a variational activation on a vector of pre-activations."""
    return act.activate(nets)


def activate_deriv(act: VariationalActivation, nets: FloatArray) -> FloatArray:
    """Evaluate the derivative of a variational activation."""
    return act.activate_deriv(nets)
