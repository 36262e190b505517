"""Variational neural networks with trainable basis-expansion activations."""

__version__ = "0.1.0"
