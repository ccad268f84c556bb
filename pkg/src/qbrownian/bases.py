"""Truncated representations of the system Hilbert space.

Two kinds are supported: a Fock ladder basis (dimension and reference
frequency) and a uniform position grid with periodic spectral momentum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BasisSizeError
from .params import PhysParams


@dataclass(frozen=True)
class BasisSpec:
    """Common interface of FockBasis and GridBasis."""

    params: PhysParams

    @property
    def dim(self) -> int:  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class FockBasis(BasisSpec):
    """Number-state ladder basis of a reference oscillator.

    omega_ref is a representation parameter only; physical results must
    not depend on it (tested by running at two values).
    """

    n: int = 2
    omega_ref: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise BasisSizeError(f"Fock dimension must be >= 2, got {self.n}")
        if not (np.isfinite(self.omega_ref) and self.omega_ref > 0):
            raise ValueError(f"omega_ref must be > 0, got {self.omega_ref}")

    @property
    def dim(self) -> int:
        return self.n


@dataclass(frozen=True)
class GridBasis(BasisSpec):
    """Uniform grid of n points x_j = x_min + j dx, dx = (x_max - x_min)/n.

    The point x_max itself is excluded (periodic convention); states must
    decay well inside the box for the spectral momentum to be meaningful.
    """

    x_min: float = -1.0
    x_max: float = 1.0
    n: int = 4

    def __post_init__(self):
        if self.n < 4:
            raise BasisSizeError(f"grid needs n >= 4 points, got {self.n}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dim(self) -> int:
        return self.n

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def points(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def momenta(self) -> np.ndarray:
        """Allowed grid momenta hbar*k for the periodic spectral derivative."""
        return self.params.hbar * 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
