"""Physical parameters of the system-bath model.

All formulas keep their symbolic form, so any consistent unit system
works; hbar and k default to 1 (natural units).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PhysParams:
    """Primary constants plus derived quantities used throughout.

    C is the environmental coupling strength entering the dissipator
    -(C*kT/2hbar){q, . ,q}; omega_max is the bath high-frequency cutoff.
    """

    hbar: float = 1.0
    k: float = 1.0
    m: float = 1.0
    T: float = 1.0
    C: float = 0.0
    omega_max: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "k", "m", "T", "omega_max"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")
        if not (np.isfinite(self.C) and self.C >= 0):
            raise ValueError(f"C must be finite and >= 0, got {self.C}")

    @property
    def kT(self) -> float:
        return self.k * self.T

    @property
    def gamma(self) -> float:
        """Momentum-admixture length of the transformed dissipator, hbar/2mkT."""
        return self.hbar / (2.0 * self.m * self.kT)

    @property
    def eta(self) -> float:
        """Strength of the coherence-suppression map, hbar^2 omega_max / 4 pi (kT)^2."""
        return self.hbar**2 * self.omega_max / (4.0 * np.pi * self.kT**2)

    @property
    def mbar_inv(self) -> complex:
        """Complex inverse mass 1/m + i C hbar^2 / (2 kT m^2)."""
        return 1.0 / self.m + 1j * self.C * self.hbar**2 / (2.0 * self.kT * self.m**2)

    @property
    def mbar(self) -> complex:
        return 1.0 / self.mbar_inv

    def with_updates(self, **kwargs) -> "PhysParams":
        """Copy with some primary fields replaced."""
        fields = dict(hbar=self.hbar, k=self.k, m=self.m, T=self.T,
                      C=self.C, omega_max=self.omega_max)
        fields.update(kwargs)
        return PhysParams(**fields)
