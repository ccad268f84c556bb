"""Exact finite-bath oracle for the independent oscillator model.

Builds the total Hamiltonian with the completed-square counter-term,
prepares product and correlated total initial states, evolves unitarily
through one eigendecomposition, and reduces. With a handful of modes
there is no true dissipation (recurrences occur), so comparisons stay
below the recurrence estimate 2 pi / Delta omega.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bases import BasisSpec
from .errors import BasisSizeError, SizeCapError
from .operators import Operator, ProductBasis, StateMatrix, partial_trace
from .params import PhysParams

TOTAL_DIM_CAP = 4096
THERMAL_TAIL_CAP = 1e-3


@dataclass(frozen=True)
class BathMode:
    """One reservoir oscillator: frequency and bilinear coupling."""

    omega: float
    kappa_sq: float
    hbar: float = 1.0

    @property
    def kappa(self) -> float:
        return float(np.sqrt(self.kappa_sq))

    @property
    def spring_k(self) -> float:
        """Completed-square spring constant 2 hbar kappa^2 / omega."""
        return 2.0 * self.hbar * self.kappa_sq / self.omega

    @property
    def mass(self) -> float:
        """Completed-square mass 2 hbar kappa^2 / omega^3."""
        return 2.0 * self.hbar * self.kappa_sq / self.omega**3


def ohmic_discretization(C: float, omega_max: float, n_modes: int,
                         hbar: float = 1.0) -> list[BathMode]:
    """Midpoint-rule modes of the linear coupling density.

    kappa^2(omega) g(omega) = (C/2 pi) omega up to the cutoff, so panel j
    carries omega_j = (j - 1/2) d_omega and kappa_j^2 = (C/2 pi) omega_j d_omega.
    """
    if n_modes < 1:
        raise ValueError("need at least one mode")
    dw = omega_max / n_modes
    return [BathMode(omega=(j + 0.5) * dw,
                     kappa_sq=(C / (2.0 * np.pi)) * (j + 0.5) * dw * dw,
                     hbar=hbar)
            for j in range(n_modes)]


@dataclass(frozen=True)
class BathSpec:
    """Discretized bath plus per-mode truncations."""

    modes: tuple
    per_mode_dim: tuple

    def __post_init__(self):
        if len(self.modes) != len(self.per_mode_dim):
            raise ValueError("one truncation per mode required")
        if any(d < 2 for d in self.per_mode_dim):
            raise BasisSizeError("per-mode dimension must be >= 2")

    @classmethod
    def build(cls, params: PhysParams, n_modes: int,
              per_mode_dim: int | Sequence[int] = 5) -> "BathSpec":
        modes = ohmic_discretization(params.C, params.omega_max, n_modes,
                                     hbar=params.hbar)
        if isinstance(per_mode_dim, int):
            dims = (per_mode_dim,) * n_modes
        else:
            dims = tuple(per_mode_dim)
        return cls(modes=tuple(modes), per_mode_dim=dims)

    def check_thermal_truncation(self, params: PhysParams):
        """Refuse truncations whose thermal tail above the cutoff is large."""
        for mode, dm in zip(self.modes, self.per_mode_dim):
            x = np.exp(-params.hbar * mode.omega / params.kT)
            tail = x**dm
            if tail > THERMAL_TAIL_CAP:
                raise BasisSizeError(
                    f"mode at omega={mode.omega:.3g} keeps thermal weight "
                    f"{tail:.2e} above truncation {dm}; enlarge per_mode_dim")

    def dims_with_system(self, d_sys: int) -> tuple:
        return (d_sys,) + tuple(self.per_mode_dim)


def _kron_chain(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for M in mats[1:]:
        out = np.kron(out, M)
    return out


def _embed(op: np.ndarray, slot: int, dims: Sequence[int]) -> np.ndarray:
    mats = [np.eye(d, dtype=complex) for d in dims]
    mats[slot] = op
    return _kron_chain(mats)


def total_basis(system_basis: BasisSpec, bath: BathSpec) -> ProductBasis:
    return ProductBasis(params=system_basis.params,
                        dims=bath.dims_with_system(system_basis.dim))


def total_hamiltonian(H: Operator, q: Operator, bath: BathSpec,
                      params: PhysParams) -> Operator:
    """H_T = H + sum_j hbar w_j (b_j^dag b_j + 1/2) + hbar q sum_j kappa_j (b_j + b_j^dag)
             + q^2 hbar sum_j kappa_j^2 / w_j  (counter-term completes the square)."""
    dims = bath.dims_with_system(H.dim)
    D = int(np.prod(dims))
    if D > TOTAL_DIM_CAP:
        raise SizeCapError(f"total dimension {D} exceeds cap {TOTAL_DIM_CAP}")
    hbar = params.hbar
    HT = _embed(H.mat, 0, dims)
    counter = 0.0
    for j, (mode, dm) in enumerate(zip(bath.modes, bath.per_mode_dim)):
        b = np.diag(np.sqrt(np.arange(1, dm, dtype=float)), 1).astype(complex)
        n_op = b.conj().T @ b
        HT += _embed(hbar * mode.omega * (n_op + 0.5 * np.eye(dm)), j + 1, dims)
        coupling = _embed(hbar * mode.kappa * q.mat, 0, dims)
        coupling = coupling @ _embed(b + b.conj().T, j + 1, dims)
        HT += coupling
        counter += mode.kappa_sq / mode.omega
    HT += _embed(hbar * counter * (q.mat @ q.mat), 0, dims)
    basis = ProductBasis(params=params if not hasattr(H.basis, "params") else H.basis.params,
                         dims=tuple(dims))
    return Operator(basis, HT)


def _func_of_hermitian(mat: np.ndarray, f) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    return (V * f(w)) @ V.conj().T


def thermal_mode_state(dim: int, omega: float, params: PhysParams) -> np.ndarray:
    """Truncated Gibbs state of one bath oscillator."""
    e = np.exp(-params.hbar * omega * (np.arange(dim) + 0.5) / params.kT)
    return np.diag(e / e.sum()).astype(complex)


def product_initial_state(rho0: StateMatrix, bath: BathSpec,
                          params: PhysParams) -> StateMatrix:
    """Uncorrelated start: rho(t0) tensor canonical reservoir state."""
    tr = rho0.mat.trace().real
    if abs(tr - 1.0) > 1e-8:
        raise ValueError(f"rho0 must have unit trace, got {tr}")
    dims = bath.dims_with_system(rho0.dim)
    mats = [rho0.mat] + [thermal_mode_state(dm, mode.omega, params)
                         for mode, dm in zip(bath.modes, bath.per_mode_dim)]
    basis = ProductBasis(params=rho0.basis.params, dims=tuple(dims))
    return StateMatrix(basis, _kron_chain(mats), role="rho")


def correlated_initial_state(sigma0: StateMatrix, H_T: Operator, H: Operator,
                             bath: BathSpec, params: PhysParams) -> StateMatrix:
    """Thermal-sandwich start, positive by construction.

    e^{-H_T/2kT} (e^{H/2kT} sigma0 e^{H/2kT} tensor 1_r) e^{-H_T/2kT},
    normalized. The bare state sigma0 involves system operators only.
    """
    evals = np.linalg.eigvalsh(0.5 * (sigma0.mat + sigma0.mat.conj().T))
    if evals[0] < -1e-10 * max(abs(sigma0.mat.trace().real), 1.0):
        raise ValueError(f"sigma0 must be positive, min eig {evals[0]:.3e}")
    dims = bath.dims_with_system(sigma0.dim)
    kT2 = 2.0 * params.kT
    ws = np.linalg.eigvalsh(0.5 * (H.mat + H.mat.conj().T))
    Es = _func_of_hermitian(H.mat, lambda w: np.exp((w - ws.min()) / kT2))
    core = _embed(Es @ sigma0.mat @ Es, 0, dims)
    wT = np.linalg.eigvalsh(0.5 * (H_T.mat + H_T.mat.conj().T))
    ET = _func_of_hermitian(H_T.mat, lambda w: np.exp(-(w - wT.min()) / kT2))
    rT = ET @ core @ ET
    rT = 0.5 * (rT + rT.conj().T)
    basis = ProductBasis(params=sigma0.basis.params, dims=tuple(dims))
    return StateMatrix(basis, rT / rT.trace().real, role="rho")


def exact_reduce(rho_T0: StateMatrix, H_T: Operator, times: Sequence[float],
                 system_basis: BasisSpec | None = None) -> list[StateMatrix]:
    """rho(t) = Tr_r[e^{-i H_T t/hbar} rho_T(0) e^{+i H_T t/hbar}].

    One eigendecomposition of H_T is reused across all sample times.
    """
    dims = H_T.basis.dims if isinstance(H_T.basis, ProductBasis) else (H_T.dim,)
    if H_T.dim > TOTAL_DIM_CAP:
        raise SizeCapError(f"total dimension {H_T.dim} exceeds cap {TOTAL_DIM_CAP}")
    hbar = rho_T0.basis.params.hbar
    w, V = np.linalg.eigh(0.5 * (H_T.mat + H_T.mat.conj().T))
    r_eig = V.conj().T @ rho_T0.mat @ V
    out = []
    for t in times:
        phase = np.exp(-1j * w * t / hbar)
        rt = V @ ((phase[:, None] * r_eig) * phase.conj()[None, :]) @ V.conj().T
        red = partial_trace(StateMatrix(rho_T0.basis, rt, role="unnormalized"),
                            dims, keep=0, target_basis=system_basis)
        mat = 0.5 * (red.mat + red.mat.conj().T)
        basis = system_basis if system_basis is not None else red.basis
        out.append(StateMatrix(basis, mat / mat.trace().real, role="rho"))
    return out
