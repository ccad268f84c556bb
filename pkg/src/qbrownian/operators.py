"""Dense operators and density-like matrices on truncated bases.

Canonical pairs, potentials, operator functions, tensor products, partial
traces, and the Fock <-> grid change of representation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bases import BasisSpec, FockBasis, GridBasis
from .errors import (BasisMismatchError, DomainError, HermiticityError,
                     RepresentationError, ResolutionError)
from .params import PhysParams

HERMITICITY_RTOL = 1e-12
STATE_HERM_RTOL = 1e-10
STATE_TRACE_TOL = 1e-10


def _herm_defect(mat: np.ndarray) -> float:
    """Max |M - M^dag| element over max |M| element (0 for the zero matrix)."""
    scale = np.abs(mat).max()
    if scale == 0.0:
        return 0.0
    return np.abs(mat - mat.conj().T).max() / scale


@dataclass
class Operator:
    """Dense complex matrix tagged with its basis."""

    basis: BasisSpec
    mat: np.ndarray

    def __post_init__(self):
        self.mat = np.asarray(self.mat, dtype=complex)
        d = self.basis.dim
        if self.mat.shape != (d, d):
            raise BasisMismatchError(
                f"matrix shape {self.mat.shape} does not match basis dim {d}")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def dag(self) -> "Operator":
        return Operator(self.basis, self.mat.conj().T)

    def herm_defect(self) -> float:
        return _herm_defect(self.mat)

    def is_hermitian(self, rtol: float = HERMITICITY_RTOL) -> bool:
        return self.herm_defect() <= rtol

    def hermitized(self, rtol: float = HERMITICITY_RTOL) -> "Operator":
        """Symmetrize if within tolerance, else raise."""
        defect = self.herm_defect()
        if defect > rtol:
            raise HermiticityError(f"Hermiticity defect {defect:.3e} above {rtol:.0e}")
        return Operator(self.basis, 0.5 * (self.mat + self.mat.conj().T))

    def _coerce(self, other):
        if isinstance(other, Operator):
            if other.basis != self.basis:
                raise BasisMismatchError("operators on different bases")
            return other.mat
        return other

    def __add__(self, other):
        return Operator(self.basis, self.mat + self._coerce(other))

    def __sub__(self, other):
        return Operator(self.basis, self.mat - self._coerce(other))

    def __mul__(self, scalar):
        return Operator(self.basis, self.mat * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return Operator(self.basis, self.mat @ self._coerce(other))

    def __neg__(self):
        return Operator(self.basis, -self.mat)


def identity(basis: BasisSpec) -> Operator:
    return Operator(basis, np.eye(basis.dim, dtype=complex))


@dataclass
class StateMatrix:
    """Density-like matrix with Hermiticity bookkeeping.

    role 'rho' additionally requires unit trace; role 'sigma' requires
    Hermiticity only (its trace may drift under the bare evolution);
    'unnormalized' is unchecked. Positivity is never an invariant here --
    its violation is a measured outcome.
    """

    basis: BasisSpec
    mat: np.ndarray
    role: str = "unnormalized"

    def __post_init__(self):
        self.mat = np.asarray(self.mat, dtype=complex)
        d = self.basis.dim
        if self.mat.shape != (d, d):
            raise BasisMismatchError(
                f"matrix shape {self.mat.shape} does not match basis dim {d}")
        if self.role not in ("rho", "sigma", "unnormalized"):
            raise ValueError(f"unknown role {self.role!r}")
        if self.role in ("rho", "sigma"):
            defect = _herm_defect(self.mat)
            if defect > STATE_HERM_RTOL:
                raise HermiticityError(
                    f"{self.role} state Hermiticity defect {defect:.3e}")
            self.mat = 0.5 * (self.mat + self.mat.conj().T)
        if self.role == "rho":
            tr = self.mat.trace()
            if abs(tr - 1.0) > STATE_TRACE_TOL:
                raise ValueError(f"rho role requires unit trace, got {tr}")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def trace(self) -> complex:
        return complex(self.mat.trace())

    def herm_defect(self) -> float:
        return _herm_defect(self.mat)

    def with_mat(self, mat: np.ndarray, role: str | None = None) -> "StateMatrix":
        return StateMatrix(self.basis, mat, self.role if role is None else role)


def ensure_same_basis(*objs) -> BasisSpec:
    basis = objs[0].basis
    for o in objs[1:]:
        if o.basis != basis:
            raise BasisMismatchError("objects live on different bases")
    return basis


# ---------------------------------------------------------------------------
# canonical pairs
# ---------------------------------------------------------------------------

def lowering_operator(basis: FockBasis) -> Operator:
    a = np.diag(np.sqrt(np.arange(1, basis.n, dtype=float)), 1).astype(complex)
    return Operator(basis, a)


def build_fock_operators(basis: BasisSpec, params: PhysParams | None = None) -> dict:
    """q, p and the lowering operator on a Fock basis.

    q = sqrt(hbar/2 m w_ref) (a + a^dag), p = i sqrt(hbar m w_ref / 2)(a^dag - a).
    """
    if not isinstance(basis, FockBasis):
        raise RepresentationError("build_fock_operators needs a Fock basis")
    params = basis.params if params is None else params
    a = lowering_operator(basis)
    lq = np.sqrt(params.hbar / (2.0 * params.m * basis.omega_ref))
    lp = np.sqrt(params.hbar * params.m * basis.omega_ref / 2.0)
    q = Operator(basis, lq * (a.mat + a.mat.conj().T))
    p = Operator(basis, 1j * lp * (a.mat.conj().T - a.mat))
    return {"q": q, "p": p, "a": a}


def build_grid_operators(basis: BasisSpec, params: PhysParams | None = None) -> dict:
    """q (diagonal) and p (periodic spectral derivative) on a grid basis."""
    if not isinstance(basis, GridBasis):
        raise RepresentationError("build_grid_operators needs a grid basis")
    n = basis.n
    q = Operator(basis, np.diag(basis.points.astype(complex)))
    F = np.fft.fft(np.eye(n), axis=0) / np.sqrt(n)
    p = Operator(basis, F.conj().T @ np.diag(basis.momenta.astype(complex)) @ F)
    p = p.hermitized(rtol=1e-10)
    return {"q": q, "p": p}


def boundary_mass(state: StateMatrix | Operator, fraction: float = 0.1) -> float:
    """Probability weight in the outer `fraction` of the grid box.

    Used as a decay check for the periodic momentum convention.
    """
    basis = state.basis
    if not isinstance(basis, GridBasis):
        raise RepresentationError("boundary_mass is defined on grid bases")
    pops = np.abs(np.diag(state.mat))
    total = pops.sum()
    if total == 0:
        return 0.0
    edge = max(1, int(round(basis.n * fraction / 2)))
    return float((pops[:edge].sum() + pops[-edge:].sum()) / total)


# ---------------------------------------------------------------------------
# operator functions and potentials
# ---------------------------------------------------------------------------

def operator_function(H: Operator, f: Callable[[np.ndarray], np.ndarray],
                      rtol: float = HERMITICITY_RTOL) -> Operator:
    """U f(Lambda) U^dag for Hermitian H = U Lambda U^dag.

    Always goes through the eigendecomposition, never a series expansion.
    """
    H = H.hermitized(rtol=rtol)
    w, V = np.linalg.eigh(H.mat)
    with np.errstate(all="ignore"):
        fw = np.asarray(f(w), dtype=complex)
    if not np.all(np.isfinite(fw)):
        bad = w[~np.isfinite(fw)]
        raise DomainError(f"function undefined at eigenvalue(s) {bad[:3]}")
    return Operator(H.basis, (V * fw) @ V.conj().T)


def potential_operator(coefficients: Sequence[float], q: Operator) -> Operator:
    """Horner evaluation of V(q) = sum_j c_j q^j for real coefficients."""
    coeffs = [float(c) for c in coefficients]
    if any(not np.isfinite(c) for c in coeffs):
        raise ValueError("potential coefficients must be finite")
    d = q.dim
    out = np.zeros((d, d), dtype=complex)
    for c in reversed(coeffs):
        out = out @ q.mat + c * np.eye(d)
    return Operator(q.basis, out)


@dataclass(frozen=True)
class PotentialSpec:
    """Polynomial system potential; recoilless drops the kinetic term."""

    coefficients: tuple = ()
    recoilless: bool = False

    def __post_init__(self):
        if any(not np.isfinite(c) for c in self.coefficients):
            raise ValueError("potential coefficients must be finite")

    def build(self, q: Operator) -> Operator:
        return potential_operator(self.coefficients, q)


def system_hamiltonian(potential: PotentialSpec, q: Operator, p: Operator,
                       params: PhysParams) -> Operator:
    """H = p^2/2m + V(q), or V(q) alone in the recoilless limit."""
    V = potential.build(q)
    if potential.recoilless:
        return V
    return Operator(q.basis, p.mat @ p.mat / (2.0 * params.m) + V.mat)


# ---------------------------------------------------------------------------
# composite systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductBasis(BasisSpec):
    """Tensor-product basis; dims lists every factor in order."""

    dims: tuple = ()

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))


def tensor_product(A: Operator, B: Operator) -> Operator:
    """Kronecker composite on the product basis."""
    basis = ProductBasis(params=A.basis.params, dims=_factor_dims(A) + _factor_dims(B))
    return Operator(basis, np.kron(A.mat, B.mat))


def _factor_dims(op) -> tuple:
    if isinstance(op.basis, ProductBasis):
        return op.basis.dims
    return (op.basis.dim,)


def partial_trace(rho_T: StateMatrix, dims: Sequence[int], keep: int,
                  target_basis: BasisSpec | None = None) -> StateMatrix:
    """Trace out all factors except `keep` from a state on prod(dims)."""
    dims = tuple(int(d) for d in dims)
    D = int(np.prod(dims))
    if rho_T.mat.shape != (D, D):
        raise BasisMismatchError(
            f"state dim {rho_T.mat.shape[0]} != prod(dims) {D}")
    if not 0 <= keep < len(dims):
        raise ValueError(f"keep index {keep} out of range")
    t = rho_T.mat.reshape(dims + dims)
    n = len(dims)
    for j in reversed([i for i in range(n) if i != keep]):
        t = np.trace(t, axis1=j, axis2=j + n)
        n -= 1
    if target_basis is None:
        target_basis = ProductBasis(params=rho_T.basis.params, dims=(dims[keep],))
    return StateMatrix(target_basis, t, role="unnormalized")


# ---------------------------------------------------------------------------
# Fock <-> grid change of representation
# ---------------------------------------------------------------------------

def hermite_columns(grid: GridBasis, n_max: int, params: PhysParams,
                    omega_ref: float) -> np.ndarray:
    """Matrix of the first n_max oscillator eigenfunctions sampled on the grid.

    Column n holds sqrt(dx) phi_n(x_j) (stable three-term recurrence), so
    columns are orthonormal under plain matrix products whenever the grid
    resolves them.
    """
    xs = grid.points
    xi = xs * np.sqrt(params.m * omega_ref / params.hbar)
    cols = np.zeros((grid.n, n_max))
    cols[:, 0] = np.pi ** -0.25 * np.exp(-xi**2 / 2.0)
    if n_max > 1:
        cols[:, 1] = np.sqrt(2.0) * xi * cols[:, 0]
    for n in range(2, n_max):
        cols[:, n] = (np.sqrt(2.0 / n) * xi * cols[:, n - 1]
                      - np.sqrt((n - 1) / n) * cols[:, n - 2])
    scale = np.sqrt(grid.dx) * (params.m * omega_ref / params.hbar) ** 0.25
    return cols * scale


def basis_change(A: Operator | StateMatrix, to: BasisSpec,
                 resolution_tol: float = 1e-6) -> Operator | StateMatrix:
    """Convert an operator between a Fock basis and a grid basis.

    Conjugates by the rectangular matrix of normalized Hermite functions
    with sqrt(dx) quadrature weights. Raises ResolutionError when the grid
    cannot represent the highest retained Fock state (round-trip check).
    """
    src = A.basis
    if isinstance(src, FockBasis) and isinstance(to, GridBasis):
        B = hermite_columns(to, src.n, src.params, src.omega_ref)
        _check_resolution(B, resolution_tol)
        out = B @ A.mat @ B.conj().T
    elif isinstance(src, GridBasis) and isinstance(to, FockBasis):
        B = hermite_columns(src, to.n, to.params, to.omega_ref)
        _check_resolution(B, resolution_tol)
        out = B.conj().T @ A.mat @ B
    else:
        raise RepresentationError(
            f"no conversion from {type(src).__name__} to {type(to).__name__}")
    if isinstance(A, StateMatrix):
        return StateMatrix(to, out, role="unnormalized")
    return Operator(to, out)


def _check_resolution(B: np.ndarray, tol: float):
    gram_err = np.abs(B.conj().T @ B - np.eye(B.shape[1])).max()
    if gram_err > tol:
        raise ResolutionError(
            f"grid does not resolve the Fock subspace (Gram defect {gram_err:.2e})")
