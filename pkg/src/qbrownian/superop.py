"""Linear maps on density-like matrices and their dense realizations.

Vectorization is column-stacking throughout: vec(M) stacks the columns of
M, so vec(A X B) = (B^T kron A) vec(X). Mixing conventions is the classic
silent-corruption bug here, so the convention is fixed once and guarded
by round-trip tests.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .bases import BasisSpec
from .errors import BasisMismatchError, ConditioningError, SizeCapError
from .operators import Operator, StateMatrix, ensure_same_basis
from .params import PhysParams

SUPEROP_DIM_CAP = 4096  # largest allowed d^2 for dense superoperator matrices
LINDBLAD_WEIGHT_IMAG_TOL = 1e-12


def vec(mat: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return mat.reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return v.reshape((dim, dim), order="F")


def dissipator_bracket(A, rho, B):
    """The three-slot combination B A^dag rho + rho B A^dag - 2 A^dag rho B.

    Traceless for every A, B, rho; Hermitian output for B = A and
    Hermitian rho. Accepts Operators/StateMatrix or bare arrays.
    """
    if isinstance(A, Operator):
        ensure_same_basis(A, B)
        if isinstance(rho, (Operator, StateMatrix)):
            ensure_same_basis(A, rho)
    Am = A.mat if isinstance(A, Operator) else A
    Bm = B.mat if isinstance(B, Operator) else B
    rm = rho.mat if isinstance(rho, (Operator, StateMatrix)) else rho
    BAd = Bm @ Am.conj().T
    out = BAd @ rm + rm @ BAd - 2.0 * Am.conj().T @ rm @ Bm
    if isinstance(rho, StateMatrix):
        return rho.with_mat(out, role="unnormalized")
    return out


@dataclass(frozen=True)
class BracketTerm:
    """One dissipative term sigma -> -weight * {A, sigma, B}.

    The weight may be complex: the standard Brownian equation carries
    cross terms with imaginary coefficients. Lindblad form requires B = A
    and a nonnegative real weight.
    """

    weight: complex
    A: Operator
    B: Operator


@dataclass
class Generator:
    """Structured linear map: Hamiltonian-like term plus weighted brackets.

    Action: sigma -> (K sigma - sigma K^dag)/(i hbar) - sum_j w_j {A_j, sigma, B_j}.
    K may be non-Hermitian (the free-particle bare-state equation needs
    that); trace is then not conserved, which is monitored, not forbidden.
    """

    basis: BasisSpec
    K: Operator | None = None
    brackets: tuple = ()
    hbar: float = 1.0

    def __post_init__(self):
        self.brackets = tuple(self.brackets)
        if self.K is not None and self.K.basis != self.basis:
            raise BasisMismatchError("K lives on a different basis")
        for t in self.brackets:
            if t.A.basis != self.basis or t.B.basis != self.basis:
                raise BasisMismatchError("bracket operators on a different basis")

    def apply_array(self, sigma: np.ndarray) -> np.ndarray:
        out = np.zeros_like(sigma, dtype=complex)
        if self.K is not None:
            Km = self.K.mat
            out += (Km @ sigma - sigma @ Km.conj().T) / (1j * self.hbar)
        for t in self.brackets:
            out -= t.weight * dissipator_bracket(t.A.mat, sigma, t.B.mat)
        return out

    def __call__(self, sigma):
        if isinstance(sigma, StateMatrix):
            if sigma.basis != self.basis:
                raise BasisMismatchError("state on a different basis")
            return sigma.with_mat(self.apply_array(sigma.mat), role="unnormalized")
        return self.apply_array(np.asarray(sigma, dtype=complex))

    def is_lindblad_form(self) -> bool:
        """K Hermitian (or absent) and every term = A with real weight >= 0."""
        if self.K is not None and not self.K.is_hermitian(rtol=1e-10):
            return False
        for t in self.brackets:
            w = complex(t.weight)
            if abs(w.imag) > LINDBLAD_WEIGHT_IMAG_TOL * max(1.0, abs(w)) or w.real < 0:
                return False
            if np.abs(t.A.mat - t.B.mat).max() > 1e-12 * max(1.0, np.abs(t.A.mat).max()):
                return False
        return True

    def to_matrix(self, cap: int = SUPEROP_DIM_CAP) -> "SuperoperatorMatrix":
        return to_matrix(self, cap=cap)


@dataclass
class SuperoperatorMatrix:
    """Dense d^2 x d^2 matrix acting on column-stacked states."""

    basis: BasisSpec
    mat: np.ndarray

    def __post_init__(self):
        self.mat = np.asarray(self.mat, dtype=complex)
        d2 = self.basis.dim ** 2
        if self.mat.shape != (d2, d2):
            raise BasisMismatchError(
                f"superoperator shape {self.mat.shape} != ({d2}, {d2})")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def apply_array(self, sigma: np.ndarray) -> np.ndarray:
        return unvec(self.mat @ vec(sigma), self.dim)

    def __call__(self, sigma):
        if isinstance(sigma, StateMatrix):
            return sigma.with_mat(self.apply_array(sigma.mat), role="unnormalized")
        return self.apply_array(np.asarray(sigma, dtype=complex))

    def compose(self, other: "SuperoperatorMatrix") -> "SuperoperatorMatrix":
        return SuperoperatorMatrix(self.basis, self.mat @ other.mat)


def _check_cap(dim: int, cap: int):
    if dim * dim > cap:
        raise SizeCapError(
            f"dense superoperator needs d^2 = {dim*dim} > cap {cap}")


def left_mul(A: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(A.shape[0]), A)


def right_mul(A: np.ndarray) -> np.ndarray:
    return np.kron(A.T, np.eye(A.shape[0]))


def bracket_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Dense matrix of sigma -> {A, sigma, B} under column stacking."""
    BAd = B @ A.conj().T
    return left_mul(BAd) + right_mul(BAd) - 2.0 * np.kron(B.T, A.conj().T)


def to_matrix(G, cap: int = SUPEROP_DIM_CAP) -> SuperoperatorMatrix:
    """Dense superoperator matrix of a Generator or generator-like map."""
    d = G.basis.dim
    _check_cap(d, cap)
    if isinstance(G, Generator):
        M = np.zeros((d * d, d * d), dtype=complex)
        if G.K is not None:
            Km = G.K.mat
            M += (left_mul(Km) - right_mul(Km.conj().T)) / (1j * G.hbar)
        for t in G.brackets:
            M -= t.weight * bracket_matrix(t.A.mat, t.B.mat)
        return SuperoperatorMatrix(G.basis, M)
    return matrix_from_apply(G.apply_array, G.basis, cap=cap)


def matrix_from_apply(apply_fn: Callable[[np.ndarray], np.ndarray],
                      basis: BasisSpec, cap: int = SUPEROP_DIM_CAP) -> SuperoperatorMatrix:
    """Build the dense matrix of any linear map by applying it columnwise."""
    d = basis.dim
    _check_cap(d, cap)
    M = np.empty((d * d, d * d), dtype=complex)
    E = np.zeros((d, d), dtype=complex)
    for col in range(d * d):
        i, j = col % d, col // d
        E[i, j] = 1.0
        M[:, col] = vec(apply_fn(E))
        E[i, j] = 0.0
    return SuperoperatorMatrix(basis, M)


def superop_exp(M: SuperoperatorMatrix, t: float) -> SuperoperatorMatrix:
    """Matrix exponential e^{t M} (scaling-and-squaring Pade)."""
    if not np.isfinite(t):
        raise ValueError(f"propagation time must be finite, got {t}")
    if t == 0.0:
        return SuperoperatorMatrix(M.basis, np.eye(M.mat.shape[0], dtype=complex))
    out = scipy.linalg.expm(t * M.mat)
    if not np.all(np.isfinite(out)):
        raise OverflowError(
            f"exponential overflowed; ||tM|| = {np.abs(t * M.mat).max():.3e}")
    return SuperoperatorMatrix(M.basis, out)


# ---------------------------------------------------------------------------
# thermal-sandwich similarity transform
# ---------------------------------------------------------------------------

CONDITION_CAP = 1e12


@dataclass
class SandwichMap:
    """Congruence sigma -> E sigma E with E = e^{H/2kT} (or its inverse)."""

    basis: BasisSpec
    E: np.ndarray
    E_inv: np.ndarray

    @classmethod
    def from_hamiltonian(cls, H: Operator, params: PhysParams) -> "SandwichMap":
        w, V = np.linalg.eigh(H.hermitized(rtol=1e-10).mat)
        half = (w - w.min()) / (2.0 * params.kT)
        cond = np.exp(2.0 * (half.max() - half.min()))
        if cond > CONDITION_CAP:
            raise ConditioningError(
                "e^{H/2kT} condition number "
                f"{cond:.2e} exceeds {CONDITION_CAP:.0e}; spectral range "
                f"[{w.min():.3g}, {w.max():.3g}] at kT = {params.kT:.3g}")
        E = (V * np.exp(half)) @ V.conj().T
        E_inv = (V * np.exp(-half)) @ V.conj().T
        return cls(H.basis, E, E_inv)

    def forward_array(self, sigma: np.ndarray) -> np.ndarray:
        return self.E @ sigma @ self.E

    def inverse_array(self, sigma: np.ndarray) -> np.ndarray:
        return self.E_inv @ sigma @ self.E_inv

    def forward_matrix(self) -> np.ndarray:
        return np.kron(self.E.T, self.E)

    def inverse_matrix(self) -> np.ndarray:
        return np.kron(self.E_inv.T, self.E_inv)


@dataclass
class TildeMap:
    """Similarity-transformed generator sigma -> S^-1(G(S(sigma))).

    S is the thermal congruence; the transform leaves the spectrum of G
    unchanged and turns the bare dissipator into the one driving the
    bare-state equation of motion.
    """

    inner: Generator
    sandwich: SandwichMap

    @property
    def basis(self) -> BasisSpec:
        return self.inner.basis

    def apply_array(self, sigma: np.ndarray) -> np.ndarray:
        return self.sandwich.inverse_array(
            self.inner.apply_array(self.sandwich.forward_array(sigma)))

    def __call__(self, sigma):
        if isinstance(sigma, StateMatrix):
            return sigma.with_mat(self.apply_array(sigma.mat), role="unnormalized")
        return self.apply_array(np.asarray(sigma, dtype=complex))

    def to_matrix(self, cap: int = SUPEROP_DIM_CAP) -> SuperoperatorMatrix:
        d = self.basis.dim
        _check_cap(d, cap)
        Gm = to_matrix(self.inner, cap=cap).mat
        return SuperoperatorMatrix(
            self.basis, self.sandwich.inverse_matrix() @ Gm @ self.sandwich.forward_matrix())


@dataclass
class SumMap:
    """Sum of generator-like maps sharing one basis."""

    terms: tuple

    def __post_init__(self):
        self.terms = tuple(self.terms)
        ensure_same_basis(*self.terms)

    @property
    def basis(self) -> BasisSpec:
        return self.terms[0].basis

    def apply_array(self, sigma: np.ndarray) -> np.ndarray:
        out = self.terms[0].apply_array(sigma)
        for t in self.terms[1:]:
            out = out + t.apply_array(sigma)
        return out

    def __call__(self, sigma):
        if isinstance(sigma, StateMatrix):
            return sigma.with_mat(self.apply_array(sigma.mat), role="unnormalized")
        return self.apply_array(np.asarray(sigma, dtype=complex))

    def to_matrix(self, cap: int = SUPEROP_DIM_CAP) -> SuperoperatorMatrix:
        mats = [t.to_matrix(cap=cap).mat for t in self.terms]
        return SuperoperatorMatrix(self.basis, sum(mats))


def tilde_transform(G: Generator, H: Operator, params: PhysParams) -> TildeMap:
    """Wrap G in the thermal-sandwich similarity defined by H and kT."""
    ensure_same_basis(G, H)
    return TildeMap(inner=G, sandwich=SandwichMap.from_hamiltonian(H, params))


# ---------------------------------------------------------------------------
# complete-positivity certificate
# ---------------------------------------------------------------------------

CP_EIG_RTOL = 1e-8


def choi_matrix(M: SuperoperatorMatrix) -> np.ndarray:
    """Choi matrix J = sum_{rc} |r><c| (x) Phi(|r><c|) of the map Phi.

    Phi is completely positive iff J is positive semidefinite; a
    Hermiticity-preserving Phi gives Hermitian J.
    """
    d = M.dim
    T = M.mat.reshape((d, d, d, d), order="F")  # T[m, n, r, c] = <m|Phi(E_rc)|n*>
    return T.transpose(2, 0, 3, 1).reshape((d * d, d * d))


def is_completely_positive(M: SuperoperatorMatrix,
                           rtol: float = CP_EIG_RTOL) -> tuple[bool, float]:
    """CP verdict and minimum Choi eigenvalue.

    Reported non-CP only if min eig < -rtol * |Choi trace|, robust to roundoff.
    """
    J = choi_matrix(M)
    J = 0.5 * (J + J.conj().T)
    evals = np.linalg.eigvalsh(J)
    thresh = rtol * max(abs(np.trace(J).real), 1.0)
    return bool(evals[0] >= -thresh), float(evals[0])
