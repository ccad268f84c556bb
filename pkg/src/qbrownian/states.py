"""Initial-state constructors: squeezed/displaced Gaussians and number states."""
from __future__ import annotations

import numpy as np

from .bases import BasisSpec, FockBasis
from .errors import RepresentationError
from .operators import Operator, StateMatrix, operator_function
from .params import PhysParams


def displacement(q: Operator, p: Operator, mean_q: float, mean_p: float,
                 hbar: float) -> Operator:
    """Unitary shifting <q> by mean_q and <p> by mean_p."""
    K = Operator(q.basis, (mean_p * q.mat - mean_q * p.mat) / hbar)
    return operator_function(K, lambda x: np.exp(1j * x))


def gaussian_state(q: Operator, p: Operator, params: PhysParams,
                   mean_q: float = 0.0, mean_p: float = 0.0,
                   var_q: float | None = None, squeeze: float = 0.0,
                   omega_ref: float = 1.0) -> StateMatrix:
    """Pure minimum-uncertainty Gaussian, displaced.

    var_q wins if given; otherwise var_q = (hbar/2 m omega_ref) e^{-2 squeeze}.
    Built as the ground state of a squeezed oscillator, so it is exact on
    the truncated basis up to tail weight.
    """
    if var_q is None:
        var_q = params.hbar / (2.0 * params.m * omega_ref) * np.exp(-2.0 * squeeze)
    if var_q <= 0:
        raise ValueError("var_q must be positive")
    w_s = params.hbar / (2.0 * params.m * var_q)
    Hs = Operator(q.basis, p.mat @ p.mat / (2.0 * params.m)
                  + 0.5 * params.m * w_s**2 * (q.mat @ q.mat))
    w, V = np.linalg.eigh(0.5 * (Hs.mat + Hs.mat.conj().T))
    psi = V[:, 0]
    mat = np.outer(psi, psi.conj())
    if mean_q != 0.0 or mean_p != 0.0:
        D = displacement(q, p, mean_q, mean_p, params.hbar)
        mat = D.mat @ mat @ D.mat.conj().T
    mat = 0.5 * (mat + mat.conj().T)
    return StateMatrix(q.basis, mat / mat.trace().real, role="sigma")


def fock_state(basis: BasisSpec, n: int) -> StateMatrix:
    """Number-state projector |n><n| on a Fock basis."""
    if not isinstance(basis, FockBasis):
        raise RepresentationError("fock_state needs a Fock basis")
    if not 0 <= n < basis.n:
        raise ValueError(f"level {n} outside truncation {basis.n}")
    mat = np.zeros((basis.n, basis.n), dtype=complex)
    mat[n, n] = 1.0
    return StateMatrix(basis, mat, role="rho")
