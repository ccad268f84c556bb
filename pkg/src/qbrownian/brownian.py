"""Concrete quantum Brownian generators and the positive-evolution pipeline.

Builds the standard (positivity-violating) Brownian equation, the bare
position dissipator, the thermal-sandwich bare-state generator and its
explicit free-particle form, the coherence-suppression map and its
inverse, and the full normalized evolution assembled from them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bases import BasisSpec, FockBasis, GridBasis
from .errors import (DomainViolationError, IllPosedError, NormalizationError,
                     PositivityError, RepresentationError)
from .operators import (Operator, StateMatrix, build_fock_operators,
                        build_grid_operators, ensure_same_basis,
                        operator_function)
from .params import PhysParams
from .superop import (BracketTerm, Generator, SumMap, superop_exp,
                      tilde_transform, to_matrix)

ETA_INVERSE_AMPLIFICATION_CAP = 1e12


def canonical_ops(basis: BasisSpec, params: PhysParams) -> dict:
    """q, p for either basis kind."""
    if isinstance(basis, FockBasis):
        return build_fock_operators(basis, params)
    if isinstance(basis, GridBasis):
        return build_grid_operators(basis, params)
    raise RepresentationError(f"no canonical pair on {type(basis).__name__}")


def standard_qbe_generator(params: PhysParams, q: Operator, p: Operator,
                           H: Operator) -> Generator:
    """The standard quantum Brownian equation, term for term.

    d rho/dt = [H', rho]/(i hbar) - (C kT/2 hbar){q, rho, q}
               - (i C/8m){p, rho, q} + (i C/8m){q, rho, p},
    with H' taken equal to H (any Hermitian choice leaves purity dynamics
    unchanged; see tests).
    """
    ensure_same_basis(q, p, H)
    c_qq = params.C * params.kT / (2.0 * params.hbar)
    c_x = 1j * params.C / (8.0 * params.m)
    return Generator(
        basis=q.basis,
        K=H,
        brackets=(
            BracketTerm(c_qq, q, q),
            BracketTerm(+c_x, p, q),
            BracketTerm(-c_x, q, p),
        ),
        hbar=params.hbar,
    )


def brownian_dissipator(params: PhysParams, q: Operator) -> Generator:
    """Pure position dissipator -(C kT/2 hbar){q, . , q}; Lindblad form."""
    w = params.C * params.kT / (2.0 * params.hbar)
    return Generator(basis=q.basis, K=None,
                     brackets=(BracketTerm(w, q, q),), hbar=params.hbar)


def commutator_generator(H: Operator, params: PhysParams) -> Generator:
    """Reversible part [H, .]/(i hbar)."""
    return Generator(basis=H.basis, K=H, brackets=(), hbar=params.hbar)


# ---------------------------------------------------------------------------
# coherence-suppression map e^{eta L_ir} and its inverse
# ---------------------------------------------------------------------------

def _eta_rate(params: PhysParams) -> float:
    return params.eta * params.C * params.kT / (2.0 * params.hbar)


def eta_kernel_multiplier(basis: GridBasis, params: PhysParams,
                          sign: float = -1.0) -> np.ndarray:
    xs = basis.points
    return np.exp(sign * _eta_rate(params) * (xs[:, None] - xs[None, :]) ** 2)


def eta_map(sigma: StateMatrix, params: PhysParams,
            direction: str = "forward", q: Operator | None = None) -> StateMatrix:
    """Apply e^{+eta L_ir} (forward) or its inverse to a state.

    On a grid the map is an exact elementwise Gaussian kernel multiplier;
    on a Fock basis the forward direction exponentiates the dissipator
    (cross-checked against the grid closed form). The inverse is an
    anti-Gaussian amplifier and is only allowed on grids, with a hard
    amplification cap.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError(f"direction must be forward|inverse, got {direction!r}")
    basis = sigma.basis
    if isinstance(basis, GridBasis):
        if direction == "inverse":
            width = basis.x_max - basis.x_min
            log_amp = _eta_rate(params) * width**2
            if log_amp > np.log(ETA_INVERSE_AMPLIFICATION_CAP):
                raise IllPosedError(
                    f"inverse map amplification e^{log_amp:.1f} exceeds "
                    f"{ETA_INVERSE_AMPLIFICATION_CAP:.0e}")
        mult = eta_kernel_multiplier(basis, params,
                                     sign=-1.0 if direction == "forward" else +1.0)
        return sigma.with_mat(mult * sigma.mat, role="unnormalized")
    if isinstance(basis, FockBasis):
        if direction == "inverse":
            raise RepresentationError(
                "inverse coherence map is refused on Fock bases; use a grid")
        if q is None:
            q = build_fock_operators(basis, params)["q"]
        L = to_matrix(brownian_dissipator(params, q))
        prop = superop_exp(L, params.eta)
        return prop(sigma)
    raise RepresentationError(f"no coherence map on {type(basis).__name__}")


# ---------------------------------------------------------------------------
# bare-state generators
# ---------------------------------------------------------------------------

def sigma_generator(H: Operator, params: PhysParams, q: Operator,
                    mode: str = "exact-sandwich"):
    """Generator of the bare-state equation d sigma/dt.

    exact-sandwich: [H, .]/(i hbar) + S^-1 L_ir S with the thermal
    congruence S (the reversible part is invariant under S).

    first-order-gamma: dissipator operator corrected by the leading
    sandwich commutator, A = q + [H, q]/2kT (the q - i gamma p form when
    the kinetic term is present), plus the Hamiltonian completion
    K = H + 2i hbar w c (q - c) with c = [H, q]/2kT and w = C kT/2 hbar.
    For H commuting with q the corrections vanish and the mode returns
    L_rev + L_ir unchanged; for V = 0 it coincides with
    free_particle_sigma_generator up to truncation-corner terms.
    """
    ensure_same_basis(H, q)
    if mode == "exact-sandwich":
        lrev = commutator_generator(H, params)
        ltil = tilde_transform(brownian_dissipator(params, q), H, params)
        return SumMap((lrev, ltil))
    if mode == "first-order-gamma":
        hbar, kT = params.hbar, params.kT
        w = params.C * kT / (2.0 * hbar)
        c = (H.mat @ q.mat - q.mat @ H.mat) / (2.0 * kT)
        Kmat = H.mat + 2j * hbar * w * (c @ (q.mat - c))
        A = Operator(q.basis, q.mat + c)
        return Generator(basis=q.basis, K=Operator(H.basis, Kmat),
                         brackets=(BracketTerm(w, A, A),), hbar=hbar)
    raise ValueError(f"unknown mode {mode!r}")


def free_particle_sigma_generator(params: PhysParams, q: Operator,
                                  p: Operator) -> Generator:
    """Explicit bare-state generator for V = 0.

    d sigma/dt = [p^2/2mbar + (C hbar/4m)(qp+pq) + C hbar^2/4im] sigma/(i hbar)
                 + h.c. - (C kT/2 hbar){q - i gamma p, sigma, q - i gamma p},
    with complex mbar and gamma = hbar/2mkT.
    """
    ensure_same_basis(q, p)
    C, m, hbar, kT, gam = params.C, params.m, params.hbar, params.kT, params.gamma
    d = q.dim
    Kmat = (params.mbar_inv * (p.mat @ p.mat) / 2.0
            + (C * hbar / (4.0 * m)) * (q.mat @ p.mat + p.mat @ q.mat)
            + (C * hbar**2 / (4j * m)) * np.eye(d))
    A = Operator(q.basis, q.mat - 1j * gam * p.mat)
    w = C * kT / (2.0 * hbar)
    return Generator(basis=q.basis, K=Operator(q.basis, Kmat),
                     brackets=(BracketTerm(w, A, A),), hbar=hbar)


def free_particle_trace_rate(params: PhysParams, sigma: StateMatrix,
                             p: Operator) -> complex:
    """Algebraic trace drift of the V = 0 bare-state equation.

    d Tr(sigma)/dt = (C hbar/2m) (Tr(p^2 sigma)/(m kT) - Tr sigma).
    """
    C, m, hbar, kT = params.C, params.m, params.hbar, params.kT
    tr_p2 = np.trace(p.mat @ p.mat @ sigma.mat)
    return (C * hbar / (2.0 * m)) * (tr_p2 / (m * kT) - np.trace(sigma.mat))


def canonical_sigma(H: Operator, params: PhysParams) -> StateMatrix:
    """Gibbs state e^{-H/kT}/Z; stationary point of the full pipeline."""
    w = np.linalg.eigvalsh(H.hermitized(rtol=1e-10).mat)
    shift = w.min()  # subtract ground energy before exponentiating
    g = operator_function(H, lambda x: np.exp(-(x - shift) / params.kT))
    mat = g.mat / g.mat.trace().real
    return StateMatrix(H.basis, mat, role="sigma")


# ---------------------------------------------------------------------------
# positive-evolution pipeline
# ---------------------------------------------------------------------------

@dataclass
class PositiveEvolutionResult:
    """Normalized states rho(t) plus the unnormalized traces D_approx(t)."""

    times: tuple
    states: list
    d_approx: np.ndarray
    sigma_states: list

    def __iter__(self):
        return iter(self.states)


def positive_evolution(sigma0: StateMatrix, params: PhysParams, H: Operator,
                       times: Sequence[float], q: Operator | None = None,
                       integrator=None) -> PositiveEvolutionResult:
    """Evolve the bare state and normalize: rho(t) = e^{eta L_ir} sigma(t) / Tr[...].

    sigma0 must be positive; the bare state itself is never renormalized
    during integration, exactly as the pipeline prescribes.
    """
    from .evolution import IntegratorConfig, conjugated_propagate

    basis = sigma0.basis
    if q is None:
        q = canonical_ops(basis, params)["q"]
    evals = np.linalg.eigvalsh(0.5 * (sigma0.mat + sigma0.mat.conj().T))
    tr0 = sigma0.mat.trace().real
    if evals[0] < -1e-10 * max(abs(tr0), 1.0):
        raise PositivityError(
            f"sigma(0) has eigenvalue {evals[0]:.3e}; pipeline requires a positive start")
    cfg = integrator if integrator is not None else IntegratorConfig(
        sample_times=tuple(times))
    if tuple(cfg.sample_times) != tuple(times):
        cfg = cfg.with_updates(sample_times=tuple(times))
    traj = conjugated_propagate(sigma0, H, params, cfg, q=q)
    if isinstance(basis, GridBasis):
        mult = eta_kernel_multiplier(basis, params, sign=-1.0)
        apply_eta = lambda mat: mult * mat
    else:
        prop = superop_exp(to_matrix(brownian_dissipator(params, q)), params.eta)
        apply_eta = prop.apply_array
    states, d_vals = [], []
    for st in traj.states:
        mat = apply_eta(st.mat)
        mat = 0.5 * (mat + mat.conj().T)
        tr = mat.trace().real
        if tr < 1e-12:
            raise NormalizationError(f"mapped trace {tr:.3e} below 1e-12")
        d_vals.append(tr)
        states.append(StateMatrix(basis, mat / tr, role="rho"))
    return PositiveEvolutionResult(times=tuple(times), states=states,
                                   d_approx=np.array(d_vals),
                                   sigma_states=list(traj.states))


@dataclass
class SigmaInitResult:
    state: StateMatrix
    min_eig: float
    valid: bool


def initialize_sigma_from_rho(rho0: StateMatrix, params: PhysParams) -> SigmaInitResult:
    """Invert the coherence map: sigma(0) proportional to e^{-eta L_ir} rho(0).

    Grid-only (the inverse is an anti-Gaussian multiplier). Raises when
    the result fails positivity: that rho(0) lies outside the restricted
    set of admissible initial states.
    """
    sig = eta_map(rho0, params, "inverse")
    mat = 0.5 * (sig.mat + sig.mat.conj().T)
    tr = mat.trace().real
    if abs(tr) < 1e-12:
        raise NormalizationError("inverse-mapped state has vanishing trace")
    mat = mat / tr
    evals = np.linalg.eigvalsh(mat)
    valid = evals[0] >= -1e-8
    if not valid:
        raise DomainViolationError(
            f"sigma(0) eigenvalue {evals[0]:.3e} < -1e-8: rho(0) outside the "
            "restricted initial-state set")
    return SigmaInitResult(state=StateMatrix(rho0.basis, mat, role="sigma"),
                           min_eig=float(evals[0]), valid=True)
