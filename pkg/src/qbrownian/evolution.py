"""Time propagation of states under time-independent generators.

Two interchangeable methods: dense superoperator exponentials (amortized
over sample times) and embedded adaptive Runge-Kutta on the structurally
applied generator. A conjugated shortcut propagates the bare-state
equation through the plain dissipative semigroup.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .bases import FockBasis, GridBasis
from .errors import StiffnessError
from .operators import Operator, StateMatrix, boundary_mass
from .params import PhysParams
from .superop import SUPEROP_DIM_CAP, SandwichMap, superop_exp, to_matrix

BOUNDARY_MASS_WARN = 1e-8

EXPM_FOCK_DIM_DEFAULT = 40

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass(frozen=True)
class IntegratorConfig:
    """Method choice and tolerances for a propagation run."""

    method: str = "auto"  # expm | rk-adaptive | auto
    rtol: float = 1e-8
    atol: float = 1e-12
    max_step: float = np.inf
    sample_times: tuple = (0.0,)

    def __post_init__(self):
        if self.method not in ("expm", "rk-adaptive", "auto"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        ts = tuple(float(t) for t in self.sample_times)
        if len(ts) == 0 or ts[0] < 0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("sample_times must be strictly increasing, starting >= 0")
        object.__setattr__(self, "sample_times", ts)

    def with_updates(self, **kw) -> "IntegratorConfig":
        return replace(self, **kw)


@dataclass
class Trajectory:
    """Sampled states plus optional diagnostics and convergence verdict."""

    times: tuple
    states: list
    diagnostics: list | None = None
    convergence: "ConvergenceVerdict | None" = None

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("one state per sample time required")


def _resolve_method(G, cfg: IntegratorConfig) -> str:
    if cfg.method != "auto":
        return cfg.method
    basis = G.basis
    if isinstance(basis, FockBasis) and basis.dim <= EXPM_FOCK_DIM_DEFAULT:
        return "expm"
    return "rk-adaptive"


def propagate(G, s0: StateMatrix, cfg: IntegratorConfig) -> Trajectory:
    """Propagate s0 under the time-independent generator G, sampling cfg times.

    The first sample time must be the initial instant of the flow (t = 0
    convention): a nonzero first sample is treated as a sample after
    evolving from 0.
    """
    method = _resolve_method(G, cfg)
    if method == "expm":
        traj = _propagate_expm(G, s0, cfg)
    else:
        traj = _propagate_rk(G, s0, cfg)
    _warn_on_boundary_mass(traj)
    return traj


def _warn_on_boundary_mass(traj: Trajectory):
    """Periodic spectral momentum needs decay at the box edges."""
    if not traj.states or not isinstance(traj.states[0].basis, GridBasis):
        return
    worst = max(boundary_mass(st) for st in traj.states)
    if worst > BOUNDARY_MASS_WARN:
        warnings.warn(
            f"grid state carries weight {worst:.2e} in the outer 10% of the "
            "box; periodic momentum may alias (enlarge the box)",
            RuntimeWarning, stacklevel=3)


def _propagate_expm(G, s0: StateMatrix, cfg: IntegratorConfig) -> Trajectory:
    from .superop import unvec, vec

    M = to_matrix(G, cap=SUPEROP_DIM_CAP)
    d = s0.dim
    times = cfg.sample_times
    states = []
    cur = s0.mat.copy()
    prev_t = 0.0
    cache: dict[float, np.ndarray] = {}
    for t in times:
        gap = t - prev_t
        if gap > 0:
            key = round(gap, 15)
            if key not in cache:
                cache[key] = superop_exp(M, gap).mat
            cur = unvec(cache[key] @ vec(cur), d)
        # integrator output is unchecked; Hermiticity drift stays visible
        states.append(s0.with_mat(cur.copy(), role="unnormalized"))
        prev_t = t
    return Trajectory(times=times, states=states)


def _rk_rhs_norm(y: np.ndarray, err: np.ndarray, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.abs(y)
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


def _propagate_rk(G, s0: StateMatrix, cfg: IntegratorConfig) -> Trajectory:
    """Embedded Dormand-Prince 5(4) with PI-free step control.

    Steps are rejected on error or on Hermiticity-defect growth above
    1e-9 per step (every generator here preserves Hermiticity, so drift
    signals integration error, not physics).
    """
    rhs = G.apply_array
    times = cfg.sample_times
    y = s0.mat.astype(complex).copy()
    t = 0.0
    states = []
    scale0 = max(np.abs(y).max(), 1.0)
    h = min(cfg.max_step, _initial_step(rhs, y, cfg))
    k_first = rhs(y)
    for target in times:
        while t < target - 1e-14 * max(1.0, target):
            h = min(h, target - t, cfg.max_step)
            if h < 1e-14 * max(1.0, abs(t)):
                raise StiffnessError(
                    f"step size underflow at t = {t:.6g}; use method='expm'")
            ks = [k_first]
            for i in range(1, 7):
                yi = y + h * sum(a * k for a, k in zip(_DP_A[i], ks))
                ks.append(rhs(yi))
            y5 = y + h * sum(b * k for b, k in zip(_DP_B5, ks) if b != 0.0)
            y4 = y + h * sum(b * k for b, k in zip(_DP_B4, ks) if b != 0.0)
            errnorm = _rk_rhs_norm(y5, y5 - y4, cfg.rtol, cfg.atol)
            herm_growth = _herm_defect_abs(y5) - _herm_defect_abs(y)
            if errnorm <= 1.0 and herm_growth <= 1e-9 * scale0:
                t += h
                y = y5
                k_first = ks[6]  # FSAL
                fac = 0.9 * errnorm ** -0.2 if errnorm > 0 else 5.0
            else:
                fac = max(0.2, 0.9 * errnorm ** -0.2) if errnorm > 1.0 else 0.5
            h *= min(5.0, max(0.2, fac))
        states.append(s0.with_mat(y.copy(), role="unnormalized"))
    return Trajectory(times=times, states=states)


def _herm_defect_abs(y: np.ndarray) -> float:
    return np.abs(y - y.conj().T).max()


def _initial_step(rhs, y, cfg: IntegratorConfig) -> float:
    f0 = rhs(y)
    ny = max(np.abs(y).max(), cfg.atol)
    nf = np.abs(f0).max()
    if nf == 0:
        return min(cfg.max_step, 0.1)
    return min(cfg.max_step, 0.01 * ny / nf)


def conjugated_propagate(sigma0: StateMatrix, H: Operator, params: PhysParams,
                         cfg: IntegratorConfig, q: Operator | None = None) -> Trajectory:
    """Propagate the bare-state equation through the plain semigroup.

    The sandwich S turns d sigma/dt = (L_rev + tilde L_ir) sigma into the
    dissipative-semigroup flow of tau = S(sigma); positivity of every
    sample follows from congruence + complete positivity, and the result
    matches direct integration of the transformed generator.
    """
    from .brownian import brownian_dissipator, canonical_ops, commutator_generator
    from .superop import SumMap

    if q is None:
        q = canonical_ops(sigma0.basis, params)["q"]
    sandwich = SandwichMap.from_hamiltonian(H, params)
    tau0 = sigma0.with_mat(sandwich.forward_array(sigma0.mat))
    plain = SumMap((commutator_generator(H, params),
                    brownian_dissipator(params, q)))
    traj = propagate(plain, tau0, cfg)
    states = [s.with_mat(sandwich.inverse_array(s.mat)) for s in traj.states]
    return Trajectory(times=traj.times, states=states)


@dataclass
class ConvergenceVerdict:
    """Truncation-doubling comparison of headline scalars."""

    passed: bool
    coarse: dict
    fine: dict
    rel_moves: dict

    def __bool__(self):
        return self.passed


def convergence_check(run: Callable[[int], dict], base: int,
                      rel_tol: float = 0.01,
                      abs_floor: float = 1e-10) -> ConvergenceVerdict:
    """Run a scenario at truncation `base` and `2*base`; pass iff every
    headline scalar moves by less than rel_tol relative.

    Scalars below abs_floor in magnitude are compared against the floor,
    so roundoff-level quantities count as trivially converged.
    """
    coarse = run(base)
    fine = run(2 * base)
    moves = {}
    ok = True
    for key, a in coarse.items():
        b = fine[key]
        denom = max(abs(a), abs(b), abs_floor)
        moves[key] = abs(a - b) / denom
        if moves[key] >= rel_tol:
            ok = False
    return ConvergenceVerdict(passed=ok, coarse=coarse, fine=fine, rel_moves=moves)
