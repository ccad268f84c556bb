import numpy as np
import pytest

from qbrownian import (FockBasis, GridBasis, IntegratorConfig, Operator,
                       StateMatrix, brownian_dissipator, conjugated_propagate,
                       convergence_check, free_particle_sigma_generator,
                       free_particle_trace_rate, gaussian_state, propagate,
                       purity, sigma_generator, trace_distance)
from qbrownian.brownian import commutator_generator
from qbrownian.operators import (build_fock_operators, build_grid_operators,
                                 boundary_mass)
from qbrownian.superop import Generator, SumMap

from conftest import random_density


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(method="leapfrog")
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=-1.0)
    with pytest.raises(ValueError):
        IntegratorConfig(sample_times=(0.0, 0.5, 0.5))
    with pytest.raises(ValueError):
        IntegratorConfig(sample_times=(-1.0, 0.5))


def test_zero_generator_constant_trajectory(fock20, params):
    basis, q, p = fock20
    G = Generator(basis=basis)
    rng = np.random.default_rng(0)
    s0 = StateMatrix(basis, random_density(rng, basis.n), role="rho")
    for method in ("expm", "rk-adaptive"):
        traj = propagate(G, s0, IntegratorConfig(
            method=method, sample_times=(0.0, 1.0, 3.0)))
        for st in traj.states:
            assert np.abs(st.mat - s0.mat).max() < 1e-12


@pytest.mark.parametrize("method", ["expm", "rk-adaptive"])
def test_unitary_flow_preserves_purity(fock20, params, method):
    basis, q, p = fock20
    H = Operator(basis, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)
    G = commutator_generator(H, params)
    s0 = gaussian_state(q, p, params, var_q=0.4, mean_q=0.7)
    traj = propagate(G, s0, IntegratorConfig(
        method=method, sample_times=(0.0, 0.8, 2.0)))
    for st in traj.states:
        assert purity(st) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("method", ["expm", "rk-adaptive"])
def test_two_site_dephasing_closed_form(params, method):
    # d rho_01/dt = -(C kT/2 hbar) (x0-x1)^2 rho_01 -> magnitude 0.5 e^{-0.15} at t=3
    basis = FockBasis(params=params, n=2)
    q = Operator(basis, np.diag([0.0, 1.0]).astype(complex))
    G = brownian_dissipator(params, q)
    s0 = StateMatrix(basis, 0.5 * np.ones((2, 2)), role="rho")
    traj = propagate(G, s0, IntegratorConfig(
        method=method, rtol=1e-10, atol=1e-14, sample_times=(0.0, 3.0)))
    got = abs(traj.states[-1].mat[0, 1])
    assert got == pytest.approx(0.5 * np.exp(-0.15), rel=1e-8)


def test_expm_and_rk_agree(fock20, params):
    basis, q, p = fock20
    H = Operator(basis, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)
    G = SumMap((commutator_generator(H, params),
                brownian_dissipator(params, q)))
    s0 = gaussian_state(q, p, params, var_q=0.3, mean_p=0.5)
    rtol = 1e-8
    times = (0.0, 0.5, 1.5, 4.0)
    t_expm = propagate(G, s0, IntegratorConfig(method="expm", sample_times=times))
    t_rk = propagate(G, s0, IntegratorConfig(method="rk-adaptive", rtol=rtol,
                                             sample_times=times))
    for a, b in zip(t_expm.states, t_rk.states):
        assert trace_distance(a.with_mat(a.mat, role="unnormalized"),
                              b.with_mat(b.mat, role="unnormalized")) <= 10 * rtol


def test_lindblad_flow_conserves_trace(fock20, params):
    basis, q, p = fock20
    H = Operator(basis, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)
    G = SumMap((commutator_generator(H, params),
                brownian_dissipator(params, q)))
    s0 = gaussian_state(q, p, params, var_q=0.35)
    traj = propagate(G, s0, IntegratorConfig(method="rk-adaptive",
                                             sample_times=(0.0, 2.0, 6.0)))
    for st in traj.states:
        assert st.mat.trace().real == pytest.approx(1.0, abs=1e-10)


def test_trace_drift_matches_formula_along_flow(fock20, params):
    # bare-state free-particle flow: logged drift vs the algebraic rate
    basis, q, p = fock20
    G = free_particle_sigma_generator(params, q, p)
    s0 = gaussian_state(q, p, params, var_q=0.5)
    times = (0.0, 0.05, 0.1)
    traj = propagate(G, s0, IntegratorConfig(method="rk-adaptive", rtol=1e-10,
                                             atol=1e-14, sample_times=times))
    tr = [st.mat.trace().real for st in traj.states]
    mid = traj.states[1]
    drift = (tr[2] - tr[0]) / (times[2] - times[0])
    formula = free_particle_trace_rate(params, mid, p).real
    assert drift == pytest.approx(formula, rel=1e-4)


def test_auto_method_selection(fock20, params):
    from qbrownian.evolution import _resolve_method
    basis, q, p = fock20
    G = Generator(basis=basis)
    assert _resolve_method(G, IntegratorConfig()) == "expm"
    pp = params
    gbasis = GridBasis(params=pp, x_min=-1, x_max=1, n=8)
    G2 = Generator(basis=gbasis)
    assert _resolve_method(G2, IntegratorConfig()) == "rk-adaptive"
    big = FockBasis(params=pp, n=64)
    assert _resolve_method(Generator(basis=big), IntegratorConfig()) == "rk-adaptive"


# ---------------------------------------------------------------------------
# conjugated propagation
# ---------------------------------------------------------------------------

def test_conjugated_time_zero(fock20, params):
    basis, q, p = fock20
    H = Operator(basis, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)
    s0 = gaussian_state(q, p, params, var_q=0.5)
    traj = conjugated_propagate(s0, H, params,
                                IntegratorConfig(sample_times=(0.0,)), q=q)
    assert np.abs(traj.states[0].mat - s0.mat).max() < 1e-12


@pytest.mark.parametrize("which", ["harmonic-fock", "free-grid"])
def test_conjugated_matches_direct(params, which):
    pp = params
    if which == "harmonic-fock":
        basis = FockBasis(params=pp, n=18)
        ops = build_fock_operators(basis)
        q, p = ops["q"], ops["p"]
        H = Operator(basis, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)
    else:
        basis = GridBasis(params=pp, x_min=-10.0, x_max=10.0, n=32)
        ops = build_grid_operators(basis)
        q, p = ops["q"], ops["p"]
        H = Operator(basis, p.mat @ p.mat / 2)
    s0 = gaussian_state(q, p, pp, var_q=0.6)
    times = (0.0, 0.4, 1.0)
    cfg = IntegratorConfig(method="rk-adaptive", rtol=1e-10, atol=1e-13,
                           sample_times=times)
    conj = conjugated_propagate(s0, H, pp, cfg, q=q)
    G = sigma_generator(H, pp, q, mode="exact-sandwich")
    direct = propagate(G, s0, cfg)
    for a, b in zip(conj.states, direct.states):
        d = a.mat - b.mat
        td = 0.5 * np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T))).sum()
        assert td <= 1e-6


def test_conjugated_positivity_chain(fock20, params):
    basis, q, p = fock20
    H = Operator(basis, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)
    s0 = gaussian_state(q, p, params, var_q=0.4, mean_q=0.5)
    times = tuple(np.linspace(0.0, 5.0, 6))
    traj = conjugated_propagate(s0, H, params,
                                IntegratorConfig(sample_times=times), q=q)
    for st in traj.states:
        evals = np.linalg.eigvalsh(0.5 * (st.mat + st.mat.conj().T))
        assert evals[0] >= -1e-10


# ---------------------------------------------------------------------------
# convergence protocol
# ---------------------------------------------------------------------------

def test_convergence_pass_for_ground_energy(params):
    def run(d):
        basis = FockBasis(params=params, n=d)
        ops = build_fock_operators(basis)
        H = ops["p"].mat @ ops["p"].mat / 2 + 0.5 * ops["q"].mat @ ops["q"].mat
        return {"e0": float(np.linalg.eigvalsh(H)[0])}

    verdict = convergence_check(run, 20)
    assert verdict.passed and verdict.rel_moves["e0"] < 1e-10


def test_convergence_fail_for_clipped_packet(params):
    # a moving packet reaches the boundary of a too-narrow box; the edge
    # weight refuses to settle under grid-doubling
    def run(n):
        basis = GridBasis(params=params, x_min=-3.0, x_max=3.0, n=n)
        ops = build_grid_operators(basis)
        q, p = ops["q"], ops["p"]
        H = Operator(basis, p.mat @ p.mat / 2)
        s0 = gaussian_state(q, p, params, var_q=0.5, mean_p=1.5)
        G = commutator_generator(H, params)
        traj = propagate(G, s0, IntegratorConfig(sample_times=(0.0, 4.0)))
        return {"edge_mass": boundary_mass(traj.states[-1])}

    verdict = convergence_check(run, 16)
    assert not verdict.passed


def test_convergence_constant_trajectory(params):
    verdict = convergence_check(lambda d: {"x": 1.0}, 10)
    assert verdict.passed


def test_determinism_of_propagation(fock20, params):
    basis, q, p = fock20
    H = Operator(basis, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)
    G = SumMap((commutator_generator(H, params), brownian_dissipator(params, q)))
    s0 = gaussian_state(q, p, params, var_q=0.3)
    cfg = IntegratorConfig(method="rk-adaptive", sample_times=(0.0, 1.0, 2.5))
    a = propagate(G, s0, cfg)
    b = propagate(G, s0, cfg)
    for x, y in zip(a.states, b.states):
        assert np.array_equal(x.mat, y.mat)
