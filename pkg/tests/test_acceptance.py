"""Acceptance suite: one test (and one printed pass/fail line) per criterion.

Run with `pytest -s tests/test_acceptance.py` to see the lines as they
complete. Criteria carry the tolerances they were specified with; nothing
is recalibrated at test time.
"""
import math
import time

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from qbrownian import (BathSpec, FockBasis, GridBasis, IntegratorConfig,
                       Operator, PhysParams, StateMatrix, basis_change,
                       brownian_dissipator, canonical_sigma,
                       conjugated_propagate, convergence_check,
                       correlated_initial_state, eta_map, exact_reduce,
                       free_particle_sigma_generator, free_particle_trace_rate,
                       gaussian_state, gaussianity_defect,
                       is_completely_positive, partial_trace,
                       positive_evolution, product_initial_state, propagate,
                       purity, purity_rate, purity_rate_fd, sigma_generator,
                       standard_qbe_generator, stationarity_residual,
                       superop_exp, tilde_transform, to_matrix, trace_distance,
                       trace_rate_fd, total_hamiltonian)
from qbrownian.brownian import commutator_generator, eta_kernel_multiplier
from qbrownian.operators import (build_fock_operators, build_grid_operators,
                                 system_hamiltonian)
from qbrownian.operators import PotentialSpec
from qbrownian.superop import SuperoperatorMatrix


def report(num: int, name: str, ok: bool, detail: str = ""):
    state = "PASS" if ok else "FAIL"
    print(f"\n[criterion {num:2d}] {state}: {name}" + (f" ({detail})" if detail else ""),
          flush=True)
    assert ok, f"criterion {num}: {name} ({detail})"


def min_eig(mat: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))[0])


# ---------------------------------------------------------------------------
# 1. positivity violation of the standard equation
# ---------------------------------------------------------------------------

def test_criterion_01_violation():
    t0 = time.perf_counter()
    pp = PhysParams(C=0.1)  # hbar = k = m = T = 1
    times = tuple(np.linspace(0.0, 1.2, 25))

    def run(dim: int) -> dict:
        basis = FockBasis(params=pp, n=dim)
        ops = build_fock_operators(basis)
        q, p = ops["q"], ops["p"]
        H = Operator(basis, p.mat @ p.mat / 2)
        rho0 = gaussian_state(q, p, pp, var_q=0.1)
        G = standard_qbe_generator(pp, q, p, H)
        method = "expm" if dim <= 40 else "rk-adaptive"
        traj = propagate(G, rho0, IntegratorConfig(method=method,
                                                   sample_times=times))
        pur = np.array([purity(s) for s in traj.states])
        eig = np.array([min_eig(s.mat) for s in traj.states])
        return {"max_purity": float(pur.max()), "min_eig": float(eig.min()),
                "_pur": pur, "_eig": eig}

    at40 = run(40)
    pur, eig = at40.pop("_pur"), at40.pop("_eig")
    verdict = convergence_check(lambda d: {k: v for k, v in run(d).items()
                                           if not k.startswith("_")}, 40)
    elapsed = time.perf_counter() - t0

    over = np.nonzero(pur > 1.0 + 1e-6)[0]
    under = np.nonzero(eig < -1e-6)[0]
    ok = (over.size > 0 and under.size > 0 and over[0] <= under[0]
          and verdict.passed and elapsed <= 30.0)
    report(1, "standard equation violates positivity below threshold", ok,
           f"max purity {pur.max():.6f}, min eig {eig.min():.2e}, "
           f"converged {verdict.passed}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. purity-rate sign threshold
# ---------------------------------------------------------------------------

def test_criterion_02_threshold():
    t0 = time.perf_counter()
    pp = PhysParams(C=0.1)
    basis = FockBasis(params=pp, n=48)
    ops = build_fock_operators(basis)
    q, p = ops["q"], ops["p"]
    H = Operator(basis, p.mat @ p.mat / 2)
    G = standard_qbe_generator(pp, q, p, H)

    scan = np.linspace(0.05, 0.6, 12)
    rates = np.array([purity_rate(G, gaussian_state(q, p, pp, var_q=v))
                      for v in scan])
    sign_flips = np.nonzero(np.diff(np.sign(rates)))[0]
    assert sign_flips.size == 1, "expected exactly one sign change in the scan"
    i = sign_flips[0]
    crossing = scan[i] - rates[i] * (scan[i + 1] - scan[i]) / (rates[i + 1] - rates[i])

    # factor K between 2 Re Tr(rho G rho) and the quoted initial rate,
    # determined by the independent finite-difference oracle
    probe = gaussian_state(q, p, pp, var_q=0.1)
    fd = purity_rate_fd(G, probe)
    quoted = pp.C * pp.hbar / (4 * pp.m) - pp.C * pp.kT * 0.1 / pp.hbar
    K = fd / quoted
    elapsed = time.perf_counter() - t0

    ok = abs(crossing - 0.25) <= 0.02 * 0.25 and elapsed <= 60.0
    report(2, "initial purity rate changes sign at var_q = hbar^2/4mkT", ok,
           f"crossing {crossing:.6f} (target 0.25 within 2%), "
           f"overall factor K = {K:.6f}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 3. purity-rate oracle agreement across the generator suite
# ---------------------------------------------------------------------------

def test_criterion_03_purity_rate_oracle():
    pp = PhysParams(C=0.1)
    basis = FockBasis(params=pp, n=20)
    ops = build_fock_operators(basis)
    q, p = ops["q"], ops["p"]
    Hfree = Operator(basis, p.mat @ p.mat / 2)
    Hharm = Operator(basis, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)
    suite = {
        "standard free": standard_qbe_generator(pp, q, p, Hfree),
        "standard harmonic": standard_qbe_generator(pp, q, p, Hharm),
        "dissipator": brownian_dissipator(pp, q),
        "sigma exact harmonic": sigma_generator(Hharm, pp, q, mode="exact-sandwich"),
        "sigma first-order harmonic": sigma_generator(Hharm, pp, q,
                                                      mode="first-order-gamma"),
        "explicit free": free_particle_sigma_generator(pp, q, p),
    }
    state = gaussian_state(q, p, pp, var_q=0.15, mean_q=0.4)
    worst = 0.0
    for name, G in suite.items():
        direct = purity_rate(G, state)
        oracle = purity_rate_fd(G, state)
        rel = abs(direct - oracle) / max(abs(oracle), 1e-300)
        worst = max(worst, rel)
        assert rel <= 1e-6, f"{name}: rel {rel:.2e}"
    # unitary case: both vanish (checked absolutely, the rate is zero)
    Gu = commutator_generator(Hharm, pp)
    assert abs(purity_rate(Gu, state)) < 1e-12
    assert abs(purity_rate_fd(Gu, state)) < 1e-9
    report(3, "2 Re Tr(rho G rho) matches Richardson FD oracle on the suite",
           worst <= 1e-6, f"worst relative error {worst:.2e}")


# ---------------------------------------------------------------------------
# 4. positivity preservation of the normalized pipeline
# ---------------------------------------------------------------------------

def test_criterion_04_positivity_preservation():
    t0 = time.perf_counter()
    pp = PhysParams(C=0.1, omega_max=10.0)
    times = tuple(np.linspace(0.0, 20.0, 11))
    worst_eig, worst_pur = 0.0, 0.0

    # five squeezed/displaced starts in a harmonic well (Fock)
    fb = FockBasis(params=pp, n=28)
    fops = build_fock_operators(fb)
    fq, fp = fops["q"], fops["p"]
    Hh = Operator(fb, fp.mat @ fp.mat / 2 + 0.5 * fq.mat @ fq.mat)
    harmonic_starts = [
        dict(var_q=0.5), dict(var_q=0.25, mean_q=0.8), dict(var_q=0.9, mean_p=-0.6),
        dict(var_q=0.35, mean_q=-0.5, mean_p=0.5), dict(var_q=0.7, mean_q=1.0)]
    for kw in harmonic_starts:
        s0 = gaussian_state(fq, fp, pp, **kw)
        res = positive_evolution(s0, pp, Hh, times, q=fq)
        for st in res.states:
            worst_eig = min(worst_eig, min_eig(st.mat))
            worst_pur = max(worst_pur, purity(st))

    # five free-particle starts on a grid
    gb = GridBasis(params=pp, x_min=-30.0, x_max=30.0, n=96)
    gops = build_grid_operators(gb)
    gq, gp = gops["q"], gops["p"]
    Hf = Operator(gb, gp.mat @ gp.mat / 2)
    free_starts = [
        dict(var_q=0.5), dict(var_q=0.3, mean_p=0.4), dict(var_q=0.9, mean_q=2.0),
        dict(var_q=0.4, mean_q=-1.5, mean_p=-0.3), dict(var_q=0.7, mean_p=0.2)]
    for kw in free_starts:
        s0 = gaussian_state(gq, gp, pp, **kw)
        res = positive_evolution(s0, pp, Hf, times, q=gq)
        for st in res.states:
            worst_eig = min(worst_eig, min_eig(st.mat))
            worst_pur = max(worst_pur, purity(st))

    elapsed = time.perf_counter() - t0
    ok = worst_eig >= -1e-8 and worst_pur <= 1.0 + 1e-8 and elapsed <= 120.0
    report(4, "normalized evolution stays positive for 10 Gaussian starts", ok,
           f"worst min eig {worst_eig:.2e}, max purity {worst_pur:.10f}, "
           f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 5. stationarity of the canonical bare state
# ---------------------------------------------------------------------------

def test_criterion_05_stationarity():
    pp = PhysParams(C=0.1, omega_max=10.0)
    basis = FockBasis(params=pp, n=24)
    ops = build_fock_operators(basis)
    q, p = ops["q"], ops["p"]
    H = Operator(basis, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)
    sc = canonical_sigma(H, pp)
    resid = stationarity_residual(sigma_generator(H, pp, q, mode="exact-sandwich"), sc)
    res = positive_evolution(sc, pp, H, tuple(np.linspace(0.0, 10.0, 6)), q=q)
    drift = max(trace_distance(st, res.states[0]) for st in res.states)
    ok = resid <= 1e-8 and drift <= 1e-8
    report(5, "canonical bare state is stationary", ok,
           f"residual {resid:.2e}, max drift {drift:.2e}")


# ---------------------------------------------------------------------------
# 6. tilde transform identities
# ---------------------------------------------------------------------------

def test_criterion_06_tilde_identities():
    pp = PhysParams(C=0.1)
    basis = FockBasis(params=pp, n=10)
    ops = build_fock_operators(basis)
    q, p = ops["q"], ops["p"]
    H = Operator(basis, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)

    Grev = commutator_generator(H, pp)
    rev_diff = np.abs(tilde_transform(Grev, H, pp).to_matrix().mat
                      - to_matrix(Grev).mat).max()

    Gir = brownian_dissipator(pp, q)
    lam = np.linalg.eigvals(to_matrix(Gir).mat)
    mu = np.linalg.eigvals(tilde_transform(Gir, H, pp).to_matrix().mat)
    cost = np.abs(lam[:, None] - mu[None, :])
    rows, cols = linear_sum_assignment(cost)
    spec_diff = float(cost[rows, cols].max())

    ok = rev_diff <= 1e-10 and spec_diff <= 1e-8
    report(6, "reversible part invariant; dissipator spectrum preserved", ok,
           f"|tilde Lrev - Lrev| {rev_diff:.2e}, spectrum mismatch {spec_diff:.2e}")


# ---------------------------------------------------------------------------
# 7. coherence map across representations
# ---------------------------------------------------------------------------

def test_criterion_07_eta_cross_representation():
    pp = PhysParams(C=0.1, omega_max=0.3 * 4 * np.pi)  # eta = 0.3
    fock = FockBasis(params=pp, n=28)
    grid = GridBasis(params=pp, x_min=-10.0, x_max=10.0, n=160)
    ops = build_fock_operators(fock)
    q, p = ops["q"], ops["p"]
    H = Operator(fock, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)
    sigma = canonical_sigma(H, pp)

    via_fock = eta_map(sigma, pp, "forward", q=q)
    via_grid = basis_change(eta_map(basis_change(sigma, grid), pp, "forward"), fock)
    d = via_grid.mat - via_fock.mat
    td = 0.5 * np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T))).sum()
    report(7, "grid closed form matches Fock exponential after basis change",
           td <= 1e-6, f"trace distance {td:.2e}")


# ---------------------------------------------------------------------------
# 8. free-particle consistency
# ---------------------------------------------------------------------------

def _generator_action_gap(pp0, basis, q, p, H, gammas, CkT, mode):
    tests = [gaussian_state(q, p, pp0, var_q=v) for v in (0.3, 0.5, 0.8)]
    gaps = []
    for gam in gammas:
        kT = pp0.hbar / (2.0 * pp0.m * gam)
        pp = pp0.with_updates(T=kT / pp0.k, C=CkT / kT)
        M_exact = sigma_generator(H, pp, q, mode="exact-sandwich").to_matrix().mat
        if mode == "explicit-free":
            M_other = to_matrix(free_particle_sigma_generator(pp, q, p)).mat
        else:
            M_other = sigma_generator(H, pp, q,
                                      mode="first-order-gamma").to_matrix().mat
        D = M_exact - M_other
        gaps.append(max(
            np.linalg.norm((D @ s.mat.reshape(-1, order="F")).reshape(
                basis.dim, basis.dim, order="F")) for s in tests))
    return gaps


@pytest.mark.xfail(
    strict=True,
    reason="the explicit V=0 equation is not a first-order-in-gamma "
    "approximation of the sandwich generator but equals it identically "
    "(the similarity by e^{p^2/4mkT} terminates after one commutator), so "
    "the difference carries no gamma^2 term; measured gaps are pure "
    "truncation residue decaying much faster than gamma^2")
def test_criterion_08a_v0_gamma_squared_scaling():
    pp0 = PhysParams(C=0.1)
    basis = FockBasis(params=pp0, n=28)
    ops = build_fock_operators(basis)
    q, p = ops["q"], ops["p"]
    H = Operator(basis, p.mat @ p.mat / 2)
    gammas = [0.5, 0.25, 0.125]
    gaps = _generator_action_gap(pp0, basis, q, p, H, gammas, 0.1, "explicit-free")
    exponent = float(np.polyfit(np.log(gammas), np.log(gaps), 1)[0])
    report(8, "V=0 generator difference scales as gamma^2",
           abs(exponent - 2.0) <= 0.3, f"fitted exponent {exponent:.2f}")


def test_criterion_08b_first_order_scaling_with_potential():
    # the gamma^2 scaling does hold for the first-order-gamma generator once
    # a potential makes the similarity expansion nontrivial
    pp0 = PhysParams(C=0.1)
    basis = FockBasis(params=pp0, n=28)
    ops = build_fock_operators(basis)
    q, p = ops["q"], ops["p"]
    H = Operator(basis, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)
    gammas = [0.5, 0.25, 0.125]
    gaps = _generator_action_gap(pp0, basis, q, p, H, gammas, 0.1, "first-order")
    exponent = float(np.polyfit(np.log(gammas), np.log(gaps), 1)[0])
    report(8, "first-order generator gap scales as gamma^2 for V != 0",
           abs(exponent - 2.0) <= 0.3, f"fitted exponent {exponent:.2f}")


def test_criterion_08c_exactness_and_trace_rate():
    pp0 = PhysParams(C=0.1)
    # V=0 agreement at fixed gamma improves with truncation (exact identity)
    gaps = []
    for d in (16, 24, 32):
        basis = FockBasis(params=pp0, n=d)
        ops = build_fock_operators(basis)
        q, p = ops["q"], ops["p"]
        H = Operator(basis, p.mat @ p.mat / 2)
        gaps.append(_generator_action_gap(pp0, basis, q, p, H, [0.25], 0.1,
                                          "explicit-free")[0])
    shrinking = gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-6

    basis = FockBasis(params=pp0, n=24)
    ops = build_fock_operators(basis)
    q, p = ops["q"], ops["p"]
    pp = PhysParams(C=0.05, T=2.0)  # gamma = 0.25, CkT = 0.1
    G = free_particle_sigma_generator(pp, q, p)
    sig = gaussian_state(q, p, pp, var_q=0.5, mean_p=0.4)
    oracle = trace_rate_fd(G, sig)
    direct = float(np.trace(G.apply_array(sig.mat)).real)
    formula = free_particle_trace_rate(pp, sig, p).real
    rel1 = abs(direct - oracle) / abs(oracle)
    rel2 = abs(formula - oracle) / abs(oracle)
    ok = shrinking and rel1 <= 1e-6 and rel2 <= 1e-6
    report(8, "explicit V=0 generator is the sandwich generator; trace-rate "
           "formula oracle-confirmed", ok,
           f"residual at dim 32: {gaps[2]:.2e}; trace-rate rel {max(rel1, rel2):.2e}")


# ---------------------------------------------------------------------------
# 9. recoilless normalization constancy
# ---------------------------------------------------------------------------

def test_criterion_09_recoilless_trace():
    pp = PhysParams(C=0.1, omega_max=10.0)
    basis = GridBasis(params=pp, x_min=-6.0, x_max=6.0, n=48)
    ops = build_grid_operators(basis)
    q, p = ops["q"], ops["p"]
    H = system_hamiltonian(PotentialSpec(coefficients=(0.0, 0.0, 0.5),
                                         recoilless=True), q, p, pp)
    s0 = gaussian_state(q, p, pp, var_q=0.5, mean_q=0.8)
    res = positive_evolution(s0, pp, H, tuple(np.linspace(0.0, 10.0, 11)), q=q)
    d = res.d_approx
    spread = float((d.max() - d.min()) / abs(d[0]))
    report(9, "normalization constant in time in the recoilless limit",
           spread <= 1e-8, f"relative spread {spread:.2e}")


# ---------------------------------------------------------------------------
# 10. conjugated propagation identity
# ---------------------------------------------------------------------------

def test_criterion_10_conjugated_propagation():
    pp = PhysParams(C=0.1)
    worst = 0.0
    for rep in ("fock", "grid"):
        if rep == "fock":
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
        cfg = IntegratorConfig(method="rk-adaptive", rtol=1e-10, atol=1e-13,
                               sample_times=(0.0, 0.5, 1.0, 2.0))
        conj = conjugated_propagate(s0, H, pp, cfg, q=q)
        direct = propagate(sigma_generator(H, pp, q, mode="exact-sandwich"),
                           s0, cfg)
        for a, b in zip(conj.states, direct.states):
            d = a.mat - b.mat
            worst = max(worst, 0.5 * np.abs(
                np.linalg.eigvalsh(0.5 * (d + d.conj().T))).sum())
    report(10, "direct integration equals sandwich-conjugated semigroup",
           worst <= 1e-6, f"max trace distance {worst:.2e}")


# ---------------------------------------------------------------------------
# 11. complete-positivity audit
# ---------------------------------------------------------------------------

def test_criterion_11_cp_audit():
    pp = PhysParams(C=0.1)
    basis = FockBasis(params=pp, n=8)
    ops = build_fock_operators(basis)
    q, p = ops["q"], ops["p"]

    Ld = to_matrix(brownian_dissipator(pp, q))
    lir_ok = all(is_completely_positive(superop_exp(Ld, t))[0]
                 for t in (0.1, 1.0, 10.0))

    Mqbe = to_matrix(standard_qbe_generator(pp, q, p,
                                            Operator(basis, p.mat @ p.mat / 2)))
    qbe_min = min(is_completely_positive(superop_exp(Mqbe, t))[1]
                  for t in (0.5, 1.0, 2.0))

    grid = GridBasis(params=pp, x_min=-4.0, x_max=4.0, n=8)
    gops = build_grid_operators(grid)
    gq, gp = gops["q"], gops["p"]
    Hg = Operator(grid, gp.mat @ gp.mat / 2 + 0.5 * gq.mat @ gq.mat)
    from scipy.linalg import expm
    Mtil = sigma_generator(Hg, pp, gq, mode="exact-sandwich").to_matrix().mat
    comp_min = math.inf
    for eta_val, t in ((0.2, 0.3), (0.4, 0.5), (0.4, 1.0)):
        ppe = pp.with_updates(omega_max=eta_val * 4 * np.pi)
        fwd = np.diag(eta_kernel_multiplier(grid, ppe, -1.0).reshape(-1, order="F"))
        inv = np.diag(eta_kernel_multiplier(grid, ppe, +1.0).reshape(-1, order="F"))
        M = SuperoperatorMatrix(grid, fwd @ expm(t * Mtil) @ inv)
        comp_min = min(comp_min, is_completely_positive(M)[1])

    ok = lir_ok and qbe_min < -1e-6 and comp_min < -1e-6
    report(11, "dissipator semigroup CP; standard and composite propagators not",
           ok, f"standard Choi min {qbe_min:.2e}, composite Choi min {comp_min:.2e}")


# ---------------------------------------------------------------------------
# 12. microscopic oracle comparisons
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def microbath_setup():
    pp = PhysParams(C=0.2, T=2.0, omega_max=10.0)
    basis = FockBasis(params=pp, n=8)
    ops = build_fock_operators(basis)
    q, p = ops["q"], ops["p"]
    H = Operator(basis, p.mat @ p.mat / 2 + 0.5 * q.mat @ q.mat)
    dims = []
    from qbrownian.microbath import ohmic_discretization
    for mode in ohmic_discretization(pp.C, pp.omega_max, 3, hbar=pp.hbar):
        x = np.exp(-pp.hbar * mode.omega / pp.kT)
        dm = 3
        while x**dm > 1e-3:
            dm += 1
        dims.append(dm)
    return pp, basis, q, p, H, tuple(dims)


def test_criterion_12_microbath(microbath_setup):
    t0 = time.perf_counter()
    pp0, basis, q, p, H, dims = microbath_setup
    sigma0 = gaussian_state(q, p, pp0, var_q=0.5)
    t_fix = 0.6
    dists, eig_floor = [], 0.0
    for C in (0.2, 0.1, 0.05):
        pp = pp0.with_updates(C=C)
        bath = BathSpec.build(pp, 3, per_mode_dim=dims)
        bath.check_thermal_truncation(pp)
        HT = total_hamiltonian(H, q, bath, pp)
        rT0 = correlated_initial_state(sigma0, HT, H, bath, pp)
        reds = exact_reduce(rT0, HT, np.linspace(0.0, t_fix, 4), system_basis=basis)
        eig_floor = min(eig_floor, min(min_eig(r.mat) for r in reds))
        pred = positive_evolution(sigma0, pp, H, (0.0, t_fix), q=q).states[-1]
        dists.append(trace_distance(reds[-1], pred))
    monotone = dists[0] > dists[1] > dists[2]

    # jolt comparison at the strongest coupling, matched reduced start
    pp = pp0
    bath = BathSpec.build(pp, 3, per_mode_dim=dims)
    HT = total_hamiltonian(H, q, bath, pp)
    rT0c = correlated_initial_state(sigma0, HT, H, bath, pp)
    red0 = partial_trace(rT0c, bath.dims_with_system(basis.n), keep=0,
                         target_basis=basis)
    red0 = StateMatrix(basis, red0.mat / red0.mat.trace().real, role="rho")
    rT0p = product_initial_state(red0, bath, pp)
    window = np.linspace(0.0, 10.0 / pp.omega_max, 81)
    rates = {}
    for name, rT0 in (("correlated", rT0c), ("product", rT0p)):
        P = np.array([purity(r) for r in exact_reduce(rT0, HT, window,
                                                      system_basis=basis)])
        rates[name] = float(np.abs(np.diff(P) / np.diff(window)).max())
    elapsed = time.perf_counter() - t0

    ok = (eig_floor >= -1e-10 and monotone
          and rates["product"] > rates["correlated"] and elapsed <= 600.0)
    report(12, "exact bath: positivity, weak-coupling trend, jolt inequality",
           ok, f"min eig {eig_floor:.1e}; distances "
           + " > ".join(f"{d:.4f}" for d in dists)
           + f"; jolt {rates['product']:.3f} vs {rates['correlated']:.3f}, "
           f"{elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 13. Gaussian short-time closure
# ---------------------------------------------------------------------------

def test_criterion_13_gaussian_closure():
    pp = PhysParams(C=0.1)
    basis = FockBasis(params=pp, n=40)
    ops = build_fock_operators(basis)
    q, p = ops["q"], ops["p"]
    G = free_particle_sigma_generator(pp, q, p)
    s0 = gaussian_state(q, p, pp, var_q=0.5, mean_p=0.2)
    times = (0.0, 0.1, 0.25, 0.5)
    traj = propagate(G, s0, IntegratorConfig(method="rk-adaptive", rtol=1e-10,
                                             atol=1e-14, sample_times=times))
    worst = 0.0
    for st in traj.states:
        mat = st.mat / st.mat.trace().real
        rho = StateMatrix(basis, 0.5 * (mat + mat.conj().T), role="rho")
        worst = max(worst, gaussianity_defect(rho, q, p, pp))
    report(13, "bare-state free evolution keeps Gaussians Gaussian",
           worst <= 1e-4, f"max defect {worst:.2e}")
