"""Config-driven experiment runner.

Verbs: `qbe run <file.toml>`, `qbe scenario <name> [--override k=v]...`,
`qbe list-scenarios`; global `--out <dir>` (falls back to $QBE_OUT, then
./qbe_out). Exit codes: 0 all scenario assertions pass, 1 usage/config
error, 2 assertion failure.

Each run writes trajectory.csv (populations over time), diagnostics.csv
(fixed schema), summary.txt (headline scalars, convergence verdicts, one
pass/fail line per assertion), and the fully resolved config.toml.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .bases import FockBasis, GridBasis
from .brownian import (brownian_dissipator, canonical_ops, canonical_sigma,
                       eta_kernel_multiplier, eta_map,
                       free_particle_sigma_generator, free_particle_trace_rate,
                       positive_evolution, sigma_generator,
                       standard_qbe_generator)
from .diagnostics import (DiagnosticsRow, diagnostics_row, purity,
                          stationarity_residual, trace_distance,
                          trace_rate_fd)
from .errors import ConfigError, QbeError
from .evolution import IntegratorConfig, convergence_check, propagate
from .microbath import (BathSpec, correlated_initial_state, exact_reduce,
                        product_initial_state, total_hamiltonian)
from .operators import (PotentialSpec, StateMatrix, basis_change,
                        partial_trace, system_hamiltonian)
from .params import PhysParams
from .states import fock_state, gaussian_state
from .superop import (choi_matrix, is_completely_positive, superop_exp,
                      to_matrix)


def fmt(v) -> str:
    """12 significant digits, scientific; nan for missing values."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{float(v):.11e}"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

REQUIRED_PARAM_KEYS = ("hbar", "k", "m", "T", "C", "omega_max")


@dataclass
class RunConfig:
    """Fully resolved configuration of one scenario run."""

    scenario: str
    params: dict
    basis: dict
    potential: dict = field(default_factory=lambda: {"coefficients": [], "recoilless": False})
    initial_state: dict = field(default_factory=lambda: {"kind": "gaussian"})
    integrator: dict = field(default_factory=dict)
    scenario_args: dict = field(default_factory=dict)
    output: str = ""

    KNOWN_SECTIONS = ("scenario", "params", "basis", "potential",
                      "initial_state", "integrator", "scenario_args", "output")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        for key in d:
            if key not in cls.KNOWN_SECTIONS:
                raise ConfigError(f"unknown config key '{key}'")
        if "scenario" not in d:
            raise ConfigError("missing key 'scenario'")
        if d["scenario"] not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario '{d['scenario']}'; valid: {', '.join(sorted(SCENARIOS))}")
        if "params" not in d:
            raise ConfigError("missing key 'params'")
        for k in REQUIRED_PARAM_KEYS:
            if k not in d["params"]:
                raise ConfigError(f"missing key 'params.{k}'")
        if "basis" not in d or "kind" not in d.get("basis", {}):
            raise ConfigError("missing key 'basis.kind'")
        cfg = cls(scenario=d["scenario"], params=dict(d["params"]),
                  basis=dict(d["basis"]),
                  potential=dict(d.get("potential", {"coefficients": [], "recoilless": False})),
                  initial_state=dict(d.get("initial_state", {"kind": "gaussian"})),
                  integrator=dict(d.get("integrator", {})),
                  scenario_args=dict(d.get("scenario_args", {})),
                  output=str(d.get("output", "")))
        cfg.validate()
        return cfg

    def validate(self):
        try:
            self.phys_params()
            self.make_basis()
            self.potential_spec()
        except ConfigError:
            raise
        except (QbeError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def phys_params(self) -> PhysParams:
        try:
            return PhysParams(**{k: float(self.params[k]) for k in REQUIRED_PARAM_KEYS})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid params: {exc}") from exc

    def make_basis(self):
        kind = self.basis.get("kind")
        pp = self.phys_params()
        if kind == "fock":
            for k in ("n",):
                if k not in self.basis:
                    raise ConfigError(f"missing key 'basis.{k}'")
            return FockBasis(params=pp, n=int(self.basis["n"]),
                             omega_ref=float(self.basis.get("omega_ref", 1.0)))
        if kind == "grid":
            for k in ("n", "x_min", "x_max"):
                if k not in self.basis:
                    raise ConfigError(f"missing key 'basis.{k}'")
            return GridBasis(params=pp, x_min=float(self.basis["x_min"]),
                             x_max=float(self.basis["x_max"]), n=int(self.basis["n"]))
        raise ConfigError(f"basis.kind must be fock|grid, got {kind!r}")

    def potential_spec(self) -> PotentialSpec:
        return PotentialSpec(
            coefficients=tuple(float(c) for c in self.potential.get("coefficients", [])),
            recoilless=bool(self.potential.get("recoilless", False)))

    def integrator_config(self, default_times) -> IntegratorConfig:
        times = self.integrator.get("sample_times", default_times)
        return IntegratorConfig(
            method=self.integrator.get("method", "auto"),
            rtol=float(self.integrator.get("rtol", 1e-8)),
            atol=float(self.integrator.get("atol", 1e-12)),
            max_step=float(self.integrator.get("max_step", np.inf)),
            sample_times=tuple(float(t) for t in times))

    def build_system(self):
        """params, basis, q, p, H from the config."""
        pp = self.phys_params()
        basis = self.make_basis()
        ops = canonical_ops(basis, pp)
        q, p = ops["q"], ops["p"]
        H = system_hamiltonian(self.potential_spec(), q, p, pp)
        return pp, basis, q, p, H

    def build_initial_state(self, q, p, H, pp) -> StateMatrix:
        spec = self.initial_state
        kind = spec.get("kind", "gaussian")
        if kind == "gaussian":
            return gaussian_state(
                q, p, pp,
                mean_q=float(spec.get("mean_q", 0.0)),
                mean_p=float(spec.get("mean_p", 0.0)),
                var_q=float(spec["var_q"]) if "var_q" in spec else None,
                squeeze=float(spec.get("squeeze", 0.0)))
        if kind == "canonical":
            return canonical_sigma(H, pp)
        if kind == "fock":
            return fock_state(q.basis, int(spec.get("n", 0)))
        raise ConfigError(f"initial_state.kind must be gaussian|canonical|fock, got {kind!r}")

    def to_toml(self) -> str:
        lines = [f'scenario = "{self.scenario}"']
        if self.output:
            lines.append(f'output = "{self.output}"')
        for section in ("params", "basis", "potential", "initial_state",
                        "integrator", "scenario_args"):
            table = getattr(self, section)
            if not table:
                continue
            lines.append("")
            lines.append(f"[{section}]")
            for k, v in table.items():
                lines.append(f"{k} = {_toml_value(v)}")
        return "\n".join(lines) + "\n"


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def apply_override(d: dict, assignment: str):
    """Apply one dotted key=value assignment, last wins."""
    if "=" not in assignment:
        raise ConfigError(f"override '{assignment}' is not of the form key=value")
    key, raw = assignment.split("=", 1)
    path = key.strip().split(".")
    node = d
    for part in path[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path '{key}' crosses a scalar")
    node[path[-1]] = _parse_scalar(raw.strip())


def _parse_scalar(raw: str):
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    if raw.startswith("[") and raw.endswith("]"):
        inner = raw[1:-1].strip()
        return [] if not inner else [_parse_scalar(x.strip()) for x in inner.split(",")]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


# ---------------------------------------------------------------------------
# result plumbing
# ---------------------------------------------------------------------------

@dataclass
class Assertion:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ScenarioResult:
    rows: list
    scalars: dict
    assertions: list
    convergence_lines: list = field(default_factory=list)
    populations: list = field(default_factory=list)  # (t, ndarray) pairs

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)


def write_outputs(outdir: Path, config: RunConfig, result: ScenarioResult):
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.toml").write_text(config.to_toml())

    lines = [DiagnosticsRow.CSV_HEADER]
    for row in result.rows:
        lines.append(",".join(fmt(v) for v in row.csv_values()))
    (outdir / "diagnostics.csv").write_text("\n".join(lines) + "\n")

    traj_lines = []
    if result.populations:
        width = len(result.populations[0][1])
        traj_lines.append("t," + ",".join(f"pop_{i}" for i in range(width)))
        for t, pops in result.populations:
            traj_lines.append(",".join([fmt(t)] + [fmt(v) for v in pops]))
    else:
        traj_lines.append("t")
    (outdir / "trajectory.csv").write_text("\n".join(traj_lines) + "\n")

    s = [f"scenario: {config.scenario}", ""]
    s.append("headline scalars:")
    for k, v in result.scalars.items():
        s.append(f"  {k} = {v if isinstance(v, str) else fmt(v)}")
    if result.rows:
        s.append("")
        s.append("final diagnostics row (as printed in diagnostics.csv):")
        last = result.rows[-1]
        for name, v in zip(DiagnosticsRow.CSV_HEADER.split(","), last.csv_values()):
            s.append(f"  {name} = {fmt(v)}")
    if result.convergence_lines:
        s.append("")
        s.append("convergence verdicts:")
        s.extend(f"  {line}" for line in result.convergence_lines)
    s.append("")
    s.append("assertions:")
    for a in result.assertions:
        state = "PASS" if a.passed else "FAIL"
        detail = f" ({a.detail})" if a.detail else ""
        s.append(f"  [{state}] {a.name}{detail}")
    s.append("")
    s.append(f"result: {'PASS' if result.passed else 'FAIL'}")
    (outdir / "summary.txt").write_text("\n".join(s) + "\n")


def _rows_and_pops(times, states, q, p, d_approx=None):
    rows, pops = [], []
    for i, (t, st) in enumerate(zip(times, states)):
        da = math.nan if d_approx is None else float(d_approx[i])
        rows.append(diagnostics_row(t, st, q, p, d_approx=da))
        pops.append((t, np.abs(np.diag(st.mat))))
    return rows, pops


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def _default_config(scenario: str, **sections) -> dict:
    base = {
        "scenario": scenario,
        "params": {"hbar": 1.0, "k": 1.0, "m": 1.0, "T": 1.0, "C": 0.1,
                   "omega_max": 10.0},
        "basis": {"kind": "fock", "n": 40, "omega_ref": 1.0},
        "potential": {"coefficients": [], "recoilless": False},
        "initial_state": {"kind": "gaussian", "var_q": 0.1},
        "integrator": {},
        "scenario_args": {},
    }
    for key, val in sections.items():
        base[key] = val
    return base


def scenario_violate(config: RunConfig) -> ScenarioResult:
    """Standard Brownian equation drives a squeezed Gaussian unphysical."""
    pp, basis, q, p, H = config.build_system()
    rho0 = config.build_initial_state(q, p, H, pp)
    args = config.scenario_args
    t_final = float(args.get("t_final", 1.2))
    n_samples = int(args.get("n_samples", 25))
    times = tuple(np.linspace(0.0, t_final, n_samples))
    G = standard_qbe_generator(pp, q, p, H)
    cfg = config.integrator_config(times)
    traj = propagate(G, rho0, cfg)
    rows, pops = _rows_and_pops(times, traj.states, q, p)

    purities = np.array([r.purity for r in rows])
    mineigs = np.array([r.min_eig for r in rows])
    over = np.nonzero(purities > 1.0 + 1e-6)[0]
    under = np.nonzero(mineigs < -1e-6)[0]
    expect_violation = bool(args.get("expect_violation", True))

    def head(n: int) -> dict:
        b = FockBasis(params=pp, n=n, omega_ref=basis.omega_ref) if isinstance(basis, FockBasis) \
            else GridBasis(params=pp, x_min=basis.x_min, x_max=basis.x_max, n=n)
        ops = canonical_ops(b, pp)
        Hn = system_hamiltonian(config.potential_spec(), ops["q"], ops["p"], pp)
        r0 = config.build_initial_state(ops["q"], ops["p"], Hn, pp)
        Gn = standard_qbe_generator(pp, ops["q"], ops["p"], Hn)
        tr = propagate(Gn, r0, cfg.with_updates(method="rk-adaptive"))
        pu = [purity(s) for s in tr.states]
        me = [np.linalg.eigvalsh(0.5 * (s.mat + s.mat.conj().T))[0] for s in tr.states]
        return {"max_purity": float(np.max(pu)), "min_eig": float(np.min(me))}

    verdict = convergence_check(head, basis.dim)
    scalars = {
        "max_purity": float(purities.max()),
        "min_min_eig": float(mineigs.min()),
        "first_t_purity_gt_1": float(times[over[0]]) if over.size else math.nan,
        "first_t_eig_lt_thresh": float(times[under[0]]) if under.size else math.nan,
    }
    conv_lines = [f"{'PASS' if verdict.passed else 'FAIL'} headline scalars at dim "
                  f"{basis.dim} vs {2*basis.dim}: max rel move "
                  f"{max(verdict.rel_moves.values()):.3e}"]
    assertions = [
        Assertion("purity exceeds 1 + 1e-6 at some sampled t",
                  bool(over.size) == expect_violation,
                  f"max purity {purities.max():.8f}"),
        Assertion("min eigenvalue drops below -1e-6 at some sampled t",
                  bool(under.size) == expect_violation,
                  f"min eigenvalue {mineigs.min():.3e}"),
        Assertion("truncation-doubling convergence", verdict.passed,
                  f"max rel move {max(verdict.rel_moves.values()):.3e}"),
    ]
    if expect_violation and over.size and under.size:
        assertions.append(Assertion(
            "purity threshold crossed at or before eigenvalue threshold",
            bool(times[over[0]] <= times[under[0]]),
            f"t_purity={times[over[0]]:.4g}, t_eig={times[under[0]]:.4g}"))
    return ScenarioResult(rows=rows, scalars=scalars, assertions=assertions,
                          convergence_lines=conv_lines, populations=pops)


def scenario_positive(config: RunConfig) -> ScenarioResult:
    """Normalized pipeline keeps every sample positive with purity <= 1."""
    pp, basis, q, p, H = config.build_system()
    sigma0 = config.build_initial_state(q, p, H, pp)
    args = config.scenario_args
    t_final = float(args.get("t_final", 20.0))
    n_samples = int(args.get("n_samples", 11))
    times = tuple(np.linspace(0.0, t_final, n_samples))
    res = positive_evolution(sigma0, pp, H, times, q=q,
                             integrator=config.integrator_config(times))
    rows, pops = _rows_and_pops(times, res.states, q, p, d_approx=res.d_approx)
    mineigs = np.array([r.min_eig for r in rows])
    purities = np.array([r.purity for r in rows])
    scalars = {"min_min_eig": float(mineigs.min()),
               "max_purity": float(purities.max()),
               "d_approx_final": float(res.d_approx[-1])}

    conv_lines = []
    conv_ok = True
    if isinstance(basis, FockBasis):
        def head(n: int) -> dict:
            b = FockBasis(params=pp, n=n, omega_ref=basis.omega_ref)
            ops = canonical_ops(b, pp)
            Hn = system_hamiltonian(config.potential_spec(), ops["q"], ops["p"], pp)
            s0 = config.build_initial_state(ops["q"], ops["p"], Hn, pp)
            r = positive_evolution(s0, pp, Hn, times, q=ops["q"])
            me = [np.linalg.eigvalsh(s.mat)[0] for s in r.states]
            pu = [purity(s) for s in r.states]
            return {"min_eig": float(np.min(me)), "max_purity": float(np.max(pu))}

        verdict = convergence_check(head, basis.dim // 2)
        conv_ok = verdict.passed
        conv_lines = [f"{'PASS' if conv_ok else 'FAIL'} headline scalars at dim "
                      f"{basis.dim // 2} vs {basis.dim}: max rel move "
                      f"{max(verdict.rel_moves.values()):.3e}"]

    assertions = [
        Assertion("min eigenvalue >= -1e-8 at every sample",
                  bool(np.all(mineigs >= -1e-8)), f"min {mineigs.min():.3e}"),
        Assertion("purity <= 1 + 1e-8 at every sample",
                  bool(np.all(purities <= 1.0 + 1e-8)), f"max {purities.max():.10f}"),
        Assertion("truncation-doubling convergence", conv_ok),
    ]
    return ScenarioResult(rows=rows, scalars=scalars, assertions=assertions,
                          convergence_lines=conv_lines, populations=pops)


def scenario_stationary(config: RunConfig) -> ScenarioResult:
    """Canonical bare state is a fixed point of the full pipeline."""
    pp, basis, q, p, H = config.build_system()
    sc = canonical_sigma(H, pp)
    G = sigma_generator(H, pp, q, mode="exact-sandwich")
    resid = stationarity_residual(G, sc)
    args = config.scenario_args
    times = tuple(np.linspace(0.0, float(args.get("t_final", 10.0)),
                              int(args.get("n_samples", 6))))
    res = positive_evolution(sc, pp, H, times, q=q,
                             integrator=config.integrator_config(times))
    drift = max(trace_distance(st, res.states[0]) for st in res.states)
    rows, pops = _rows_and_pops(times, res.states, q, p, d_approx=res.d_approx)
    scalars = {"stationarity_residual": resid, "max_trace_distance_drift": drift}
    assertions = [
        Assertion("residual ||G(sigma_can)||_1/||sigma_can||_1 <= 1e-8",
                  resid <= 1e-8, f"residual {resid:.3e}"),
        Assertion("rho(t) stays within 1e-8 trace distance of rho(0)",
                  drift <= 1e-8, f"max drift {drift:.3e}"),
    ]
    return ScenarioResult(rows=rows, scalars=scalars, assertions=assertions,
                          populations=pops)


def scenario_freeparticle_consistency(config: RunConfig) -> ScenarioResult:
    """Explicit V=0 generator vs the sandwich-transformed one.

    Measures the generator difference on a family of well-resolved
    Gaussian states across gamma in {0.5, 0.25, 0.125} at fixed C*kT and
    reports the fitted scaling exponent; asserts the exact agreement at
    the working truncation and the algebraic trace-rate formula against
    an independent finite-difference oracle.
    """
    pp0, basis, q, p, H = config.build_system()
    args = config.scenario_args
    CkT = float(args.get("CkT", 0.1))
    gammas = [float(g) for g in args.get("gammas", [0.5, 0.25, 0.125])]
    tests = [gaussian_state(q, p, pp0, var_q=v) for v in (0.3, 0.5, 0.8)]
    diffs = []
    for gam in gammas:
        kT = pp0.hbar / (2.0 * pp0.m * gam)
        pp = pp0.with_updates(T=kT / pp0.k, C=CkT / kT)
        M_exact = sigma_generator(H, pp, q, mode="exact-sandwich").to_matrix().mat
        M_free = to_matrix(free_particle_sigma_generator(pp, q, p)).mat
        D = M_exact - M_free
        act = max(np.linalg.norm((D @ s.mat.reshape(-1, order="F")).reshape(
            basis.dim, basis.dim, order="F")) for s in tests)
        diffs.append(act)
    exponent = float(np.polyfit(np.log(gammas), np.log(diffs), 1)[0])

    gam_t = float(args.get("gamma_trace", 0.25))
    kT = pp0.hbar / (2.0 * pp0.m * gam_t)
    pp = pp0.with_updates(T=kT / pp0.k, C=CkT / kT)
    Gfree = free_particle_sigma_generator(pp, q, p)
    sig = gaussian_state(q, p, pp, var_q=0.5, mean_p=0.4)
    algebraic = free_particle_trace_rate(pp, sig, p).real
    oracle = trace_rate_fd(Gfree, sig)
    generator_rate = float(np.trace(Gfree.apply_array(sig.mat)).real)
    rel_fd = abs(generator_rate - oracle) / max(abs(oracle), 1e-300)
    rel_alg = abs(algebraic - generator_rate) / max(abs(generator_rate), 1e-300)

    scalars = {
        "fitted_scaling_exponent": exponent,
        "diff_at_smallest_gamma": diffs[-1],
        "trace_rate_generator": generator_rate,
        "trace_rate_fd_oracle": oracle,
        "trace_rate_algebraic": algebraic,
    }
    assertions = [
        Assertion("explicit V=0 generator matches exact sandwich on resolved states",
                  diffs[-1] <= float(args.get("agreement_tol", 1e-5)),
                  f"action-norm residual {diffs[-1]:.3e} at gamma {gammas[-1]}"),
        Assertion("trace-rate formula matches FD oracle within 1e-6 relative",
                  rel_fd <= 1e-6 and rel_alg <= 1e-6,
                  f"rel vs oracle {rel_fd:.2e}, rel vs algebra {rel_alg:.2e}"),
    ]
    return ScenarioResult(rows=[], scalars=scalars, assertions=assertions)


def scenario_recoilless_trace(config: RunConfig) -> ScenarioResult:
    """Normalization D_approx is conserved once the kinetic term is dropped."""
    pp, basis, q, p, H = config.build_system()
    if not config.potential_spec().recoilless:
        raise ConfigError("recoilless-trace requires potential.recoilless = true")
    sigma0 = config.build_initial_state(q, p, H, pp)
    args = config.scenario_args
    times = tuple(np.linspace(0.0, float(args.get("t_final", 10.0)),
                              int(args.get("n_samples", 11))))
    res = positive_evolution(sigma0, pp, H, times, q=q,
                             integrator=config.integrator_config(times))
    d = res.d_approx
    spread = float((d.max() - d.min()) / max(abs(d[0]), 1e-300))
    rows, pops = _rows_and_pops(times, res.states, q, p, d_approx=d)
    scalars = {"d_approx_rel_spread": spread, "d_approx_initial": float(d[0])}
    assertions = [Assertion("Tr[e^{eta L} sigma(t)] constant within 1e-8 relative",
                            spread <= 1e-8, f"relative spread {spread:.3e}")]
    return ScenarioResult(rows=rows, scalars=scalars, assertions=assertions,
                          populations=pops)


def scenario_eta_crossrep(config: RunConfig) -> ScenarioResult:
    """Grid closed form vs Fock exponential of the coherence map."""
    pp, basis, q, p, H = config.build_system()
    if not isinstance(basis, FockBasis):
        raise ConfigError("eta-crossrep starts from a Fock basis")
    args = config.scenario_args
    grid = GridBasis(params=pp, x_min=float(args.get("x_min", -10.0)),
                     x_max=float(args.get("x_max", 10.0)),
                     n=int(args.get("grid_n", 160)))
    sigma = config.build_initial_state(q, p, H, pp)
    fock_mapped = eta_map(sigma, pp, "forward", q=q)
    on_grid = basis_change(sigma, grid)
    grid_mapped = eta_map(on_grid, pp, "forward")
    back = basis_change(grid_mapped, basis)
    delta = back.mat - fock_mapped.mat
    td = 0.5 * np.abs(np.linalg.eigvalsh(0.5 * (delta + delta.conj().T))).sum()
    scalars = {"cross_representation_trace_distance": td}
    assertions = [Assertion("trace distance <= 1e-6 at matched truncation",
                            td <= 1e-6, f"distance {td:.3e}")]
    return ScenarioResult(rows=[], scalars=scalars, assertions=assertions)


def scenario_choi_audit(config: RunConfig) -> ScenarioResult:
    """CP certificates: dissipator semigroup CP, standard equation not CP,
    composite normalized propagator not CP while trajectories stay positive."""
    pp, basis, q, p, H = config.build_system()
    args = config.scenario_args
    lir_times = [float(t) for t in args.get("lir_times", [0.1, 1.0, 10.0])]
    qbe_times = [float(t) for t in args.get("qbe_times", [0.5, 1.0, 2.0])]
    Ld = to_matrix(brownian_dissipator(pp, q))
    lir_min = min(is_completely_positive(superop_exp(Ld, t))[1] for t in lir_times)
    lir_ok = all(is_completely_positive(superop_exp(Ld, t))[0] for t in lir_times)

    Mqbe = to_matrix(standard_qbe_generator(pp, q, p, H))
    qbe_min = min(is_completely_positive(superop_exp(Mqbe, t))[1] for t in qbe_times)

    ngrid = int(args.get("composite_grid_n", 8))
    grid = GridBasis(params=pp, x_min=float(args.get("composite_x_min", -4.0)),
                     x_max=float(args.get("composite_x_max", 4.0)), n=ngrid)
    gops = canonical_ops(grid, pp)
    qg, pg = gops["q"], gops["p"]
    Hg = system_hamiltonian(PotentialSpec(coefficients=(0.0, 0.0, 0.5)), qg, pg, pp)
    Mtil = sigma_generator(Hg, pp, qg, mode="exact-sandwich").to_matrix().mat
    fwd = np.diag(eta_kernel_multiplier(grid, pp, sign=-1.0).reshape(-1, order="F"))
    inv = np.diag(eta_kernel_multiplier(grid, pp, sign=+1.0).reshape(-1, order="F"))
    comp_min = math.inf
    from scipy.linalg import expm as _expm

    from .superop import SuperoperatorMatrix
    for t in [float(t) for t in args.get("composite_times", [0.1, 0.5, 1.0])]:
        M = fwd @ _expm(t * Mtil) @ inv
        J = choi_matrix(SuperoperatorMatrix(grid, M))
        comp_min = min(comp_min, float(np.linalg.eigvalsh(0.5 * (J + J.conj().T))[0]))

    scalars = {"lir_choi_min": lir_min, "qbe_choi_min": qbe_min,
               "composite_choi_min": comp_min}
    assertions = [
        Assertion("e^{t L_ir} Choi PSD for all tested t", lir_ok,
                  f"min eig {lir_min:.3e}"),
        Assertion("standard-equation propagator Choi eigenvalue < -1e-6",
                  qbe_min < -1e-6, f"min eig {qbe_min:.3e}"),
        Assertion("composite normalized propagator has a negative Choi eigenvalue",
                  comp_min < -1e-6, f"min eig {comp_min:.3e}"),
    ]
    return ScenarioResult(rows=[], scalars=scalars, assertions=assertions)


def _microbath_setup(config: RunConfig):
    pp, basis, q, p, H = config.build_system()
    args = config.scenario_args
    n_modes = int(args.get("n_modes", 3))
    bath = BathSpec.build(pp, n_modes, per_mode_dim=_auto_mode_dims(pp, n_modes))
    bath.check_thermal_truncation(pp)
    return pp, basis, q, p, H, bath, args


def _auto_mode_dims(pp: PhysParams, n_modes: int) -> list:
    from .microbath import ohmic_discretization
    dims = []
    for mode in ohmic_discretization(pp.C, pp.omega_max, n_modes, hbar=pp.hbar):
        x = np.exp(-pp.hbar * mode.omega / pp.kT)
        dm = 3
        while x**dm > 1e-3:
            dm += 1
        dims.append(dm)
    return dims


def scenario_microbath_compare(config: RunConfig) -> ScenarioResult:
    """Exact finite-bath reduced dynamics vs the normalized pipeline."""
    pp0, basis, q, p, H, bath0, args = _microbath_setup(config)
    sigma0 = config.build_initial_state(q, p, H, pp0)
    t_fix = float(args.get("t_compare", 0.6))
    couplings = [float(c) for c in args.get("couplings", [0.2, 0.1, 0.05])]
    dists, min_eigs = [], []
    for C in couplings:
        pp = pp0.with_updates(C=C)
        bath = BathSpec.build(pp, len(bath0.modes),
                              per_mode_dim=bath0.per_mode_dim)
        HT = total_hamiltonian(H, q, bath, pp)
        rT0 = correlated_initial_state(sigma0, HT, H, bath, pp)
        reduced = exact_reduce(rT0, HT, [t_fix], system_basis=basis)[0]
        min_eigs.append(float(np.linalg.eigvalsh(reduced.mat)[0]))
        pred = positive_evolution(sigma0, pp, H, (0.0, t_fix), q=q).states[-1]
        dists.append(trace_distance(reduced, pred))
    recurrence = 2.0 * np.pi / (pp0.omega_max / len(bath0.modes))
    scalars = {f"trace_distance_C_{c}": d for c, d in zip(couplings, dists)}
    scalars["min_reduced_eig"] = min(min_eigs)
    scalars["recurrence_window"] = recurrence
    monotone = all(a > b for a, b in zip(dists, dists[1:]))
    assertions = [
        Assertion("exact reduced states positive (min eig >= -1e-10)",
                  min(min_eigs) >= -1e-10, f"min {min(min_eigs):.3e}"),
        Assertion("trace distance decreases with coupling",
                  monotone, " > ".join(f"{d:.4g}" for d in dists)),
        Assertion("comparison time inside recurrence window",
                  t_fix < recurrence, f"t={t_fix} < {recurrence:.3g}"),
    ]
    return ScenarioResult(rows=[], scalars=scalars, assertions=assertions)


def scenario_jolt_compare(config: RunConfig) -> ScenarioResult:
    """Product start shows the larger early-time purity transient."""
    pp, basis, q, p, H, bath, args = _microbath_setup(config)
    sigma0 = config.build_initial_state(q, p, H, pp)
    HT = total_hamiltonian(H, q, bath, pp)
    rT0_corr = correlated_initial_state(sigma0, HT, H, bath, pp)
    dims = bath.dims_with_system(basis.dim)
    red0 = partial_trace(rT0_corr, dims, keep=0, target_basis=basis)
    red0 = StateMatrix(basis, red0.mat / red0.mat.trace().real, role="rho")
    rT0_prod = product_initial_state(red0, bath, pp)
    t_b = 10.0 / pp.omega_max
    times = np.linspace(0.0, t_b, int(args.get("n_samples", 81)))
    rates = {}
    for name, rT0 in (("correlated", rT0_corr), ("product", rT0_prod)):
        reds = exact_reduce(rT0, HT, times, system_basis=basis)
        P = np.array([purity(r) for r in reds])
        rates[name] = float(np.abs(np.diff(P) / np.diff(times)).max())
    scalars = {"max_dPdt_product": rates["product"],
               "max_dPdt_correlated": rates["correlated"],
               "window_t_b": t_b}
    assertions = [Assertion(
        "early transient strictly larger for the product start",
        rates["product"] > rates["correlated"],
        f"product {rates['product']:.4g} vs correlated {rates['correlated']:.4g}")]
    return ScenarioResult(rows=[], scalars=scalars, assertions=assertions)


SCENARIOS = {
    "violate": (scenario_violate, lambda: _default_config(
        "violate", basis={"kind": "fock", "n": 40, "omega_ref": 1.0},
        initial_state={"kind": "gaussian", "var_q": 0.1})),
    "positive": (scenario_positive, lambda: _default_config(
        "positive", basis={"kind": "fock", "n": 28, "omega_ref": 1.0},
        potential={"coefficients": [0.0, 0.0, 0.5], "recoilless": False},
        initial_state={"kind": "gaussian", "var_q": 0.3, "mean_q": 0.5})),
    "stationary": (scenario_stationary, lambda: _default_config(
        "stationary", basis={"kind": "fock", "n": 24, "omega_ref": 1.0},
        potential={"coefficients": [0.0, 0.0, 0.5], "recoilless": False},
        initial_state={"kind": "canonical"})),
    "freeparticle-consistency": (scenario_freeparticle_consistency,
                                 lambda: _default_config(
        "freeparticle-consistency",
        basis={"kind": "fock", "n": 32, "omega_ref": 1.0})),
    "recoilless-trace": (scenario_recoilless_trace, lambda: _default_config(
        "recoilless-trace", basis={"kind": "grid", "n": 48, "x_min": -6.0, "x_max": 6.0},
        potential={"coefficients": [0.0, 0.0, 0.5], "recoilless": True},
        initial_state={"kind": "gaussian", "var_q": 0.5})),
    "eta-crossrep": (scenario_eta_crossrep, lambda: _default_config(
        "eta-crossrep", basis={"kind": "fock", "n": 28, "omega_ref": 1.0},
        params={"hbar": 1.0, "k": 1.0, "m": 1.0, "T": 1.0, "C": 0.1,
                "omega_max": 3.7699111843077517},
        initial_state={"kind": "canonical"},
        potential={"coefficients": [0.0, 0.0, 0.5], "recoilless": False})),
    "choi-audit": (scenario_choi_audit, lambda: _default_config(
        "choi-audit", basis={"kind": "fock", "n": 8, "omega_ref": 1.0})),
    "microbath-compare": (scenario_microbath_compare, lambda: _default_config(
        "microbath-compare", basis={"kind": "fock", "n": 8, "omega_ref": 1.0},
        params={"hbar": 1.0, "k": 1.0, "m": 1.0, "T": 2.0, "C": 0.2,
                "omega_max": 10.0},
        potential={"coefficients": [0.0, 0.0, 0.5], "recoilless": False},
        initial_state={"kind": "gaussian", "var_q": 0.5})),
    "jolt-compare": (scenario_jolt_compare, lambda: _default_config(
        "jolt-compare", basis={"kind": "fock", "n": 8, "omega_ref": 1.0},
        params={"hbar": 1.0, "k": 1.0, "m": 1.0, "T": 2.0, "C": 0.2,
                "omega_max": 10.0},
        potential={"coefficients": [0.0, 0.0, 0.5], "recoilless": False},
        initial_state={"kind": "gaussian", "var_q": 0.5})),
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def run_config(config: RunConfig, outdir: Path) -> int:
    execute, _ = SCENARIOS[config.scenario]
    result = execute(config)
    write_outputs(outdir, config, result)
    for a in result.assertions:
        print(f"[{'PASS' if a.passed else 'FAIL'}] {a.name}" +
              (f" ({a.detail})" if a.detail else ""))
    print(f"outputs in {outdir}")
    return 0 if result.passed else 2


def _resolve_outdir(args, config: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    if config.output:
        return Path(config.output)
    env = os.environ.get("QBE_OUT")
    if env:
        return Path(env) / config.scenario
    return Path("qbe_out") / config.scenario


def _run_sweep(base_dict: dict, sweep: str, args) -> int:
    if "=" not in sweep:
        raise ConfigError(f"--sweep '{sweep}' is not of the form key=v1,v2,...")
    key, raw = sweep.split("=", 1)
    values = [v.strip() for v in raw.split(",") if v.strip()]
    if not values:
        raise ConfigError("--sweep needs at least one value")
    jobs = []
    for v in values:
        d = _deep_copy_dict(base_dict)
        apply_override(d, f"{key}={v}")
        cfg = RunConfig.from_dict(d)
        outdir = _resolve_outdir(args, cfg) / f"{key.replace('.', '_')}={v}"
        jobs.append((cfg, outdir))
    codes = []
    with ThreadPoolExecutor(max_workers=min(4, len(jobs))) as pool:
        futures = [pool.submit(run_config, cfg, od) for cfg, od in jobs]
        codes = [f.result() for f in futures]
    return max(codes)


def _deep_copy_dict(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        out[k] = _deep_copy_dict(v) if isinstance(v, dict) else (
            list(v) if isinstance(v, list) else v)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qbe", description="quantum Brownian evolution experiment runner")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb")

    p_run = sub.add_parser("run", help="run a scenario from a TOML config file")
    p_run.add_argument("config", help="path to the TOML config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--override", action="append", default=[],
                       metavar="KEY=VAL", help="config override, last wins")
    p_run.add_argument("--sweep", default=None, metavar="KEY=V1,V2,...",
                       help="fan out one key over several values")

    p_sc = sub.add_parser("scenario", help="run a named preset scenario")
    p_sc.add_argument("name", help="scenario name (see list-scenarios)")
    p_sc.add_argument("--out", default=None, help="output directory")
    p_sc.add_argument("--override", action="append", default=[],
                      metavar="KEY=VAL", help="config override, last wins")
    p_sc.add_argument("--sweep", default=None, metavar="KEY=V1,V2,...",
                      help="fan out one key over several values")

    sub.add_parser("list-scenarios", help="print the available scenario names")

    args = parser.parse_args(argv)
    if args.verb is None:
        parser.print_help()
        return 1

    try:
        if args.verb == "list-scenarios":
            for name in sorted(SCENARIOS):
                print(name)
            return 0
        if args.verb == "run":
            path = Path(args.config)
            if not path.exists():
                raise ConfigError(f"config file not found: {path}")
            with open(path, "rb") as fh:
                try:
                    raw = tomllib.load(fh)
                except tomllib.TOMLDecodeError as exc:
                    raise ConfigError(f"TOML parse error in {path}: {exc}") from exc
        else:  # scenario
            if args.name not in SCENARIOS:
                raise ConfigError(
                    f"unknown scenario '{args.name}'; valid: {', '.join(sorted(SCENARIOS))}")
            raw = SCENARIOS[args.name][1]()
        for ov in args.override:
            apply_override(raw, ov)
        if args.sweep:
            return _run_sweep(raw, args.sweep, args)
        config = RunConfig.from_dict(raw)
        return run_config(config, _resolve_outdir(args, config))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except QbeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
