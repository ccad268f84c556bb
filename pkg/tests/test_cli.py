import pytest

from qbrownian.cli import (SCENARIOS, RunConfig, apply_override, fmt, main)
from qbrownian.errors import ConfigError


def run_cli(*argv):
    return main(list(argv))


def test_list_scenarios(capsys):
    assert run_cli("list-scenarios") == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 9
    assert out == sorted(out)
    assert "violate" in out and "jolt-compare" in out


def test_scenario_presets_materialize():
    for name, (_, make_default) in SCENARIOS.items():
        cfg = RunConfig.from_dict(make_default())
        assert cfg.scenario == name


def test_missing_param_key(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("""
scenario = "stationary"
[params]
hbar = 1.0
k = 1.0
m = 1.0
C = 0.1
omega_max = 10.0
[basis]
kind = "fock"
n = 10
""")
    assert run_cli("run", str(cfg)) == 1
    assert "params.T" in capsys.readouterr().err


def test_unknown_scenario(capsys):
    assert run_cli("scenario", "nope") == 1
    err = capsys.readouterr().err
    assert "violate" in err and "stationary" in err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('scenario = "stationary"\nbogus = 1\n')
    assert run_cli("run", str(cfg)) == 1
    assert "bogus" in capsys.readouterr().err


def test_override_parsing():
    d = {"params": {"C": 0.1}}
    apply_override(d, "params.C=0.25")
    assert d["params"]["C"] == 0.25
    apply_override(d, "basis.kind=fock")
    assert d["basis"]["kind"] == "fock"
    apply_override(d, "integrator.sample_times=[0.0, 1.0]")
    assert d["integrator"]["sample_times"] == [0.0, 1.0]
    apply_override(d, "potential.recoilless=true")
    assert d["potential"]["recoilless"] is True
    with pytest.raises(ConfigError):
        apply_override(d, "no_equals_sign")


def test_fmt_is_twelve_significant_digits():
    assert fmt(1.0) == "1.00000000000e+00"
    assert fmt(float("nan")) == "nan"
    assert fmt(None) == "nan"
    assert fmt(-0.0252) == "-2.52000000000e-02"


@pytest.fixture(scope="module")
def stationary_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("stationary")
    code = run_cli("scenario", "stationary", "--out", str(out),
                   "--override", "basis.n=16")
    return code, out


def test_stationary_exit_code_and_files(stationary_run):
    code, out = stationary_run
    assert code == 0
    for name in ("diagnostics.csv", "trajectory.csv", "summary.txt", "config.toml"):
        assert (out / name).exists(), name


def test_diagnostics_schema(stationary_run):
    _, out = stationary_run
    header = (out / "diagnostics.csv").read_text().splitlines()[0]
    assert header == ("t,trace_re,trace_im,purity,min_eig,herm_defect,"
                      "mean_q,mean_p,var_q,var_p,cov_qp,D_approx,gauss_defect")


def test_summary_round_trips_final_row(stationary_run):
    _, out = stationary_run
    lines = (out / "diagnostics.csv").read_text().strip().splitlines()
    final = lines[-1].split(",")
    header = lines[0].split(",")
    summary = (out / "summary.txt").read_text()
    for name, value in zip(header, final):
        assert f"{name} = {value}" in summary


def test_deterministic_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli("scenario", "stationary", "--out", str(out),
                       "--override", "basis.n=12") == 0
    for name in ("diagnostics.csv", "trajectory.csv", "summary.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_violate_inverted_assertion_exits_2(tmp_path):
    code = run_cli("scenario", "violate", "--out", str(tmp_path / "v"),
                   "--override", "params.C=0", "--override", "basis.n=16",
                   "--override", "scenario_args.t_final=0.5")
    assert code == 2
    summary = (tmp_path / "v" / "summary.txt").read_text()
    assert "FAIL" in summary


def test_small_violate_passes(tmp_path):
    code = run_cli("scenario", "violate", "--out", str(tmp_path / "v"),
                   "--override", "basis.n=24")
    assert code == 0


def test_sweep_fans_out(tmp_path):
    code = run_cli("scenario", "stationary", "--out", str(tmp_path / "sw"),
                   "--override", "basis.n=12", "--sweep", "params.C=0.1,0.2")
    assert code == 0
    assert (tmp_path / "sw" / "params_C=0.1" / "summary.txt").exists()
    assert (tmp_path / "sw" / "params_C=0.2" / "summary.txt").exists()


def test_qbe_out_env(tmp_path, monkeypatch):
    monkeypatch.setenv("QBE_OUT", str(tmp_path))
    monkeypatch.chdir(tmp_path)
    code = run_cli("scenario", "stationary", "--override", "basis.n=12")
    assert code == 0
    assert (tmp_path / "stationary" / "summary.txt").exists()


def test_run_from_materialized_config(tmp_path):
    out1 = tmp_path / "first"
    assert run_cli("scenario", "stationary", "--out", str(out1),
                   "--override", "basis.n=12") == 0
    out2 = tmp_path / "second"
    assert run_cli("run", str(out1 / "config.toml"), "--out", str(out2)) == 0
    assert (out2 / "summary.txt").read_bytes() == (out1 / "summary.txt").read_bytes()
