import json

import numpy as np
import pytest

from walkercell.cli import load_experiment, main
from walkercell.field import Grid, SpectralState, save_coeffs_json

NONDIM = """\
[nondim]
rayleigh = 1
prandtl = 1
delta0 = 1
delta1 = 1
r0 = 1
"""


def cfg_file(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_report(out):
    with open(out / "report.json") as fh:
        return json.load(fh)


def test_critical_run_writes_report(tmp_path):
    cfg = cfg_file(tmp_path, NONDIM)
    out = tmp_path / "out"
    assert main(["critical", "--config", cfg, "--out", str(out)]) == 0
    rep = read_report(out)
    pay = rep["payload"]
    assert pay["kind"] == "critical"
    assert pay["Rc"] == pytest.approx(811.2842689909436)
    assert pay["kc"] == 2 and pay["multiplicity"] == 2
    assert rep["seed"] == 0
    assert "versions" in rep and "walkercell" in rep["versions"]
    meta = json.load(open(out / "meta.json"))
    assert meta["wall_time_s"] >= 0


def test_reports_are_byte_deterministic(tmp_path):
    cfg = cfg_file(tmp_path, NONDIM)
    d1, d2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["critical", "--config", cfg, "--out", str(d1), "--seed", "5"]) == 0
    assert main(["critical", "--config", cfg, "--out", str(d2), "--seed", "5"]) == 0
    assert (d1 / "report.json").read_bytes() == (d2 / "report.json").read_bytes()


def test_seed_override_recorded(tmp_path):
    cfg = cfg_file(tmp_path, NONDIM + "[run]\nseed = 4\n")
    out = tmp_path / "out"
    assert main(["critical", "--config", cfg, "--out", str(out), "--seed", "9"]) == 0
    rep = read_report(out)
    assert rep["seed"] == 9 and rep["payload"]["seed"] == 9


def test_marginal_table(tmp_path):
    cfg = cfg_file(tmp_path, NONDIM + "[marginal]\nkband = 5\n")
    out = tmp_path / "out"
    assert main(["marginal", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "marginal.csv").read_text().splitlines()
    assert lines[0] == "k,R_marginal"
    assert len(lines) == 6
    pay = read_report(out)["payload"]
    rs = [row["R"] for row in pay["table"]]
    assert min(rs) == rs[1]  # k = 2 is critical
    assert pay["continuous"]["R"] <= min(rs)


def test_missing_config_is_config_error(tmp_path, capsys):
    out = tmp_path / "never"
    assert main(["critical", "--out", str(out)]) == 2
    assert "config error" in capsys.readouterr().err
    assert not out.exists()


def test_kind_mismatch_rejected(tmp_path):
    cfg = cfg_file(tmp_path, "[run]\nkind = marginal\n" + NONDIM)
    out = tmp_path / "never"
    assert main(["critical", "--config", cfg, "--out", str(out)]) == 2
    assert not out.exists()


def test_unknown_grid_key_rejected(tmp_path):
    cfg = cfg_file(tmp_path, NONDIM + "[grid]\nny = 4\n")
    assert main(["critical", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


def test_bad_option_value_rejected(tmp_path):
    cfg = cfg_file(tmp_path, NONDIM + "[critical]\nnz = soon\n")
    out = tmp_path / "out"
    assert main(["critical", "--config", cfg, "--out", str(out)]) == 2
    assert not (out / "report.json").exists()


def test_bad_threads_rejected(tmp_path):
    cfg = cfg_file(tmp_path, NONDIM)
    assert main(["critical", "--config", cfg, "--out", str(tmp_path / "x"),
                 "--threads", "0"]) == 2


def test_topology_synthetic_rolls(tmp_path):
    cfg = cfg_file(tmp_path, NONDIM + "[grid]\nnx = 16\nnz = 8\n"
                   "[topology]\nk = 1\namplitude = 1.0\nsvg = true\n")
    out = tmp_path / "out"
    assert main(["topology", "--config", cfg, "--out", str(out)]) == 0
    pay = read_report(out)["payload"]
    assert pay["pattern"] == "Rolls" and pay["cells"] == 2
    assert pay["in_E"] is True
    assert pay["stability"]["wall_to_wall_connections"] is True
    assert pay["stability"]["stable_in_htilde"] is True
    assert (out / "pattern.svg").exists()


def test_topology_from_state_file(tmp_path):
    g = Grid(1.0, 16, 8)
    s = SpectralState.zero(g)
    s.psi[1, 0] = 1j
    s.mean[0] = 20.0
    s = SpectralState(g, s.psi, s.mean, s.theta)
    state_path = str(tmp_path / "state.json")
    save_coeffs_json(s, state_path)
    cfg = cfg_file(tmp_path, NONDIM + f"[topology]\nstate = {state_path}\n")
    out = tmp_path / "out"
    assert main(["topology", "--config", cfg, "--out", str(out)]) == 0
    pay = read_report(out)["payload"]
    assert pay["pattern"] == "CrossChannelEast"
    assert pay["mean_flow"] == pytest.approx(20.0)
    assert pay["critical_points"] == []


def test_simulate_subcritical_writes_outputs(tmp_path):
    cfg = cfg_file(tmp_path, NONDIM + "[grid]\nnx = 16\nnz = 8\n"
                   "[simulate]\nratio = 0.9\nt_end = 0.5\ndt = 0.002\n"
                   "amplitude = 0.01\nrecord_interval = 0.1\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    pay = read_report(out)["payload"]
    assert pay["ratio"] == pytest.approx(0.9)
    assert pay["verdict"] == "max_time"
    assert pay["final_amplitude"] < 0.01
    assert "mode_amplitude" not in pay  # subcritical: no branch prediction
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,amplitude,mean_flow"
    assert len(lines) > 3
    assert (out / "final_state.json").exists()
    assert (out / "final_fields.csv").exists()


def test_simulate_blowup_exits_3_with_diagnostics(tmp_path, capsys):
    cfg = cfg_file(tmp_path, NONDIM + "[grid]\nnx = 16\nnz = 8\n"
                   "[simulate]\nratio = 1.5\nt_end = 5\ndt = 0.5\namplitude = 5.0\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 3
    assert "numeric failure" in capsys.readouterr().err
    diag = json.load(open(out / "diagnostics.json"))
    assert diag["error"] == "BlowUpError"
    assert "traceback" in diag
    assert not (out / "report.json").exists()


def test_verify_unknown_suite(tmp_path):
    assert main(["verify", "bogus", "--out", str(tmp_path / "x")]) == 2


def test_verify_suite_runs_and_is_deterministic(tmp_path, capsys):
    d1, d2 = tmp_path / "v1", tmp_path / "v2"
    assert main(["verify", "determinism", "--out", str(d1), "--seed", "3"]) == 0
    first = capsys.readouterr().out
    assert "[PASS] 14 determinism" in first
    assert main(["verify", "determinism", "--out", str(d2), "--seed", "3"]) == 0
    assert (d1 / "report.json").read_bytes() == (d2 / "report.json").read_bytes()
    pay = read_report(d1)["payload"]
    assert pay["suite"] == "determinism"
    assert pay["all_passed"] is True


def test_load_experiment_defaults(tmp_path):
    cfg = cfg_file(tmp_path, NONDIM + "[run]\nout = somewhere\n")

    class Args:
        config = cfg
        out = None
        seed = None
        threads = None

    ec = load_experiment("critical", Args())
    assert str(ec.out) == "somewhere"
    assert ec.seed == 0 and ec.threads == 1
    assert ec.params.rayleigh == 1.0
