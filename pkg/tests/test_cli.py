"""End-to-end CLI contract: commands, formats, exit codes, determinism."""

import json
import subprocess
import sys

import numpy as np
import pytest

from cuspkit.cli import main


def run_cli(*argv):
    return main(list(argv))


def test_analyze_curtu(tmp_path):
    out = tmp_path / "report.json"
    rc = run_cli("analyze", "--model", "curtu", "--out", str(out))
    assert rc == 0
    d = json.loads(out.read_text())
    assert d["schema_version"] == 1
    assert d["cusp"]["x_star"] == pytest.approx(0.933, abs=1e-3)
    assert d["conditions"]["all_satisfied"] is True
    assert d["sao"]["n_sao"] >= 1
    assert d["equilibrium"]["classification"] == "saddle_focus"


def test_analyze_morris_lecar(tmp_path):
    out = tmp_path / "ml.json"
    rc = run_cli("analyze", "--model", "morris_lecar", "--out", str(out))
    assert rc == 0
    d = json.loads(out.read_text())
    assert d["cusp"]["d_star"] == pytest.approx(0.02, abs=0.005)
    assert d["reduced"]["gamma"] == pytest.approx(0.002, abs=5e-4)
    assert d["conditions"]["all_satisfied"] is True


def test_analyze_no_inhibition_exit_2(tmp_path):
    out = tmp_path / "b0.json"
    rc = run_cli("analyze", "--model", "curtu", "--set", "b=0.0",
                 "--out", str(out))
    assert rc == 2
    d = json.loads(out.read_text())          # report written either way
    assert d["conditions"]["c1"] is False


def test_analyze_unknown_model_exit_4():
    assert run_cli("analyze", "--model", "nonsense") == 4


def test_analyze_unknown_param_exit_4():
    assert run_cli("analyze", "--model", "curtu", "--set", "qq=1.0") == 4


def test_bad_bracket_exit_4():
    assert run_cli("analyze", "--model", "curtu", "--bracket", "oops") == 4


def test_no_fold_in_bracket_exit_3():
    assert run_cli("analyze", "--model", "curtu", "--bracket",
                   "0.2,0.4") == 3


def test_config_file_roundtrip(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "curtu",
                               "params": {"b": 0.6055}, "epsilon": 0.01}))
    out = tmp_path / "rep.json"
    assert run_cli("analyze", "--config", str(cfg), "--out", str(out)) == 0
    d = json.loads(out.read_text())
    assert d["params"]["b"] == 0.6055


def test_config_unknown_key_exit_4(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "curtu", "widgets": 5}))
    assert run_cli("analyze", "--config", str(cfg)) == 4


def test_config_invalid_json_exit_4(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert run_cli("analyze", "--config", str(cfg)) == 4


def test_simulate_and_signature_roundtrip(tmp_path):
    csv = tmp_path / "run.csv"
    rc = run_cli("simulate", "--model", "curtu", "--t-end", "300",
                 "--out", str(csv))
    assert rc == 0
    with open(csv) as fh:
        assert fh.readline().strip() == "t,x1,x2,y1,y2"
    sig = tmp_path / "sig.json"
    rc = run_cli("signature", "-i", str(csv), "--out", str(sig))
    assert rc == 0
    d = json.loads(sig.read_text())
    assert d["schema_version"] == 1
    assert "events" in d


def test_simulate_model_channel_names(tmp_path):
    csv = tmp_path / "run.csv"
    run_cli("simulate", "--model", "curtu", "--t-end", "10",
            "--model-names", "--out", str(csv))
    with open(csv) as fh:
        assert fh.readline().strip() == "t,u1,u2,a1,a2"


def test_simulate_symmetric_ic(tmp_path):
    csv = tmp_path / "sym.csv"
    rc = run_cli("simulate", "--model", "curtu", "--symmetric-ic",
                 "--t-end", "50", "--out", str(csv))
    assert rc == 0
    data = np.loadtxt(csv, delimiter=",", skiprows=1)
    assert np.abs(data[:, 1] - data[:, 2]).max() < 1e-8


def test_signature_constant_input_warns(tmp_path):
    csv = tmp_path / "const.csv"
    with open(csv, "w") as fh:
        fh.write("t,x1,x2,y1,y2\n")
        for k in range(50):
            fh.write(f"{k * 0.1},1.0,1.0,0.5,0.5\n")
    out = tmp_path / "sig.json"
    rc = run_cli("signature", "-i", str(csv), "--out", str(out))
    assert rc == 0
    d = json.loads(out.read_text())
    assert d["events"] == []
    assert d["warning"]


def test_hopf_cli(tmp_path):
    out = tmp_path / "hopf.json"
    rc = run_cli("hopf", "--model", "curtu", "--param", "b",
                 "--bracket", "0.55,0.66", "--out", str(out))
    assert rc == 0
    d = json.loads(out.read_text())
    assert d["found"] is True
    assert abs(d["trace_a"]) < 1e-10
    assert d["det_a"] > 0
    assert d["omega_h"] / d["predicted_omega"] == pytest.approx(1.0, abs=0.15)


def test_hopf_not_found_exit_3(tmp_path):
    out = tmp_path / "nf.json"
    rc = run_cli("hopf", "--model", "curtu", "--param", "b",
                 "--bracket", "0.70,0.75", "--out", str(out))
    assert rc == 3
    d = json.loads(out.read_text())
    assert d["found"] is False


def test_sweep_deterministic_across_jobs(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    args = ["sweep", "--model", "curtu", "--grid", "I=0.66:0.70:2",
            "--t-end", "300"]
    assert run_cli(*args, "--jobs", "1", "--out", str(a)) == 0
    assert run_cli(*args, "--jobs", "4", "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_thread_cap_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CUSPKIT_THREADS", "1")
    out = tmp_path / "s.csv"
    assert run_cli("sweep", "--model", "curtu", "--grid", "I=0.67:0.69:2",
                   "--t-end", "200", "--jobs", "8", "--out", str(out)) == 0


def test_sweep_row_content(tmp_path):
    out = tmp_path / "sweep.csv"
    rc = run_cli("sweep", "--model", "curtu", "--grid", "I=0.62:0.74:7",
                 "--t-end", "1800", "--out", str(out))
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    assert len(rows) == 7
    target = [r for r in rows if abs(float(r["I"]) - 0.68) < 1e-12]
    assert len(target) == 1
    row = target[0]
    assert row["all_satisfied"] == "true"
    assert row["mmo_present"] == "true"
    assert row["error"] == ""


def test_sweep_matches_analyze(tmp_path):
    # a 1x1 grid agrees with the analyze report on the shared quantities
    out = tmp_path / "one.csv"
    run_cli("sweep", "--model", "curtu", "--grid", "I=0.68:0.68:1",
            "--t-end", "200", "--out", str(out))
    lines = out.read_text().strip().splitlines()
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    rep = tmp_path / "an.json"
    run_cli("analyze", "--model", "curtu", "--out", str(rep))
    d = json.loads(rep.read_text())
    assert float(row["x_star"]) == pytest.approx(d["cusp"]["x_star"],
                                                 rel=1e-12)
    assert float(row["gamma"]) == pytest.approx(d["reduced"]["gamma"],
                                                rel=1e-12)
    assert float(row["w_eq"]) == pytest.approx(d["equilibrium"]["w_eq"],
                                               rel=1e-9)


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cuspkit.cli", "analyze", "--model", "curtu",
         "--set", "b=0.0"],
        capture_output=True, text=True)
    assert proc.returncode == 2
