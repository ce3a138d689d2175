import json
import subprocess
import sys

import pytest

from linthermo.cli import run

BASE = {
    "seed": 5,
    "space": {"norm_kind": "lp", "p": 1, "truncation_dim": 20},
    "weights": {"kind": "constant", "c": 2.0},
    "potential": {"kind": "zero"},
    "grid": {"depth": 1, "resolution": 9},
    "chain": {"steps": 200, "burn_in": 10, "chains": 5},
    "sweep": {"t": [1, 2, 4]},
    "maximize": {"k_max": 1, "starts": 2},
    "mane": {"m": 0.0, "n_max": 6, "eps": [1.0, 0.1], "pairs": 2},
}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def summary(out):
    return json.loads((out / "summary.json").read_text())


def test_spectrum_zero_potential(tmp_path):
    out = tmp_path / "out"
    assert run(["spectrum", "--config", write(tmp_path, BASE), "--out", str(out)]) == 0
    res = summary(out)["result"]
    assert abs(res["spectral"]["lambda"] - 1.0) <= 1e-10
    assert (out / "meta.json").exists()
    assert (out / "tables" / "psi.csv").read_text().startswith("x1,psi\n")
    assert (out / "plots" / "psi_slice.csv").exists()
    assert (out / "plots" / "psi_slice.png").stat().st_size > 0


@pytest.mark.parametrize("sub", ["gibbs", "sweep", "maximize", "chaos", "mane"])
def test_subcommands_write_artifacts(tmp_path, sub):
    cfg = dict(BASE, potential={"kind": "neg_dist", "parameters": {"v": "fixed_point",
                                                                     "depth": 1}})
    out = tmp_path / sub
    assert run([sub, "--config", write(tmp_path, cfg), "--out", str(out)]) == 0
    assert summary(out)["subcommand"] == sub
    assert list((out / "tables").glob("*.csv"))
    assert list((out / "plots").glob("*.csv")) or sub == "mane"


def test_same_seed_same_summary(tmp_path):
    cfg = write(tmp_path, dict(BASE, potential={"kind": "quadratic"}))
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["gibbs", "--config", cfg, "--out", str(a)]) == 0
    assert run(["gibbs", "--config", cfg, "--out", str(b)]) == 0
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
    c = tmp_path / "c"
    assert run(["gibbs", "--config", cfg, "--out", str(c), "--seed", "6"]) == 0
    assert (a / "summary.json").read_bytes() != (c / "summary.json").read_bytes()


def test_missing_seed_fails_with_json(tmp_path, capsys):
    cfg = {k: v for k, v in BASE.items() if k != "seed"}
    code = run(["spectrum", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")])
    err = json.loads(capsys.readouterr().out)
    assert code != 0
    assert err == {"error": "config", "path": "seed", "message": err["message"]}


def test_bad_segment_is_named(tmp_path, capsys):
    cfg = dict(BASE, potential={"kind": "no_such_thing"})
    assert run(["spectrum", "--config", write(tmp_path, cfg)]) != 0
    assert json.loads(capsys.readouterr().out)["path"] == "potential.kind"
    cfg = dict(BASE, grid={"resolution": "many"})
    assert run(["spectrum", "--config", write(tmp_path, cfg)]) != 0
    assert json.loads(capsys.readouterr().out)["path"] == "grid.resolution"


def test_missing_config_file(tmp_path, capsys):
    assert run(["spectrum", "--config", str(tmp_path / "nope.json")]) != 0
    assert json.loads(capsys.readouterr().out)["error"] == "config"


def test_runtime_failure_is_json(tmp_path, capsys):
    cfg = dict(BASE, potential={"kind": "constant", "parameters": {"kappa": 1e4}})
    assert run(["spectrum", "--config", write(tmp_path, cfg), "--out",
                str(tmp_path / "o")]) == 1
    err = json.loads(capsys.readouterr().out)
    assert err["error"] == "FloatingPointError" and err["subcommand"] == "spectrum"


def test_output_dir_precedence(tmp_path, monkeypatch):
    cfg = dict(BASE, output={"dir": str(tmp_path / "from_cfg")})
    path = write(tmp_path, cfg)
    assert run(["chaos", "--config", path]) == 0
    assert (tmp_path / "from_cfg" / "summary.json").exists()
    monkeypatch.setenv("LINTHERMO_OUT", str(tmp_path / "from_env"))
    assert run(["chaos", "--config", path]) == 0
    assert (tmp_path / "from_env" / "summary.json").exists()
    assert run(["chaos", "--config", path, "--out", str(tmp_path / "from_flag")]) == 0
    assert (tmp_path / "from_flag" / "summary.json").exists()


def test_verify_examples_entry_point(tmp_path):
    out = tmp_path / "verify"
    proc = subprocess.run([sys.executable, "-m", "linthermo", "verify-examples",
                           "--seed", "0", "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    res = summary(out)["result"]
    assert res["all_passed"]
    assert all(c["passed"] for c in res["checks"])
