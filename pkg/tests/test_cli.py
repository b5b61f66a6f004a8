from __future__ import annotations

import json

import numpy as np
import pytest

from lowtrot import cli
from lowtrot.hamiltonian import load_spec
from lowtrot.lab import ExperimentRecord, gallery_model, read_csv
from lowtrot.linalg import read_dump


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_no_arguments(capsys):
    code, _, err = run(capsys)
    assert code == cli.EXIT_ERROR and "usage" in err


def test_unknown_flag(capsys):
    assert run(capsys, "leakage", "--bogus")[0] == cli.EXIT_ERROR
    assert run(capsys, "frobnicate")[0] == cli.EXIT_ERROR


def test_help_exits_zero(capsys):
    assert run(capsys, "--help")[0] == cli.EXIT_OK


def test_leakage_example(capsys):
    code, out, _ = run(capsys, "leakage", "--model", "heisenberg_chain", "--n", "6", "--s", "0.2",
                       "--lo", "E0+1J", "--hi", "+6J")
    assert code == cli.EXIT_OK
    assert "1 records, 0 violations" in out


def test_leakage_variants(capsys, tmp_path):
    base = ["leakage", "--model", "tfim_chain", "--n", "4", "--couplings", "J=1,h=0.5", "--lo", "E0", "--hi", "+1J"]
    code, out, _ = run(capsys, *base, "--s", "0.1", "--all-layers", "--out", str(tmp_path), "--format", "csv")
    assert code == 0 and "3 records" in out
    assert len(read_csv(tmp_path / "leakage.csv")) == 3
    assert run(capsys, *base, "--moment", "2", "--layer", "1")[0] == 0
    assert run(capsys, *base, "--s", "0.1", "--cutoff", "+0.5J", "--which", "projected")[0] == 0


def test_bad_model_is_error(capsys):
    code, _, err = run(capsys, "leakage", "--model", "nope", "--n", "4", "--lo", "E0", "--hi", "E0")
    assert code == cli.EXIT_ERROR and "error" in err
    assert run(capsys, "leakage", "--model", "tfim_chain", "--n", "4", "--couplings", "q=3",
               "--lo", "E0", "--hi", "E0")[0] == cli.EXIT_ERROR


def test_violation_exit_code(capsys, monkeypatch):
    def fake(m, layer, s, lo, hi):
        return ExperimentRecord("leakage", "fake", None, 2, measured=1.0, bound=0.0)

    monkeypatch.setattr(cli.measure, "measure_leakage", fake)
    code, out, _ = run(capsys, "leakage", "--model", "heisenberg_chain", "--n", "4", "--lo", "E0", "--hi", "+1J")
    assert code == cli.EXIT_VIOLATION and "1 violations" in out


def test_model_writes_spec(capsys, tmp_path):
    path = tmp_path / "spec.json"
    code, out, _ = run(capsys, "model", "--name", "heisenberg_chain", "--n", "6", "--out", str(path), "--spectrum")
    assert code == 0 and "E0" in out
    spec = load_spec(path)
    assert spec.n_sites == 6 and spec.n_layers == 2
    code, _, _ = run(capsys, "model", "--name", "xy_chain", "--n", "4", "--out", str(tmp_path / "d"), "--p", "2")
    assert code == 0
    assert (tmp_path / "d" / "spec.json").is_file() and (tmp_path / "d" / "schedule_p2.json").is_file()


def test_error_and_corollary(capsys):
    code, out, _ = run(capsys, "error", "--model", "heisenberg_chain", "--n", "6", "--s", "0.05", "--delta", "E0+0.5J")
    assert code == 0 and "2 records" in out and "identity residual" in out
    code, out, err = run(capsys, "corollary", "--model", "heisenberg_chain", "--n", "4", "--s", "0.05",
                         "--delta", "E0+0.5J", "--budget", "0.1", "--which", "4")
    assert code == 0 and "1 records" in out and "warning" in err


def test_fit(capsys, tmp_path):
    code, out, _ = run(capsys, "fit", "--model", "heisenberg_chain", "--n", "4", "--p", "2", "--s-min", "0.02",
                       "--s-max", "0.2", "--delta", "E0+0.5J", "--out", str(tmp_path), "--svg")
    assert code == 0 and "low_energy slope" in out
    assert (tmp_path / "fit.dat").is_file() and (tmp_path / "fit.svg").is_file()


def test_plan_delta_zero(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    run(capsys, "model", "--name", "heisenberg_chain", "--n", "6", "--out", str(spec))
    code, out, _ = run(capsys, "plan", "--spec", str(spec), "--t", "1", "--eps", "0.1", "--p", "1", "--delta", "0")
    assert code == 0
    res = json.loads(out)
    assert res["pieces"]["s1"] is None and res["binding"] != "s1"
    assert res["r"] >= 1 and res["r_prior"] >= 1


def test_plan_grid_and_compare(capsys, tmp_path):
    code, out, _ = run(capsys, "plan", "--model", "heisenberg_chain", "--n", "6", "--t", "1", "10", "--eps", "0.1",
                       "--p", "1", "2", "--grouped", "--out", str(tmp_path))
    assert code == 0 and len(json.loads((tmp_path / "plan.json").read_text())) == 4
    code, out, _ = run(capsys, "plan", "--model", "heisenberg_chain", "--n", "6", "--t", "1", "--eps", "0.1", "0.01",
                       "--p", "1", "--compare", "--n-grid", "100", "1000", "10000", "--out", str(tmp_path), "--svg")
    assert code == 0
    assert json.loads(out.split("\nwrote")[0])["exponents"]["1"]["n_term_N"] == pytest.approx(2 / 3, abs=0.02)
    assert (tmp_path / "plan.csv").is_file() and (tmp_path / "plan_p1.svg").is_file()
    assert run(capsys, "plan", "--t", "1", "--eps", "0.1")[0] == cli.EXIT_ERROR


def test_sweep_config(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": "heisenberg_chain", "n": [4], "s": [0.1], "lo": ["E0"], "hi": ["+1J"]}))
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--out", str(tmp_path / "o"), "--format", "csv",
                       "--workers", "2")
    assert code == 0 and "2 records, 0 violations" in out
    assert (tmp_path / "o" / "sweep.csv").is_file()
    assert run(capsys, "sweep")[0] == cli.EXIT_ERROR
    cfg.write_text("{not json")
    assert run(capsys, "sweep", "--config", str(cfg))[0] == cli.EXIT_ERROR


@pytest.mark.parametrize("what", ["H", "layer", "layer_evolution", "evolution", "formula", "projector"])
def test_dump(capsys, tmp_path, what):
    f = tmp_path / "m.bin"
    code, _, _ = run(capsys, "dump", "--model", "heisenberg_chain", "--n", "3", "--what", what, "--s", "0.1",
                     "--file", str(f))
    assert code == 0
    mat = read_dump(f)
    assert mat.shape == (8, 8)
    if what == "H":
        assert np.allclose(mat, gallery_model("heisenberg_chain", 3).H.matrix)
