import csv
import json

from hamlearn.cli import main


def test_generate_then_learn(tmp_path, capsys):
    assert main(["generate", "--n-qubits", "3", "--seed", "4", "--out", str(tmp_path)]) == 0
    h_path = tmp_path / "hamiltonian.json"
    assert json.loads(h_path.read_text())["n_qubits"] == 3
    out = tmp_path / "run"
    code = main(["learn", "--hamiltonian", str(h_path), "--epsilon", "0.2", "--delta", "0.2",
                 "--seed", "1", "--out", str(out)])
    assert code == 0
    rows = list(csv.DictReader(open(out / "estimates.csv")))
    assert len(rows) == 9
    assert all(float(r["abs_error"]) <= 0.2 for r in rows)
    manifest = json.loads((out / "learn.json").read_text())
    assert manifest["passed"] and len(manifest["config_hash"]) == 12
    assert "learned 9 coefficients" in capsys.readouterr().out


def test_config_file_and_tvbound_study(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tv_epsilons": [0.1, 0.2], "tv_times": [1.0, 2.0],
                               "tv_etas": [0.0, 0.1, 0.2, 0.3]}))
    assert main(["study", "tvbound", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "tvbound.csv")))
    assert len(rows) == 1 + 16
    assert "PASS" in capsys.readouterr().out


def test_bad_input_exits_with_code_two(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"eta_meas": 0.7}))
    assert main(["study", "tvbound", "--config", str(cfg)]) == 2
    assert "error" in capsys.readouterr().err
