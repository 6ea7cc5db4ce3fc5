import json

import numpy as np

from subspace_perturb.cli import main
from subspace_perturb.linalg import write_matrix


def test_experiment_to_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"replicates": 4, "max_dim": 5}))
    out = tmp_path / "r.json"
    code = main(["norm_suite", "--config", str(cfg), "--seed", "3", "--out", str(out), "--format", "json"])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["base_seed"] == 3
    assert doc["aggregate"]["violation_count"] == 0


def test_experiment_to_stdout(capsys):
    assert main(["norm_suite", "--replicates", "2"]) == 0
    assert capsys.readouterr().out.startswith("kind,name,value,")


def test_violations_exit_code(monkeypatch, capsys):
    import subspace_perturb.cli as cli
    from subspace_perturb.harness import ExperimentReport

    def fake(config):
        return ExperimentReport(config.experiment, config.to_dict(), ["a"], aggregate={"violation_count": 3})

    monkeypatch.setattr(cli, "run_experiment", fake)
    assert main(["entrywise"]) == 2


def test_usage_and_config_errors(tmp_path, capsys):
    assert main(["entrywise", "--replicates", "0"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"unknown": 1}')
    assert main(["entrywise", "--config", str(bad)]) == 1
    bad.write_text("not json")
    assert main(["entrywise", "--config", str(bad)]) == 1
    try:
        main(["nonsense"])
    except SystemExit as exc:
        assert exc.code == 1


def test_norms_and_align(tmp_path, capsys):
    m = tmp_path / "a.txt"
    write_matrix(np.array([[1.0, 1.0], [0.0, 1.0]]), m)
    assert main(["norms", "--matrix", str(m)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert abs(doc["two_to_inf"] - np.sqrt(2)) < 1e-15
    u, uh = tmp_path / "u.txt", tmp_path / "uh.txt"
    write_matrix(np.array([[1.0], [0.0]]), u)
    write_matrix(np.array([[np.cos(0.3)], [np.sin(0.3)]]), uh)
    assert main(["align", "--u", str(u), "--uhat", str(uh)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert abs(doc["canonical_angles"][0] - 0.3) < 1e-14
    assert main(["norms", "--matrix", str(tmp_path / "missing.txt")]) == 1
