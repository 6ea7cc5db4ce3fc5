import json

import jsonschema
import numpy as np
import pytest

from subspace_perturb.harness import (
    REPORT_SCHEMA,
    ConfigError,
    ExperimentReport,
    fit_loglog_slope,
    load_config,
    read_report,
    run_experiment,
    scale_to_inf_norm,
    write_report,
)
from subspace_perturb.stream import SeededStream

SMALL = {
    "covariance": {"d_grid": [20, 40], "replicates": 2, "n_factor": 5},
    "lowrank_recovery": {"dims": [[20, 200]], "replicates": 3},
    "omnibus": {"n_grid": [60, 120], "rho_grid": [0.0, 0.5, 1.0], "replicates": 2},
    "entrywise": {"replicates": 5, "p": 20},
    "decomposition_suite": {"replicates": 3, "max_dim": 20, "max_rank": 3},
    "norm_suite": {"replicates": 10, "max_dim": 6},
    "bounds_suite": {"replicates": 3, "bounds": ["baseline", "davis_kahan"]},
}


@pytest.mark.parametrize("name", sorted(SMALL))
def test_small_runs_are_clean_and_deterministic(name, tmp_path):
    cfg = load_config(dict(SMALL[name], experiment=name, base_seed=9))
    rep = run_experiment(cfg)
    assert rep.violations == 0
    assert rep.rows
    for fmt in ("csv", "json"):
        a, b = tmp_path / f"a.{fmt}", tmp_path / f"b.{fmt}"
        write_report(rep, fmt, a)
        write_report(run_experiment(cfg), fmt, b)
        assert a.read_bytes() == b.read_bytes()
    doc = json.loads((tmp_path / "a.json").read_text())
    jsonschema.validate(doc, REPORT_SCHEMA)


def test_round_trip_aggregates(tmp_path):
    rep = run_experiment(dict(SMALL["entrywise"], experiment="entrywise"))
    for fmt in ("csv", "json"):
        path = tmp_path / f"r.{fmt}"
        write_report(rep, fmt, path)
        rows, agg = read_report(path)
        assert len(rows) == len(rep.rows)
        for k, v in rep.aggregate.items():
            if isinstance(v, float) and np.isnan(v):
                assert agg[k] is None or np.isnan(agg[k])
            else:
                assert agg[k] == v


def test_empty_report_is_header_only(tmp_path):
    rep = ExperimentReport("norm_suite", {}, ["a", "b"])
    path = tmp_path / "empty.csv"
    write_report(rep, "csv", path)
    assert path.read_text() == "kind,name,value,a,b\n"


def test_csv_quoting_and_digits():
    rep = ExperimentReport("norm_suite", {}, ["label", "x"], rows=[{"label": 'a,"b"', "x": 0.1}])
    text = write_report(rep, "csv")
    assert '"a,""b"""' in text
    assert "0.10000000000000001" in text


def test_write_failure_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rep = ExperimentReport("norm_suite", {}, ["a"])
    with pytest.raises(OSError, match="file"):
        write_report(rep, "csv", blocker / "sub" / "r.csv")


def test_atomic_rewrite_leaves_no_temp_files(tmp_path):
    rep = run_experiment(dict(SMALL["norm_suite"], experiment="norm_suite"))
    path = tmp_path / "r.csv"
    write_report(rep, "csv", path)
    write_report(rep, "csv", path)
    assert [p.name for p in tmp_path.iterdir()] == ["r.csv"]


@pytest.mark.parametrize("bad", [
    {"experiment": "nope"},
    {"experiment": "entrywise", "bogus": 1},
    {"experiment": "entrywise", "replicates": 0},
    {"experiment": "covariance", "d_grid": []},
    {"experiment": "covariance", "d_grid": [2]},
    {"experiment": "omnibus", "rho_grid": [2.0]},
    {"experiment": "entrywise", "output_format": "xml"},
    {"experiment": "bounds_suite", "bounds": ["unknown"]},
])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        load_config(bad)


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"experiment": "entrywise", "replicates": 7}))
    cfg = load_config(path, experiment="entrywise", replicates=3, base_seed=5)
    assert cfg.replicates == 3 and cfg.base_seed == 5
    with pytest.raises(ConfigError):
        load_config(path, experiment="covariance")


def test_seed_changes_output():
    a = run_experiment({"experiment": "norm_suite", "replicates": 3, "base_seed": 1})
    b = run_experiment({"experiment": "norm_suite", "replicates": 3, "base_seed": 2})
    assert write_report(a) != write_report(b)


def test_lowrank_smoke_without_noise():
    rep = run_experiment({"experiment": "lowrank_recovery", "dims": [[20, 100]], "replicates": 2, "noise_scale": 0.0})
    for row in rep.rows:
        assert row["v_two_to_inf"] <= 1e-12 and row["lower_bound"] <= 1e-12


def test_entrywise_zero_noise_has_zero_slack():
    rep = run_experiment({"experiment": "entrywise", "replicates": 2, "noise_ratio": 0.0})
    assert all(row["status"] == "checked" for row in rep.rows)
    for row in rep.rows:
        assert row["rhs"] == 0 and abs(row["slack"]) <= 1e-12


def test_precondition_accounting():
    rep = run_experiment({"experiment": "entrywise", "replicates": 4, "noise_ratio": 0.5})
    assert rep.aggregate["precondition_failed"] == 4
    assert rep.aggregate["checked"] == 0
    assert rep.violations == 0


def test_covariance_large_n_consistency():
    small = run_experiment({"experiment": "covariance", "d_grid": [20], "replicates": 1, "n_factor": 5})
    big = run_experiment({"experiment": "covariance", "d_grid": [20], "replicates": 1, "n_factor": 5000})
    assert big.rows[0]["lhs_two_to_inf"] < 0.1 * small.rows[0]["lhs_two_to_inf"]


def test_fit_loglog_slope():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert fit_loglog_slope(x, 3 * x**-0.5) == pytest.approx(-0.5)


def test_scale_to_inf_norm(stream):
    e = stream.normal((10, 10))
    out = scale_to_inf_norm(e, 2.0)
    assert np.abs(out).sum(axis=1).max() <= 2.0
    assert np.abs(out).sum(axis=1).max() == pytest.approx(2.0, rel=1e-14)
