from __future__ import annotations

import csv
import json

import pytest

from nomacell.cli import EXIT_CONFIG, EXIT_OK, main

FAST = {
    "moments-sweep": ["--set", "sweep.grid=[0.1,0.3,0.5]"],
    "meta-ccdf": ["--set", "sweep.grid=[0.0,0.5,1.0]"],
    "area-dist": ["--set", "sweep.grid=[0.5,0.7]"],
    "load-pmf": ["--set", "sweep.grid=[2,5]"],
    "rate-outage": ["--set", "sweep.grid=[0.05,0.1,0.2]"],
    "delay-outage": ["--set", "sweep.grid=[5,20,60]"],
    "rate-region": ["--set", "sweep.grid=[0.2,0.4,0.6,0.8]"],
    "ra-p1": ["--set", "sweep.grid=[2,5]"],
    "ra-p2": ["--set", "sweep.grid=[2,5]"],
}

ROWS = {"moments-sweep": 3, "meta-ccdf": 3, "area-dist": 4, "rate-outage": 3,
        "delay-outage": 3, "rate-region": 4, "ra-p1": 2, "ra-p2": 2}


def _read(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


@pytest.mark.parametrize("experiment", sorted(FAST))
def test_experiment_runs_and_writes_manifest(experiment, tmp_path):
    out = tmp_path / experiment
    assert main([experiment, "--out", str(out)] + FAST[experiment]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiment"] == experiment
    assert manifest["exit_status"] == 0
    for key in ("version", "config", "resolved", "seed", "wall_time_s", "python", "numpy"):
        assert key in manifest
    for name, info in manifest["files"].items():
        rows = _read(out / name)
        assert len(rows) - 1 == info["rows"]
    if experiment in ROWS:
        first = next(iter(manifest["files"]))
        assert manifest["files"][first]["rows"] == ROWS[experiment]


def test_reruns_are_byte_identical(tmp_path):
    args = FAST["ra-p1"]
    main(["ra-p1", "--out", str(tmp_path / "a")] + args)
    main(["ra-p1", "--out", str(tmp_path / "b")] + args)
    assert (tmp_path / "a" / "ra_p1.csv").read_bytes() == (tmp_path / "b" / "ra_p1.csv").read_bytes()


def test_simulated_columns_are_reproducible(tmp_path):
    args = ["--set", "sweep.grid=[0.0,0.5,1.0]", "--set", "simulate=true",
            "--set", "sim.n_realizations=50", "--seed", "3"]
    main(["meta-ccdf", "--out", str(tmp_path / "a")] + args)
    main(["meta-ccdf", "--out", str(tmp_path / "b")] + args)
    a = (tmp_path / "a" / "meta_ccdf.csv").read_bytes()
    assert a == (tmp_path / "b" / "meta_ccdf.csv").read_bytes()
    header = _read(tmp_path / "a" / "meta_ccdf.csv")[0]
    assert "sim_ccdf_cc_noma" in header
    assert json.loads((tmp_path / "a" / "manifest.json").read_text())["seed"] == 3


def test_infeasible_cells_are_blank(tmp_path):
    out = tmp_path / "ra"
    assert main(["ra-p1", "--out", str(out), "--set", "sweep.grid=[20]"]) == EXIT_OK
    row = _read(out / "ra_p1.csv")[1]
    assert row[1] == "" and row[3] == "false"


def test_config_file_and_db_conversion(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": {"beta_c_db": 0.0, "beta_e_db": -3.0},
                               "sweep": {"var": "theta", "start": 0.1, "stop": 0.4, "num": 4}}))
    out = tmp_path / "m"
    assert main(["moments-sweep", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["resolved"]["params"]["beta_c"] == pytest.approx(1.0)
    assert manifest["files"]["moments.csv"]["rows"] == 4


@pytest.mark.parametrize("args", [
    ["--set", "params.tau=1.5"],
    ["--set", "params.bogus=1"],
    ["--set", "sweep.grid=[0.3,0.2]"],
    ["--set", "sweep.var=nu"],
    ["--set", "traffic.outage_cap_c=2"],
    ["--set", "nonsense"],
])
def test_bad_config_exits_with_config_error(args, tmp_path, capsys):
    assert main(["moments-sweep", "--out", str(tmp_path)] + args) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_malformed_json_reports_position(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"params": {"tau": 0.7,}}')
    assert main(["area-dist", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "bad.json:1:" in capsys.readouterr().err


def test_meta_ccdf_rejects_x_outside_unit_interval(tmp_path):
    assert main(["meta-ccdf", "--out", str(tmp_path), "--set", "sweep.grid=[0.5,1.5]"]) == EXIT_CONFIG


def test_unknown_experiment_is_rejected():
    with pytest.raises(SystemExit):
        main(["nope"])
