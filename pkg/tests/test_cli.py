import csv
import json

import numpy as np
import pytest

from bootperc.cli import (
    ConfigError,
    SweepSpec,
    cmd_phase2d,
    cmd_simulate,
    cmd_tiles,
    load_config,
    main,
    parse_grid,
    worker_count,
)
from bootperc.tiling import RED, WHITE


def spec(**kw):
    d = {"a": 2.0, "p": 0.3, "theta": 0.4, "n": 3000.0, "dim": 2, "seed": 9, "replicates": 1}
    d.update(kw)
    return SweepSpec.from_dict(d)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# -- config ---------------------------------------------------------------------------


def test_parse_grid():
    assert parse_grid("0.1,0.2, 0.5") == [0.1, 0.2, 0.5]
    assert parse_grid("0:1:5") == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ConfigError):
        parse_grid("0:1")


def test_config_parse_error_has_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "a": 2,\n  "p": ,\n}\n')
    with pytest.raises(ConfigError, match=r"bad\.json:3:\d+:"):
        load_config(path)


def test_config_field_errors():
    with pytest.raises(ConfigError, match="unknown"):
        SweepSpec.from_dict({"a": 2, "colour": "red"})
    with pytest.raises(ConfigError, match="replicates"):
        spec(replicates=0)
    with pytest.raises(ConfigError, match="p_grid"):
        spec(grids={"p": [0.5, 1.5]})
    with pytest.raises(ConfigError, match="grids"):
        spec(grids={"k": [1]})
    with pytest.raises(ConfigError, match="model parameters"):
        spec(p=2.0)


def test_main_reports_config_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"a": 2, "oops": 1}')
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "unknown field" in capsys.readouterr().err


def test_manifest_round_trip(tmp_path):
    s = spec(adversarial_C=2.0, grids={"p": [0.3, 0.4], "theta": [0.5]}, replicates=2)
    cmd_simulate(s, tmp_path, workers=1)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["schema"] == "v1" and man["command"] == "simulate"
    assert "SeedSequence" in man["seed_mixing"]
    back = SweepSpec.from_dict(man["spec"])
    assert back == s and back.to_dict() == s.to_dict()


def test_worker_count(monkeypatch):
    monkeypatch.setenv("BOOTPERC_WORKERS", "3")
    assert worker_count() == 3
    assert worker_count(5) == 5
    monkeypatch.setenv("BOOTPERC_WORKERS", "many")
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.delenv("BOOTPERC_WORKERS")
    assert worker_count() >= 1


# -- simulate -------------------------------------------------------------------------


def test_single_replicate_single_row(tmp_path):
    rows, table = cmd_simulate(spec(n=500.0), tmp_path)
    assert len(rows) == 1 and len(table) == 1
    got = read_csv(tmp_path / "summary.csv")
    assert len(got) == 1 and got[0]["label"] in ("none", "almost-none", "partial", "almost-full", "full")
    assert int(got[0]["newly_infected"]) + int(got[0]["initial"]) + int(got[0]["uninfected"]) == int(got[0]["n_points"])


def test_cell_table_counts(tmp_path):
    s = spec(grids={"theta": [0.2, 0.9]}, replicates=3)
    _, table = cmd_simulate(s, tmp_path)
    assert [r["theta"] for r in table] == [0.2, 0.9]
    for r in table:
        assert sum(r[k] for k in ("none", "almost-none", "partial", "almost-full", "full")) == 3


def test_byte_identical_across_workers(tmp_path):
    s = spec(n=2e4, grids={"p": [0.3, 0.6], "theta": [0.4, 0.7]}, replicates=3, adversarial_C=3.0)
    blobs = []
    for w in (1, 4, 8):
        out = tmp_path / f"w{w}"
        cmd_simulate(s, out, workers=w)
        blobs.append([(out / f).read_bytes() for f in ("summary.csv", "cells.csv", "manifest.json")])
    assert blobs[0] == blobs[1] == blobs[2]
    # and a rerun reproduces it
    cmd_simulate(s, tmp_path / "again", workers=1)
    assert (tmp_path / "again" / "summary.csv").read_bytes() == blobs[0][0]


def test_main_simulate(tmp_path, capsys):
    code = main([
        "simulate", "--a", "2", "--p", "0.4", "--theta", "0.5", "--n", "2000",
        "--theta-grid", "0.3,0.6", "--replicates", "2", "--seed", "5", "--threads", "2",
        "--out", str(tmp_path),
    ])
    assert code == 0
    assert len(read_csv(tmp_path / "summary.csv")) == 4
    assert "cell 1" in capsys.readouterr().out


# -- tiles ---------------------------------------------------------------------------------


def test_tiles_all_seeded(tmp_path):
    grow, _, comps, label = cmd_tiles(spec(p=1.0, theta=0.5, n=1e4), tmp_path)
    # nothing is left uninfected, so the run counts as full
    assert label == "full"
    nonwhite = grow.fine != WHITE
    assert nonwhite.any() and np.all(grow.fine[nonwhite] == RED)
    for name in ("growth_fine.txt", "growth_rough.txt", "nongrowth_fine.txt", "nongrowth_rough.txt"):
        lines = (tmp_path / name).read_text().splitlines()
        assert len(lines) == len(lines[0])
    powers = {(r["colouring"], r["level"], r["colour"], r["power"]) for r in comps}
    assert ("growth", "rough", "R", 7) in powers and ("nongrowth", "fine", "K", 2) in powers


def test_tiles_frozen_run_has_no_red(tmp_path):
    _, stop, _, label = cmd_tiles(spec(p=0.3, theta=0.99, n=1e4), tmp_path)
    assert label == "none"
    assert not (stop.fine == RED).any()


def test_tiles_needs_plane(tmp_path):
    with pytest.raises(ConfigError):
        cmd_tiles(spec(dim=1), tmp_path)


# -- threshold commands ----------------------------------------------------------------------


def test_phase1d(tmp_path):
    assert main(["phase1d", "--p-grid", "0.2,0.4", "--theta-grid", "0.3,0.5", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "phase1d.csv")
    assert len(rows) == 4 and rows[0]["regime"]


def test_phase2d_rows_and_refinement(tmp_path):
    tol = 1e-3
    rows = cmd_phase2d(2.0, [0.3], tmp_path / "a", tol=tol)
    half = cmd_phase2d(2.0, [0.3], tmp_path / "b", tol=tol / 2)
    r, h = rows[0], half[0]
    assert r["error"] == ""
    assert r["p"] <= r["theta_local"] <= min(r["half_one_plus_p"], r["theta_start"])
    assert r["theta_islands"] <= r["half_one_plus_p"]
    for k in ("theta_local", "theta_islands", "theta_start", "f0stop_root"):
        assert abs(r[k] - h[k]) < 2 * tol
    got = read_csv(tmp_path / "a" / "curves.csv")
    assert list(got[0])[-1] == "error"


def test_point_commands(tmp_path, capsys):
    assert main(["theta-local", "--p", "0.5", "--out", str(tmp_path / "tl")]) == 0
    res = json.loads((tmp_path / "tl" / "result.json").read_text())
    assert 0.5 <= res["theta_local"] <= 0.75
    assert main(["islands-el", "--p", "0.7", "--theta", "0.6", "--tau", "0.5", "--out", str(tmp_path / "el")]) == 0
    res = json.loads((tmp_path / "el" / "result.json").read_text())
    assert res["lam"] > 0 and res["q_value"] < 0
    assert main(["lower-bound", "--p", "0.3", "--out", str(tmp_path / "lb")]) == 0
    res = json.loads((tmp_path / "lb" / "result.json").read_text())
    assert res["binding_case"] in (1, 2, 3)
    assert main(["theta-islands", "--p", "0.3", "--T-grid", "0,0.5,1", "--out", str(tmp_path / "ti")]) == 0
    res = json.loads((tmp_path / "ti" / "result.json").read_text())
    assert res["theta_islands"] <= 0.65
    out = capsys.readouterr().out
    assert out.count("{") >= 4


@pytest.mark.slow
def test_tangency_command(tmp_path):
    assert main(["tangency", "--out", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "result.json").read_text())
    assert res["passed"] and res["discriminant_points"] == 1000
