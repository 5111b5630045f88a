import json
from pathlib import Path

from capembed.cli import main

from test_pipeline import small_fixture


def test_validate_command(tmp_path, capsys):
    cfg = small_fixture(tmp_path)
    rc = main(["validate", cfg.mesh_path])
    out = capsys.readouterr().out
    assert rc == 0
    assert "watertight: True" in out


def test_route_then_synth(tmp_path, capsys):
    cfg = small_fixture(tmp_path)
    rc = main([
        "route", cfg.mesh_path, cfg.selection_path,
        "--voxel-size", "1.3", "--out", str(tmp_path / "o"),
    ])
    assert rc == 0
    routes = tmp_path / "o" / "routes.json"
    assert routes.exists()
    rc = main(["synth", str(routes), "--out", str(tmp_path / "o")])
    assert rc == 0
    fills = json.loads((tmp_path / "o" / "fills.json").read_text())
    assert len(fills["fills"]) == 2


def test_optimize_and_scalability(tmp_path, capsys):
    rc = main(["optimize", "--n", "3", "--r-max", "1000000", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "feasibility.json").exists()
    rc = main(["scalability", "--max-n", "4"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "single-wire" in out and "double-wire" in out


def test_pipeline_command_and_simulate(tmp_path, capsys):
    cfg = small_fixture(tmp_path)
    rc = main([
        "pipeline", cfg.mesh_path, cfg.selection_path,
        "--voxel-size", "1.3", "--out", cfg.out_dir,
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "voxelize" in out and "dijkstra" in out and "circuit embed" in out and "misc" in out
    manifest = Path(cfg.out_dir) / "manifest.json"
    assert manifest.exists()
    rc = main(["simulate", str(manifest), "--out", str(tmp_path / "sim")])
    assert rc == 0
    assert (tmp_path / "sim" / "session.tsv").exists()
    rc = main(["robustness", str(manifest)])
    assert rc == 0


def test_error_paths_return_nonzero(tmp_path, capsys):
    rc = main(["validate", str(tmp_path / "missing.stl")])
    assert rc == 2
