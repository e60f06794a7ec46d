import json
import os
from pathlib import Path

import numpy as np
import pytest

from boojum_ldg.cli import main
from boojum_ldg.config import parse_config, with_overrides
from boojum_ldg.mesh import mesh_from_arrays, validate_mesh
from boojum_ldg.pipeline import run_pipeline
from boojum_ldg.vtk import read_vtk

SMALL = """
mesh.surface_level = 2
mesh.radial_layers = 6
sweep.L_schedule = 0.5, 0.25
"""


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    cfg = with_overrides(parse_config(SMALL), out_dir=out)
    return run_pipeline(cfg), out


def test_small_run_artifacts(small_run):
    status, out = small_run
    assert status == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == sorted([
        "mesh.vtk", "u_harmonic.vtk", "u_harmonic.npz", "q_field_L0.5.vtk", "q_field_L0.25.vtk",
        "energies.csv", "defects.json", "monotonicity.csv", "trace.csv",
    ])
    rows = (out / "energies.csv").read_text().splitlines()
    assert rows[0] == "L,elastic,bulk,surface,h1_distance" and len(rows) == 3
    trace = (out / "trace.csv").read_text().splitlines()
    assert trace[0] == "stage,iter,energy,grad_norm,step"
    assert {r.split(",")[0] for r in trace[1:]} == {"harmonic", "ldg_L=0.5", "ldg_L=0.25"}
    rep = json.loads((out / "defects.json").read_text())
    assert rep["index_sum"] == 2
    assert (out / "monotonicity.csv").read_text().startswith("vertex,field,r,value\n")


def test_vtk_outputs_roundtrip(small_run):
    _, out = small_run
    for p in sorted(out.glob("*.vtk")):
        x, t, data = read_vtk(p)
        assert validate_mesh(mesh_from_arrays(x, t)) == [], p.name
    _, _, q = read_vtk(out / "q_field_L0.5.vtk")
    assert {"director", "s", "beta"} <= set(q)
    _, _, h = read_vtk(out / "u_harmonic.vtk")
    assert {"u", "boundary_index", "interior_degree"} <= set(h)
    assert h["boundary_index"].sum() == 2


def test_single_entry_schedule(tmp_path):
    cfg = with_overrides(parse_config(SMALL.replace("0.5, 0.25", "0.5")), out_dir=tmp_path)
    assert run_pipeline(cfg) == 0
    assert len((tmp_path / "energies.csv").read_text().splitlines()) == 2


def test_unwritable_out_dir_fails_fast(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = with_overrides(parse_config(SMALL), out_dir=blocker / "sub")
    assert run_pipeline(cfg) == 2
    rec = json.loads(capsys.readouterr().out)
    assert rec["stage"] == "setup"


def test_stage_failure_record(tmp_path):
    cfg = with_overrides(parse_config(SMALL + "solver.max_iters = 3\n"), out_dir=tmp_path)
    assert run_pipeline(cfg) == 1
    rec = json.loads((tmp_path / "failure.json").read_text())
    assert rec["stage"] == "harmonic" and "max_iters" in rec["error"]


def test_sweep_requires_harmonic_cache(tmp_path):
    cfg = with_overrides(parse_config(SMALL), out_dir=tmp_path)
    assert run_pipeline(cfg, ("sweep",)) == 1
    assert json.loads((tmp_path / "failure.json").read_text())["stage"] == "sweep"


def test_cli_stages(tmp_path, monkeypatch):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(SMALL.replace("0.5, 0.25", "0.5"))
    out = tmp_path / "o"
    monkeypatch.setenv("BOOJUM_THREADS", "1")
    assert main(["mesh", "--config", str(cfgfile), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["mesh.vtk"]
    assert main(["harmonic", "--config", str(cfgfile), "--out", str(out), "--seed", "3"]) == 0
    assert main(["analyze", "--config", str(cfgfile), "--out", str(out)]) == 0
    assert (out / "defects.json").exists() and not (out / "energies.csv").exists()


def test_cli_config_error(tmp_path, capsys):
    cfgfile = tmp_path / "bad.cfg"
    cfgfile.write_text("params.a = 1\nparams.b = 1\nparams.c = 1\n")
    assert main(["all", "--config", str(cfgfile)]) == 2
    assert "b^2 > 27ac" in capsys.readouterr().err


def test_cli_bad_threads(tmp_path, monkeypatch):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(SMALL)
    monkeypatch.setenv("BOOJUM_THREADS", "zero")
    assert main(["mesh", "--config", str(cfgfile), "--out", str(tmp_path / "o")]) == 2
