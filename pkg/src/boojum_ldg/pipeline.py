"""Stage orchestration: mesh, harmonic solve, L sweep and defect analysis.

Every stage rebuilds the mesh from the configuration (cheap and
deterministic) and the later stages read the harmonic map cached by the
harmonic stage in ``u_harmonic.npz``.

Output layouts (all floats written with ``repr`` so reruns are bit-exact):

``energies.csv``      ``L,elastic,bulk,surface,h1_distance``
``trace.csv``         ``stage,iter,energy,grad_norm,step``
``monotonicity.csv``  ``vertex,field,r,value`` with field ``minimizer`` or ``tangent_sample``
``defects.json``      the defect report, keys sorted
``failure.json``      ``{"stage": ..., "error": ...}`` when a stage fails
"""
from __future__ import annotations

import csv
import json
import logging
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (
    InsufficientResolution,
    calibrate_slack,
    detect_boundary_defects,
    detect_interior_defects,
    monotonicity_profile,
    parity_and_report,
    profile_radii,
    slack_excess,
    tangent_map_sample,
)
from .config import RunConfig
from .mesh import MeshError, build_ball_mesh, validate_mesh
from .qtensor import director_fields, frob2
from .solve import SolveError, SolveTrace, minimize_harmonic, init_polar_tangent_field, perturb_field, sweep_L
from .vtk import write_vtk

log = logging.getLogger(__name__)

STAGES = ("mesh", "harmonic", "sweep", "analyze")
CONSTRAINT_TOL = 1e-9
TRACE_HEADER = ["stage", "iter", "energy", "grad_norm", "step"]


class StageFailure(RuntimeError):
    def __init__(self, stage, message):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.message = message


@dataclass
class _Cache:
    u: np.ndarray
    trace: SolveTrace


def check_writable(out_dir: Path) -> None:
    """Create ``out_dir`` if needed and prove a file can be written inside it."""
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=out_dir, prefix=".probe-"):
            pass
    except OSError as exc:
        raise StageFailure("setup", f"output.dir {str(out_dir)!r} is not writable: {exc}") from None


def _mesh(cfg: RunConfig):
    try:
        return build_ball_mesh(cfg.surface_level, cfg.radial_layers)
    except MeshError as exc:
        raise StageFailure("mesh", str(exc)) from None


def _write_trace(path, parts):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for stage, trace in parts:
            for it, e, g, s in trace.rows():
                w.writerow([stage, str(it), repr(float(e)), repr(float(g)), repr(float(s))])


def _harmonic_residuals(u, mesh):
    unit = float(np.abs(np.linalg.norm(u, axis=1) - 1.0).max())
    tang = float(np.abs(np.einsum("ij,ij->i", u[mesh.boundary_vertex_ids], mesh.normals)).max())
    return unit, tang


def _load_cache(out: Path) -> _Cache:
    path = out / "u_harmonic.npz"
    if not path.exists():
        raise FileNotFoundError(f"{path} missing; run the harmonic stage first")
    with np.load(path) as z:
        tr = SolveTrace(
            iters=z["iters"].tolist(),
            energy=z["energy"].tolist(),
            grad_norm=z["grad_norm"].tolist(),
            step=z["step"].tolist(),
            status=str(z["status"]),
            repairs=int(z["repairs"]),
        )
        return _Cache(z["u"].copy(), tr)


# ---------------------------------------------------------------- stages

def stage_mesh(cfg: RunConfig, out: Path) -> None:
    mesh = _mesh(cfg)
    problems = validate_mesh(mesh)
    if problems:
        raise StageFailure("mesh", "; ".join(problems))
    write_vtk(out / "mesh.vtk", mesh.vertices, mesh.tets, title="boojum-ldg mesh")


def stage_harmonic(cfg: RunConfig, out: Path) -> None:
    mesh = _mesh(cfg)
    u0 = perturb_field(init_polar_tangent_field(mesh), mesh, cfg.init_noise, cfg.seed)
    try:
        u, trace = minimize_harmonic(u0, mesh, cfg.solver)
    except SolveError as exc:
        raise StageFailure("harmonic", str(exc)) from None
    np.savez(
        out / "u_harmonic.npz",
        u=u,
        iters=np.array(trace.iters),
        energy=np.array(trace.energy),
        grad_norm=np.array(trace.grad_norm),
        step=np.array(trace.step),
        status=np.array(trace.status),
        repairs=np.array(trace.repairs),
    )
    _write_trace(out / "trace.csv", [("harmonic", trace)])

    index = np.zeros(mesh.n_vertices, dtype=np.int64)
    boundary, _ = detect_boundary_defects(u, mesh)
    for d in boundary:
        index[d.vertex] = d.index
    interior = np.zeros(mesh.n_vertices, dtype=np.int64)
    for d in detect_interior_defects(u, mesh):
        if not d.unresolved:
            interior[mesh.tets[d.tet]] += d.degree
    write_vtk(
        out / "u_harmonic.vtk",
        mesh.vertices,
        mesh.tets,
        {"u": u, "boundary_index": index, "interior_degree": interior},
        title="boojum-ldg harmonic map",
    )

    if not trace.converged:
        raise StageFailure("harmonic", f"solver {trace.status} after {trace.iters[-1]} iterations")
    unit, tang = _harmonic_residuals(u, mesh)
    if unit > CONSTRAINT_TOL or tang > CONSTRAINT_TOL:
        raise StageFailure("harmonic", f"constraint residuals |u|-1={unit:.3g}, u.nu={tang:.3g}")


def stage_sweep(cfg: RunConfig, out: Path) -> None:
    mesh = _mesh(cfg)
    try:
        cache = _load_cache(out)
    except FileNotFoundError as exc:
        raise StageFailure("sweep", str(exc)) from None
    try:
        records = sweep_L(cfg.L_schedule, mesh, cfg.params, cache.u, cfg.sweep_solver)
    except SolveError as exc:
        raise StageFailure("sweep", str(exc)) from None

    with open(out / "energies.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["L", "elastic", "bulk", "surface", "h1_distance"])
        for r in records:
            e = r.energy
            w.writerow([repr(r.L), repr(e.elastic), repr(e.bulk_penalty), repr(e.surface_penalty), repr(r.h1_distance)])
    _write_trace(out / "trace.csv", [("harmonic", cache.trace)] + [(f"ldg_L={r.L!r}", r.trace) for r in records])
    for r in records:
        n, s, beta = director_fields(r.Q)
        write_vtk(
            out / f"q_field_L{r.L!r}.vtk",
            mesh.vertices,
            mesh.tets,
            {"director": n, "s": s, "beta": beta, "norm": np.sqrt(frob2(r.Q))},
            title=f"boojum-ldg Q field L={r.L!r}",
        )

    for r in records:
        if not r.trace.converged:
            raise StageFailure("sweep", f"L={r.L!r}: solver {r.trace.status} after {r.trace.iters[-1]} iterations")
        asym = float(np.abs(r.Q - np.swapaxes(r.Q, 1, 2)).max())
        trace_res = float(np.abs(np.trace(r.Q, axis1=1, axis2=2)).max())
        if asym > CONSTRAINT_TOL or trace_res > CONSTRAINT_TOL:
            raise StageFailure("sweep", f"L={r.L!r}: Q left S0 (asym={asym:.3g}, trace={trace_res:.3g})")


def stage_analyze(cfg: RunConfig, out: Path) -> None:
    mesh = _mesh(cfg)
    try:
        cache = _load_cache(out)
    except FileNotFoundError as exc:
        raise StageFailure("analyze", str(exc)) from None
    u = cache.u
    try:
        report = parity_and_report(u, mesh, r_fit=cfg.r_fit)
    except ValueError as exc:
        raise StageFailure("analyze", str(exc)) from None

    rows = []
    try:
        radii = profile_radii(mesh, cfg.mono_r_max, cfg.mono_n_radii)
    except InsufficientResolution as exc:
        radii = None
        report.notes.append(f"monotonicity skipped: {exc}")
    if radii is not None:
        for d in report.boundary:
            vid = d["vertex"]
            prof = monotonicity_profile(u, mesh, vid, radii)
            sample = monotonicity_profile(tangent_map_sample(mesh, vid), mesh, vid, radii)
            c_slack = calibrate_slack(mesh, vid, radii)
            excess = slack_excess(prof, c_slack, mesh.h)
            rel = np.abs(np.asarray(sample.values) / (4.0 * np.pi) - 1.0)
            report.monotonicity.append({
                "vertex": vid,
                "violation": prof.violation,
                "c_slack": c_slack,
                "slack_excess": excess,
                "within_slack": bool(excess <= 0.0),
                "tangent_sample_max_rel_dev_4pi": float(rel.max()),
            })
            rows += [(vid, "minimizer", r, v) for r, v in zip(prof.radii, prof.values)]
            rows += [(vid, "tangent_sample", r, v) for r, v in zip(sample.radii, sample.values)]

    with open(out / "monotonicity.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex", "field", "r", "value"])
        for vid, name, r, v in rows:
            w.writerow([str(vid), name, repr(float(r)), repr(float(v))])
    (out / "defects.json").write_text(report.to_json(), encoding="utf-8")

    if report.index_sum != 2 or not report.index_consistent:
        raise StageFailure("analyze", f"boundary index sum {report.index_sum} (consistent={report.index_consistent})")


_RUNNERS = {"mesh": stage_mesh, "harmonic": stage_harmonic, "sweep": stage_sweep, "analyze": stage_analyze}


def run_pipeline(cfg: RunConfig, stages=STAGES) -> int:
    """Run ``stages`` in order; returns a process exit status.

    0 on success, 1 if a stage fails (``failure.json`` names it), 2 if the
    output directory is unusable (nothing is computed).
    """
    out = Path(cfg.out_dir)
    try:
        check_writable(out)
    except StageFailure as exc:
        log.error("%s", exc)
        print(json.dumps({"stage": exc.stage, "error": exc.message}, sort_keys=True))
        return 2
    failure = out / "failure.json"
    if failure.exists():
        failure.unlink()
    for name in stages:
        log.info("stage %s", name)
        try:
            _RUNNERS[name](cfg, out)
        except StageFailure as exc:
            log.error("%s", exc)
            failure.write_text(json.dumps({"stage": exc.stage, "error": exc.message}, indent=2, sort_keys=True) + "\n")
            return 1
    return 0
