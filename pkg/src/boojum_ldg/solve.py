"""Barzilai-Borwein descent with Armijo safeguarding for both energies."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assembly import EnergyBreakdown, energy_harmonic, energy_ldg, grad_harmonic, grad_ldg, h1_distance
from .mesh import BallMesh, boundary_neighbors
from .qtensor import MaterialParams, ParameterError, frob2, project_s0, uniaxial

log = logging.getLogger(__name__)


class SolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    max_iters: int = 20000
    grad_tol: float = 1e-7
    step_init: float = 1.0
    bb_min: float = 1e-6
    bb_max: float = 1e2
    armijo_c: float = 1e-4
    proj_delta: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 0:
            raise ParameterError("max_iters must be nonnegative")
        for name in ("grad_tol", "step_init", "bb_min", "bb_max", "proj_delta"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.bb_min > self.bb_max:
            raise ParameterError("bb_min <= bb_max violated")
        if not 0 < self.armijo_c < 1:
            raise ParameterError("armijo_c must lie in (0, 1)")
        if self.seed < 0:
            raise ParameterError("seed must be unsigned")


@dataclass
class SolveTrace:
    iters: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    step: list = field(default_factory=list)
    status: str = "running"
    repairs: int = 0

    def record(self, it, e, g, s):
        self.iters.append(it)
        self.energy.append(e)
        self.grad_norm.append(g)
        self.step.append(s)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def rows(self):
        return list(zip(self.iters, self.energy, self.grad_norm, self.step))

    def write_csv(self, path, stage: str | None = None, append: bool = False):
        """Write ``iter,energy,grad_norm,step`` rows (prefixed by ``stage`` if given)."""
        with open(path, "a" if append else "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if not append:
                w.writerow((["stage"] if stage is not None else []) + ["iter", "energy", "grad_norm", "step"])
            for it, e, g, s in self.rows():
                row = [str(it), repr(float(e)), repr(float(g)), repr(float(s))]
                w.writerow(([stage] if stage is not None else []) + row)


def _descend(x0, energy: Callable, gradient: Callable, retract: Callable, cfg: SolveConfig, trace: SolveTrace):
    """Projected BB iteration; ``gradient`` returns the (already projected) gradient.

    Step lengths alternate between the two Barzilai-Borwein formulas (long
    step on odd iterations, short step on even ones).  Steps failing the
    Armijo test are halved; energy never increases across accepted iterations.
    """
    x = x0
    E = energy(x)
    g = gradient(x)
    scale = 1.0 / np.sqrt(x.shape[0])
    gnorm = float(np.sqrt(np.sum(g * g)))
    alpha = cfg.step_init
    trace.record(0, E, gnorm * scale, 0.0)
    for it in range(1, cfg.max_iters + 1):
        if not np.isfinite(E):
            raise SolveError(f"non-finite energy at iteration {it - 1}")
        if gnorm * scale <= cfg.grad_tol:
            trace.status = "converged"
            return x
        g2 = gnorm**2
        t = alpha
        while True:
            x_new = retract(x - t * g)
            E_new = energy(x_new)
            if np.isfinite(E_new) and E_new <= E - cfg.armijo_c * t * g2:
                break
            t *= 0.5
            if t < 1e-14 * cfg.bb_min:
                # no representable decrease: stationary to machine precision
                trace.status = "stalled"
                return x
        g_new = gradient(x_new)
        s = x_new - x
        y = g_new - g
        sy = float(np.sum(s * y))
        if sy > 0:
            if it % 2:
                alpha = float(np.sum(s * s)) / sy
            else:
                alpha = sy / float(np.sum(y * y))
        else:
            alpha = cfg.bb_max
        alpha = min(max(alpha, cfg.bb_min), cfg.bb_max)
        x, E, g = x_new, E_new, g_new
        gnorm = float(np.sqrt(np.sum(g * g)))
        trace.record(it, E, gnorm * scale, t)
    trace.status = "converged" if gnorm * scale <= cfg.grad_tol else "max_iters"
    return x


# ---------------------------------------------------------------- initializers

def init_polar_tangent_field(mesh: BallMesh) -> np.ndarray:
    """Two-boojum meridian field, evaluated at ``x/|x|``; the centre gets ``e3``."""
    x = mesh.vertices
    r = np.linalg.norm(x, axis=1)
    safe = np.where(r > 0, r, 1.0)
    xi = np.arccos(np.clip(x[:, 2] / safe, -1.0, 1.0))
    theta = np.arctan2(x[:, 1], x[:, 0])
    u = np.column_stack([-np.cos(xi) * np.cos(theta), -np.cos(xi) * np.sin(theta), np.sin(xi)])
    u[r == 0] = [0.0, 0.0, 1.0]
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def init_from_harmonic(u: np.ndarray, params: MaterialParams) -> np.ndarray:
    """Uniaxial lift ``s0 (u u^T - I/3)`` at every vertex."""
    return uniaxial(u, params)


def perturb_field(u: np.ndarray, mesh: BallMesh, amplitude: float, seed: int) -> np.ndarray:
    """Seeded random perturbation, re-projected onto the admissible set."""
    if amplitude == 0:
        return u.copy()
    rng = np.random.default_rng(seed)
    v = u + amplitude * rng.standard_normal(u.shape)
    return _retract_harmonic(v, mesh, 1e-6, {}, SolveTrace())


# ---------------------------------------------------------------- harmonic map

def project_harmonic_gradient(g: np.ndarray, u: np.ndarray, mesh: BallMesh) -> np.ndarray:
    """Remove the components of ``g`` along ``u`` and, on the boundary, along ``nu``."""
    pg = g - np.einsum("ij,ij->i", g, u)[:, None] * u
    b = mesh.boundary_vertex_ids
    nu = mesh.normals
    pg[b] -= np.einsum("ij,ij->i", pg[b], nu)[:, None] * nu
    return pg


def _retract_harmonic(v, mesh, delta, neighbors, trace):
    out = v / np.linalg.norm(v, axis=1, keepdims=True)
    b = mesh.boundary_vertex_ids
    nu = mesh.normals
    pv = v[b] - np.einsum("ij,ij->i", v[b], nu)[:, None] * nu
    norms = np.linalg.norm(pv, axis=1)
    bad = norms < delta
    good = ~bad
    out[b[good]] = pv[good] / norms[good, None]
    if np.any(bad):
        if not neighbors:
            neighbors.update(boundary_neighbors(mesh))
        for k in np.flatnonzero(bad):
            vid = int(b[k])
            nbrs = [j for j in neighbors[vid] if not bad[np.searchsorted(b, j)]]
            if not nbrs:
                raise SolveError(f"unrepairable degenerate projection at boundary vertex {vid}")
            avg = out[nbrs].sum(axis=0)
            pa = avg - np.dot(avg, nu[k]) * nu[k]
            na = np.linalg.norm(pa)
            if na < delta:
                raise SolveError(f"unrepairable degenerate projection at boundary vertex {vid}")
            out[vid] = pa / na
            trace.repairs += 1
    return out


def minimize_harmonic(u0: np.ndarray, mesh: BallMesh, cfg: SolveConfig = SolveConfig()):
    """Minimize the discrete Dirichlet energy over unit fields tangent on the boundary."""
    u0 = np.asarray(u0, dtype=float)
    if np.any(np.abs(np.linalg.norm(u0, axis=1) - 1.0) > 1e-9):
        raise ValueError("u0 is not unit length")
    b = mesh.boundary_vertex_ids
    if np.any(np.abs(np.einsum("ij,ij->i", u0[b], mesh.normals)) > 1e-9):
        raise ValueError("u0 is not tangential on the boundary")
    trace = SolveTrace()
    neighbors: dict = {}
    u = _descend(
        u0,
        lambda u: energy_harmonic(u, mesh),
        lambda u: project_harmonic_gradient(grad_harmonic(u, mesh), u, mesh),
        lambda v: _retract_harmonic(v, mesh, cfg.proj_delta, neighbors, trace),
        cfg,
        trace,
    )
    log.info("harmonic solve: %s after %d iterations, E=%.6g", trace.status, trace.iters[-1], trace.energy[-1])
    return u, trace


# ---------------------------------------------------------------- Landau-de Gennes

def minimize_ldg(Q0: np.ndarray, mesh: BallMesh, params: MaterialParams, cfg: SolveConfig = SolveConfig()):
    """Unconstrained descent on the Landau-de Gennes energy over nodal tensors."""
    trace = SolveTrace()
    Q0 = np.asarray(Q0, dtype=float)
    if not np.all(np.isfinite(Q0)):
        raise SolveError("initial field has non-finite entries")
    Q0 = project_s0(Q0)
    Q = _descend(
        Q0,
        lambda Q: energy_ldg(Q, mesh, params).total,
        lambda Q: grad_ldg(Q, mesh, params),
        # roundoff in the trace mode is amplified by long BB steps; keep iterates in S0
        project_s0,
        cfg,
        trace,
    )
    log.info(
        "LdG solve (L=%g): %s after %d iterations, max|Q|=%.4g",
        params.L, trace.status, trace.iters[-1], np.sqrt(frob2(Q).max()),
    )
    return Q, trace


@dataclass
class SweepRecord:
    L: float
    Q: np.ndarray
    energy: EnergyBreakdown
    h1_distance: float
    max_norm: float
    trace: SolveTrace


def sweep_L(schedule, mesh: BallMesh, params: MaterialParams, u_ref: np.ndarray, cfg: SolveConfig = SolveConfig()):
    """Warm-started continuation in ``L``, starting from the lift of ``u_ref``."""
    schedule = [float(L) for L in schedule]
    if not schedule or any(L <= 0 for L in schedule):
        raise ParameterError("L schedule must be nonempty and positive")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ParameterError("L schedule must be strictly decreasing")
    Q_ref = init_from_harmonic(u_ref, params)
    Q = Q_ref.copy()
    out = []
    for L in schedule:
        pL = params.with_L(L)
        try:
            Q, trace = minimize_ldg(Q, mesh, pL, cfg)
        except SolveError as exc:
            raise SolveError(f"L={L}: {exc}") from exc
        out.append(
            SweepRecord(
                L=L,
                Q=Q,
                energy=energy_ldg(Q, mesh, pL),
                h1_distance=h1_distance(Q, Q_ref, mesh),
                max_norm=float(np.sqrt(frob2(Q).max())),
                trace=trace,
            )
        )
    return out
