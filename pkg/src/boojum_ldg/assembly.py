"""Discrete energies and exact nodal gradients on a :class:`BallMesh`.

Elastic terms use the constant per-tet gradient of the P1 interpolant; the
bulk and anchoring potentials use vertex-lumped quadrature.  With these
choices the gradients below are the exact derivatives of the discrete
energies.

Field layouts: a Q-tensor field is an ``(N, 3, 3)`` array of symmetric
traceless tensors, a director field is ``(N, 3)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import BallMesh
from .qtensor import MaterialParams, f_bulk, f_bulk_grad, f_surface, f_surface_grad, project_s0


@dataclass(frozen=True)
class EnergyBreakdown:
    elastic: float
    bulk_penalty: float
    surface_penalty: float
    total: float

    @property
    def penalty(self) -> float:
        return self.bulk_penalty + self.surface_penalty


def _check_size(field, mesh, trailing):
    field = np.asarray(field, dtype=float)
    if field.shape != (mesh.n_vertices,) + trailing:
        raise ValueError(
            f"field shape {field.shape} does not match mesh ({mesh.n_vertices},) + {trailing}"
        )
    return field


def _dirichlet(F: np.ndarray, mesh: BallMesh) -> float:
    """``sum_t vol_t |grad F_h|^2`` for nodal values ``F`` of shape (N, m)."""
    KF = mesh.stiffness @ F
    return float(np.einsum("ij,ij->", F, KF))


def energy_ldg(Q: np.ndarray, mesh: BallMesh, params: MaterialParams) -> EnergyBreakdown:
    Q = _check_size(Q, mesh, (3, 3))
    elastic = 0.5 * _dirichlet(Q.reshape(-1, 9), mesh)
    bulk = float(np.dot(mesh.lumped_volume, f_bulk(Q, params)))
    b = mesh.boundary_vertex_ids
    surface = float(np.dot(mesh.lumped_area[b], f_surface(Q[b], mesh.normals, params)))
    return EnergyBreakdown(elastic, bulk, surface, elastic + (bulk + surface) / params.L)


def grad_ldg(Q: np.ndarray, mesh: BallMesh, params: MaterialParams) -> np.ndarray:
    """Frobenius gradient of ``energy_ldg(...).total`` per vertex, in S0."""
    Q = _check_size(Q, mesh, (3, 3))
    G = (mesh.stiffness @ Q.reshape(-1, 9)).reshape(-1, 3, 3)
    G += mesh.lumped_volume[:, None, None] * f_bulk_grad(Q, params) / params.L
    b = mesh.boundary_vertex_ids
    G[b] += mesh.lumped_area[b, None, None] * f_surface_grad(Q[b], mesh.normals, params) / params.L
    # exact in S0 already; the projection only removes roundoff
    return project_s0(G)


def energy_harmonic(u: np.ndarray, mesh: BallMesh) -> float:
    """``sum_t vol_t |grad u_h|^2`` (no factor 1/2)."""
    u = _check_size(u, mesh, (3,))
    return _dirichlet(u, mesh)


def grad_harmonic(u: np.ndarray, mesh: BallMesh) -> np.ndarray:
    """Ambient gradient of :func:`energy_harmonic` in the nodal values."""
    u = _check_size(u, mesh, (3,))
    return 2.0 * (mesh.stiffness @ u)


def tet_dirichlet_density(u: np.ndarray, mesh: BallMesh) -> np.ndarray:
    """Per-tet ``vol |grad u_h|^2``."""
    u = _check_size(u, mesh, (3,))
    grad = np.einsum("tak,tac->tck", mesh.grad_basis, u[mesh.tets])  # (T, 3 comps, 3 dirs)
    return mesh.tet_volume * np.einsum("tck,tck->t", grad, grad)


def h1_distance(Q1: np.ndarray, Q2: np.ndarray, mesh: BallMesh) -> float:
    Q1 = _check_size(Q1, mesh, (3, 3))
    Q2 = _check_size(Q2, mesh, (3, 3))
    D = (Q1 - Q2).reshape(-1, 9)
    l2 = float(np.dot(mesh.lumped_volume, np.einsum("ij,ij->i", D, D)))
    return float(np.sqrt(_dirichlet(D, mesh) + l2))
