"""Tetrahedral meshes of the unit ball and P1 geometry on them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

BALL_VOLUME = 4.0 * np.pi / 3.0
SPHERE_AREA = 4.0 * np.pi


class MeshError(ValueError):
    pass


class DegenerateProjection(ValueError):
    """The tangential part of a vector is too short to normalize."""


@dataclass(frozen=True, eq=False)
class BallMesh:
    vertices: np.ndarray          # (N, 3)
    tets: np.ndarray              # (T, 4), positively oriented
    boundary_tris: np.ndarray     # (F, 3), counter-clockwise seen from outside
    boundary_vertex_ids: np.ndarray  # (B,), sorted
    tet_volume: np.ndarray        # (T,)
    grad_basis: np.ndarray        # (T, 4, 3)
    lumped_volume: np.ndarray     # (N,)
    lumped_area: np.ndarray       # (N,), zero off the boundary
    stiffness: sp.csr_matrix      # K_ij = sum_t vol_t grad(phi_i) . grad(phi_j)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_vertex_ids] = True
        return mask

    @property
    def normals(self) -> np.ndarray:
        """Outward unit normals at the boundary vertices, aligned with ``boundary_vertex_ids``."""
        x = self.vertices[self.boundary_vertex_ids]
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    def vertex_normal(self, vid: int) -> np.ndarray:
        if not self.is_boundary[vid]:
            raise MeshError(f"vertex {vid} is not on the boundary")
        x = self.vertices[vid]
        return x / np.linalg.norm(x)

    @property
    def h(self) -> float:
        """Mean edge length of the boundary triangulation."""
        t = self.boundary_tris
        x = self.vertices
        e = np.concatenate([x[t[:, 0]] - x[t[:, 1]], x[t[:, 1]] - x[t[:, 2]], x[t[:, 2]] - x[t[:, 0]]])
        return float(np.linalg.norm(e, axis=1).mean())

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.tets].mean(axis=1)


def icosphere(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Subdivided icosahedron with a vertex at each pole; faces oriented outward."""
    z = 1.0 / np.sqrt(5.0)
    r = 2.0 / np.sqrt(5.0)
    verts = [[0.0, 0.0, 1.0]]
    for k in range(5):
        phi = 2.0 * np.pi * k / 5.0
        verts.append([r * np.cos(phi), r * np.sin(phi), z])
    for k in range(5):
        phi = 2.0 * np.pi * (k + 0.5) / 5.0
        verts.append([r * np.cos(phi), r * np.sin(phi), -z])
    verts.append([0.0, 0.0, -1.0])
    faces = []
    for k in range(5):
        u0, u1 = 1 + k, 1 + (k + 1) % 5
        l0, l1 = 6 + k, 6 + (k + 1) % 5
        faces.append([0, u0, u1])
        faces.append([u0, l0, u1])
        faces.append([u1, l0, l1])
        faces.append([11, l1, l0])
    verts = np.array(verts)
    faces = np.array(faces)

    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}
        verts_list = list(verts)

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = verts_list[i] + verts_list[j]
                verts_list.append(m / np.linalg.norm(m))
                cache[key] = len(verts_list) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.array(verts_list)
        faces = np.array(new_faces)

    verts = verts / np.linalg.norm(verts, axis=1, keepdims=True)
    # fix orientation to outward
    x = verts[faces]
    nrm = np.cross(x[:, 1] - x[:, 0], x[:, 2] - x[:, 0])
    flip = np.einsum("ij,ij->i", nrm, x.mean(axis=1)) < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return verts, faces


def _signed_volumes(x, tets):
    p = x[tets]
    return np.einsum("ij,ij->i", p[:, 1] - p[:, 0], np.cross(p[:, 2] - p[:, 0], p[:, 3] - p[:, 0])) / 6.0


def build_ball_mesh(surface_level: int, radial_layers: int) -> BallMesh:
    """Icosphere surface, concentric scaled shells, and a central vertex.

    Consecutive shells are joined by prisms cut into three tets; the diagonal
    of each quad is chosen from the global vertex order so neighbouring
    prisms agree.  The innermost shell is coned to the centre.
    """
    if not (0 <= surface_level <= 5):
        raise MeshError(f"surface_level must be in [0, 5], got {surface_level}")
    if not (1 <= radial_layers <= 64):
        raise MeshError(f"radial_layers must be in [1, 64], got {radial_layers}")
    sv, sf = icosphere(surface_level)
    ns = len(sv)
    K = radial_layers
    shells = [sv * (k / K) for k in range(1, K + 1)]
    shells[-1] = sv.copy()
    vertices = np.vstack([np.zeros((1, 3))] + shells)

    def vid(k, i):  # shell k in 1..K
        return 1 + (k - 1) * ns + i

    srt = np.sort(sf, axis=1)
    tets = [np.column_stack([np.zeros(len(sf), dtype=int), vid(1, sf[:, 0]), vid(1, sf[:, 1]), vid(1, sf[:, 2])])]
    a, b, c = srt[:, 0], srt[:, 1], srt[:, 2]
    for k in range(1, K):
        lo, hi = k, k + 1
        tets.append(np.column_stack([vid(lo, a), vid(lo, b), vid(lo, c), vid(hi, c)]))
        tets.append(np.column_stack([vid(lo, a), vid(lo, b), vid(hi, b), vid(hi, c)]))
        tets.append(np.column_stack([vid(lo, a), vid(hi, a), vid(hi, b), vid(hi, c)]))
    tets = np.vstack(tets)
    boundary_tris = vid(K, sf)
    return mesh_from_arrays(vertices, tets, boundary_tris)


def _boundary_faces(tets):
    faces = np.vstack([tets[:, [1, 2, 3]], tets[:, [0, 3, 2]], tets[:, [0, 1, 3]], tets[:, [0, 2, 1]]])
    key = np.sort(faces, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    return faces[counts[inv] == 1]


def mesh_from_arrays(vertices, tets, boundary_tris=None) -> BallMesh:
    """Assemble all derived geometry; tets are reoriented to positive volume."""
    x = np.ascontiguousarray(vertices, dtype=float)
    tets = np.array(tets, dtype=np.int64)
    vol = _signed_volumes(x, tets)
    neg = vol < 0
    tets[neg] = tets[neg][:, [0, 2, 1, 3]]
    vol = np.abs(vol)
    if np.any(vol <= 0):
        raise MeshError("degenerate tetrahedron")

    if boundary_tris is None:
        # faces listed with outward orientation relative to a positive tet
        boundary_tris = _boundary_faces(tets)
    boundary_tris = np.array(boundary_tris, dtype=np.int64)
    p = x[boundary_tris]
    nrm = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    flip = np.einsum("ij,ij->i", nrm, p.mean(axis=1)) < 0
    boundary_tris[flip] = boundary_tris[flip][:, [0, 2, 1]]
    tri_area = 0.5 * np.linalg.norm(nrm, axis=1)

    p = x[tets]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]], axis=2)
    Jinv = np.linalg.inv(J)  # rows are gradients of barycentric coords 1..3
    g = np.empty((len(tets), 4, 3))
    g[:, 1:] = Jinv
    g[:, 0] = -Jinv.sum(axis=1)

    n = len(x)
    lumped_volume = np.bincount(tets.ravel(), weights=np.repeat(vol / 4.0, 4), minlength=n)
    lumped_area = np.bincount(boundary_tris.ravel(), weights=np.repeat(tri_area / 3.0, 3), minlength=n)

    local = np.einsum("t,tik,tjk->tij", vol, g, g)
    rows = np.repeat(tets, 4, axis=1).ravel()
    cols = np.tile(tets, (1, 4)).ravel()
    K = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()

    return BallMesh(
        vertices=x,
        tets=tets,
        boundary_tris=boundary_tris,
        boundary_vertex_ids=np.unique(boundary_tris),
        tet_volume=vol,
        grad_basis=g,
        lumped_volume=lumped_volume,
        lumped_area=lumped_area,
        stiffness=K,
    )


def validate_mesh(mesh: BallMesh, rel_tol: float | None = None) -> list[str]:
    """Return a list of violated mesh invariants (empty when valid).

    ``rel_tol`` bounds the relative volume/area error; by default it is
    ``2 h^2`` (second order in the boundary edge length).
    """
    problems = []
    if np.any(_signed_volumes(mesh.vertices, mesh.tets) <= 0):
        problems.append("non-positive tet volume")
    tol = 2.0 * mesh.h**2 if rel_tol is None else rel_tol
    vol_err = abs(mesh.tet_volume.sum() / BALL_VOLUME - 1.0)
    if vol_err > tol:
        problems.append(f"volume error {vol_err:.3g} > {tol:.3g}")
    area_err = abs(mesh.lumped_area.sum() / SPHERE_AREA - 1.0)
    if area_err > tol:
        problems.append(f"area error {area_err:.3g} > {tol:.3g}")
    xb = mesh.vertices[mesh.boundary_vertex_ids]
    if np.any(np.abs(np.linalg.norm(xb, axis=1) - 1.0) > 1e-12):
        problems.append("boundary vertex off the unit sphere")
    if np.any(np.abs(mesh.normals - xb) > 1e-12):
        problems.append("normal differs from position")
    if np.max(np.abs(mesh.grad_basis.sum(axis=1))) > 1e-12 * max(1.0, np.abs(mesh.grad_basis).max()):
        problems.append("basis gradients do not sum to zero")
    if np.any(mesh.lumped_volume <= 0):
        problems.append("non-positive lumped volume")
    if np.any(mesh.lumped_area[mesh.boundary_vertex_ids] <= 0):
        problems.append("non-positive lumped area")
    return problems


def tangent_project(mesh: BallMesh, vid: int, v: np.ndarray) -> np.ndarray:
    """``P(x) v = v - (v . nu) nu`` at boundary vertex ``vid``."""
    nu = mesh.vertex_normal(vid)
    v = np.asarray(v, dtype=float)
    return v - np.dot(v, nu) * nu


def boundary_retract(mesh: BallMesh, vid: int, v: np.ndarray, delta: float = 1e-6) -> np.ndarray:
    """Nearest point of the unit tangent circle at ``vid`` to ``v``."""
    pv = tangent_project(mesh, vid, v)
    norm = np.linalg.norm(pv)
    if norm < delta:
        raise DegenerateProjection(f"degenerate projection at vertex {vid}: |P v| = {norm:.3g}")
    return pv / norm


def boundary_neighbors(mesh: BallMesh) -> dict[int, np.ndarray]:
    """Adjacent boundary vertices of each boundary vertex (sorted ids)."""
    t = mesh.boundary_tris
    e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e = np.vstack([e, e[:, ::-1]])
    e = np.unique(e, axis=0)
    out: dict[int, np.ndarray] = {}
    starts = np.searchsorted(e[:, 0], mesh.boundary_vertex_ids)
    ends = np.searchsorted(e[:, 0], mesh.boundary_vertex_ids, side="right")
    for v, s, f in zip(mesh.boundary_vertex_ids, starts, ends):
        out[int(v)] = e[s:f, 1]
    return out
