"""Defect detection, boojum tangent maps and boundary monotonicity profiles."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import tet_dirichlet_density
from .mesh import BallMesh

FOUR_PI = 4.0 * np.pi
TWO_PI = 2.0 * np.pi
DEGREE_RESIDUE_TOL = 0.2
INDEX_RESIDUE_TOL = 1e-6


class InsufficientResolution(ValueError):
    pass


def solid_angle(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Signed area of the spherical triangle with unit vertices ``a, b, c`` (rowwise)."""
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


# outward faces of a positively oriented tet (v0, v1, v2, v3)
_TET_FACES = np.array([[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]])


def tet_degrees(u: np.ndarray, mesh: BallMesh) -> np.ndarray:
    """Unrounded per-tet degree of ``u`` (sum of image face areas over ``4 pi``)."""
    total = np.zeros(len(mesh.tets))
    for f in _TET_FACES:
        ids = mesh.tets[:, f]
        total += solid_angle(u[ids[:, 0]], u[ids[:, 1]], u[ids[:, 2]])
    return total / FOUR_PI


def boundary_image_degree(u: np.ndarray, mesh: BallMesh) -> float:
    """Degree of ``u`` restricted to the boundary triangulation (unrounded)."""
    t = mesh.boundary_tris
    return float(solid_angle(u[t[:, 0]], u[t[:, 1]], u[t[:, 2]]).sum() / FOUR_PI)


@dataclass
class InteriorDefect:
    tet: int
    centroid: list
    degree: int
    unresolved: bool = False


def detect_interior_defects(u: np.ndarray, mesh: BallMesh) -> list[InteriorDefect]:
    """Tets whose image of ``u`` wraps the sphere a nonzero number of times.

    Tets whose unrounded degree sits farther than 0.2 from an integer are
    reported with ``unresolved=True`` whatever their rounded degree.
    """
    u = np.asarray(u, dtype=float)
    deg = tet_degrees(u, mesh)
    rounded = np.rint(deg).astype(int)
    unresolved = np.abs(deg - rounded) >= DEGREE_RESIDUE_TOL
    hits = np.flatnonzero((rounded != 0) | unresolved)
    cents = mesh.centroids
    return [
        InteriorDefect(int(t), cents[t].tolist(), int(rounded[t]), bool(unresolved[t])) for t in hits
    ]


def _transport(v, x_from, x_to):
    """Parallel transport of tangent vectors along great-circle arcs (rowwise)."""
    axis = np.cross(x_from, x_to)
    sin = np.linalg.norm(axis, axis=1)
    cos = np.einsum("ij,ij->i", x_from, x_to)
    n = axis / np.where(sin > 0, sin, 1.0)[:, None]
    ndv = np.einsum("ij,ij->i", n, v)
    return v * cos[:, None] + np.cross(n, v) * sin[:, None] + n * (ndv * (1.0 - cos))[:, None]


def boundary_face_indices(u: np.ndarray, mesh: BallMesh) -> np.ndarray:
    """Unrounded index of the tangential field around each boundary triangle.

    The rotation of ``u`` relative to Levi-Civita transport along each edge,
    plus the spherical excess of the triangle, is a multiple of ``2 pi``.
    These indices sum to the Euler characteristic (2) over the whole sphere.
    """
    t = mesh.boundary_tris
    x = mesh.vertices / np.maximum(np.linalg.norm(mesh.vertices, axis=1), 1e-300)[:, None]
    total = solid_angle(x[t[:, 0]], x[t[:, 1]], x[t[:, 2]])
    for i, j in ((0, 1), (1, 2), (2, 0)):
        xi, xj = x[t[:, i]], x[t[:, j]]
        a = _transport(u[t[:, i]], xi, xj)
        b = u[t[:, j]]
        total += np.arctan2(np.einsum("ij,ij->i", xj, np.cross(a, b)), np.einsum("ij,ij->i", a, b))
    return total / TWO_PI


@dataclass
class BoundaryDefect:
    vertex: int
    position: list
    index: int
    tangent_sign: int | str = "unfit"
    fit_error: float | None = None


def detect_boundary_defects(u: np.ndarray, mesh: BallMesh, tol: float = 1e-6):
    """Boundary vertices carrying a nonzero index of the tangential field.

    Each triangle with a nonzero index is charged to its most misaligned
    vertex (lowest summed alignment with the other two values).  Returns the
    defect list and a flag that is ``False`` when the indices fail to be
    integers or do not sum to 2.
    """
    u = np.asarray(u, dtype=float)
    b = mesh.boundary_vertex_ids
    if np.any(np.abs(np.einsum("ij,ij->i", u[b], mesh.normals)) > tol):
        raise ValueError("field is not tangential on the boundary")
    face = boundary_face_indices(u, mesh)
    idx = np.rint(face).astype(int)
    consistent = bool(np.all(np.abs(face - idx) < INDEX_RESIDUE_TOL)) and int(idx.sum()) == 2
    charge: dict[int, int] = {}
    t = mesh.boundary_tris
    for f in np.flatnonzero(idx):
        ids = t[f]
        uu = u[ids]
        align = uu @ uu.T
        score = align.sum(axis=1) - 1.0
        vid = int(ids[np.argmin(score)])
        charge[vid] = charge.get(vid, 0) + int(idx[f])
    defects = [
        BoundaryDefect(v, mesh.vertices[v].tolist(), q) for v, q in sorted(charge.items()) if q != 0
    ]
    return defects, consistent


def _rotation_to_e3(nu):
    nu = np.asarray(nu, dtype=float)
    e3 = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(nu, e3))
    if c < -1.0 + 1e-12:
        return np.diag([1.0, -1.0, -1.0])
    v = np.cross(nu, e3)
    V = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + V + V @ V / (1.0 + c)


def tangent_map_fit(u: np.ndarray, mesh: BallMesh, boojum_vertex: int, r_fit: float, min_samples: int = 20):
    """Compare ``u`` near a boojum with the tangent maps ``+y/|y|`` and ``-y/|y|``.

    Coordinates are rotated so the outward normal at the boojum is ``e3``.
    Returns ``(sign, fit_error)`` where ``fit_error`` is the mean squared
    deviation from the better of the two maps over vertices with
    ``0 < |y| <= r_fit``.
    """
    p = mesh.vertices[boojum_vertex]
    R = _rotation_to_e3(mesh.vertex_normal(boojum_vertex))
    y = (mesh.vertices - p) @ R.T
    d = np.linalg.norm(y, axis=1)
    sel = (d > 0) & (d <= r_fit)
    if sel.sum() < min_samples:
        raise InsufficientResolution(
            f"only {int(sel.sum())} samples within r_fit={r_fit} (need {min_samples})"
        )
    w = np.asarray(u, dtype=float)[sel] @ R.T
    yhat = y[sel] / d[sel, None]
    e_plus = float(np.mean(np.sum((w - yhat) ** 2, axis=1)))
    e_minus = float(np.mean(np.sum((w + yhat) ** 2, axis=1)))
    return (1, e_plus) if e_plus <= e_minus else (-1, e_minus)


def tangent_map_sample(mesh: BallMesh, boojum_vertex: int, sign: int = 1) -> np.ndarray:
    """``sign (x - p)/|x - p|`` at every vertex.

    The boojum vertex itself gets ``-sign nu``, the mean direction of
    ``y/|y|`` over the inner half-ball.
    """
    p = mesh.vertices[boojum_vertex]
    y = mesh.vertices - p
    d = np.linalg.norm(y, axis=1)
    out = sign * y / np.where(d > 0, d, 1.0)[:, None]
    out[boojum_vertex] = -sign * mesh.vertex_normal(boojum_vertex)
    return out


@dataclass
class MonotonicityProfile:
    center: list
    radii: list
    values: list
    violation: float

    def write_csv(self, path, label=None, append=False):
        with open(path, "a" if append else "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if not append:
                w.writerow((["defect"] if label is not None else []) + ["r", "value"])
            for r, v in zip(self.radii, self.values):
                w.writerow(([label] if label is not None else []) + [repr(float(r)), repr(float(v))])


def monotonicity_profile(u: np.ndarray, mesh: BallMesh, center_boundary_vertex: int, radii) -> MonotonicityProfile:
    """``(1/r) sum_{tets with centroid in B_r} vol |grad u_h|^2`` for each radius."""
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) == 0 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ValueError("radii must be positive and strictly increasing")
    if radii[-1] > 1.0:
        raise ValueError("radii must not exceed 1")
    p = mesh.vertices[center_boundary_vertex]
    dens = tet_dirichlet_density(u, mesh)
    dist = np.linalg.norm(mesh.centroids - p, axis=1)
    order = np.argsort(dist, kind="stable")
    cum = np.cumsum(dens[order])
    k = np.searchsorted(dist[order], radii, side="right")
    energy = np.where(k > 0, cum[np.maximum(k - 1, 0)], 0.0)
    values = energy / radii
    violation = float(np.max(values[:-1] - values[1:])) if len(values) > 1 else 0.0
    return MonotonicityProfile(p.tolist(), radii.tolist(), values.tolist(), violation)


def profile_radii(mesh: BallMesh, r_max: float = 0.5, n: int = 8) -> np.ndarray:
    """``n`` equally spaced radii on ``[3h, r_max]``."""
    r_min = 3.0 * mesh.h
    if r_min >= r_max:
        raise InsufficientResolution(f"3h = {r_min:.4g} is not below r_max = {r_max}")
    return np.linspace(r_min, r_max, n)


def calibrate_slack(mesh: BallMesh, boojum_vertex: int, radii) -> float:
    """Slack constant for the decrement test ``v(r_i) - v(r_j) <= C (r_j + h)``.

    On the unit ball the exact tangent map has normalized energy
    ``4 pi (1 - r/4)`` to first order, i.e. a curvature-driven decrement
    rate of ``pi``.  The returned constant is the larger of that rate and the
    steepest decrement rate of the discrete tangent-map profile on this mesh.
    """
    prof = monotonicity_profile(tangent_map_sample(mesh, boojum_vertex), mesh, boojum_vertex, radii)
    v = np.asarray(prof.values)
    r = np.asarray(prof.radii)
    rates = (v[:-1] - v[1:]) / (r[1:] - r[:-1])
    return float(max(np.pi, rates.max(initial=0.0)))


def slack_excess(profile: MonotonicityProfile, c_slack: float, h: float) -> float:
    """``max_{i<j} [v_i - v_j - C (r_j + h)]``; nonpositive means the test passes."""
    v = np.asarray(profile.values)
    r = np.asarray(profile.radii)
    worst = -np.inf
    for j in range(1, len(v)):
        worst = max(worst, float(np.max(v[:j]) - v[j] - c_slack * (r[j] + h)))
    return worst


@dataclass
class DefectReport:
    interior: list = field(default_factory=list)
    boundary: list = field(default_factory=list)
    n_int: int = 0
    n_bdy: int = 0
    n_int_even: bool = True
    n_bdy_even: bool = True
    index_sum: int = 0
    index_consistent: bool = True
    unresolved_tets: int = 0
    monotonicity: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def parity_and_report(u: np.ndarray, mesh: BallMesh, r_fit: float | None = None) -> DefectReport:
    """Run both detectors and assemble the report (parity is reported, not enforced)."""
    interior = detect_interior_defects(u, mesh)
    boundary, consistent = detect_boundary_defects(u, mesh)
    if r_fit is not None:
        for d in boundary:
            try:
                d.tangent_sign, d.fit_error = tangent_map_fit(u, mesh, d.vertex, r_fit)
            except InsufficientResolution:
                d.tangent_sign, d.fit_error = "unfit", None
    resolved = [d for d in interior if not d.unresolved]
    n_int = len(resolved)
    n_bdy = len(boundary)
    report = DefectReport(
        interior=[asdict(d) for d in interior],
        boundary=[asdict(d) for d in boundary],
        n_int=n_int,
        n_bdy=n_bdy,
        n_int_even=n_int % 2 == 0,
        n_bdy_even=n_bdy % 2 == 0,
        index_sum=int(sum(d.index for d in boundary)),
        index_consistent=consistent,
        unresolved_tets=len(interior) - n_int,
    )
    report.notes.append(
        "monotonicity slack constants are calibrated per mesh from the exact tangent-map sample"
    )
    if not consistent:
        report.notes.append("boundary indices inconsistent: non-integer residue or sum != 2")
    return report
