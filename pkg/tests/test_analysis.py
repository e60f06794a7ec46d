import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from boojum_ldg.analysis import (
    InsufficientResolution,
    boundary_face_indices,
    boundary_image_degree,
    calibrate_slack,
    detect_boundary_defects,
    detect_interior_defects,
    monotonicity_profile,
    parity_and_report,
    profile_radii,
    slack_excess,
    solid_angle,
    tangent_map_fit,
    tangent_map_sample,
    tet_degrees,
)
from boojum_ldg.solve import init_polar_tangent_field


# a generic centre: a defect sitting exactly on a vertex is a degenerate
# configuration for any vertex-sampled degree
CENTER = np.array([0.011, 0.007, 0.013])


def radial(mesh, center=CENTER, sign=1.0):
    y = mesh.vertices - center
    d = np.linalg.norm(y, axis=1)
    u = sign * y / np.where(d > 0, d, 1.0)[:, None]
    u[d == 0] = [0.0, 0.0, 1.0]
    return u


def test_solid_angle_octant():
    e = np.eye(3)
    assert solid_angle(e[[0]], e[[1]], e[[2]])[0] == pytest.approx(np.pi / 2)
    assert solid_angle(e[[0]], e[[2]], e[[1]])[0] == pytest.approx(-np.pi / 2)


def test_hedgehog_degree_one(mesh2):
    deg = tet_degrees(radial(mesh2), mesh2)
    assert deg.sum() == pytest.approx(1.0, abs=1e-9)
    (d,) = detect_interior_defects(radial(mesh2), mesh2)
    assert d.degree == 1 and not d.unresolved
    assert np.linalg.norm(d.centroid) < 1 / 6  # inside the innermost shell


def test_antipodal_degree_minus_one(mesh2):
    # x -> -x reverses orientation of S^2
    (d,) = detect_interior_defects(radial(mesh2, sign=-1.0), mesh2)
    assert d.degree == -1


def test_constant_field_has_no_defects(mesh2):
    u = np.tile([0.0, 0.6, 0.8], (mesh2.n_vertices, 1))
    assert detect_interior_defects(u, mesh2) == []
    assert boundary_image_degree(u, mesh2) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_degree_rotation_invariant(seed):
    from boojum_ldg.mesh import build_ball_mesh
    m = build_ball_mesh(1, 2)
    R = Rotation.random(random_state=seed).as_matrix()
    deg = tet_degrees(radial(m) @ R.T, m)
    assert deg.sum() == pytest.approx(1.0, abs=1e-9)


def test_polar_field_boundary_indices(mesh2):
    u = init_polar_tangent_field(mesh2)
    face = boundary_face_indices(u, mesh2)
    assert face.sum() == pytest.approx(2.0, abs=1e-9)
    defects, consistent = detect_boundary_defects(u, mesh2)
    assert consistent
    assert sorted(d.index for d in defects) == [1, 1]
    zs = sorted(d.position[2] for d in defects)
    assert zs == pytest.approx([-1.0, 1.0])


def test_polar_field_interior(mesh2):
    # the polar boundary data has image degree 0, so interior charges cancel
    u = init_polar_tangent_field(mesh2)
    assert boundary_image_degree(u, mesh2) == pytest.approx(0.0, abs=1e-9)
    resolved = [d for d in detect_interior_defects(u, mesh2) if not d.unresolved]
    assert sum(d.degree for d in resolved) == 0


def test_interior_hedgehog_with_tangential_boundary(mesh2):
    # radial in the interior, polar on the boundary: degree additivity forces
    # a compensating -1 next to the +1, so the interior count is even
    u = radial(mesh2)
    b = mesh2.boundary_vertex_ids
    u[b] = init_polar_tangent_field(mesh2)[b]
    rep = parity_and_report(u, mesh2)
    degrees = sorted(d["degree"] for d in rep.interior if not d["unresolved"])
    assert sum(degrees) == 0
    assert 1 in degrees
    assert rep.n_int_even


def test_boundary_rejects_normal_field(mesh1):
    with pytest.raises(ValueError, match="tangential"):
        detect_boundary_defects(radial(mesh1), mesh1)


def test_tangent_sample_fits_exactly(mesh3):
    vid = int(mesh3.boundary_vertex_ids[np.argmax(mesh3.vertices[mesh3.boundary_vertex_ids, 2])])
    for sign in (1, -1):
        s, err = tangent_map_fit(tangent_map_sample(mesh3, vid, sign), mesh3, vid, 0.3)
        assert s == sign and err < 1e-12


def test_fit_needs_samples(mesh2):
    vid = int(mesh2.boundary_vertex_ids[0])
    with pytest.raises(InsufficientResolution):
        tangent_map_fit(init_polar_tangent_field(mesh2), mesh2, vid, 0.05)


def test_profile_constant_field_is_zero(mesh2):
    u = np.tile([1.0, 0.0, 0.0], (mesh2.n_vertices, 1))
    prof = monotonicity_profile(u, mesh2, int(mesh2.boundary_vertex_ids[0]), [0.2, 0.4])
    assert np.abs(prof.values).max() < 1e-25 and abs(prof.violation) < 1e-25


@pytest.mark.parametrize("radii", [[0.3, 0.2], [0.0, 0.2], [0.5, 1.5], []])
def test_profile_rejects_bad_radii(mesh1, radii):
    with pytest.raises(ValueError):
        monotonicity_profile(radial(mesh1), mesh1, int(mesh1.boundary_vertex_ids[0]), radii)


def test_profile_radii(mesh3):
    r = profile_radii(mesh3)
    assert r[0] == pytest.approx(3 * mesh3.h) and r[-1] == 0.5 and len(r) == 8
    with pytest.raises(InsufficientResolution):
        profile_radii(mesh3, r_max=0.2)


def test_tangent_sample_profile_approaches_curved_oracle():
    # on the unit ball the tangent map's normalized energy is 4 pi (1 - r/4)
    # to first order in r; the P1 deficit shrinks like h/r under refinement
    from boojum_ldg.mesh import build_ball_mesh
    errs = []
    for level, layers in ((3, 12), (4, 24)):
        m = build_ball_mesh(level, layers)
        vid = int(m.boundary_vertex_ids[np.argmax(m.vertices[m.boundary_vertex_ids, 2])])
        prof = monotonicity_profile(tangent_map_sample(m, vid), m, vid, [0.5])
        errs.append(abs(prof.values[0] / (4 * np.pi * (1 - 0.5 / 4)) - 1))
    assert errs[1] < 0.6 * errs[0]


def test_slack_calibration(mesh3):
    vid = int(mesh3.boundary_vertex_ids[0])
    r = profile_radii(mesh3)
    c = calibrate_slack(mesh3, vid, r)
    assert c >= np.pi
    prof = monotonicity_profile(tangent_map_sample(mesh3, vid), mesh3, vid, r)
    assert slack_excess(prof, c, mesh3.h) <= 0


def test_report_json_roundtrip(mesh2):
    rep = parity_and_report(init_polar_tangent_field(mesh2), mesh2)
    d = json.loads(rep.to_json())
    assert d["index_sum"] == 2 and d["n_bdy"] == 2 and d["index_consistent"]
    assert rep.to_json() == parity_and_report(init_polar_tangent_field(mesh2), mesh2).to_json()
