import numpy as np
import pytest

from boojum_ldg.assembly import (
    energy_harmonic,
    energy_ldg,
    grad_harmonic,
    grad_ldg,
    h1_distance,
    tet_dirichlet_density,
)
from boojum_ldg.mesh import build_ball_mesh
from boojum_ldg.qtensor import MaterialParams, from_basis, uniaxial
from boojum_ldg.solve import init_polar_tangent_field

from _fd import axis_direction, fd_relative_errors, harmonic_coordinates, ldg_coordinates, s0_direction


def hedgehog(mesh):
    x = mesh.vertices
    r = np.linalg.norm(x, axis=1)
    u = x / np.where(r > 0, r, 1.0)[:, None]
    u[r == 0] = [0.0, 0.0, 1.0]
    return u


def hedgehog_error(level, layers):
    m = build_ball_mesh(level, layers)
    return energy_harmonic(hedgehog(m), m) / (8 * np.pi) - 1


def surface_penalty_error(level, layers):
    m = build_ball_mesh(level, layers)
    p = MaterialParams()
    Q = uniaxial(np.tile([0.0, 0.0, 1.0], (m.n_vertices, 1)), p)
    want = p.s1 * p.s0**2 * 4 * np.pi / 3
    return energy_ldg(Q, m, p).surface_penalty / want - 1


def random_Q(mesh, params, rng, noise=0.05):
    n = rng.standard_normal((mesh.n_vertices, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    return uniaxial(n, params) + noise * from_basis(rng.standard_normal((mesh.n_vertices, 5)))


def test_ldg_gradient_fd(mesh1, rng):
    p = MaterialParams(L=0.3, s1=1.5, s2=0.7)
    Q = random_Q(mesh1, p, rng)
    G = grad_ldg(Q, mesh1, p)
    coords = ldg_coordinates(rng, mesh1.n_vertices, 60)
    err = fd_relative_errors(lambda X: energy_ldg(X, mesh1, p).total, Q, G, coords, s0_direction)
    assert err.max() < 1e-5


def test_harmonic_gradient_fd(mesh1, rng):
    u = rng.standard_normal((mesh1.n_vertices, 3))
    G = grad_harmonic(u, mesh1)
    coords = harmonic_coordinates(rng, mesh1.n_vertices, 60)
    err = fd_relative_errors(lambda X: energy_harmonic(X, mesh1), u, G, coords, axis_direction)
    assert err.max() < 1e-5


def test_ldg_gradient_in_s0(mesh1, rng):
    p = MaterialParams()
    G = grad_ldg(random_Q(mesh1, p, rng), mesh1, p)
    assert np.abs(G - np.swapaxes(G, 1, 2)).max() < 1e-14
    assert np.abs(np.trace(G, axis1=1, axis2=2)).max() < 1e-13


def test_constant_fields_have_no_elastic_energy(mesh2):
    p = MaterialParams()
    Q = uniaxial(np.tile([1.0, 0.0, 0.0], (mesh2.n_vertices, 1)), p)
    e = energy_ldg(Q, mesh2, p)
    assert abs(e.elastic) < 1e-12 and abs(e.bulk_penalty) < 1e-10
    assert e.total == pytest.approx(e.surface_penalty / p.L)


def test_total_scales_with_L(mesh1, rng):
    p = MaterialParams()
    Q = random_Q(mesh1, p, rng)
    e1, e2 = energy_ldg(Q, mesh1, p), energy_ldg(Q, mesh1, p.with_L(0.25))
    assert e2.total - e2.elastic == pytest.approx(4 * (e1.total - e1.elastic))


def test_hedgehog_energy_level3():
    assert abs(hedgehog_error(3, 12)) < 0.05


def test_surface_penalty_level3():
    assert abs(surface_penalty_error(3, 12)) < 0.02


def test_density_sums_to_energy(mesh2):
    u = init_polar_tangent_field(mesh2)
    assert tet_dirichlet_density(u, mesh2).sum() == pytest.approx(energy_harmonic(u, mesh2), rel=1e-12)


def test_h1_distance_metric(mesh1, rng):
    p = MaterialParams()
    A, B = random_Q(mesh1, p, rng), random_Q(mesh1, p, rng)
    assert h1_distance(A, A, mesh1) == 0.0
    assert h1_distance(A, B, mesh1) == pytest.approx(h1_distance(B, A, mesh1))
    # constant shift: only the L2 part
    D = from_basis(np.array([1.0, 0, 0, 0, 0]))
    assert h1_distance(A + D, A, mesh1) == pytest.approx(np.sqrt(mesh1.lumped_volume.sum()), rel=1e-10)


def test_shape_mismatch(mesh1):
    with pytest.raises(ValueError, match="does not match"):
        energy_harmonic(np.zeros((3, 3)), mesh1)
