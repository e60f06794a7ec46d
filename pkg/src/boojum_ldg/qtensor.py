"""Pointwise algebra on symmetric traceless 3x3 tensors.

Tensors are stored as full ``(..., 3, 3)`` float arrays so that every
function here vectorizes over arbitrary leading axes (a single tensor, or one
per mesh vertex).  The five independent entries ``(q11, q12, q13, q22, q23)``
are available through :func:`components` / :func:`from_components`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

I3 = np.eye(3)

# Orthonormal basis of the traceless symmetric matrices under A:B = tr(AB).
S0_BASIS = np.array(
    [
        np.diag([1.0, -1.0, 0.0]) / np.sqrt(2.0),
        np.diag([1.0, 1.0, -2.0]) / np.sqrt(6.0),
        (np.outer([1, 0, 0], [0, 1, 0]) + np.outer([0, 1, 0], [1, 0, 0])) / np.sqrt(2.0),
        (np.outer([1, 0, 0], [0, 0, 1]) + np.outer([0, 0, 1], [1, 0, 0])) / np.sqrt(2.0),
        (np.outer([0, 1, 0], [0, 0, 1]) + np.outer([0, 0, 1], [0, 1, 0])) / np.sqrt(2.0),
    ]
)


class ParameterError(ValueError):
    """Material or solver parameters violate a standing assumption."""


def s0_of(a: float, b: float, c: float) -> float:
    """Scalar order parameter of the uniaxial bulk minimum."""
    if not (b > 0 and c > 0):
        raise ParameterError(f"b and c must be positive (got b={b}, c={c})")
    if not b * b > 27.0 * a * c:
        raise ParameterError(f"b^2 > 27ac violated: b^2={b * b}, 27ac={27.0 * a * c}")
    return (b + np.sqrt(b * b - 24.0 * a * c)) / (4.0 * c)


def _uniaxial_ray_energy(s, a, b, c):
    # f*_B(s (n n - I/3)): tr Q^2 = 2 s^2 / 3, tr Q^3 = 2 s^3 / 9
    return a * s**2 / 3.0 - 2.0 * b * s**3 / 27.0 + c * s**4 / 9.0


@dataclass(frozen=True)
class MaterialParams:
    """Landau-de Gennes constants ``a, b, c``, anchoring ``s1, s2`` and ``L``."""

    a: float = -0.3
    b: float = 1.0
    c: float = 1.0
    s1: float = 1.0
    s2: float = 1.0
    L: float = 1.0
    s0: float = field(init=False)
    bulk_min: float = field(init=False)
    linf_bound: float = field(init=False)

    def __post_init__(self):
        for name in ("s1", "s2", "L"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive (got {getattr(self, name)})")
        s0 = s0_of(self.a, self.b, self.c)
        fmin = _uniaxial_ray_energy(s0, self.a, self.b, self.c)
        # closed form vs. a 1-D search along the uniaxial ray
        res = minimize_scalar(
            _uniaxial_ray_energy, bounds=(0.0, 4.0 * s0), args=(self.a, self.b, self.c),
            method="bounded", options={"xatol": 1e-12},
        )
        if res.fun < fmin - 1e-9 * max(1.0, abs(fmin)):
            raise ParameterError(f"uniaxial minimum check failed: {res.fun} < {fmin}")
        object.__setattr__(self, "s0", float(s0))
        object.__setattr__(self, "bulk_min", float(fmin))
        object.__setattr__(
            self, "linf_bound", float(np.sqrt(2.0 * s0**2 / 3.0 + self.s1 / (12.0 * self.s2)))
        )

    def with_L(self, L: float) -> "MaterialParams":
        return MaterialParams(self.a, self.b, self.c, self.s1, self.s2, L)


@dataclass(frozen=True)
class DirectorState:
    n: np.ndarray
    s: float
    beta: float


def components(Q: np.ndarray) -> np.ndarray:
    """Return the independent entries ``(q11, q12, q13, q22, q23)``."""
    Q = np.asarray(Q)
    return np.stack(
        [Q[..., 0, 0], Q[..., 0, 1], Q[..., 0, 2], Q[..., 1, 1], Q[..., 1, 2]], axis=-1
    )


def from_components(q: np.ndarray) -> np.ndarray:
    """Build tensors from ``(..., 5)`` entries; ``q33 = -q11 - q22``."""
    q = np.asarray(q, dtype=float)
    q11, q12, q13, q22, q23 = np.moveaxis(q, -1, 0)
    Q = np.empty(q.shape[:-1] + (3, 3))
    Q[..., 0, 0] = q11
    Q[..., 1, 1] = q22
    Q[..., 2, 2] = -q11 - q22
    Q[..., 0, 1] = Q[..., 1, 0] = q12
    Q[..., 0, 2] = Q[..., 2, 0] = q13
    Q[..., 1, 2] = Q[..., 2, 1] = q23
    return Q


def from_basis(coords: np.ndarray) -> np.ndarray:
    """Tensors from coordinates in the orthonormal basis :data:`S0_BASIS`."""
    return np.tensordot(np.asarray(coords, dtype=float), S0_BASIS, axes=([-1], [0]))


def to_basis(Q: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,kij->...k", Q, S0_BASIS)


def project_s0(A: np.ndarray) -> np.ndarray:
    """Orthogonal projection of a 3x3 matrix onto symmetric traceless matrices."""
    S = 0.5 * (A + np.swapaxes(A, -1, -2))
    tr = np.trace(S, axis1=-2, axis2=-1)
    return S - tr[..., None, None] * I3 / 3.0


def frob2(Q: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ij->...", Q, Q)


def _check_unit(v, what, tol=1e-9):
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(np.linalg.norm(v, axis=-1) - 1.0) > tol):
        raise ValueError(f"{what} must be a unit vector")
    return v


def uniaxial(n: np.ndarray, params: MaterialParams) -> np.ndarray:
    """``s0 (n n^T - I/3)`` for unit ``n`` of shape ``(..., 3)``."""
    n = _check_unit(n, "director n")
    return params.s0 * (np.einsum("...i,...j->...ij", n, n) - I3 / 3.0)


def f_bulk(Q: np.ndarray, params: MaterialParams) -> np.ndarray:
    """Bulk potential shifted so that its minimum over the tensor space is zero."""
    Q = np.asarray(Q, dtype=float)
    tr2 = frob2(Q)
    tr3 = np.einsum("...ij,...jk,...ki->...", Q, Q, Q)
    fstar = 0.5 * params.a * tr2 - params.b * tr3 / 3.0 + 0.25 * params.c * tr2**2
    return fstar - params.bulk_min


def f_bulk_grad(Q: np.ndarray, params: MaterialParams) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    tr2 = frob2(Q)[..., None, None]
    QQ = Q @ Q
    return params.a * Q - params.b * (QQ - tr2 * I3 / 3.0) + params.c * tr2 * Q


def f_surface(Q: np.ndarray, nu: np.ndarray, params: MaterialParams) -> np.ndarray:
    """Degenerate planar anchoring density at outward normals ``nu``."""
    Q = np.asarray(Q, dtype=float)
    nu = _check_unit(nu, "normal nu")
    s0 = params.s0
    Qnu = np.einsum("...ij,...j->...i", Q, nu)
    nQ2n = np.einsum("...i,...i->...", Qnu, Qnu)
    nQn = np.einsum("...i,...i->...", nu, Qnu)
    dev = frob2(Q) - 2.0 * s0**2 / 3.0
    return params.s1 * (nQ2n + 2.0 * s0 * nQn / 3.0 + s0**2 / 9.0) + params.s2 * dev**2


def f_surface_definitional(Q: np.ndarray, nu: np.ndarray, params: MaterialParams) -> np.ndarray:
    """Same density written through the shifted tensor ``Q + s0 I/3`` and ``P = I - nu nu``."""
    Q = np.asarray(Q, dtype=float)
    nu = _check_unit(nu, "normal nu")
    s0 = params.s0
    Qs = Q + s0 * I3 / 3.0
    P = I3 - np.einsum("...i,...j->...ij", nu, nu)
    normal_part = Qs - P @ Qs
    return params.s1 * frob2(normal_part) + params.s2 * (frob2(Qs) - s0**2) ** 2


def f_surface_grad(Q: np.ndarray, nu: np.ndarray, params: MaterialParams) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    nu = _check_unit(nu, "normal nu")
    s0, s1, s2 = params.s0, params.s1, params.s2
    N = np.einsum("...i,...j->...ij", nu, nu)
    QN = Q @ N
    trQN = np.trace(QN, axis1=-2, axis2=-1)[..., None, None]
    dev = (frob2(Q) - 2.0 * s0**2 / 3.0)[..., None, None]
    return (
        s1 * (QN + N @ Q - 2.0 * trQN * I3 / 3.0)
        + 2.0 * s0 * s1 * (N - I3 / 3.0) / 3.0
        + 4.0 * s2 * dev * Q
    )


def biaxiality(Q: np.ndarray) -> np.ndarray:
    """``1 - 6 tr(Q^3)^2 / |Q|^6`` clamped to [0, 1]; zero where ``|Q| < 1e-12``."""
    Q = np.asarray(Q, dtype=float)
    tr2 = frob2(Q)
    tr3 = np.einsum("...ij,...jk,...ki->...", Q, Q, Q)
    small = tr2 < 1e-24
    safe = np.where(small, 1.0, tr2)
    beta = np.clip(1.0 - 6.0 * tr3**2 / safe**3, 0.0, 1.0)
    return np.where(small, 0.0, beta)


def _sign_fix(n):
    # first nonzero component positive
    n = np.array(n, dtype=float)
    flat = n.reshape(-1, 3)
    for row in flat:
        nz = np.flatnonzero(np.abs(row) > 1e-14)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return flat.reshape(n.shape)


def director_fields(Q: np.ndarray):
    """Vectorized director extraction: returns ``(n, s, beta)`` arrays."""
    Q = np.asarray(Q, dtype=float)
    w, v = np.linalg.eigh(Q)
    n = _sign_fix(v[..., :, -1])
    s = 1.5 * w[..., -1]
    beta = biaxiality(Q)
    degenerate = np.sqrt(frob2(Q)) < 1e-12
    n = np.where(degenerate[..., None], np.array([0.0, 0.0, 1.0]), n)
    s = np.where(degenerate, 0.0, s)
    return n, s, beta


def director_of(Q: np.ndarray) -> DirectorState:
    n, s, beta = director_fields(np.asarray(Q, dtype=float).reshape(3, 3))
    return DirectorState(n=n, s=float(s), beta=float(beta))
