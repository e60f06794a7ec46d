"""Central finite-difference oracle shared by the gradient tests."""
import numpy as np

from boojum_ldg.qtensor import S0_BASIS


def ldg_coordinates(rng, n_vertices, count):
    """``count`` distinct (vertex, basis-direction) pairs."""
    flat = rng.choice(n_vertices * 5, size=count, replace=False)
    return [(int(i // 5), int(i % 5)) for i in flat]


def harmonic_coordinates(rng, n_vertices, count):
    flat = rng.choice(n_vertices * 3, size=count, replace=False)
    return [(int(i // 3), int(i % 3)) for i in flat]


def fd_relative_errors(energy, x, grad, coords, direction, h=1e-5):
    """Relative error of ``<grad, e>`` against the central difference along ``e``.

    The floor in the denominator (1e-3 of the largest gradient entry) keeps
    near-zero partial derivatives from turning roundoff into huge ratios.
    """
    floor = 1e-3 * np.abs(grad).max()
    out = []
    for vid, k in coords:
        e = direction(x.shape, vid, k)
        fd = (energy(x + h * e) - energy(x - h * e)) / (2 * h)
        an = float(np.sum(grad * e))
        out.append(abs(fd - an) / max(abs(an), floor))
    return np.array(out)


def s0_direction(shape, vid, k):
    e = np.zeros(shape)
    e[vid] = S0_BASIS[k]
    return e


def axis_direction(shape, vid, k):
    e = np.zeros(shape)
    e[vid, k] = 1.0
    return e
