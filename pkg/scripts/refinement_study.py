"""Mesh-refinement study of the analytic oracles and the tangent-map profile.

For each (surface_level, radial_layers) pair prints the hedgehog energy
error against 8 pi, the constant-uniaxial surface penalty error, and the
normalized Dirichlet energy of the exact tangent map ``y/|y|`` at a pole,
compared both with 4 pi and with the curved-boundary value 4 pi (1 - r/4).

    python scripts/refinement_study.py --levels 2 3 4
"""
import argparse

import numpy as np

from boojum_ldg.analysis import monotonicity_profile, tangent_map_sample
from boojum_ldg.assembly import energy_harmonic, energy_ldg
from boojum_ldg.mesh import build_ball_mesh
from boojum_ldg.qtensor import MaterialParams, uniaxial


def hedgehog(mesh):
    x = mesh.vertices
    r = np.linalg.norm(x, axis=1)
    u = x / np.where(r > 0, r, 1.0)[:, None]
    u[r == 0] = [0.0, 0.0, 1.0]
    return u


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--levels", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--radii", type=float, nargs="+", default=[0.25, 0.35, 0.5])
    args = ap.parse_args()
    p = MaterialParams()
    print("level layers      h  hedgehog_err  surface_err  " + "  ".join(f"r={r:<4} /4pi /curved" for r in args.radii))
    for level in args.levels:
        layers = 3 * 2 ** (level - 1)
        m = build_ball_mesh(level, layers)
        e_h = energy_harmonic(hedgehog(m), m) / (8 * np.pi) - 1
        Q = uniaxial(np.tile([0.0, 0.0, 1.0], (m.n_vertices, 1)), p)
        e_s = energy_ldg(Q, m, p).surface_penalty / (p.s1 * p.s0**2 * 4 * np.pi / 3) - 1
        b = m.boundary_vertex_ids
        pole = int(b[np.argmax(m.vertices[b, 2])])
        prof = monotonicity_profile(tangent_map_sample(m, pole), m, pole, args.radii)
        cols = "  ".join(
            f"{v / (4 * np.pi):8.4f} {v / (4 * np.pi * (1 - r / 4)):7.4f}" for r, v in zip(prof.radii, prof.values)
        )
        print(f"{level:5d} {layers:6d} {m.h:6.4f} {e_h:+13.4%} {e_s:+12.4%}  {cols}")


if __name__ == "__main__":
    main()
