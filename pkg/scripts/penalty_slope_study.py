"""Penalty decay along an L sweep on a fixed mesh.

Solves the harmonic map from the polar field, sweeps L, and prints the
penalty, its ratio to the comparison bound s0^2 L E_harm, the local
log-log slopes between consecutive L and the least-squares slope.

    python scripts/penalty_slope_study.py --level 3 --layers 12 --schedule 0.5 0.25 0.125 0.0625
"""
import argparse
import time

import numpy as np

from boojum_ldg.assembly import energy_harmonic
from boojum_ldg.mesh import build_ball_mesh
from boojum_ldg.qtensor import MaterialParams
from boojum_ldg.solve import SolveConfig, init_polar_tangent_field, minimize_harmonic, sweep_L


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--level", type=int, default=3)
    ap.add_argument("--layers", type=int, default=12)
    ap.add_argument("--schedule", type=float, nargs="+", default=[0.5, 0.25, 0.125, 0.0625])
    ap.add_argument("--grad-tol", type=float, default=1e-6)
    args = ap.parse_args()

    mesh = build_ball_mesh(args.level, args.layers)
    p = MaterialParams()
    u, tr = minimize_harmonic(init_polar_tangent_field(mesh), mesh)
    e_harm = energy_harmonic(u, mesh)
    print(f"harmonic: {tr.status} in {tr.iters[-1]} iterations, E={e_harm:.6f}")
    t0 = time.perf_counter()
    recs = sweep_L(args.schedule, mesh, p, u, SolveConfig(grad_tol=args.grad_tol))
    L = np.array([r.L for r in recs])
    pen = np.array([r.energy.penalty for r in recs])
    print(f"sweep: {time.perf_counter() - t0:.0f}s")
    print("       L      penalty   ratio  local_slope  h1_distance  max|Q|/bound  iters")
    for i, r in enumerate(recs):
        local = np.log(pen[i] / pen[i - 1]) / np.log(L[i] / L[i - 1]) if i else float("nan")
        print(f"{r.L:8.5f} {pen[i]:12.6f} {pen[i] / (p.s0**2 * r.L * e_harm):7.4f} {local:12.4f} "
              f"{r.h1_distance:12.5f} {r.max_norm / p.linf_bound:13.4f} {r.trace.iters[-1]:6d}")
    print(f"least-squares log-log slope: {np.polyfit(np.log(L), np.log(pen), 1)[0]:.4f}")


if __name__ == "__main__":
    main()
