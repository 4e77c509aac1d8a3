"""Panel sweep of the sound-soft solver: Mie error and quarter-point residual.

Cube-projected unit sphere at kappa = 2 pi.  The boundary residual is
measured off the collocation points, where piecewise-constant densities are
only first order accurate.
"""
import argparse
import time

import numpy as np

from wavegesture import bem
from wavegesture.mesh import sphere_mesh
from wavegesture.oracles import MieSeries, fibonacci_sphere, mie_far_field, relative_l2

QUARTER = [[0.25, 0.25], [0.75, 0.25], [0.75, 0.75], [0.25, 0.75]]


def quarter_point_residual(mesh, kappa, d, system, density):
    panels = np.repeat(np.arange(len(mesh)), 4)
    st = np.tile(QUARTER, (len(mesh), 1))
    rows = bem.boundary_operator(mesh, kappa, system.eta, panels, st)
    x = mesh.map(st[:, :1], st[:, 1:], panels=panels)[0][:, 0, :]
    total = np.abs(rows @ density.values + np.exp(1j * kappa * x @ d))
    return float(np.sqrt(np.mean(total**2))), float(total.max())


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--panels", type=int, nargs="*", default=[4, 8, 12, 16])
    p.add_argument("--kappa", type=float, default=2 * np.pi)
    args = p.parse_args()
    d = np.array([0.0, 0.0, 1.0])
    xh = fibonacci_sphere(300)
    ref = mie_far_field(MieSeries(args.kappa), d, xh)
    print("edge   panels   mie_L2    bc_rms    bc_max    seconds")
    for m in args.panels:
        t = time.perf_counter()
        mesh = sphere_mesh(1.0, m)
        sys_ = bem.assemble_cfie(mesh, args.kappa)
        dens = bem.solve_soft_plane(mesh, args.kappa, d, system=sys_)
        err = relative_l2(bem.far_field(dens, xh), ref)
        rms, mx = quarter_point_residual(mesh, args.kappa, d, sys_, dens)
        print(f"{m:<6d} {len(mesh):<8d} {err:<9.4f} {rms:<9.4f} {mx:<9.4f} "
              f"{time.perf_counter() - t:.1f}")


if __name__ == "__main__":
    main()
