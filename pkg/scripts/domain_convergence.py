#!/usr/bin/env python3
"""Pohozaev error and route spread versus box size at fixed grid spacing.

This is how the reference grids were chosen: grow lx (and ly) at constant
hx, hy until the worst identity error stops improving, then refine h.

    python3 scripts/domain_convergence.py --p 2/1 --hx 0.0184 --hy 0.0614 \
        --lx-pi 12 24 48 --ly-pi 10
"""
import argparse
import math
import time

from bozk.ground_state import petviashvili_solve
from bozk.sharp_constant import rho_report
from bozk.spectral import make_grid, parse_p


def pow2_at_least(x: float) -> int:
    return 1 << max(4, math.ceil(math.log2(x)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--p", default="1/1")
    ap.add_argument("--hx", type=float, default=0.06, help="target x spacing (rounded down)")
    ap.add_argument("--hy", type=float, default=0.12, help="target y spacing (rounded down)")
    ap.add_argument("--lx-pi", type=float, nargs="+", default=[10, 20, 40, 80],
                    help="half-widths in x, in units of pi")
    ap.add_argument("--ly-pi", type=float, nargs="+", default=[10])
    ap.add_argument("--tol", type=float, default=1e-10)
    args = ap.parse_args(argv)
    p = parse_p(args.p)
    print("lx/pi  ly/pi     nx    ny  iters  worst_pohozaev  K/I         spread      seconds")
    for lyp in args.ly_pi:
        for lxp in args.lx_pi:
            lx, ly = lxp * math.pi, lyp * math.pi
            nx, ny = pow2_at_least(2 * lx / args.hx), pow2_at_least(2 * ly / args.hy)
            t0 = time.perf_counter()
            gs = petviashvili_solve(p, make_grid(nx, ny, lx, ly), tol=args.tol, max_iter=3000)
            r = gs.report
            print(f"{lxp:5g}  {lyp:5g}  {nx:5d} {ny:5d}  {gs.iterations:5d}  "
                  f"{gs.pohozaev.max_rel_error():.3e}      {abs(r.K / r.I):.3e}   "
                  f"{rho_report(gs).spread:.3e}   {time.perf_counter() - t0:.1f}", flush=True)


if __name__ == "__main__":
    main()
