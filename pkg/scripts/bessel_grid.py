#!/usr/bin/env python3
"""Mellin-Barnes J-Bessel against the ascending series on an (order, x) grid."""
import argparse
import time

import numpy as np

from rslab.specfun import bessel_j_mellin_barnes, bessel_j_series


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--orders", type=float, nargs="+", default=[11, 15, 23, 39])
    ap.add_argument("--x-max", type=float, default=20.0)
    ap.add_argument("--points", type=int, default=16)
    ap.add_argument("--prec", type=int, default=80)
    args = ap.parse_args()
    for nu in args.orders:
        t0 = time.perf_counter()
        worst = 0.0
        for x in np.linspace(0.1, args.x_max, args.points):
            mb = bessel_j_mellin_barnes(nu, float(x), prec=args.prec)
            ref = bessel_j_series(nu, float(x), args.prec)
            worst = max(worst, float(abs(mb - ref) / abs(ref)))
        print(f"nu = {nu:5.1f}: max relative gap {worst:.2e} ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
