#!/usr/bin/env python3
"""Growth of |E*(z, 1/2)| / sqrt(y) in the fundamental domain as the height cap rises."""
import argparse

from rslab.rankin import eisenstein_half_bound


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--caps", type=float, nargs="+", default=[5, 10, 20, 50])
    ap.add_argument("--nx", type=int, default=21)
    ap.add_argument("--ny", type=int, default=30)
    args = ap.parse_args()
    for cap in args.caps:
        res = eisenstein_half_bound(cap, args.nx, args.ny)
        x, y = res["argmax"]
        print(f"y <= {cap:6.1f}: max ratio {res['max_ratio']:.4f} at ({x:.3f}, {y:.3f}), "
              f"ratio / (1 + log y_max) = {res['log_growth_ratio']:.4f}")


if __name__ == "__main__":
    main()
