#!/usr/bin/env python3
"""Weil-bound ratios for Kloosterman sums over Z and a real quadratic field."""
import argparse
from pathlib import Path

from rslab.arith import QuadraticField
from rslab.kloosterman import kloosterman_table, weil_ratio_z, write_kloosterman_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--disc", type=int, default=5, help="squarefree D for Q(sqrt D)")
    ap.add_argument("--max-norm", type=int, default=200)
    ap.add_argument("--c-max", type=int, default=500, help="modulus range over Z")
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    worst_z = max((weil_ratio_z(m, n, c), m, n, c)
                  for c in range(1, args.c_max + 1) for m, n in ((1, 1), (1, 2), (2, 3)))
    print(f"Z: max Weil ratio {worst_z[0]:.6f} at (m, n, c) = {worst_z[1:]}")

    fld = QuadraticField.from_d(args.disc)
    rows = kloosterman_table(fld, args.max_norm)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_kloosterman_csv(out / f"kloosterman_d{args.disc}.csv", rows)
    top = max(rows, key=lambda r: r.weil_ratio)
    print(f"Q(sqrt {args.disc}): {len(rows)} ideals, max ratio {top.weil_ratio:.6f} at N(c) = {top.norm_c}")


if __name__ == "__main__":
    main()
