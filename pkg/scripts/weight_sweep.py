#!/usr/bin/env python3
"""First and second moments over a range of weights.

Writes moments.csv / moments.json under --out-dir and prints, per weight,
the main term against log k, the Kloosterman error term and the
nonvanishing count.
"""
import argparse
import math
from pathlib import Path

from rslab import moments as mo
from rslab.cli import parse_weights
from rslab.modforms import get_eigenforms
from rslab.rankin import afe_coeff_limit


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--weights", default="12:40:2")
    ap.add_argument("--prec", type=int, default=128)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    weights = parse_weights(args.weights)
    forms = {k: get_eigenforms(k, afe_coeff_limit(k), precision=args.prec) for k in weights}
    cal = mo.calibrate_normalization({k: f for k, f in forms.items() if f})
    reports = [mo.moment_report(k, forms[k], calibration=cal.constant) for k in weights]

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mo.write_reports_csv(out / "moments.csv", reports)
    mo.write_reports_json(out / "moments.json", reports)

    print(f"calibration constant {cal.constant:.15f} (spread {cal.relative_spread:.1e})")
    print(f"{'k':>3} {'dim':>3} {'M':>10} {'M-log k':>10} {'E':>10} {'gap':>9} {'nonzero':>7}")
    for r in reports:
        if r.dim == 0:
            print(f"{r.weight:>3} {0:>3}  (no cusp forms)")
            continue
        print(f"{r.weight:>3} {r.dim:>3} {r.main_term:10.6f} {r.main_term - math.log(r.weight):10.6f} "
              f"{r.error_term_direct:10.6f} {r.identity_gap:9.1e} {r.nonvanishing_count:>7}")


if __name__ == "__main__":
    main()
