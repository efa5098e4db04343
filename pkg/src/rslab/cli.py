"""Command-line driver: eigenform caches, sweeps, and verification summaries."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

CACHE_ENV = "RSLAB_CACHE_DIR"
DEFAULT_CACHE = ".rslab_cache"
COMMANDS = ("eigen", "lvalue", "moments", "petersson-check", "kloosterman", "bessel-verify",
            "eisenstein-check", "unfold-check")


class UsageError(ValueError):
    pass


class CheckFailed(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    weights: list = field(default_factory=list)
    coeff_limit: int | None = None
    precision_bits: int = 128
    cache_dir: str = DEFAULT_CACHE
    out_path: str | None = None
    strict: bool = False
    threads: int = 1
    g_spec: str = "delta12"
    field_disc: int = 5
    max_norm: int = 200
    s_values: list = field(default_factory=lambda: [0.5])
    threshold: float = 0.0
    tolerance: float | None = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        for k in self.weights:
            if k < 4 or k % 2:
                raise UsageError(f"weight {k} must be even and at least 4")
        if self.precision_bits < 64:
            raise UsageError("precision must be at least 64 bits")
        if self.threads < 1:
            raise UsageError("--threads must be positive")


def parse_weights(text: str) -> list[int]:
    """'24' or inclusive 'start:stop[:step]'."""
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad weight range {text!r}") from None
    if len(nums) == 1:
        return nums
    if len(nums) not in (2, 3):
        raise UsageError(f"bad weight range {text!r}")
    start, stop = nums[0], nums[1]
    step = nums[2] if len(nums) == 3 else 2
    if step <= 0 or stop < start:
        raise UsageError(f"bad weight range {text!r}")
    return list(range(start, stop + 1, step))


def g_index_from_spec(spec: str) -> int:
    """Weight-matched g: 'delta12' (the first eigenform, Delta at k = 12) or 'f<i>'."""
    if spec == "delta12":
        return 0
    if spec.startswith("f") and spec[1:].isdigit():
        return int(spec[1:])
    raise UsageError(f"unknown --g value {spec!r}")


# ---------------------------------------------------------------------------
# output helpers

def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out_path:
        Path(cfg.out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def _forms(cfg: RunConfig, k: int, coeff_limit: int | None = None):
    from .modforms import get_eigenforms
    from .rankin import afe_coeff_limit
    limit = coeff_limit or cfg.coeff_limit or afe_coeff_limit(k)
    return get_eigenforms(k, limit, cfg.precision_bits, cfg.cache_dir, cfg.strict)


# ---------------------------------------------------------------------------
# pipelines

def run_eigen(cfg: RunConfig) -> str:
    from .modforms import cache_path, dim_cusp_forms
    rows = []
    for k in cfg.weights:
        forms = _forms(cfg, k, cfg.coeff_limit or 5000)
        if len(forms) != dim_cusp_forms(k):
            raise CheckFailed(f"weight {k}: {len(forms)} forms, expected {dim_cusp_forms(k)}")
        rows.append({"weight": k, "dim": len(forms), "cache": str(cache_path(cfg.cache_dir, k)),
                     "harmonic_weights": [_num(f.harmonic_weight) for f in forms],
                     "lambda2": [_num(f.normalized[2]) for f in forms]})
    return _json_text(rows)


def run_lvalue(cfg: RunConfig) -> str:
    from .rankin import RSContext, central_value, rs_lvalue
    from .specfun import VProfile
    g_idx = g_index_from_spec(cfg.g_spec)
    with_s = any(s != 0.5 for s in cfg.s_values)
    header = ["k", "f_index", "g_index", "central_value", "afe_error_estimate"]
    if with_s:
        header.insert(1, "s")
    rows = []
    for k in cfg.weights:
        forms = _forms(cfg, k)
        if not forms:
            continue
        g = forms[g_idx]
        profile = VProfile((k,), target_precision=64)
        for f in forms:
            for s in cfg.s_values:
                if s == 0.5:
                    cv = central_value(RSContext(f, g, profile))
                    val, err = cv.value, cv.afe_error_estimate
                else:
                    val = rs_lvalue(f, g, s)
                    err = abs(val - rs_lvalue(f, g, s, contour=4.0, scale=4.0))
                row = [k, f.index, g.index, _num(val), _num(err)]
                if with_s:
                    row.insert(1, repr(s))
                rows.append(row)
    return _csv_text(header, rows)


def run_moments(cfg: RunConfig) -> str:
    from . import moments as mo
    g_idx = g_index_from_spec(cfg.g_spec)
    forms_by_k = {}
    for k in cfg.weights:
        forms_by_k[k] = _forms(cfg, k)
        if forms_by_k[k] and g_idx >= len(forms_by_k[k]):
            raise UsageError(f"--g {cfg.g_spec}: weight {k} has only {len(forms_by_k[k])} forms")
    # the trace weight uses the measured constant, not the predicted one
    cal = mo.calibrate_normalization(forms_by_k) if any(forms_by_k.values()) else None
    const = cal.constant if cal else mo.COVOLUME_PREDICTION
    reports = [mo.moment_report(k, forms_by_k[k], g_idx, cfg.threshold, calibration=const)
               for k in cfg.weights]
    if cfg.out_path:
        mo.write_reports_json(Path(cfg.out_path).with_suffix(".json"), reports)
    return mo.reports_csv_text(reports)


def run_petersson(cfg: RunConfig) -> str:
    from . import moments as mo
    tol = cfg.tolerance or 1e-8
    rows, worst = [], 0.0
    forms_by_k = {}
    for k in cfg.weights:
        forms = _forms(cfg, k, cfg.coeff_limit or 50)
        forms_by_k[k] = forms
        if not forms:
            continue
        for m in range(1, 5):
            for n in range(1, 5):
                r = mo.petersson_check(k, m, n, forms)
                worst = max(worst, r.gap)
                rows.append([k, m, n, _num(r.lhs), _num(r.rhs), _num(r.gap), r.c_max])
    cal = mo.calibrate_normalization(forms_by_k)
    text = _csv_text(["k", "m", "n", "lhs", "rhs", "gap", "c_max"], rows)
    text += f"# calibration_const={cal.constant!r} spread={cal.relative_spread!r} " \
            f"gap_to_pi_over_3={cal.prediction_gap!r}\n"
    if worst > tol:
        raise CheckFailed(f"trace formula gap {worst:.3e} exceeds {tol:.1e}")
    return text


def run_kloosterman(cfg: RunConfig) -> str:
    from .arith import QuadraticField
    from .kloosterman import kloosterman_table, weil_ratio_z
    if cfg.field_disc == 1:
        rows = [[1, "1 0", f"{c} 0", c, repr(0.0), repr(0.0), repr(weil_ratio_z(1, 1, c))]
                for c in range(1, cfg.max_norm + 1)]
    else:
        fld = QuadraticField.from_d(cfg.field_disc)
        fld.require_narrow_one()
        rows = []
        for r in kloosterman_table(fld, cfg.max_norm):
            rows.append([r.field_disc, f"{r.alpha[0]} {r.alpha[1]}", f"{r.c[0]} {r.c[1]}", r.norm_c,
                         f"{r.value.real:.15e}", f"{r.value.imag:.15e}", f"{r.weil_ratio:.15e}"])
    return _csv_text(["field_disc", "alpha", "c_coords", "norm_c", "re", "im", "weil_ratio"], rows)


def run_bessel_verify(cfg: RunConfig) -> str:
    import numpy as np
    from .specfun import bessel_j_mellin_barnes, bessel_j_series
    tol = cfg.tolerance or 1e-9
    worst = 0.0
    for nu in (11, 15, 23, 39):
        for x in np.linspace(0.1, 20, 12):
            a = bessel_j_mellin_barnes(nu, float(x), prec=cfg.precision_bits)
            b = bessel_j_series(nu, float(x), cfg.precision_bits)
            worst = max(worst, float(abs(a - b)))
    if worst > tol:
        raise CheckFailed(f"Mellin-Barnes vs series gap {worst:.3e}")
    return _json_text({"orders": [11, 15, 23, 39], "x_range": [0.1, 20.0], "max_abs_gap": _num(worst)})


def run_eisenstein(cfg: RunConfig) -> str:
    from .rankin import EisensteinSeries, eisenstein_half_bound, eisenstein_lattice_sum, eisenstein_value
    s = 1.5
    series = EisensteinSeries(s, completed=False)
    gaps = {}
    for z in (1j, complex(0.3, 1.2), complex(0.5, math.sqrt(3) / 2)):
        four = float(eisenstein_value(z, s, series).real)
        latt = eisenstein_lattice_sum(z, s)
        gaps[repr(z)] = _num(abs(four - latt) / abs(latt))
    bound = eisenstein_half_bound()
    worst = max(float(v) for v in gaps.values())
    if worst > (cfg.tolerance or 1e-6):
        raise CheckFailed(f"Fourier vs lattice gap {worst:.3e}")
    return _json_text({"s": s, "fourier_vs_lattice": gaps,
                       "half_bound": {"max_ratio": _num(bound["max_ratio"]),
                                      "argmax": [_num(t) for t in bound["argmax"]],
                                      "y_max": _num(bound["y_max"])}})


def run_unfold(cfg: RunConfig) -> str:
    from .rankin import unfold_identity_check
    tol = cfg.tolerance or 1e-4
    out = []
    for k in cfg.weights:
        forms = _forms(cfg, k, cfg.coeff_limit or 200)
        for f in forms:
            for s in cfg.s_values:
                r = unfold_identity_check(f, f, s, tolerance=tol)
                out.append({"k": k, "f_index": f.index, "s": repr(s), "lhs": _num(r.lhs),
                            "rhs": _num(r.rhs), "relative_gap": _num(r.relative_gap)})
                if r.relative_gap > tol:
                    raise CheckFailed(f"unfolding gap {r.relative_gap:.3e} at k={k}, s={s}")
    return _json_text(out)


PIPELINES = {"eigen": run_eigen, "lvalue": run_lvalue, "moments": run_moments,
             "petersson-check": run_petersson, "kloosterman": run_kloosterman,
             "bessel-verify": run_bessel_verify, "eisenstein-check": run_eisenstein,
             "unfold-check": run_unfold}

DEFAULT_WEIGHTS = {"moments": "12:40:2", "petersson-check": "12:40:2", "unfold-check": "12:16:4",
                   "lvalue": "12", "eigen": "12"}
DEFAULT_S = {"lvalue": [0.5], "unfold-check": [1.5, 2.0]}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rslab", description=__doc__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--weight", help="a single even weight")
    p.add_argument("--weights", help="inclusive range start:stop[:step]")
    p.add_argument("--coeffs", type=int, help="coefficient limit for eigenforms")
    p.add_argument("--prec", type=int, default=128, help="working precision in bits")
    p.add_argument("--cache-dir", help=f"eigenform cache (default ${CACHE_ENV} or {DEFAULT_CACHE})")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--strict", action="store_true", help="fail instead of regenerating an unusable cache")
    p.add_argument("--threads", type=int, default=1, help="parallelism cap (results do not depend on it)")
    p.add_argument("--g", default="delta12", help="g choice: delta12 or f<i>, weight-matched")
    p.add_argument("--field-disc", type=int, default=5, help="squarefree D for Q(sqrt D); 1 means Z")
    p.add_argument("--max-norm", type=int, default=200)
    p.add_argument("--s", type=float, action="append", help="evaluation point(s)")
    p.add_argument("--threshold", type=float, default=0.0, help="nonvanishing threshold")
    p.add_argument("--tolerance", type=float, help="override the pass tolerance of a check")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.weight and args.weights:
        raise UsageError("give --weight or --weights, not both")
    text = args.weight or args.weights or DEFAULT_WEIGHTS.get(args.command)
    weights = parse_weights(text) if text else []
    cache = args.cache_dir or os.environ.get(CACHE_ENV) or DEFAULT_CACHE
    cfg = RunConfig(args.command, weights, args.coeffs, args.prec, cache, args.out, args.strict,
                    args.threads, args.g, args.field_disc, args.max_norm,
                    args.s or DEFAULT_S.get(args.command, [0.5]), args.threshold, args.tolerance)
    cfg.validate()
    return cfg


def run(cfg: RunConfig) -> int:
    _emit(cfg, PIPELINES[cfg.command](cfg))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(_json_text({"error": "usage", "message": str(exc)}))
        return 2
    try:
        return run(cfg)
    except UsageError as exc:
        sys.stderr.write(_json_text({"error": "usage", "message": str(exc), "command": cfg.command}))
        return 2
    except Exception as exc:  # reported as machine-readable JSON
        sys.stderr.write(_json_text({"error": type(exc).__name__, "message": str(exc),
                                     "command": cfg.command, "config": asdict(cfg)}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
