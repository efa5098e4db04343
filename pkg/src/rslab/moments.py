"""Trace-formula checks and moments of Rankin-Selberg central values.

Two weights appear throughout.  ``omega`` is the harmonic weight
Gamma(k-1) / ((4 pi)^(k-1) <f, f>) with the covolume-normalized inner
product.  The trace weight ``w = omega / C`` is the one for which the
Petersson formula

    sum_f w_f lambda_f(m) lambda_f(n) = delta(m, n) + 2 pi i^-k sum_c S(m, n; c)/c J_{k-1}(4 pi sqrt(mn)/c)

holds exactly; C is measured by :func:`calibrate_normalization` and is
expected to equal the covolume pi/3.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np
from scipy.special import jv

from .arith import QQ, gamma_minus_one
from .kloosterman import kloosterman_residues, kloosterman_z, tp_units_mod_squares
from .modforms import Eigenform, dim_cusp_forms
from .rankin import (CentralValue, RSContext, TruncationError, central_value, lambda_array,
                     v_cutoff, weighted_d_sum)
from .specfun import VProfile, bessel_j

COVOLUME_PREDICTION = math.pi / 3


class IdentityError(RuntimeError):
    pass


class CalibrationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Petersson formula

def _kloosterman_float(m: int, n: int, c: int) -> float:
    return _kloosterman_cached(min(m, n), max(m, n), c)


@lru_cache(maxsize=None)
def _kloosterman_cached(m: int, n: int, c: int) -> float:
    return kloosterman_z(m, n, c)


def trace_c_max(k: int, m: int, n: int, tol: float = 1e-14, cap: int = 10 ** 5) -> int:
    """C with 2 pi sum_{c > C} |S|/c |J_{k-1}(4 pi sqrt(mn)/c)| < tol.

    Uses |S(m,n;c)| <= c and |J_nu(x)| <= (x/2)^nu / Gamma(nu + 1), so the
    tail is at most 2 pi (2 pi sqrt(mn))^nu / Gamma(nu + 1) * C^(1-nu) / (nu - 1).
    """
    nu = k - 1
    log_a = math.log(2 * math.pi) + nu * math.log(2 * math.pi * math.sqrt(m * n)) - math.lgamma(nu + 1) \
        - math.log(nu - 1)
    # a C^(1-nu) < tol
    c = math.exp((log_a - math.log(tol)) / (nu - 1))
    c = max(int(c) + 1, 1)
    if c > cap:
        raise TruncationError(f"trace formula tail needs c up to {c}")
    return c


@dataclass(frozen=True)
class PeterssonCheck:
    k: int
    m: int
    n: int
    lhs: float
    rhs: float
    gap: float
    c_max: int


def trace_rhs(k: int, m: int, n: int, c_max: int | None = None, prec: int = 128):
    """delta(m,n) + 2 pi i^-k sum_{c <= c_max} S(m,n;c)/c J_{k-1}(4 pi sqrt(mn)/c)."""
    c_max = trace_c_max(k, m, n) if c_max is None else c_max
    sign = -1 if (k // 2) % 2 else 1  # i^-k for even k
    with mpmath.workprec(prec):
        root = 4 * mpmath.pi * mpmath.sqrt(m * n)
        acc = mpmath.mpf(0)
        for c in range(1, c_max + 1):
            s = _kloosterman_float(m, n, c)
            if s == 0:
                continue
            acc += mpmath.mpf(s) / c * bessel_j(k - 1, root / c, prec)
        return (1 if m == n else 0) + 2 * mpmath.pi * sign * acc


def petersson_check(k: int, m: int, n: int, forms: Sequence[Eigenform],
                    calibration: float = COVOLUME_PREDICTION, c_max: int | None = None,
                    prec: int = 128) -> PeterssonCheck:
    """Compare sum_f (omega_f / calibration) lambda_f(m) lambda_f(n) with the Kloosterman side."""
    c_max = trace_c_max(k, m, n) if c_max is None else c_max
    rhs = trace_rhs(k, m, n, c_max, prec)
    with mpmath.workprec(prec):
        lhs = mpmath.fsum(f.harmonic_weight / calibration * f.normalized[m] * f.normalized[n]
                          for f in forms)
    return PeterssonCheck(k, m, n, float(lhs), float(rhs), float(abs(lhs - rhs)), c_max)


def solve_trace_weights(k: int, forms: Sequence[Eigenform], pairs: Sequence[tuple[int, int]] | None = None,
                        prec: int = 128) -> list:
    """Weights w_f making the trace formula exact on ``pairs`` (default (1, n), n = 1..d)."""
    d = len(forms)
    pairs = list(pairs) if pairs is not None else [(1, n) for n in range(1, d + 1)]
    if len(pairs) != d:
        raise ValueError("need exactly one (m, n) pair per form")
    with mpmath.workprec(prec):
        a = mpmath.matrix([[f.normalized[m] * f.normalized[n] for f in forms] for m, n in pairs])
        b = mpmath.matrix([trace_rhs(k, m, n, prec=prec) for m, n in pairs])
        w = mpmath.lu_solve(a, b)
        return [w[i] for i in range(d)]


@dataclass(frozen=True)
class Calibration:
    constant: float
    per_weight: dict
    relative_spread: float
    prediction: float
    prediction_gap: float


def calibrate_normalization(forms_by_k: dict[int, Sequence[Eigenform]], tolerance: float = 1e-8,
                            pairs: Sequence[tuple[int, int]] | None = None) -> Calibration:
    """Measure C = omega_f / w_f for every form and check that it is one constant."""
    values = {}
    for k, forms in sorted(forms_by_k.items()):
        if not forms:
            continue
        w = solve_trace_weights(k, forms, pairs[:len(forms)] if pairs else None)
        values[k] = [float(f.harmonic_weight / wf) for f, wf in zip(forms, w)]
    flat = [c for cs in values.values() for c in cs]
    if not flat:
        raise CalibrationError("no forms to calibrate against")
    const = math.fsum(flat) / len(flat)
    spread = (max(flat) - min(flat)) / const
    if spread > tolerance:
        raise CalibrationError(f"calibration varies across weights: spread {spread:.3e}")
    return Calibration(const, values, spread, COVOLUME_PREDICTION,
                       abs(const - COVOLUME_PREDICTION) / COVOLUME_PREDICTION)


# ---------------------------------------------------------------------------
# first moment

def _j_threshold(nu: int, tol: float) -> float:
    """x below which (x/2)^nu / Gamma(nu+1) < tol."""
    return 2 * math.exp((math.log(tol) + math.lgamma(nu + 1)) / nu)


@dataclass(frozen=True)
class FirstMoment:
    """Both sides of the first-moment identity at one weight.

    ``smoothed_sum`` is sum_f w_f times the AFE sum 2 sum_n b_n n^-1/2 V(4 pi^2 n);
    it equals M + E exactly.  The true central values differ from the AFE sums
    only at f = g, by the polar term, so trace_sum = smoothed_sum - polar_term.
    """
    k: int
    g_index: int
    harmonic_sum: float      # sum_f omega_f L(1/2, f x g)
    trace_sum: float         # sum_f w_f L(1/2, f x g), w_f = omega_f / C
    smoothed_sum: float      # sum_f w_f (AFE sum)_f
    polar_term: float        # w_g times the f = g polar contribution
    main_term: float
    error_term: float
    identity_gap: float      # |smoothed_sum - (M + E)|
    e_max: int
    c_max: int


def main_term(k: int, profile: VProfile | None = None) -> float:
    """M(k) = 2 sum_d a_d V(4 pi^2 d^2) / d at level one."""
    profile = profile or VProfile((k,), target_precision=64)
    return float(2 * weighted_d_sum(profile, 1)[1])


def error_term(k: int, g: Eigenform, e_max: int, profile: VProfile | None = None,
               j_tol: float = 1e-17) -> tuple[float, int]:
    """E(k) = 2 * 2 pi i^-k sum_eps sum_e lambda_g(e)/sqrt(e) W(e) sum_c S(e,1;c)/c J_{k-1}(4 pi sqrt(e)/c).

    For each c only the e with 4 pi sqrt(e)/c above the J-Bessel threshold
    are kept; the c loop ends when no such e remains.  Returns (E, c_max).
    """
    profile = profile or VProfile((k,), target_precision=64)
    lam = lambda_array(g, e_max)
    w = weighted_d_sum(profile, e_max)
    e = np.arange(1, e_max + 1)
    weights = lam[1:] / np.sqrt(e) * w[1:]
    sqrt_e = 4 * math.pi * np.sqrt(e.astype(float))
    x_min = _j_threshold(k - 1, j_tol)
    sign = -1 if (k // 2) % 2 else 1
    total = 0.0
    c = 0
    for _eps in tp_units_mod_squares(QQ):  # one class here
        c = 0
        while True:
            c += 1
            xs = sqrt_e / c
            first = int(np.searchsorted(xs, x_min))  # xs increases with e
            if first >= e_max:
                break
            s = kloosterman_residues(1, c)[e[first:] % c]
            total += math.fsum(weights[first:] * s * jv(k - 1, xs[first:])) / c
    return 2 * 2 * math.pi * sign * total, c - 1


def first_moment(k: int, forms: Sequence[Eigenform], g_index: int = 0,
                 calibration: float = COVOLUME_PREDICTION, tail_tol: float = 1e-11,
                 tolerance: float = 1e-6, central: Sequence[CentralValue] | None = None,
                 strict: bool = True) -> FirstMoment:
    """Sum_f w_f L(1/2, f x g) against M + E for g = forms[g_index]."""
    g = forms[g_index]
    profile = VProfile((k,), target_precision=64)
    if central is None:
        central = [central_value(RSContext(f, g, profile, tail_tol=tail_tol)) for f in forms]
    e_max = int(v_cutoff(profile, tail_tol) / (4 * math.pi ** 2))
    if e_max > g.coeff_limit:
        raise TruncationError(f"error term needs coefficients up to {e_max}")
    omegas = [float(f.harmonic_weight) for f in forms]
    harmonic = math.fsum(w * cv.value for w, cv in zip(omegas, central))
    smoothed = math.fsum(w * cv.afe_sum for w, cv in zip(omegas, central)) / calibration
    polar = math.fsum(w * cv.polar_term for w, cv in zip(omegas, central)) / calibration
    m = main_term(k, profile)
    err, c_max = error_term(k, g, e_max, profile)
    gap = abs(smoothed - (m + err))
    if strict and gap > tolerance:
        raise IdentityError(f"k={k}: |sum w L - (M + E)| = {gap:.3e}")
    return FirstMoment(k, g_index, harmonic, harmonic / calibration, smoothed, polar, m, err, gap,
                       e_max, c_max)


# ---------------------------------------------------------------------------
# second moment, nonvanishing, omega bound

def second_moment(central: Sequence[float]) -> float:
    return math.fsum(L * L for L in central)


def cauchy_schwarz_margin(central: Sequence[float], omegas: Sequence[float]) -> float:
    """sum L^2 - (sum omega L)^2 / (dim max omega^2); non-negative by Cauchy-Schwarz."""
    if not central:
        return 0.0
    first = math.fsum(w * L for w, L in zip(omegas, central))
    return second_moment(central) - first * first / (len(central) * max(omegas) ** 2)


def fit_log_exponent(ks: Sequence[int], values: Sequence[float]) -> tuple[int, float, float]:
    """Integer c0 >= 1 from the fit values/k ~ (log k)^c, and max values/(k (log k)^c0)."""
    ks = np.asarray(ks, dtype=float)
    vals = np.asarray(values, dtype=float)
    mask = vals > 0
    if mask.sum() < 2:
        return 1, float("nan"), float("nan")
    slope = np.polyfit(np.log(np.log(ks[mask])), np.log(vals[mask] / ks[mask]), 1)[0]
    c0 = max(1, int(math.ceil(slope - 1e-9)))
    ratio = vals[mask] / (ks[mask] * np.log(ks[mask]) ** c0)
    return c0, float(slope), float(ratio.max())


def omega_bound_check(forms_by_k: dict[int, Sequence[Eigenform]]) -> list[dict]:
    """Per weight: max_f omega_f k / log k and its running maximum."""
    rows = []
    running = 0.0
    for k in sorted(forms_by_k):
        forms = forms_by_k[k]
        if not forms:
            rows.append({"k": k, "max_k_omega_over_logk": None, "running_max": running or None})
            continue
        val = max(float(f.harmonic_weight) * k / math.log(k) for f in forms)
        running = max(running, val)
        rows.append({"k": k, "max_k_omega_over_logk": val, "running_max": running,
                     "min_omega": min(float(f.harmonic_weight) for f in forms)})
    return rows


# ---------------------------------------------------------------------------
# reports

@dataclass
class MomentReport:
    weight: int
    dim: int
    g_spec: str
    per_form: list = field(default_factory=list)  # (f_index, omega_f, central value)
    first_moment_harmonic: float | None = None   # smoothed: sum_f w_f (AFE sum)_f = M + E
    first_moment_trace: float | None = None      # sum_f w_f L(1/2, f x g)
    first_moment_omega: float | None = None      # sum_f omega_f L(1/2, f x g)
    polar_term: float | None = None
    main_term: float | None = None
    error_term_direct: float | None = None
    identity_gap: float | None = None
    second_moment_plain: float | None = None
    nonvanishing_count: int = 0
    threshold: float = 0.0
    max_k_omega_over_logk: float | None = None
    calibration_const: float | None = None
    residuals: dict = field(default_factory=dict)

    def check_invariants(self) -> None:
        if self.nonvanishing_count > self.dim:
            raise IdentityError("nonvanishing count exceeds the dimension")
        if self.identity_gap is not None and self.identity_gap > 1e-6:
            raise IdentityError(f"k={self.weight}: first-moment identity gap {self.identity_gap:.3e}")


def moment_report(k: int, forms: Sequence[Eigenform], g_index: int = 0, threshold: float = 0.0,
                  calibration: float = COVOLUME_PREDICTION, tail_tol: float = 1e-11) -> MomentReport:
    """Everything for one weight; the g slot is the weight-matched form ``forms[g_index]``."""
    dim = len(forms)
    if dim != dim_cusp_forms(k):
        raise ValueError(f"expected {dim_cusp_forms(k)} forms at weight {k}, got {dim}")
    report = MomentReport(k, dim, f"k{k}_f{g_index}" if dim else "none", threshold=threshold,
                          calibration_const=calibration)
    report.main_term = main_term(k)
    report.residuals["main_minus_log"] = report.main_term - float(gamma_minus_one(QQ, 1)) * math.log(k)
    if dim == 0:
        return report
    g = forms[g_index]
    profile = VProfile((k,), target_precision=64)
    cvs = [central_value(RSContext(f, g, profile, tail_tol=tail_tol)) for f in forms]
    central = [cv.value for cv in cvs]
    fm = first_moment(k, forms, g_index, calibration, tail_tol, central=cvs, strict=False)
    report.per_form = [(f.index, float(f.harmonic_weight), L) for f, L in zip(forms, central)]
    report.first_moment_harmonic = fm.smoothed_sum
    report.first_moment_trace = fm.trace_sum
    report.first_moment_omega = fm.harmonic_sum
    report.polar_term = fm.polar_term
    report.error_term_direct = fm.error_term
    report.identity_gap = fm.identity_gap
    report.second_moment_plain = second_moment(central)
    report.nonvanishing_count = sum(1 for L in central if abs(L) > threshold)
    report.max_k_omega_over_logk = max(float(f.harmonic_weight) * k / math.log(k) for f in forms)
    report.residuals.update({
        "afe_error_max": max(cv.afe_error_estimate for cv in cvs),
        "cauchy_schwarz_margin": cauchy_schwarz_margin(central, [float(f.harmonic_weight) for f in forms]),
        "error_term_c_max": fm.c_max,
        "afe_terms": fm.e_max,
    })
    report.check_invariants()
    return report


def nonvanishing_report(reports: Sequence[MomentReport], threshold: float, c0: int = 2) -> list[dict]:
    """Counts of |L(1/2, f x g)| > threshold next to the curve k / (log k)^c0."""
    rows = []
    for r in reports:
        count = sum(1 for _, _, L in r.per_form if abs(L) > threshold)
        rows.append({"k": r.weight, "dim": r.dim, "count": count,
                     "curve": r.weight / math.log(r.weight) ** c0, "threshold": threshold, "c0": c0})
    return rows


CSV_COLUMNS = ["k", "dim", "g_id", "first_moment_harmonic", "main_term", "error_term",
               "second_moment", "nonvanishing_count", "max_k_omega_over_logk", "calibration_const"]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def reports_csv_text(reports: Sequence[MomentReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([_fmt(v) for v in (r.weight, r.dim, r.g_spec, r.first_moment_harmonic, r.main_term,
                                      r.error_term_direct, r.second_moment_plain, r.nonvanishing_count,
                                      r.max_k_omega_over_logk, r.calibration_const)])
    return buf.getvalue()


def write_reports_csv(path, reports: Sequence[MomentReport]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(reports_csv_text(reports))


def _jsonable(obj):
    if isinstance(obj, float):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return repr(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_reports_json(path, reports: Sequence[MomentReport]) -> None:
    doc = [_jsonable(asdict(r)) for r in reports]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
