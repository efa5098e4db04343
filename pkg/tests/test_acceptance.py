"""Acceptance criteria 1-10.

Each test records a PASS/FAIL line (printed in the terminal summary by
conftest.py) before asserting, so a failing criterion still reports its
measured numbers.
"""
import math
import subprocess
import sys
import time
from functools import lru_cache

import mpmath
import numpy as np
import pytest

from rslab import moments as mo
from rslab.arith import QQ, QuadraticField, divisor_sigma, gamma_minus_one, primes_up_to
from rslab.kloosterman import (KloostermanQuery, ideals_up_to, kloosterman_nf, kloosterman_nf_bruteforce,
                               unit_rescale, unit_sum, weil_margin, weil_ratio_z)
from rslab.modforms import delta_series, dim_cusp_forms, eigenforms
from rslab.rankin import (EisensteinSeries, afe_coeff_limit, eisenstein_half_bound,
                          eisenstein_lattice_sum, eisenstein_value, shimura_residue_check,
                          unfold_identity_check)
from rslab.specfun import VProfile, bessel_j_mellin_barnes, bessel_j_series, bessel_k, v_half

from conftest import ACCEPTANCE, forms_for

SWEEP = list(range(12, 42, 2))


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    assert ok, detail


@lru_cache(maxsize=None)
def sweep_forms(k):
    return tuple(eigenforms(k, afe_coeff_limit(k), 128))


@lru_cache(maxsize=None)
def sweep_reports():
    fb = {k: forms_for(k) for k in SWEEP}
    cal = mo.calibrate_normalization(fb)
    reports = []
    for k in SWEEP:
        reports.append(mo.moment_report(k, list(sweep_forms(k)), 0, 0.0, calibration=cal.constant))
    return cal, reports


def classical_dim(k):
    if k % 2:
        return 0
    d = k // 12 - (1 if k % 12 == 2 else 0)
    return max(d, 0)


def test_criterion_01_eigenforms():
    t0 = time.time()
    dims_ok = all(dim_cusp_forms(k) == classical_dim(k) for k in range(4, 61))
    d = delta_series(1000)
    tau_ok = d[2] == -24 and all((d[n] - divisor_sigma(n, 11)) % 691 == 0 for n in range(1, 1001))
    worst_p, hecke_ok = 0.0, True
    with mpmath.workprec(128):
        for k in SWEEP:
            for f in forms_for(k):
                worst_p = max(worst_p, max(float(abs(f.normalized[int(p)])) for p in primes_up_to(100)))
                a = f.exact_coeffs or f.raw_coeffs
                for p in (2, 3, 5, 7):
                    r = 1
                    while p ** (r + 1) <= f.coeff_limit:
                        lhs = a[p] * a[p ** r]
                        rhs = a[p ** (r + 1)] + p ** (k - 1) * a[p ** (r - 1)]
                        if f.exact_coeffs:
                            hecke_ok &= lhs == rhs
                        else:
                            scale = abs(lhs) + p ** (k - 1) * abs(a[p ** (r - 1)])
                            hecke_ok &= abs(lhs - rhs) <= mpmath.mpf(2) ** -100 * scale
                        r += 1
    dt = time.time() - t0
    ok = dims_ok and tau_ok and worst_p <= 2 and hecke_ok and dt < 120
    record(1, ok, f"dims {dims_ok}, tau {tau_ok}, max|lambda(p)| {worst_p:.4f}, Hecke {hecke_ok}, {dt:.0f}s")


def test_criterion_02_special_functions():
    t0 = time.time()
    worst_abs = worst_rel = 0.0
    for nu in (11, 15, 23, 39):
        for x in np.linspace(0.1, 20, 16):
            a = bessel_j_mellin_barnes(nu, float(x), prec=80)
            b = bessel_j_series(nu, float(x), 80)
            worst_abs = max(worst_abs, float(abs(a - b)))
            worst_rel = max(worst_rel, float(abs(a - b) / abs(b)))
    k_half = max(abs(float(bessel_k(0.5, x, 96)) - math.sqrt(math.pi / (2 * x)) * math.exp(-x))
                 for x in (1.0, 5.0, 10.0))
    base = VProfile((12,), target_precision=96)
    moved = VProfile((12,), contour_abscissa=2.0, target_precision=96)
    halved = VProfile((12,), target_precision=96, step=base.default_step() / 2)
    v_gap = max(max(abs(v_half(y, base) - v_half(y, moved)), abs(v_half(y, base) - v_half(y, halved)))
                for y in (0.5, 5.0, 50.0, 500.0))
    small = abs(v_half(1e-6, base) - 1)
    large = max(abs(v_half(1e6 * k, VProfile((k,), target_precision=64))) for k in (12, 24, 40))
    dt = time.time() - t0
    ok = worst_rel < 1e-9 and k_half < 1e-10 and v_gap < 1e-10 and small < 1e-2 and large < 1e-6 and dt < 60
    record(2, ok, f"MB vs series abs {worst_abs:.1e} rel {worst_rel:.1e}, K1/2 {k_half:.1e}, "
                  f"V contour/step {float(v_gap):.1e}, |V(1e-6)-1| {float(small):.1e}, "
                  f"max|V(1e6 k)| {float(large):.1e}, {dt:.0f}s")


def test_criterion_03_petersson():
    t0 = time.time()
    worst = 0.0
    for k in SWEEP:
        forms = forms_for(k)
        if not forms:
            continue
        for m in range(1, 5):
            for n in range(1, 5):
                worst = max(worst, mo.petersson_check(k, m, n, forms).gap)
    cal = mo.calibrate_normalization({k: forms_for(k) for k in SWEEP})
    dt = time.time() - t0
    ok = worst < 1e-8 and cal.prediction_gap < 1e-8 and cal.relative_spread < 1e-8 and dt < 600
    record(3, ok, f"max gap {worst:.1e}, C = {cal.constant:.15f} (pi/3 rel gap {cal.prediction_gap:.1e}, "
                  f"spread {cal.relative_spread:.1e}), {dt:.0f}s")


def test_criterion_04_first_moment():
    t0 = time.time()
    _, reports = sweep_reports()
    dt = time.time() - t0
    gaps = [r.identity_gap for r in reports if r.dim]
    e = {r.weight: r.error_term_direct for r in reports if r.dim}
    trend = abs(e[40]) < abs(e[12])
    ok = max(gaps) < 1e-6 and trend and dt < 1200
    record(4, ok, f"max |sum w L_afe - (M+E)| {max(gaps):.1e} over {len(gaps)} weights, "
                  f"|E(12)| {abs(e[12]):.3f} -> |E(40)| {abs(e[40]):.3f}, {dt:.0f}s")


def test_criterion_05_main_term():
    resid = [mo.main_term(k) - float(gamma_minus_one(QQ, 1)) * math.log(k) for k in SWEEP]
    deltas = [abs(b - a) for a, b in zip(resid, resid[1:])]
    decreasing = all(b < a for a, b in zip(deltas, deltas[1:]))
    ok = gamma_minus_one(QQ, 1) == 1 and decreasing and deltas[-1] < 0.1
    record(5, ok, f"gamma_-1(Q,1) = {gamma_minus_one(QQ, 1)}, |delta| {deltas[0]:.3f} -> {deltas[-1]:.4f}, "
                  f"decreasing {decreasing}")


def test_criterion_06_shimura():
    t0 = time.time()
    gaps = {}
    for k in (12, 16, 18, 20):
        f = eigenforms(k, 10 ** 4, 64)[0]
        gaps[k] = shimura_residue_check(f, 10 ** 4).relative_gap
    dt = time.time() - t0
    ok = max(gaps.values()) < 0.05 and dt < 300
    record(6, ok, "relative gaps " + ", ".join(f"k={k}: {g:.1e}" for k, g in gaps.items()) + f", {dt:.0f}s")


def test_criterion_07_unfolding_eisenstein():
    t0 = time.time()
    worst = 0.0
    for k in (12, 16):
        f = eigenforms(k, 2000, 96)[0]
        for s in (1.5, 2.0):
            worst = max(worst, unfold_identity_check(f, f, s).relative_gap)
    lattice = 0.0
    for z in (1j, complex(0.3, 1.2), complex(0.5, math.sqrt(3) / 2)):
        four = float(eisenstein_value(z, 1.5, EisensteinSeries(1.5, completed=False)).real)
        latt = eisenstein_lattice_sum(z, 1.5)
        lattice = max(lattice, abs(four - latt) / abs(latt))
    bound = eisenstein_half_bound()
    dt = time.time() - t0
    ok = worst < 1e-4 and lattice < 1e-6 and math.isfinite(bound["max_ratio"]) and dt < 600
    record(7, ok, f"unfolding gap {worst:.1e}, Fourier vs lattice {lattice:.1e}, "
                  f"max |E*(z,1/2)|/sqrt(y) = {bound['max_ratio']:.4f} at {bound['argmax'][0]:.3f}"
                  f"+{bound['argmax'][1]:.3f}i (y <= {bound['y_max']:.0f}), {dt:.0f}s")


def test_criterion_08_number_field():
    t0 = time.time()
    z_max = max(weil_ratio_z(m, n, c) for c in range(1, 501) for m, n in ((1, 1), (1, 2), (3, 5)))
    fld = QuadraticField.from_d(5)
    ideals = ideals_up_to(fld, 200)
    run1 = [weil_margin(KloostermanQuery(fld, (1, 0), c)) for c in ideals]
    run2 = [weil_margin(KloostermanQuery(fld, (1, 0), c)) for c in ideals]
    brute = max(float(abs(kloosterman_nf(q) - kloosterman_nf_bruteforce(q)))
                for c in ideals_up_to(fld, 50) for a in ((1, 0), (2, 1), (0, 1))
                for q in [KloostermanQuery(fld, a, c)])
    luo = max(float(abs(r.partial - r.limit)) for r in
              (unit_sum(fld, 0.25, 200), unit_sum(fld, 0.1, 400), unit_sum(fld, 0.5, 200, kind="delta")))
    g = fld.tp_unit_generator
    gmax = fld.embed(g, 0)
    worst_rescale = 0.0
    for x in range(-40, 41):
        for y in range(-40, 41):
            a = (x, y)
            n = fld.norm(a)
            if 0 < n <= 10 ** 4 and fld.embed(a, 0) > 0:
                _, b = unit_rescale(fld, a)
                worst_rescale = max(worst_rescale, max(fld.embed(b, j) for j in (0, 1)) / math.sqrt(n))
    dt = time.time() - t0
    ok = (z_max <= 1 + 1e-12 and run1 == run2 and brute < 1e-12 and luo < 1e-12
          and worst_rescale <= gmax and dt < 300)
    record(8, ok, f"Z Weil max {z_max:.6f}, Q(sqrt5) max ratio {max(run1):.6f} over {len(ideals)} ideals "
                  f"(stable {run1 == run2}), nf vs brute {brute:.1e}, Luo {luo:.1e}, "
                  f"rescale {worst_rescale:.4f} <= g = {gmax:.4f}, {dt:.0f}s")


def test_criterion_09_nonvanishing():
    _, reports = sweep_reports()
    live = [r for r in reports if r.dim]
    c0, slope, bound = mo.fit_log_exponent([r.weight for r in live], [r.second_moment_plain for r in live])
    a = mo.nonvanishing_report(reports, 0.0, max(c0, 2))
    b = mo.nonvanishing_report(reports, 1e-10, max(c0, 2))
    stable = [x["count"] for x in a] == [x["count"] for x in b]
    full = all(x["count"] == x["dim"] for x in a)
    counts = " ".join(f"{x['k']}:{x['count']}/{x['curve']:.2f}" for x in a)
    record(9, stable, f"counts/curve k/(log k)^{max(c0, 2)}: {counts}; threshold-stable {stable}, "
                      f"all nonzero {full}; second-moment c0 = {c0} (fit {slope:.2f}, bound {bound:.3f})")


def test_criterion_10_determinism(tmp_path):
    cache = tmp_path / "cache"
    commands = [["moments", "--weights", "12:24:4"], ["lvalue", "--weight", "24"],
                ["kloosterman", "--field-disc", "5", "--max-norm", "80"],
                ["petersson-check", "--weights", "12:20:4"]]
    same = True
    for cmd in commands:
        outs = []
        for _ in range(3):  # the first run fills the cache
            res = subprocess.run([sys.executable, "-m", "rslab.cli", *cmd, "--cache-dir", str(cache)],
                                 capture_output=True)
            assert res.returncode == 0, res.stderr.decode()
            outs.append(res.stdout)
        same &= outs[1] == outs[2]
    record(10, same, f"{len(commands)} pipelines re-run with a warm cache: byte-identical {same}")
