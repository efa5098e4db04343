import math

import mpmath
import numpy as np
import pytest

from rslab.arith import divisor_count
from rslab.modforms import eigenforms
from rslab.rankin import (EisensteinSeries, RSContext, TruncationError, central_value,
                          constant_term_half_closed, constant_term_half_limit, eisenstein_half_bound,
                          eisenstein_lattice_sum, eisenstein_value, rs_coefficients_array,
                          rs_dirichlet_coefficients, rs_lvalue, shimura_residue_check,
                          unfold_identity_check, v_cutoff)
from rslab.specfun import VProfile

from conftest import forms_for


@pytest.fixture(scope="module")
def delta_long():
    return eigenforms(12, 20000, 128)[0]


def test_rs_coefficients(delta):
    b = rs_dirichlet_coefficients(delta, delta, 50)
    assert b[1] == 1
    with mpmath.workprec(128):
        assert abs(b[4] - (delta.normalized[4] ** 2 + 1)) < 1e-30


def test_rs_coefficient_bound():
    f, g = forms_for(24, 2000)
    b = rs_coefficients_array(f, g, 2000)
    for j in range(1, 2001):
        bound = sum(divisor_count(j // (d * d)) ** 2 for d in range(1, math.isqrt(j) + 1) if j % (d * d) == 0)
        assert abs(b[j]) <= bound + 1e-9


def test_central_value_invariances(delta_long):
    base = VProfile((12,), target_precision=64)
    cv = central_value(RSContext(delta_long, delta_long, base))
    shifted = central_value(RSContext(delta_long, delta_long, VProfile((12,), contour_abscissa=2.0,
                                                                       target_precision=64)))
    assert abs(cv.value - shifted.value) < 1e-10
    longer = central_value(RSContext(delta_long, delta_long, base), t_cut=2 * cv.t_cut)
    assert abs(cv.value - longer.value) < 1e-8
    wide = VProfile((12,), target_precision=64, test_scale=2.0)
    other = central_value(RSContext(delta_long, delta_long, wide))
    assert abs(cv.value - other.value) < 1e-8
    # the raw AFE sum keeps the f = g polar term; the value does not
    assert abs(cv.afe_sum - 0.2391435743463792) < 1e-12
    assert abs(cv.value - (cv.afe_sum - cv.polar_term)) < 1e-15


def test_central_value_against_functional_equation(delta_long):
    # independent evaluator whose test function vanishes at the poles
    cv = central_value(RSContext(delta_long, delta_long, VProfile((12,), target_precision=64)))
    assert abs(cv.value - rs_lvalue(delta_long, delta_long, 0.5)) < 1e-8
    # L(s, f x f) = zeta(s) L(s, sym^2 f) and zeta(1/2) < 0
    assert cv.value < 0


def test_cross_pair_has_no_polar_term():
    f, g = eigenforms(24, 16000, 96)
    cv = central_value(RSContext(f, g, VProfile((24,), target_precision=64)))
    assert cv.polar_term == 0
    assert abs(cv.value - rs_lvalue(f, g, 0.5)) < 1e-8


def test_central_value_precision_rerun():
    f = eigenforms(12, 9000, 64)[0]
    hi = eigenforms(12, 9000, 160)[0]
    a = central_value(RSContext(f, f, VProfile((12,), target_precision=64)))
    b = central_value(RSContext(hi, hi, VProfile((12,), target_precision=128), precision=128))
    assert abs(a.value - float(b.value)) < 1e-8 * abs(a.value)


def test_truncation_error(delta):
    with pytest.raises(TruncationError):
        central_value(RSContext(delta, delta, VProfile((12,), target_precision=64)))


def test_shimura_residue(delta_long):
    r1 = shimura_residue_check(delta_long, 5000)
    r2 = shimura_residue_check(delta_long, 10000)
    assert r2.formula_value > 0
    assert r2.relative_gap < 0.05 and r2.relative_gap < r1.relative_gap


def test_lvalue_functional_equation_choice(delta_long):
    for s in (1.5, 2.0):
        a = rs_lvalue(delta_long, delta_long, s)
        b = rs_lvalue(delta_long, delta_long, s, contour=4.0, scale=4.0)
        assert abs(a - b) < 1e-10


def test_lvalue_vs_dirichlet_series_at_two(delta_long):
    # absolutely convergent at s = 2: tail of sum b_n n^-2 is O(N^-1 log^3 N)
    b = rs_coefficients_array(delta_long, delta_long, 20000)
    n = np.arange(1, 20001)
    partial = math.fsum(b[1:] / n.astype(float) ** 2)
    assert abs(rs_lvalue(delta_long, delta_long, 2.0) - partial) < 1e-3


def test_eisenstein_invariance():
    s = mpmath.mpc(0.75, 1 / 3)
    for z in (0.3 + 1.1j, -0.2 + 0.9j, 0.45 + 2.0j):
        a = eisenstein_value(z, s)
        assert abs(a - eisenstein_value(z + 1, s)) < 1e-9
        assert abs(a - eisenstein_value(-1 / z, s)) < 1e-9


def test_eisenstein_lattice_oracle():
    for z in (1j, 0.3 + 1.2j):
        four = float(eisenstein_value(z, 1.5, EisensteinSeries(1.5, completed=False)).real)
        latt = eisenstein_lattice_sum(z, 1.5)
        assert abs(four - latt) < 1e-6 * abs(latt)


def test_half_constant_term_limit():
    for y in (0.9, 2.0, 7.5):
        assert abs(constant_term_half_limit(y) - constant_term_half_closed(y, 128)) < 1e-12


def test_half_bound_grid():
    res = eisenstein_half_bound(y_max=20, nx=6, ny=8)
    assert 0 < res["max_ratio"] < 10


def test_unfolding(delta_long):
    r = unfold_identity_check(delta_long, delta_long, 1.5)
    assert r.relative_gap < 1e-4
    assert abs(r.lhs - r.lhs_refined) < 1e-5 * abs(r.lhs)


def test_v_cutoff_monotone():
    prof = VProfile((12,), target_precision=64)
    assert v_cutoff(prof, 1e-7) < v_cutoff(prof, 1e-9) < v_cutoff(prof, 1e-12)
