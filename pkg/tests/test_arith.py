import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from rslab.arith import (QQ, QuadraticField, UnsupportedFieldError, class_number_residue,
                         dedekind_residue_estimate, divisor_count, divisor_sigma, factorize,
                         gamma_minus_one, ideal_norm_counts)


def test_divisor_count_examples():
    assert divisor_count(1) == 1
    assert divisor_count(97) == 2
    assert divisor_count(12) == 6
    with pytest.raises(ValueError):
        divisor_count(0)


@given(st.integers(1, 5000))
def test_divisor_count_matches_enumeration(n):
    assert divisor_count(n) == sum(1 for d in range(1, n + 1) if n % d == 0)


@given(st.integers(1, 3000), st.integers(0, 5))
def test_sigma_matches_enumeration(n, k):
    assert divisor_sigma(n, k) == sum(d ** k for d in range(1, n + 1) if n % d == 0)


@given(st.integers(2, 10 ** 9))
def test_factorize_roundtrip(n):
    assert math.prod(p ** e for p, e in factorize(n).items()) == n


def test_counts_over_q():
    assert list(ideal_norm_counts(QQ, 1, 10).counts[1:]) == [1] * 10
    t = ideal_norm_counts(QQ, 2, 6)
    assert [t[d] for d in range(1, 7)] == [1, 0, 1, 0, 1, 0]


def test_counts_sqrt5():
    t = ideal_norm_counts(QuadraticField.from_d(5), 1, 20)
    assert (t[4], t[5], t[11], t[2], t[3]) == (1, 1, 2, 0, 0)


def test_counts_multiplicative_and_dominated():
    fld = QuadraticField.from_d(5)
    full = ideal_norm_counts(fld, 1, 10 ** 4)
    lev = ideal_norm_counts(fld, 6, 10 ** 4)
    assert (lev.counts <= full.counts).all()
    for a in range(1, 100):
        for b in range(1, 100):
            if math.gcd(a, b) == 1:
                assert full[a * b] == full[a] * full[b]


def test_narrow_class_number_enforced():
    fld = QuadraticField.from_d(3)  # norm of the fundamental unit is +1
    assert fld.narrow_class_number == 2
    with pytest.raises(UnsupportedFieldError):
        ideal_norm_counts(fld, 1, 10)


def test_gamma_minus_one():
    assert gamma_minus_one(QQ, 1) == 1
    assert gamma_minus_one(QQ, 2) == Fraction(1, 2)
    assert gamma_minus_one(QQ, 6) == Fraction(1, 3)


def test_residue_estimates():
    assert abs(dedekind_residue_estimate(QQ, 10 ** 4) - 1) < 0.01
    fld = QuadraticField.from_d(5)
    exact = 2 * math.log((1 + math.sqrt(5)) / 2) / math.sqrt(5)
    assert abs(class_number_residue(fld) - exact) < 1e-14
    assert abs(dedekind_residue_estimate(fld, 10 ** 6) - exact) < 0.01 * exact


def test_sqrt5_structure():
    fld = QuadraticField.from_d(5)
    g = fld.tp_unit_generator
    assert fld.norm(g) == 1 and fld.embed(g, 0) > 0 and fld.embed(g, 1) > 0
    assert abs(fld.norm(fld.different_gen)) == fld.disc == 5
    assert fld.unit_index == 1 and fld.narrow_class_number == 1
