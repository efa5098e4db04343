import cmath
import math

import pytest
from hypothesis import given, settings, strategies as st

from rslab.arith import QQ, QuadraticField, divisor_count
from rslab.kloosterman import (KloostermanQuery, ResidueRing, ideals_up_to, kloosterman_nf,
                               kloosterman_nf_bruteforce, kloosterman_residues, kloosterman_z,
                               tp_units_mod_squares, unit_group, unit_rescale, unit_sum, weil_margin,
                               weil_ratio_z)

F5 = QuadraticField.from_d(5)


def direct(m, n, c):
    return sum(cmath.exp(2j * math.pi * (m * x + n * pow(x, -1, c)) / c)
               for x in range(c) if math.gcd(x, c) == 1) if c > 1 else 1


def test_small_values():
    assert kloosterman_z(1, 1, 1) == pytest.approx(1)
    assert kloosterman_z(1, 1, 2) == pytest.approx(1)
    assert kloosterman_z(1, 1, 3) == pytest.approx(-1)


@settings(max_examples=60, deadline=None)
@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(1, 200))
def test_against_direct_sum_and_symmetric(m, n, c):
    s = kloosterman_z(m, n, c)
    assert abs(s - direct(m, n, c).real) < 1e-9
    assert abs(s - kloosterman_z(n, m, c)) < 1e-9


def test_residue_vector():
    for c in (1, 7, 30, 97):
        vec = kloosterman_residues(1, c)
        for e in range(c):
            assert abs(vec[e] - kloosterman_z(e, 1, c)) < 1e-9


def test_twisted_multiplicativity():
    for c1 in range(2, 30):
        for c2 in range(2, 30):
            if math.gcd(c1, c2) != 1:
                continue
            i1, i2 = pow(c1, -1, c2), pow(c2, -1, c1)
            for m, n in ((1, 1), (2, 5)):
                lhs = kloosterman_z(m, n, c1 * c2)
                rhs = kloosterman_z(m * i2 * i2, n, c1) * kloosterman_z(m * i1 * i1, n, c2)
                assert abs(lhs - rhs) < 1e-8


def test_weil_over_z():
    assert max(weil_ratio_z(1, 1, c) for c in range(1, 501)) <= 1 + 1e-12
    for p in (2, 3, 5, 7, 11, 13, 97):
        assert abs(kloosterman_z(1, 1, p)) / (2 * math.sqrt(p)) <= 1


def test_units_mod_squares():
    assert len(tp_units_mod_squares(QQ)) == 1
    assert len(tp_units_mod_squares(F5)) == 1


def test_unit_group_size():
    for c in ideals_up_to(F5, 60):
        ring = ResidueRing.of(F5, c)
        units = unit_group(ring)
        one = ring.reduce((1, 0))
        assert all(ring.mul(x, xb) == one for x, xb in units)
        elems = list(ring.elements())
        brute = sum(1 for x in elems if any(ring.mul(x, y) == one for y in elems))
        assert len(units) == brute


def test_nf_unit_modulus_and_inert_two():
    q = KloostermanQuery(F5, (1, 0), (1, 0))
    assert abs(abs(kloosterman_nf(q)) - 1) < 1e-15
    ring = ResidueRing.of(F5, (2, 0))
    assert len(unit_group(ring)) == 3


def test_nf_vs_bruteforce_and_reality():
    for c in ideals_up_to(F5, 50):
        for alpha in ((1, 0), (2, 1), (0, 1), (3, -1)):
            q = KloostermanQuery(F5, alpha, c)
            v = kloosterman_nf(q)
            assert abs(v - kloosterman_nf_bruteforce(q)) < 1e-12
            if alpha == (1, 0):
                assert abs(v.imag) < 1e-12


def test_eta_twist():
    eta = F5.tp_unit_generator
    for c in ideals_up_to(F5, 50):
        for alpha in ((1, 0), (2, 1)):
            a = kloosterman_nf(KloostermanQuery(F5, alpha, c, eta))
            b = kloosterman_nf(KloostermanQuery(F5, F5.mul(F5.mul(eta, eta), alpha), c))
            assert abs(a - b) < 1e-12


def test_nf_weil_ratio_bounded_and_stable():
    first = [weil_margin(KloostermanQuery(F5, (1, 0), c)) for c in ideals_up_to(F5, 200)]
    second = [weil_margin(KloostermanQuery(F5, (1, 0), c)) for c in ideals_up_to(F5, 200)]
    assert first == second and max(first) <= 1 + 1e-12
    assert len(first) == 86


def test_unit_sums():
    r = unit_sum(F5, 0.25, 200)
    assert abs(r.partial - r.limit) < 1e-12 and r.converged
    g = (3 + math.sqrt(5)) / 2
    assert abs(float(r.limit) - (1 + 2 / (g ** 0.25 - 1))) < 1e-12
    d = unit_sum(F5, 0.5, 200, kind="delta")
    assert abs(d.partial - d.limit) < 1e-12
    assert not unit_sum(F5, 1e-6, 50).converged
    assert unit_sum(F5, 0.25, 0).partial == 1


def test_unit_rescale():
    assert unit_rescale(F5, (1, 0)) == ((1, 0), (1, 0))
    g = F5.tp_unit_generator
    u, a = unit_rescale(F5, F5.power(g, 5))
    assert u == F5.power(g, -5) and a == (1, 0)
    gmax = F5.embed(g, 0)
    for x in range(-60, 61):
        for y in range(-60, 61):
            a = (x, y)
            n = F5.norm(a)
            if n <= 0 or n > 10 ** 4 or F5.embed(a, 0) <= 0:
                continue
            _, b = unit_rescale(F5, a)
            root = math.sqrt(n)
            assert max(F5.embed(b, j) / root for j in (0, 1)) <= gmax + 1e-12
