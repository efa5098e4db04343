import json
from fractions import Fraction

import mpmath
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from rslab.arith import divisor_sigma, primes_up_to
from rslab.modforms import (CacheVersionError, QExpansion, SeriesOrderError, delta_series,
                            dim_cusp_forms, eigenforms, eisenstein_series, get_eigenforms,
                            hecke_matrix, load_eigenforms, miller_basis, petersson_norm,
                            save_eigenforms, series_mul)
from rslab.rankin import shimura_residue_check

from conftest import forms_for


def classical_dim(k):
    if k % 2 or k < 4:
        return 0
    d = k // 12 - (1 if k % 12 == 2 else 0)
    return max(d, 0)


def test_dimension_formula():
    for k in range(4, 62, 2):
        assert dim_cusp_forms(k) == classical_dim(k)
    assert dim_cusp_forms(14) == 0 and dim_cusp_forms(24) == 2


def test_eisenstein_coefficients():
    e4, e6 = eisenstein_series(4, 10), eisenstein_series(6, 10)
    assert e4[0] == 1 and e6[0] == 1
    assert e4[1] == 240 and e6[2] == -16632


def test_delta_and_tau():
    d = delta_series(1000)
    assert d[1] == 1 and d[2] == -24
    for n in range(1, 1001):
        assert (d[n] - divisor_sigma(n, 11)) % 691 == 0
    # against the E4^3 - E6^2 construction
    alt = (eisenstein_series(4, 60) ** 3 - eisenstein_series(6, 60) ** 2).scale(Fraction(1, 1728))
    assert all(alt[n] == d[n] for n in range(61))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-10 ** 30, 10 ** 30), min_size=1, max_size=40),
       st.lists(st.integers(-10 ** 30, 10 ** 30), min_size=1, max_size=40))
def test_series_mul_vs_schoolbook(a, b):
    order = 30
    expect = [0] * (order + 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            if i + j <= order:
                expect[i + j] += x * y
    assert list(series_mul(a, b, order)) == expect


def test_miller_basis_shapes():
    assert len(miller_basis(14, 20)) == 0
    (g,) = miller_basis(12, 20)
    assert all(g[n] == delta_series(20)[n] for n in range(21))
    g1, g2 = miller_basis(24, 20)
    assert (g1[1], g1[2], g2[1], g2[2]) == (1, 0, 0, 1)


def test_hecke_matrices():
    assert hecke_matrix(12, miller_basis(12, 20), 2) == sympy.Matrix([[-24]])
    assert hecke_matrix(16, miller_basis(16, 20), 2) == sympy.Matrix([[216]])
    basis = miller_basis(24, 40)
    t2, t3, t6 = (hecke_matrix(24, basis, m) for m in (2, 3, 6))
    assert t2 * t3 == t3 * t2 == t6
    with pytest.raises(SeriesOrderError):
        hecke_matrix(24, miller_basis(24, 10), 6)


def test_delta_eigenform(delta):
    with mpmath.workprec(128):
        assert abs(delta.normalized[2] - mpmath.mpf(-24) / mpmath.mpf(2) ** 5.5) < 1e-30
    assert delta.exact_coeffs[2] == -24


@pytest.mark.parametrize("k", range(12, 42, 2))
def test_eigenform_properties(k):
    mpmath.mp.prec = 128
    forms = forms_for(k)
    assert len(forms) == dim_cusp_forms(k)
    for f in forms:
        assert f.normalized[1] == 1
        assert f.harmonic_weight > 0 and f.petersson_norm > 0
        for p in primes_up_to(100):
            assert abs(f.normalized[int(p)]) <= 2
        # a(p) a(p^r) = a(p^{r+1}) + p^{k-1} a(p^{r-1}), relative to the size of the terms
        for p in (2, 3, 5):
            r = 1
            while p ** (r + 1) <= f.coeff_limit:
                lhs = f.raw_coeffs[p] * f.raw_coeffs[p ** r]
                rhs = f.raw_coeffs[p ** (r + 1)] + p ** (k - 1) * f.raw_coeffs[p ** (r - 1)]
                assert abs(lhs - rhs) <= mpmath.mpf(2) ** -90 * (abs(lhs) + p ** (k - 1) * abs(f.raw_coeffs[p ** (r - 1)]))
                r += 1
        # multiplicativity on coprime pairs
        for m, n in ((2, 3), (4, 9), (5, 7), (8, 25)):
            assert abs(f.normalized[m * n] - f.normalized[m] * f.normalized[n]) < 1e-30
    mpmath.mp.prec = 53


def test_exact_hecke_recursion_delta(delta):
    a = delta.exact_coeffs
    for p in (2, 3, 5, 7):
        r = 1
        while p ** (r + 1) <= delta.coeff_limit:
            assert a[p] * a[p ** r] == a[p ** (r + 1)] + p ** 11 * a[p ** (r - 1)]
            r += 1


def test_petersson_norm_delta(delta):
    # <Delta, Delta> = 1.035362056804320922347816812225164...e-6 (classical value), covolume normalized
    with mpmath.workprec(128):
        classical = mpmath.mpf("1.0353620568043209223478168122251645e-6")
        assert abs(delta.petersson_norm / (classical * 3 / mpmath.pi) - 1) < 1e-20
        assert abs(petersson_norm(delta, nodes=48) / delta.petersson_norm - 1) < 1e-20


def test_norm_vs_residue_slope():
    f = eigenforms(12, 10 ** 4, 64)[0]
    r = shimura_residue_check(f, 10 ** 4)
    assert r.relative_gap < 0.05


def test_cache_roundtrip(tmp_path):
    forms = eigenforms(24, 60, 96)
    path = tmp_path / "c.json"
    save_eigenforms(path, 24, forms, 96, 60)
    meta, back = load_eigenforms(path)
    assert meta["dim"] == 2 and len(back) == 2
    for a, b in zip(forms, back):
        assert abs(a.normalized[7] - b.normalized[7]) < 1e-25
        assert abs(a.harmonic_weight - b.harmonic_weight) < 1e-25
    doc = json.loads(path.read_text())
    doc["version"] = -1
    path.write_text(json.dumps(doc))
    with pytest.raises(CacheVersionError):
        load_eigenforms(path)


def test_cache_reuse_and_strict(tmp_path):
    get_eigenforms(16, 40, 96, tmp_path)
    assert (tmp_path / "eigenforms_k16.json").exists()
    with pytest.raises(CacheVersionError):
        get_eigenforms(16, 80, 96, tmp_path, strict=True)
    assert len(get_eigenforms(16, 80, 96, tmp_path)) == 1
