"""Level-one modular forms: exact q-expansions, Hecke eigenforms, Petersson norms.

Series arithmetic is exact.  Products go through Kronecker substitution: the
coefficient vector is packed into one big integer, multiplied with GMP and
unpacked with signed-digit borrow handling.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import gmpy2
import mpmath
import sympy

from .arith import divisor_sigma, sigma_table
from .specfun import gauss_legendre_interval, log_gamma

CACHE_VERSION = 1


class DimensionError(RuntimeError):
    pass


class SeriesOrderError(ValueError):
    pass


class EigenvalueCollisionError(RuntimeError):
    pass


def dim_cusp_forms(k: int) -> int:
    """Dimension of S_k(SL_2(Z)) from the classical formula."""
    if k < 0 or k % 2:
        return 0
    if k < 12 or k == 14:
        return 0
    return k // 12 - 1 if k % 12 == 2 else k // 12


# ---------------------------------------------------------------------------
# exact series multiplication

def _pack(coeffs: Sequence[int], nbytes: int) -> gmpy2.mpz:
    pos = b"".join((c if c > 0 else 0).to_bytes(nbytes, "little") for c in coeffs)
    neg = b"".join((-c if c < 0 else 0).to_bytes(nbytes, "little") for c in coeffs)
    return gmpy2.mpz(int.from_bytes(pos, "little")) - gmpy2.mpz(int.from_bytes(neg, "little"))


def _unpack(value: gmpy2.mpz, count: int, nbytes: int) -> list[int]:
    total = count * nbytes
    raw = int(gmpy2.f_mod_2exp(value, 8 * total)).to_bytes(total, "little")
    full = 1 << (8 * nbytes)
    half = full >> 1
    out = []
    carry = 0
    for i in range(count):
        d = int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little") + carry
        if d >= half:
            d -= full
            carry = 1
        else:
            carry = 0
        out.append(d)
    return out


def series_mul(a: Sequence[int], b: Sequence[int], order: int) -> list[int]:
    """Product of two integer power series, truncated to q^order."""
    a = list(a[:order + 1])
    b = list(b[:order + 1])
    if not a or not b:
        return [0] * (order + 1)
    ma, mb = max(abs(c) for c in a), max(abs(c) for c in b)
    # slots must hold the inputs as well as the product coefficients
    bound = max(ma * mb * min(len(a), len(b)), ma, mb)
    nbytes = (bound.bit_length() + 2) // 8 + 1
    prod = _pack(a, nbytes) * _pack(b, nbytes)
    out = _unpack(prod, order + 1, nbytes)
    return out


def _common_denominator(coeffs) -> int:
    den = 1
    for c in coeffs:
        if isinstance(c, Fraction) and c.denominator != 1:
            den = den * c.denominator // math.gcd(den, c.denominator)
    return den


@dataclass(frozen=True)
class QExpansion:
    """Truncated q-expansion c_0 + c_1 q + ... + c_P q^P with exact coefficients."""

    weight: int
    coeffs: tuple

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n: int):
        return self.coeffs[n]

    def is_cusp(self) -> bool:
        return self.coeffs[0] == 0

    def truncate(self, order: int) -> "QExpansion":
        return QExpansion(self.weight, self.coeffs[:order + 1])

    def _check_weight(self, other: "QExpansion") -> None:
        if self.weight != other.weight:
            raise ValueError(f"cannot add weights {self.weight} and {other.weight}")

    def __add__(self, other: "QExpansion") -> "QExpansion":
        self._check_weight(other)
        n = min(len(self.coeffs), len(other.coeffs))
        return QExpansion(self.weight, tuple(a + b for a, b in zip(self.coeffs[:n], other.coeffs[:n])))

    def __sub__(self, other: "QExpansion") -> "QExpansion":
        self._check_weight(other)
        n = min(len(self.coeffs), len(other.coeffs))
        return QExpansion(self.weight, tuple(a - b for a, b in zip(self.coeffs[:n], other.coeffs[:n])))

    def scale(self, c) -> "QExpansion":
        return QExpansion(self.weight, tuple(c * a for a in self.coeffs))

    def __mul__(self, other: "QExpansion") -> "QExpansion":
        order = min(self.order, other.order)
        da, db = _common_denominator(self.coeffs), _common_denominator(other.coeffs)
        a = [int(c * da) for c in self.coeffs[:order + 1]]
        b = [int(c * db) for c in other.coeffs[:order + 1]]
        prod = series_mul(a, b, order)
        if da * db != 1:
            prod = [Fraction(c, da * db) for c in prod]
        return QExpansion(self.weight + other.weight, tuple(prod))

    def __pow__(self, e: int) -> "QExpansion":
        if e < 0:
            raise ValueError("negative power")
        result = QExpansion(0, (1,) + (0,) * self.order)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result


# ---------------------------------------------------------------------------
# generators of the graded ring

@lru_cache(maxsize=16)
def eisenstein_series(weight: int, order: int) -> QExpansion:
    """Normalized E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n for even k >= 4."""
    if weight < 4 or weight % 2:
        raise ValueError("Eisenstein series needs even weight >= 4")
    if order < 1:
        raise ValueError("order must be >= 1")
    factor = Fraction(-2 * weight) / Fraction(sympy.bernoulli(weight))
    sig = sigma_table(order, weight - 1)
    if factor.denominator == 1:
        factor = int(factor)
    coeffs = (1,) + tuple(factor * sig[n] for n in range(1, order + 1))
    return QExpansion(weight, coeffs)


@lru_cache(maxsize=8)
def delta_series(order: int) -> QExpansion:
    """Delta = q prod (1 - q^n)^24, via Jacobi's series for prod (1 - q^n)^3."""
    if order < 1:
        raise ValueError("order must be >= 1")
    n = order - 1  # Delta / q needs the product to q^(order - 1)
    cube = [0] * (n + 1)
    m = 0
    while m * (m + 1) // 2 <= n:
        cube[m * (m + 1) // 2] = (-1) ** m * (2 * m + 1)
        m += 1
    p = cube
    for _ in range(3):
        p = series_mul(p, p, n)
    return QExpansion(12, (0,) + tuple(p))


@lru_cache(maxsize=64)
def _generator_power(name: str, e: int, order: int) -> QExpansion:
    base = {"E4": lambda: eisenstein_series(4, order),
            "E6": lambda: eisenstein_series(6, order),
            "D": lambda: delta_series(order)}[name]
    if e == 0:
        return QExpansion(0, (1,) + (0,) * order)
    if e == 1:
        return base()
    return _generator_power(name, e - 1, order) * base()


def miller_basis(weight: int, order: int) -> list[QExpansion]:
    """Echelon basis g_i = q^i + O(q^(d+1)) of S_weight with integer coefficients."""
    d = dim_cusp_forms(weight)
    if d == 0:
        return []
    if order < d + 10:
        raise SeriesOrderError(f"order {order} too small for dimension {d}; need >= {d + 10}")
    rows = []
    for j in range(1, d + 1):
        rest = weight - 12 * j
        if rest < 0 or rest == 2:
            raise DimensionError(f"no monomial Delta^{j} of weight {weight}; dim formula mismatch")
        b = 0 if rest % 4 == 0 else 1
        a = (rest - 6 * b) // 4
        mono = _generator_power("D", j, order) * _generator_power("E4", a, order) \
            * _generator_power("E6", b, order)
        lead = [n for n, c in enumerate(mono.coeffs) if c][0]
        if lead != j or mono.coeffs[j] != 1:
            raise DimensionError(f"monomial {j} does not start at q^{j}")
        rows.append(list(mono.coeffs))
    # the next monomial would have negative weight: no hidden extra forms
    if weight - 12 * (d + 1) >= 0 and weight - 12 * (d + 1) != 2:
        raise DimensionError("monomial count exceeds the dimension formula")
    for i in range(d - 1, -1, -1):
        for j in range(i + 1, d):
            c = rows[i][j + 1]
            if c:
                rows[i] = [x - c * y for x, y in zip(rows[i], rows[j])]
    return [QExpansion(weight, tuple(r)) for r in rows]


def hecke_matrix(weight: int, basis: Sequence[QExpansion], m: int) -> sympy.Matrix:
    """Matrix A of T_m on the echelon basis: T_m g_i = sum_j A[i, j] g_j."""
    d = len(basis)
    if d == 0:
        return sympy.zeros(0, 0)
    order = min(g.order for g in basis)
    if order < m * d:
        raise SeriesOrderError(f"T_{m} needs series order >= {m * d}, have {order}")
    rows = []
    for g in basis:
        row = []
        for j in range(1, d + 1):
            acc = 0
            for e in sympy.divisors(math.gcd(m, j)):
                acc += e ** (weight - 1) * g.coeffs[m * j // (e * e)]
            row.append(acc)
        rows.append(row)
    return sympy.Matrix(rows)


# ---------------------------------------------------------------------------
# eigenforms

@dataclass(frozen=True)
class Eigenform:
    """Normalized Hecke eigenform of level one.

    ``raw_coeffs[n]`` is a(n) and ``normalized[n]`` is a(n)/n^((k-1)/2), with
    index 0 holding zero.  The Petersson norm is covolume-normalized.
    """

    weight: int
    index: int
    raw_coeffs: tuple
    normalized: tuple
    precision: int
    petersson_norm: mpmath.mpf | None = None
    harmonic_weight: mpmath.mpf | None = None
    hecke_index: int = 2
    exact_coeffs: tuple | None = field(default=None, repr=False)

    @property
    def coeff_limit(self) -> int:
        return len(self.raw_coeffs) - 1

    def lam(self, n: int):
        return self.normalized[n]


def _charpoly(matrix: sympy.Matrix) -> sympy.Poly:
    x = sympy.Symbol("x")
    return sympy.Poly(matrix.charpoly(x).as_expr(), x)


def _refine_root(poly: sympy.Poly, lo: Fraction, hi: Fraction, prec: int):
    """High-precision root inside the certified isolating interval [lo, hi]."""
    coeffs = [int(c) for c in poly.all_coeffs()]
    with mpmath.workprec(prec + 20):
        a, b = mpmath.mpf(lo.numerator) / lo.denominator, mpmath.mpf(hi.numerator) / hi.denominator
        if a == b:
            return a
        f = lambda t: mpmath.polyval(coeffs, t)
        fa = f(a)
        # bisection to a safe bracket, then Newton
        for _ in range(60):
            mid = (a + b) / 2
            fm = f(mid)
            if fm == 0:
                return mid
            if (fm > 0) == (fa > 0):
                a, fa = mid, fm
            else:
                b = mid
        root = mpmath.findroot(f, (a + b) / 2, tol=mpmath.ldexp(1, -prec - 10))
        if not (a - (b - a) <= root <= b + (b - a)):
            raise RuntimeError("Newton left the isolating interval")
        return root


def _select_hecke(weight: int, basis) -> tuple[int, sympy.Matrix, sympy.Poly]:
    for m in (2, 3, 5):
        mat = hecke_matrix(weight, basis, m)
        poly = _charpoly(mat)
        if sympy.degree(sympy.gcd(poly, poly.diff())) == 0:
            return m, mat, poly
    raise EigenvalueCollisionError(
        f"weight {weight}: T_2, T_3, T_5 all have repeated eigenvalues")


def eigenforms(weight: int, coeff_limit: int, precision: int = 128,
               with_norms: bool = True) -> list[Eigenform]:
    """All normalized eigenforms of S_weight with a(n) for n <= coeff_limit."""
    if weight < 12 or weight % 2:
        raise ValueError("weight must be even and >= 12")
    if coeff_limit < 2:
        raise ValueError("coeff_limit must be >= 2")
    d = dim_cusp_forms(weight)
    if d == 0:
        return []
    order = max(coeff_limit, 5 * (d + 1))
    basis = miller_basis(weight, order)
    m, mat, poly = _select_hecke(weight, basis)
    intervals = poly.intervals()
    if sum(mult for _, mult in intervals) != d:
        raise RuntimeError("characteristic polynomial has non-real roots")
    guard = max(abs(c).bit_length() for g in basis for c in g.coeffs[:coeff_limit + 1])
    wp = precision + guard + 32
    forms = []
    with mpmath.workprec(wp):
        at = mpmath.matrix([[int(mat[j, i]) for j in range(d)] for i in range(d)])
        # descending eigenvalue order fixes the form index
        roots = [_refine_root(poly, Fraction(lo), Fraction(hi), wp) for (lo, hi), _ in intervals]
        roots.sort(reverse=True)
        for idx, lam in enumerate(roots):
            shifted = at - lam * mpmath.eye(d)
            if d == 1:
                x = [mpmath.mpf(1)]
            else:
                rhs = -shifted[:, 0]
                sub = shifted[:, 1:]
                sol, _ = mpmath.qr_solve(sub, rhs)
                x = [mpmath.mpf(1)] + [sol[i] for i in range(d - 1)]
            raw = [mpmath.mpf(0)]
            for n in range(1, coeff_limit + 1):
                raw.append(mpmath.fsum(x[i] * basis[i].coeffs[n] for i in range(d)))
            exact = None
            if d == 1:
                exact = tuple(int(c) for c in basis[0].coeffs[:coeff_limit + 1])
                raw = [mpmath.mpf(c) for c in exact]
            with mpmath.workprec(precision + 32):
                normed = [mpmath.mpf(0)] + [raw[n] / mpmath.power(n, mpmath.mpf(weight - 1) / 2)
                                            for n in range(1, coeff_limit + 1)]
            with mpmath.workprec(precision):
                raw_t = tuple(+c for c in raw)
                norm_t = tuple(+c for c in normed)
            forms.append(Eigenform(weight, idx, raw_t, norm_t, precision,
                                   hecke_index=m, exact_coeffs=exact))
    if with_norms:
        forms = [attach_norm(f) for f in forms]
    return forms


def attach_norm(form: Eigenform, tolerance: float | None = None) -> Eigenform:
    norm = petersson_norm(form, tolerance)
    return Eigenform(form.weight, form.index, form.raw_coeffs, form.normalized, form.precision,
                     norm, harmonic_weight(form, norm), form.hecke_index, form.exact_coeffs)


# ---------------------------------------------------------------------------
# Petersson norm

def _sliver_terms(form: Eigenform, rel_tol) -> int:
    """Number of q-expansion terms so that the tail at y >= sqrt(3)/2 is below rel_tol."""
    k = form.weight
    y0 = math.sqrt(3) / 2
    log_tol = math.log(rel_tol)
    # |a(n)| <= d(n) n^((k-1)/2) <= 2 sqrt(n) n^((k-1)/2); compare with the n = 1 term
    for n in range(2, 10 ** 6):
        logt = math.log(2) + (k / 2) * math.log(n) - 2 * math.pi * y0 * (n - 1)
        if logt < log_tol - 10 and n > k / (4 * math.pi * y0):
            return n
    raise SeriesOrderError("q-expansion tail bound never closes")


def _sliver_integral(coeffs, k, nodes, prec, terms):
    """2 * int_0^{1/2} int_{sqrt(1-x^2)}^1 |f|^2 y^(k-2) dy dx."""
    with mpmath.workprec(prec):
        xs, wxs = gauss_legendre_interval(0, mpmath.mpf(1) / 2, nodes, prec)
        total = mpmath.mpf(0)
        two_pi = 2 * mpmath.pi
        for x, wx in zip(xs, wxs):
            y_lo = mpmath.sqrt(1 - x * x)
            ys, wys = gauss_legendre_interval(y_lo, 1, nodes, prec)
            inner = mpmath.mpf(0)
            for y, wy in zip(ys, wys):
                q = mpmath.exp(two_pi * mpmath.mpc(-y, x))
                acc = mpmath.mpc(0)
                qn = q
                for n in range(1, terms + 1):
                    acc += coeffs[n] * qn
                    qn *= q
                inner += wy * (acc.real ** 2 + acc.imag ** 2) * y ** (k - 2)
            total += wx * inner
        return 2 * total


def _strip_integral(coeffs, k, prec, rel_tol):
    """int_1^oo int_{-1/2}^{1/2} |f|^2 y^(k-2) dx dy = sum a(n)^2 Gamma(k-1, 4 pi n)/(4 pi n)^(k-1)."""
    with mpmath.workprec(prec):
        total = mpmath.mpf(0)
        for n in range(1, len(coeffs)):
            t = 4 * mpmath.pi * n
            term = coeffs[n] ** 2 * mpmath.gammainc(k - 1, t) / t ** (k - 1)
            total += term
            if n > k and abs(term) < rel_tol * total * mpmath.mpf(10) ** -3:
                return total
    raise SeriesOrderError("not enough coefficients for the y >= 1 strip")


def petersson_norm(form: Eigenform, tolerance: float | None = None, nodes: int = 24) -> mpmath.mpf:
    """Covolume-normalized <f, f> = (3/pi) int_F |f|^2 y^k dmu.

    The part y >= 1 is integrated exactly in x and y; the sliver under it by a
    tensor Gauss-Legendre rule whose node count doubles until the relative
    change is below ``tolerance`` (default 2^(-precision/2)).
    """
    prec = form.precision
    rel_tol = tolerance if tolerance is not None else 2.0 ** (-prec / 2)
    terms = _sliver_terms(form, rel_tol)
    if terms > form.coeff_limit:
        raise SeriesOrderError(f"Petersson norm needs {terms} coefficients, have {form.coeff_limit}")
    wp = prec + 20
    strip = _strip_integral(form.raw_coeffs, form.weight, wp, rel_tol)
    prev = None
    for _ in range(6):
        sliver = _sliver_integral(form.raw_coeffs, form.weight, nodes, wp, terms)
        with mpmath.workprec(wp):
            value = (sliver + strip) * 3 / mpmath.pi
        if prev is not None and abs(value - prev) <= rel_tol * abs(value):
            with mpmath.workprec(prec):
                return +value
        prev = value
        nodes *= 2
    raise RuntimeError("Petersson quadrature did not converge")


def harmonic_weight(form: Eigenform, norm=None) -> mpmath.mpf:
    """omega_f = Gamma(k-1) / ((4 pi)^(k-1) <f, f>)."""
    norm = norm if norm is not None else form.petersson_norm
    if norm is None:
        norm = petersson_norm(form)
    k = form.weight
    with mpmath.workprec(form.precision + 20):
        val = mpmath.exp(log_gamma(k - 1, form.precision + 20).real) / ((4 * mpmath.pi) ** (k - 1) * norm)
    with mpmath.workprec(form.precision):
        return +val


# ---------------------------------------------------------------------------
# JSON cache

def _dec(x, prec: int) -> str:
    return mpmath.nstr(x, int(prec * math.log10(2)) + 3, strip_zeros=False)


def cache_path(cache_dir: str | Path, weight: int) -> Path:
    return Path(cache_dir) / f"eigenforms_k{weight}.json"


def save_eigenforms(path: str | Path, weight: int, forms: Sequence[Eigenform], precision: int,
                    coeff_limit: int) -> None:
    doc = {
        "version": CACHE_VERSION,
        "weight": weight,
        "dim": dim_cusp_forms(weight),
        "precision_bits": precision,
        "coeff_limit": coeff_limit,
        "forms": [
            {
                "eigenvalue_index": f.index,
                "hecke_index": f.hecke_index,
                "raw_coeffs": ([str(c) for c in f.exact_coeffs[1:]] if f.exact_coeffs
                               else [_dec(c, precision) for c in f.raw_coeffs[1:]]),
                "normalized": [_dec(c, precision) for c in f.normalized[1:]],
                "petersson_norm": _dec(f.petersson_norm, precision),
                "harmonic_weight": _dec(f.harmonic_weight, precision),
            }
            for f in forms
        ],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(doc, indent=1) + "\n")
    tmp.replace(path)


class CacheVersionError(RuntimeError):
    pass


def load_eigenforms(path: str | Path) -> tuple[dict, list[Eigenform]]:
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != CACHE_VERSION:
        raise CacheVersionError(f"{path}: cache version {doc.get('version')} != {CACHE_VERSION}")
    prec = doc["precision_bits"]
    k = doc["weight"]
    forms = []
    with mpmath.workprec(prec):
        for entry in doc["forms"]:
            raw = (mpmath.mpf(0),) + tuple(mpmath.mpf(s) for s in entry["raw_coeffs"])
            normed = (mpmath.mpf(0),) + tuple(mpmath.mpf(s) for s in entry["normalized"])
            exact = None
            if all(s.lstrip("-").isdigit() for s in entry["raw_coeffs"]):
                exact = (0,) + tuple(int(s) for s in entry["raw_coeffs"])
            forms.append(Eigenform(k, entry["eigenvalue_index"], raw, normed, prec,
                                   mpmath.mpf(entry["petersson_norm"]),
                                   mpmath.mpf(entry["harmonic_weight"]),
                                   entry.get("hecke_index", 2), exact))
    meta = {key: doc[key] for key in ("version", "weight", "dim", "precision_bits", "coeff_limit")}
    return meta, forms


def get_eigenforms(weight: int, coeff_limit: int, precision: int = 128,
                   cache_dir: str | Path | None = None, strict: bool = False) -> list[Eigenform]:
    """Eigenforms from the cache when compatible, else computed (and cached)."""
    if cache_dir is not None:
        path = cache_path(cache_dir, weight)
        if path.exists():
            meta, forms = load_eigenforms(path)
            if meta["precision_bits"] >= precision and meta["coeff_limit"] >= coeff_limit:
                return forms
            if strict:
                raise CacheVersionError(
                    f"{path}: cached precision/limit {meta['precision_bits']}/{meta['coeff_limit']} "
                    f"below requested {precision}/{coeff_limit}")
    forms = eigenforms(weight, coeff_limit, precision)
    if cache_dir is not None:
        save_eigenforms(cache_path(cache_dir, weight), weight, forms, precision, coeff_limit)
    return forms
