"""Kloosterman sums over Z and over real quadratic rings, Weil ratios, unit sums.

Number-field elements are integer pairs (a, b) = a + b*omega in the integral
basis of :class:`~rslab.arith.QuadraticField`.  Residues modulo c are
enumerated through the Hermite normal form of the lattice cO, and the
different is absorbed into the trace pairing so that every trace is an exact
rational number.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .arith import QQ, QuadraticField, RationalField, divisor_count, factorize, kronecker_prime

Element = tuple[int, int]


# ---------------------------------------------------------------------------
# over Z

def kloosterman_z(m: int, n: int, c: int, prec: int | None = None):
    """S(m, n; c) as a real number (float, or mpmath at ``prec`` bits)."""
    if c < 1:
        raise ValueError("modulus must be positive")
    if c == 1:
        return 1.0 if prec is None else mpmath.mpf(1)
    xs = [x for x in range(1, c) if math.gcd(x, c) == 1]
    phases = [(m * x + n * pow(x, -1, c)) % c for x in xs]
    if prec is None:
        ang = 2 * np.pi * np.asarray(phases, dtype=float) / c
        re, im = float(np.sum(np.cos(ang))), float(np.sum(np.sin(ang)))
        if abs(im) > 1e-9 * max(1.0, len(xs)):
            raise ArithmeticError(f"S({m},{n};{c}) has imaginary part {im}")
        return re
    with mpmath.workprec(prec + 10):
        re = mpmath.fsum(mpmath.cospi(mpmath.mpf(2 * p) / c) for p in phases)
        im = mpmath.fsum(mpmath.sinpi(mpmath.mpf(2 * p) / c) for p in phases)
        if abs(im) > mpmath.ldexp(1, -prec // 2):
            raise ArithmeticError(f"S({m},{n};{c}) has imaginary part {im}")
    with mpmath.workprec(prec):
        return +re


def kloosterman_residues(n: int, c: int) -> np.ndarray:
    """S(e, n; c) for every residue e = 0..c-1, by one FFT of length c."""
    vec = np.zeros(c, dtype=complex)
    for x in range(c):
        if math.gcd(x, c) == 1:
            vec[x] = np.exp(2j * np.pi * ((n * pow(x, -1, c)) % c) / c) if c > 1 else 1.0
    # S(e) = sum_x vec[x] e(e x / c) = c * ifft(vec)[e]
    return (np.fft.ifft(vec) * c).real


def weil_ratio_z(m: int, n: int, c: int) -> float:
    """|S(m,n;c)| / (gcd(m,n,c)^(1/2) tau(c) c^(1/2))."""
    s = kloosterman_z(m, n, c)
    g = math.gcd(math.gcd(m, n), c)
    return abs(s) / (math.sqrt(g) * divisor_count(c) * math.sqrt(c))


def tp_units_mod_squares(fld: RationalField | QuadraticField) -> list:
    """Representatives of O^{x+}/O^{x2}: a singleton for Q and for norm -1 fields."""
    if isinstance(fld, RationalField):
        return [1]
    if fld.unit_norm == -1:
        return [(1, 0)]
    return [(1, 0), fld.tp_unit_generator]


# ---------------------------------------------------------------------------
# residue rings of a real quadratic field

def _hnf(fld: QuadraticField, gens: Sequence[Element]) -> tuple[int, int, int]:
    """HNF (a, b, d) of the lattice spanned by the O-multiples of ``gens``.

    The lattice is {(x0, x1)} = Z(a, b) + Z(0, d), so residues are
    0 <= x0 < a, 0 <= x1 < d.
    """
    vecs = []
    for g in gens:
        vecs.append(g)
        vecs.append(fld.mul(g, (0, 1)))
    row = None
    second = 0
    for v in vecs:
        if v[0] == 0:
            second = math.gcd(second, v[1])
            continue
        if row is None:
            row = v
            continue
        # unimodular change of basis: (row, v) -> ((g, *), (0, *))
        g, s, t = _egcd(row[0], v[0])
        extra = (v[0] // g) * row[1] - (row[0] // g) * v[1]
        row = (g, s * row[1] + t * v[1])
        second = math.gcd(second, extra)
    if row is None or second == 0:
        raise ValueError("degenerate lattice")
    a, b = row
    if a < 0:
        a, b = -a, -b
    return a, b % second, second


def _egcd(x: int, y: int) -> tuple[int, int, int]:
    if x == 0 and y == 0:
        return 0, 0, 0
    a0, a1, s0, s1, t0, t1 = x, y, 1, 0, 0, 1
    while a1:
        q = a0 // a1
        a0, a1 = a1, a0 - q * a1
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a0 < 0:
        a0, s0, t0 = -a0, -s0, -t0
    return a0, s0, t0


@dataclass(frozen=True)
class ResidueRing:
    """O / cO for a nonzero c."""

    fld: QuadraticField
    c: Element
    a: int
    b: int
    d: int

    @classmethod
    def of(cls, fld: QuadraticField, c: Element) -> "ResidueRing":
        if c == (0, 0):
            raise ValueError("modulus must be nonzero")
        a, b, d = _hnf(fld, [c])
        if a * d != abs(fld.norm(c)):
            raise ArithmeticError("HNF index disagrees with the norm")
        return cls(fld, c, a, b, d)

    @property
    def size(self) -> int:
        return self.a * self.d

    def reduce(self, x: Element) -> Element:
        x0, x1 = x
        q = x0 // self.a
        x0 -= q * self.a
        x1 = (x1 - q * self.b) % self.d
        return x0, x1

    def elements(self) -> Iterable[Element]:
        for x1 in range(self.d):
            for x0 in range(self.a):
                yield x0, x1

    def contains_zero(self, x: Element) -> bool:
        return self.reduce(x) == (0, 0)

    def mul(self, x: Element, y: Element) -> Element:
        return self.reduce(self.fld.mul(x, y))

    def pow(self, x: Element, n: int) -> Element:
        out = self.reduce((1, 0))
        while n:
            if n & 1:
                out = self.mul(out, x)
            x = self.mul(x, x)
            n >>= 1
        return out


def _min_poly_roots(fld: QuadraticField, p: int) -> list[int]:
    # roots of the minimal polynomial of omega modulo p
    if fld.d % 4 == 1:
        coeffs = (1, -1, -(fld.d - 1) // 4)
    else:
        coeffs = (1, 0, -fld.d)
    return [r for r in range(p) if (r * r * coeffs[0] + r * coeffs[1] + coeffs[2]) % p == 0]


def prime_ideals_dividing(fld: QuadraticField, c: Element) -> list[tuple[int, int | None, int]]:
    """Primes P | (c) as (p, root, norm); root None for an inert p."""
    out = []
    for p in factorize(abs(fld.norm(c))):
        chi = kronecker_prime(fld.disc, p)
        if chi == -1:
            out.append((p, None, p * p))
            continue
        for r in _min_poly_roots(fld, p):
            # P = (p, omega - r); c in P iff c0 + c1 r = 0 mod p
            if (c[0] + c[1] * r) % p == 0:
                out.append((p, r, p))
    return out


def _in_prime(x: Element, prime: tuple[int, int | None, int]) -> bool:
    p, r, _ = prime
    if r is None:
        return x[0] % p == 0 and x[1] % p == 0
    return (x[0] + x[1] * r) % p == 0


def unit_group(ring: ResidueRing) -> list[tuple[Element, Element]]:
    """(x, x^-1) for every unit x of O/cO, the inverse by x^(|U|-1)."""
    primes = prime_ideals_dividing(ring.fld, ring.c)
    order = ring.size
    for _, _, nP in primes:
        order = order // nP * (nP - 1)
    out = []
    for x in ring.elements():
        if any(_in_prime(x, P) for P in primes):
            continue
        inv = ring.pow(x, order - 1)
        if ring.mul(x, inv) != ring.reduce((1, 0)):
            raise ArithmeticError(f"{x} has no inverse modulo {ring.c}")
        out.append((x, inv))
    if len(out) != order:
        raise ArithmeticError("unit count disagrees with the Euler function")
    return out


# ---------------------------------------------------------------------------
# number-field Kloosterman sums

@dataclass(frozen=True)
class KloostermanQuery:
    field: QuadraticField
    alpha: Element
    modulus_c: Element
    unit_eta: Element = (1, 0)

    def __post_init__(self):
        if self.modulus_c == (0, 0):
            raise ValueError("modulus must be nonzero")


def _trace_over(fld: QuadraticField, beta: Element, den: Element) -> Fraction:
    """Tr(beta / den) exactly."""
    num = fld.mul(beta, fld.conj(den))
    return Fraction(fld.trace(num), fld.norm(den))


def kloosterman_nf(query: KloostermanQuery, prec: int = 64) -> mpmath.mpc:
    """sum_x e(Tr(eta (alpha x + D' xbar) / (delta c))) over x in (O/c)^x.

    With x -> x/delta and xbar -> delta*xbar the different-twisted residues
    become ordinary residues of O/cO, delta the different generator.
    """
    fld = query.field
    fld.require_narrow_one()
    ring = ResidueRing.of(fld, query.modulus_c)
    delta = fld.different_gen
    dd = fld.mul(delta, delta)
    den = fld.mul(delta, query.modulus_c)
    eta = query.unit_eta
    with mpmath.workprec(prec + 10):
        acc = mpmath.mpc(0)
        for x, xbar in unit_group(ring):
            beta = fld.add(fld.mul(query.alpha, x), fld.mul(dd, xbar))
            tr = _trace_over(fld, fld.mul(eta, beta), den)
            frac = tr - math.floor(tr)
            acc += mpmath.expjpi(2 * mpmath.mpf(frac.numerator) / frac.denominator)
    with mpmath.workprec(prec):
        return +acc


def kloosterman_nf_bruteforce(query: KloostermanQuery, prec: int = 64) -> mpmath.mpc:
    """Same sum by scanning all residue pairs (x, y) with xy = 1 mod c; slow oracle."""
    fld = query.field
    ring = ResidueRing.of(fld, query.modulus_c)
    elems = list(ring.elements())
    one = ring.reduce((1, 0))
    delta = fld.different_gen
    dd = fld.mul(delta, delta)
    den = fld.mul(delta, query.modulus_c)
    with mpmath.workprec(prec + 10):
        acc = mpmath.mpc(0)
        for x in elems:
            for y in elems:
                if ring.mul(x, y) != one:
                    continue
                beta = fld.add(fld.mul(query.alpha, x), fld.mul(dd, y))
                tr = _trace_over(fld, fld.mul(query.unit_eta, beta), den)
                acc += mpmath.expjpi(2 * mpmath.mpf(tr.numerator) / tr.denominator)
    with mpmath.workprec(prec):
        return +acc


def ideal_gcd_norm(fld: QuadraticField, x: Element, y: Element) -> int:
    """N(gcd((x), (y))) as the index of the lattice xO + yO."""
    gens = [g for g in (x, y) if g != (0, 0)]
    a, _, d = _hnf(fld, gens)
    return a * d


def weil_margin(query: KloostermanQuery, value=None) -> float:
    """|Kl| / (N(gcd(alpha, c))^(1/2) tau((c)) N(c)^(1/2))."""
    fld = query.field
    value = kloosterman_nf(query) if value is None else value
    nc = abs(fld.norm(query.modulus_c))
    g = ideal_gcd_norm(fld, query.alpha, query.modulus_c) if query.alpha != (0, 0) else nc
    return float(abs(value)) / (math.sqrt(g) * fld.ideal_divisor_count(query.modulus_c) * math.sqrt(nc))


def canonical_generator(fld: QuadraticField, c: Element) -> Element:
    """Unit multiple of c with balanced embeddings and positive first embedding."""
    eps = fld.fundamental_unit
    log_eps = fld.log_unit(eps)
    s1, s2 = abs(fld.embed(c, 0)), abs(fld.embed(c, 1))
    # multiplying by eps shifts log|s1/s2| by 2 log eps
    t = round(-math.log(s1 / s2) / (2 * log_eps))
    out = fld.mul(c, fld.power(eps, t))
    if fld.embed(out, 0) < 0:
        out = fld.neg(out)
    return out


def ideals_up_to(fld: QuadraticField, max_norm: int) -> list[Element]:
    """One canonical generator for each nonzero ideal of norm <= max_norm, sorted."""
    fld.require_narrow_one()
    eps = abs(fld.embed(fld.fundamental_unit, 0))
    radius = math.sqrt(max_norm * eps) + 1
    # |x0 + x1 w1|, |x0 + x1 w2| <= radius bounds the coordinates
    w1, w2 = fld.embed((0, 1), 0), fld.embed((0, 1), 1)
    b_max = int(2 * radius / abs(w1 - w2)) + 2
    a_max = int(radius + b_max * max(abs(w1), abs(w2))) + 2
    seen = {}
    for x1 in range(-b_max, b_max + 1):
        for x0 in range(-a_max, a_max + 1):
            n = abs(fld.norm((x0, x1)))
            if n == 0 or n > max_norm:
                continue
            key = _hnf(fld, [(x0, x1)])
            if key not in seen:
                seen[key] = canonical_generator(fld, (x0, x1))
    return sorted(seen.values(), key=lambda c: (abs(fld.norm(c)), c))


@dataclass(frozen=True)
class KloostermanRow:
    field_disc: int
    alpha: Element
    c: Element
    norm_c: int
    value: complex
    weil_ratio: float


def kloosterman_table(fld: QuadraticField, max_norm: int, alpha: Element = (1, 0),
                      prec: int = 64) -> list[KloostermanRow]:
    rows = []
    for c in ideals_up_to(fld, max_norm):
        q = KloostermanQuery(fld, alpha, c)
        val = kloosterman_nf(q, prec)
        rows.append(KloostermanRow(fld.disc, alpha, c, abs(fld.norm(c)),
                                   complex(val), weil_margin(q, val)))
    return rows


def write_kloosterman_csv(path, rows: Sequence[KloostermanRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["field_disc", "alpha", "c_coords", "norm_c", "re", "im", "weil_ratio"])
        for r in rows:
            w.writerow([r.field_disc, f"{r.alpha[0]} {r.alpha[1]}", f"{r.c[0]} {r.c[1]}", r.norm_c,
                        f"{r.value.real:.15e}", f"{r.value.imag:.15e}", f"{r.weil_ratio:.15e}"])


# ---------------------------------------------------------------------------
# unit sums and rescaling

@dataclass(frozen=True)
class UnitSumResult:
    partial: mpmath.mpf
    limit: mpmath.mpf
    last_term: mpmath.mpf
    converged: bool


def unit_sum(fld: QuadraticField, exponent, terms: int, kind: str = "omega",
             prec: int = 128, tol: float = 1e-12) -> UnitSumResult:
    """Partial sum over eta = g^t, |t| <= terms, g the totally positive generator.

    kind "omega": prod over |eta_j| < 1 of |eta_j|^exponent, exponent in (0, 1/2).
    kind "delta": prod over |eta_j| > 1 of |eta_j|^(-exponent), exponent in (0, 1).
    Both have the geometric limit 1 + 2/(g^exponent - 1).  ``converged`` is false
    when the last term is not below ``tol`` relative to the partial sum.
    """
    hi = {"omega": 0.5, "delta": 1.0}[kind]
    if not 0 < exponent < hi:
        raise ValueError(f"exponent must lie in (0, {hi})")
    g = fld.tp_unit_generator
    with mpmath.workprec(prec):
        w = mpmath.mpf(exponent)
        total = mpmath.mpf(0)
        last = mpmath.mpf(0)
        for t in range(-terms, terms + 1):
            eta = fld.power(g, t)
            term = mpmath.mpf(1)
            for j in (0, 1):
                e = abs(fld.embed(eta, j, prec))
                if kind == "omega" and e < 1:
                    term *= e ** w
                elif kind == "delta" and e > 1:
                    term *= e ** (-w)
            total += term
            if t == terms:
                last = term
        gmax = abs(fld.embed(g, 0, prec))
        limit = 1 + 2 / (gmax ** w - 1)
        converged = last < tol * total
    return UnitSumResult(total, limit, last, bool(converged))


def unit_rescale(fld: QuadraticField, a: Element) -> tuple[Element, Element]:
    """Totally positive unit u making both embeddings of a*u close to N(a)^(1/2)."""
    if a == (0, 0):
        raise ValueError("a must be nonzero")
    if fld.embed(a, 0) <= 0 or fld.embed(a, 1) <= 0:
        raise ValueError("a must be totally positive")
    g = fld.tp_unit_generator
    log_g = fld.log_unit(g)
    root = math.sqrt(abs(fld.norm(a)))

    def spread(x):
        return max(abs(math.log(fld.embed(x, j) / root)) for j in (0, 1))

    t0 = round(-math.log(fld.embed(a, 0) / fld.embed(a, 1)) / (2 * log_g))
    best = min((spread(fld.mul(a, fld.power(g, t))), t) for t in (t0 - 1, t0, t0 + 1))
    u = fld.power(g, best[1])
    return u, fld.mul(a, u)
