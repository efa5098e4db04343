"""Exact integer and ideal arithmetic over Q and real quadratic fields.

Elements of a quadratic ring of integers are stored as integer pairs ``(a, b)``
meaning ``a + b*omega`` in the integral basis ``(1, omega)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np


class UnsupportedFieldError(ValueError):
    """Raised for fields outside the narrow-class-number-one regime."""


# ---------------------------------------------------------------------------
# elementary number theory

def factorize(n: int) -> dict[int, int]:
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisor_count(n: int) -> int:
    if n < 1:
        raise ValueError("divisor_count requires n >= 1")
    return math.prod(e + 1 for e in factorize(n).values())


def divisor_sigma(n: int, k: int) -> int:
    if n < 1:
        raise ValueError("divisor_sigma requires n >= 1")
    return math.prod((p ** (k * (e + 1)) - 1) // (p ** k - 1) if k else e + 1
                     for p, e in factorize(n).items())


def sigma_table(limit: int, k: int) -> list[int]:
    """sigma_k(n) for 0 <= n <= limit as exact integers (entry 0 is 0)."""
    out = [0] * (limit + 1)
    for d in range(1, limit + 1):
        dk = d ** k
        for m in range(d, limit + 1, d):
            out[m] += dk
    return out


def primes_up_to(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.flatnonzero(sieve)


def kronecker_prime(disc: int, p: int) -> int:
    """Kronecker symbol (disc/p) for a prime p."""
    if p == 2:
        if disc % 2 == 0:
            return 0
        return 1 if disc % 8 in (1, 7) else -1
    r = pow(disc % p, (p - 1) // 2, p)
    return 0 if r == 0 else (1 if r == 1 else -1)


# ---------------------------------------------------------------------------
# fields

@dataclass(frozen=True)
class RationalField:
    """Marker for the base field Q."""

    disc: int = 1
    degree: int = 1
    narrow_class_number: int = 1


QQ = RationalField()


@dataclass(frozen=True)
class QuadraticField:
    """Real quadratic field Q(sqrt(d)) with its units and different.

    Construct with :meth:`from_d`; the narrow class number is computed (from
    the analytic class number formula, rounded) but not enforced here.
    """

    d: int
    fundamental_unit: tuple[int, int]
    unit_norm: int
    class_number: int
    degree: int = field(default=2, init=False)

    @classmethod
    def from_d(cls, d: int) -> "QuadraticField":
        if d <= 1 or any(e > 1 for e in factorize(d).values()):
            raise ValueError(f"d must be a squarefree integer > 1, got {d}")
        unit = _fundamental_unit(d)
        probe = cls(d, unit, 0, 0)
        norm = probe.norm(unit)
        h = _class_number(d, probe.log_unit(unit), probe.disc)
        return cls(d, unit, norm, h)

    # --- structure -------------------------------------------------------
    @property
    def disc(self) -> int:
        return self.d if self.d % 4 == 1 else 4 * self.d

    @property
    def narrow_class_number(self) -> int:
        return self.class_number if self.unit_norm == -1 else 2 * self.class_number

    @property
    def tp_unit_generator(self) -> tuple[int, int]:
        eps = self.fundamental_unit
        if self.unit_norm == -1:
            return self.mul(eps, eps)
        return eps if self.embed(eps, 0) > 0 else self.neg(eps)

    @property
    def different_gen(self) -> tuple[int, int]:
        # sqrt(disc): 2*omega - 1 = sqrt(d) when d = 1 mod 4, else 2*sqrt(d)
        return (-1, 2) if self.d % 4 == 1 else (0, 2)

    @property
    def unit_index(self) -> int:
        """[O^{x+} : O^{x2}]."""
        return 1 if self.unit_norm == -1 else 2

    def require_narrow_one(self) -> None:
        if self.narrow_class_number != 1:
            raise UnsupportedFieldError(
                f"Q(sqrt({self.d})) has narrow class number {self.narrow_class_number}")

    # --- element arithmetic ---------------------------------------------
    def _omega_sq(self) -> tuple[int, int]:
        return (self.d - 1) // 4 if self.d % 4 == 1 else self.d, 1 if self.d % 4 == 1 else 0

    def mul(self, x: tuple[int, int], y: tuple[int, int]) -> tuple[int, int]:
        a, b = x
        c, e = y
        s0, s1 = self._omega_sq()
        return a * c + b * e * s0, a * e + b * c + b * e * s1

    def add(self, x, y):
        return x[0] + y[0], x[1] + y[1]

    def sub(self, x, y):
        return x[0] - y[0], x[1] - y[1]

    def neg(self, x):
        return -x[0], -x[1]

    def conj(self, x: tuple[int, int]) -> tuple[int, int]:
        a, b = x
        if self.d % 4 == 1:
            return a + b, -b
        return a, -b

    def norm(self, x: tuple[int, int]) -> int:
        return self.mul(x, self.conj(x))[0]

    def trace(self, x: tuple[int, int]) -> int:
        a, b = x
        return 2 * a + b if self.d % 4 == 1 else 2 * a

    def power(self, x: tuple[int, int], n: int) -> tuple[int, int]:
        if n < 0:
            nx = self.norm(x)
            if abs(nx) != 1:
                raise ValueError("only units have integral inverses")
            x = self.conj(x) if nx == 1 else self.neg(self.conj(x))
            n = -n
        out = (1, 0)
        while n:
            if n & 1:
                out = self.mul(out, x)
            x = self.mul(x, x)
            n >>= 1
        return out

    def embed(self, x: tuple[int, int], j: int, prec: int | None = None):
        """Real embedding j in {0, 1}; float unless prec (bits) is given."""
        a, b = x
        if prec is None:
            root = math.sqrt(self.d) * (1 if j == 0 else -1)
            om = (1 + root) / 2 if self.d % 4 == 1 else root
            return a + b * om
        # guard bits cover the cancellation in a + b*omega for large a, b
        guard = 2 * max(abs(a).bit_length(), abs(b).bit_length()) + 10
        with mpmath.workprec(prec + guard):
            root = mpmath.sqrt(self.d) * (1 if j == 0 else -1)
            om = (1 + root) / 2 if self.d % 4 == 1 else root
            val = a + b * om
        with mpmath.workprec(prec):
            return +val

    def log_unit(self, x: tuple[int, int]) -> float:
        return math.log(abs(self.embed(x, 0)))

    def content(self, x: tuple[int, int]) -> int:
        return math.gcd(x[0], x[1])

    def ideal_divisor_count(self, c: tuple[int, int]) -> int:
        """tau((c)): number of integral ideals dividing the principal ideal (c)."""
        n = abs(self.norm(c))
        if n == 0:
            raise ValueError("zero element")
        g = self.content(c)
        total = 1
        for p, e in factorize(n).items():
            m = 0
            gg = g
            while gg % p == 0:
                gg //= p
                m += 1
            rest = e - 2 * m  # norm exponent of the primitive part
            chi = kronecker_prime(self.disc, p)
            if chi == 1:
                total *= (m + rest + 1) * (m + 1)
            elif chi == 0:
                total *= e + 1
            else:
                total *= e // 2 + 1
        return total


def _fundamental_unit(d: int, cap: int = 10 ** 7) -> tuple[int, int]:
    # smallest y > 0 with x^2 - d y^2 = +-4 (d = 1 mod 4, element (x+y sqrt d)/2)
    # or x^2 - d y^2 = +-1 otherwise
    quarter = d % 4 == 1
    for y in range(1, cap):
        for sgn in (-1, 1):
            t = d * y * y + sgn * (4 if quarter else 1)
            if t <= 0:
                continue
            x = math.isqrt(t)
            if x * x == t:
                if quarter:
                    # (x + y sqrt d)/2 = (x - y)/2 + y*omega
                    return (x - y) // 2, y
                return x, y
    raise RuntimeError(f"no fundamental unit found for d={d} below y={cap}")


def _class_number(d: int, log_eps: float, disc: int) -> int:
    s = math.fsum(kronecker_symbol(disc, a) * math.log(math.sin(math.pi * a / disc))
                  for a in range(1, disc))
    h = -s / (2 * log_eps)
    return int(round(h))


def kronecker_symbol(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for n >= 1."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    out = 1
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            out = -out
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                out = -out
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            out = -out
        a %= n
    return out if n == 1 else 0


# ---------------------------------------------------------------------------
# ideal counting

@dataclass(frozen=True)
class IdealCountTable:
    field_disc: int
    level_norm: int
    counts: np.ndarray  # counts[d] for 0 <= d <= limit, counts[0] = 0
    limit: int

    def __getitem__(self, d: int) -> int:
        return int(self.counts[d])


def _local_count(chi: int, e: int) -> int:
    if chi == 1:
        return e + 1
    if chi == 0:
        return 1
    return 1 if e % 2 == 0 else 0


def ideal_norm_counts(fld: RationalField | QuadraticField, level: int,
                      limit: int) -> IdealCountTable:
    """a_d(n): number of integral ideals of norm d coprime to n = level*O_F.

    ``level`` is the rational generator of the level ideal, so the stored
    ``level_norm`` is ``level ** degree``.
    """
    if limit < 1 or level < 1:
        raise ValueError("limit and level must be positive")
    if isinstance(fld, QuadraticField):
        fld.require_narrow_one()
    counts = np.ones(limit + 1, dtype=np.int64)
    counts[0] = 0
    bad = set(factorize(level)) if level > 1 else set()
    for p in primes_up_to(limit):
        p = int(p)
        idx = np.arange(p, limit + 1, p, dtype=np.int64)
        val = np.ones(idx.size, dtype=np.int64)
        q = idx // p
        mask = q % p == 0
        while mask.any():
            val[mask] += 1
            q[mask] //= p
            mask = (q % p == 0) & mask
        top = int(val.max())
        if p in bad:
            table = np.zeros(top + 1, dtype=np.int64)
        elif isinstance(fld, RationalField):
            table = np.ones(top + 1, dtype=np.int64)
        else:
            chi = kronecker_prime(fld.disc, p)
            table = np.array([_local_count(chi, e) for e in range(top + 1)], dtype=np.int64)
        counts[idx] *= table[val]
    return IdealCountTable(fld.disc, level ** fld.degree, counts, limit)


def gamma_minus_one(fld: RationalField, level: int) -> Fraction:
    """Twice the residue at u = 0 of zeta^{(n)}(2u + 1), exactly."""
    if not isinstance(fld, RationalField):
        raise UnsupportedFieldError("gamma_{-1} is implemented for F = Q only")
    if level < 1:
        raise ValueError("level must be positive")
    out = Fraction(1)
    for p in (factorize(level) if level > 1 else {}):
        out *= 1 - Fraction(1, p)
    return out


def dedekind_residue_estimate(fld: RationalField | QuadraticField, limit: int,
                              grid_points: int = 200) -> float:
    """Least-squares slope of X -> sum_{d<=X} a_d(O_F) over a grid of X."""
    table = ideal_norm_counts(fld, 1, limit)
    partial = np.cumsum(table.counts)
    xs = np.unique(np.linspace(limit // 10, limit, grid_points).astype(np.int64))
    slope, _ = np.polyfit(xs.astype(float), partial[xs].astype(float), 1)
    return float(slope)


def class_number_residue(fld: QuadraticField) -> float:
    """Res_{s=1} zeta_F(s) = 2 h log(eps) / sqrt(disc) for a real quadratic field."""
    return 2 * fld.class_number * fld.log_unit(fld.fundamental_unit) / math.sqrt(fld.disc)
