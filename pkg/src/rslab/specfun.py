"""Arbitrary-precision special functions built on mpmath numbers.

Precision is given in bits.  Every evaluator here runs at its own working
precision and returns mpmath numbers at that precision; the ``*_array``
variants are double-precision numpy counterparts of the same algorithms for
bulk sweeps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import mpmath
import numpy as np
from mpmath import mp

DEFAULT_PREC = 128


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# log-gamma

@lru_cache(maxsize=None)
def _stirling_coeffs(prec: int, count: int = 120) -> tuple:
    with mpmath.workprec(prec):
        return tuple(mpmath.bernoulli(2 * m) / (2 * m * (2 * m - 1))
                     for m in range(1, count + 1))


def log_gamma(z, prec: int = DEFAULT_PREC):
    """Principal branch of log Gamma(z).

    Shifts z upward by recurrence until |z| is large enough for the Stirling
    series to reach 2^-prec, summing the series until the terms stop
    decreasing or fall below the target.
    """
    wp = prec + 20
    with mpmath.workprec(wp):
        z = mpmath.mpmathify(z)
        if z.imag == 0 and z.real <= 0 and z.real == mpmath.floor(z.real):
            raise ValueError(f"Gamma has a pole at {z}")
        threshold = max(12.0, 0.15 * prec)
        zr, zi = float(z.real), float(z.imag)
        shift = 0
        while math.hypot(zr + shift, zi) < threshold or zr + shift < 0.5:
            shift += 1
        w = z + shift
        out = (w - 0.5) * mpmath.log(w) - w + mpmath.log(2 * mpmath.pi) / 2
        if shift:
            # log of the product, with the branch fixed by the summed arguments
            prod = z
            for j in range(1, shift):
                prod *= z + j
            args = sum(math.atan2(zi, zr + j) for j in range(shift))
            lp = mpmath.log(prod)
            turns = round((args - float(lp.imag)) / (2 * math.pi))
            out -= lp + mpmath.mpc(0, 2 * turns) * mpmath.pi
        eps = mpmath.ldexp(1, -prec - 10)
        inv = 1 / w
        inv2 = inv * inv
        power = inv
        prev = None
        for coeff in _stirling_coeffs(wp):
            term = coeff * power
            mag = abs(term)
            if prev is not None and mag > prev:
                break
            out += term
            if mag < eps:
                break
            prev = mag
            power *= inv2
    with mpmath.workprec(prec):
        return +out


def gamma_ratio(num: Sequence, den: Sequence, prec: int = DEFAULT_PREC):
    """prod Gamma(num) / prod Gamma(den) through log_gamma."""
    with mpmath.workprec(prec + 10):
        acc = mpmath.mpf(0)
        for a in num:
            acc += log_gamma(a, prec + 10)
        for b in den:
            acc -= log_gamma(b, prec + 10)
        out = mpmath.exp(acc)
    with mpmath.workprec(prec):
        return +out


# ---------------------------------------------------------------------------
# Gauss-Legendre

@lru_cache(maxsize=None)
def gauss_legendre(n: int, prec: int = DEFAULT_PREC) -> tuple[tuple, tuple]:
    """Nodes and weights on [-1, 1] by Newton iteration on P_n."""
    if n < 1:
        raise ValueError("need at least one node")
    with mpmath.workprec(prec + 20):
        nodes, weights = [], []
        tol = mpmath.ldexp(1, -prec - 10)
        for i in range(1, n + 1):
            x = mpmath.cos(mpmath.pi * (i - mpmath.mpf(1) / 4) / (n + mpmath.mpf(1) / 2))
            for _ in range(100):
                p0, p1 = mpmath.mpf(1), x
                for m in range(2, n + 1):
                    p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
                dp = n * (x * p1 - p0) / (x * x - 1)
                dx = p1 / dp
                x -= dx
                if abs(dx) < tol:
                    break
            p0, p1 = mpmath.mpf(1), x
            for m in range(2, n + 1):
                p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
            dp = n * (x * p1 - p0) / (x * x - 1)
            nodes.append(x)
            weights.append(2 / ((1 - x * x) * dp * dp))
    with mpmath.workprec(prec):
        return tuple(+x for x in nodes), tuple(+w for w in weights)


def gauss_legendre_interval(a, b, n: int, prec: int = DEFAULT_PREC):
    xs, ws = gauss_legendre(n, prec)
    with mpmath.workprec(prec):
        half = (mpmath.mpf(b) - a) / 2
        mid = (mpmath.mpf(b) + a) / 2
        return [mid + half * x for x in xs], [half * w for w in ws]


# ---------------------------------------------------------------------------
# J-Bessel

def bessel_j_series(order, x, prec: int = DEFAULT_PREC, max_guard_bits: int = 512):
    """Ascending series for J_order(x), x >= 0.

    The alternating terms peak near exp(x); guard bits are added for that
    cancellation and the call is refused when the budget would be exceeded.
    """
    with mpmath.workprec(prec):
        nu = mpmath.mpf(order)
        x = mpmath.mpf(x)
    if x < 0 or nu < 0:
        raise ValueError("series evaluator requires order >= 0 and x >= 0")
    guard = int(float(x) * 1.4427) + 16
    if guard > max_guard_bits:
        raise ConvergenceError(f"x = {float(x)} exceeds the series budget")
    if x == 0:
        with mpmath.workprec(prec):
            return mpmath.mpf(1) if nu == 0 else mpmath.mpf(0)
    with mpmath.workprec(prec + guard):
        half = x / 2
        term = mpmath.exp(nu * mpmath.log(half) - mpmath.re(log_gamma(nu + 1, prec + guard)))
        total = term
        q = -half * half
        eps = mpmath.ldexp(1, -prec - guard - 8)
        biggest = abs(term)
        m = 0
        while True:
            m += 1
            term *= q / (m * (m + nu))
            total += term
            biggest = max(biggest, abs(term))
            if m > float(half) and abs(term) < eps * biggest:
                break
    with mpmath.workprec(prec):
        return +total


def bessel_j_asymptotic(order, x, prec: int = DEFAULT_PREC):
    """Hankel expansion; returns (value, remainder_bound) or None if it cannot reach 2^-prec."""
    with mpmath.workprec(prec + 20):
        nu = mpmath.mpf(order)
        x = mpmath.mpf(x)
        mu = 4 * nu * nu
        eps = mpmath.ldexp(1, -prec - 4)
        p = mpmath.mpf(0)
        q = mpmath.mpf(0)
        a = mpmath.mpf(1)
        k = 0
        last = None
        while True:
            term = a / x ** k
            if last is not None and abs(term) > last and k > nu / 2:
                return None
            if k % 4 == 0:
                p += term
            elif k % 4 == 1:
                q += term
            elif k % 4 == 2:
                p -= term
            else:
                q -= term
            last = abs(term)
            k += 1
            a *= (mu - (2 * k - 1) ** 2) / (k * 8)
            nxt = abs(a / x ** k)
            if nxt < eps and k > nu / 2:
                chi = x - nu * mpmath.pi / 2 - mpmath.pi / 4
                amp = mpmath.sqrt(2 / (mpmath.pi * x))
                val = amp * (p * mpmath.cos(chi) - q * mpmath.sin(chi))
                with mpmath.workprec(prec):
                    return +val, amp * 2 * nxt
            if k > 2000:
                return None


def bessel_j(order, x, prec: int = DEFAULT_PREC):
    """J_order(x) for x >= 0: series below max(2*order, 25), Hankel expansion above when it converges."""
    xf = float(x)
    val = None
    if xf > max(2 * float(order), 25.0):
        res = bessel_j_asymptotic(order, x, prec)
        if res is not None:
            val = res[0]
    if val is None:
        val = bessel_j_series(order, x, prec, max_guard_bits=4096)
    if isinstance(val, mpmath.mpc) and mpmath.im(mpmath.mpmathify(order)) == 0:
        return val.real
    return val


def bessel_j_mellin_barnes(order, x, contour=None, prec: int = 64, tol=1e-13, bend: bool = True):
    """J_order(x) = (1/4 pi i) int_(c) Gamma((nu-s)/2) / Gamma((nu+s)/2+1) (x/2)^s ds.

    The integrand is analytic left of s = nu, but on a vertical line it decays
    only like |t|^(-c-1).  The path is therefore bent to the parabola
    s(u) = c + a u^2 + i u, along which the integrand decays faster than any
    power, while the poles stay at distance about nu - c from the image of the
    strip |Im u| < nu - c.  The trapezoid rule in u then converges
    geometrically; the step is halved until two rules agree to ``tol``.
    With ``bend=False`` the rule runs on the vertical line itself, truncated
    where the tail estimate u|f(u)|/c drops below ``tol``; slower, kept as a
    cross-check.
    """
    if x <= 0:
        raise ValueError("Mellin-Barnes evaluator requires x > 0")
    nu_f, x_f = float(order), float(x)
    c_f = (nu_f - 1 if nu_f > 2 else nu_f / 2) if contour is None else float(contour)
    if not 0 < c_f < nu_f:
        raise ValueError(f"contour {c_f} must lie strictly inside (0, {nu_f})")
    gap = nu_f - c_f
    # along the bend the integrand can grow by about a x^2 / (2e) nats for u < x;
    # allow GROWTH nats and pay for them in working precision
    growth = 8.0
    alpha = min(1 / (4 * gap), 2 * math.e * growth / x_f ** 2) if bend else 0.0
    log_peak = (math.lgamma((nu_f - c_f) / 2) - math.lgamma((nu_f + c_f) / 2 + 1)
                + c_f * math.log(x_f / 2))
    loss = max(0.0, log_peak - _log_j_magnitude(nu_f, x_f)) / math.log(2)
    wp = prec + int(loss + growth / math.log(2)) + 30
    with mpmath.workprec(wp):
        nu = mpmath.mpf(order)
        c = mpmath.mpf(c_f)
        a = mpmath.mpf(alpha)
        logh = mpmath.log(mpmath.mpf(x) / 2)
        eps = mpmath.mpf(tol)

        def f(u):
            s = mpmath.mpc(c + a * u * u, u)
            lg = mpmath.loggamma((nu - s) / 2) - mpmath.loggamma((nu + s) / 2 + 1)
            return (mpmath.exp(lg + s * logh) * mpmath.mpc(1, -2 * a * u)).real

        def rule(h):
            total = f(mpmath.mpf(0)) / 2
            big = abs(total)
            j = 0
            while True:
                j += 1
                v = f(j * h)
                total += v
                big = max(big, abs(v))
                tail = abs(v) * (1 if bend else j * h / c)
                if j * h > 2 and tail < eps * 1e-3 * max(abs(total), 1e-300 * big):
                    return total * h / (2 * mpmath.pi)
                if j > 10 ** 5:
                    raise ConvergenceError("Mellin-Barnes height did not settle")

        h = 2 * mpmath.pi * gap / (-mpmath.log(eps) + 10)
        est = rule(h)
        for _ in range(10):
            h /= 2
            new = rule(h)
            if abs(new - est) < eps * abs(new):
                est = new
                break
            est = new
        else:
            raise ConvergenceError("Mellin-Barnes trapezoid did not stabilise")
    with mpmath.workprec(prec):
        return +est


def _log_j_magnitude(nu: float, x: float) -> float:
    """Rough log |J_nu(x)|: the leading power term, capped by the oscillatory envelope."""
    lead = nu * math.log(x / 2) - math.lgamma(nu + 1)
    return min(lead, 0.5 * math.log(2 / (math.pi * x)) + 1.0) if x > nu else lead


def bessel_j_decay_bound(order, x, m, delta=0.0) -> float:
    """(e x / (2 (order + 1)))^(m - delta), the small-argument J-Bessel majorant."""
    return (math.e * x / (2 * (order + 1))) ** (m - delta)


def bessel_j_array(order: float, xs) -> np.ndarray:
    """Double-precision J_order on an array (scipy), for bulk trace-formula sums."""
    from scipy.special import jv

    return jv(order, np.asarray(xs, dtype=float))


# ---------------------------------------------------------------------------
# K-Bessel

def bessel_k(order, x, prec: int = DEFAULT_PREC):
    """K_order(x) = int_0^inf exp(-x cosh t) cosh(order t) dt.

    The integrand decays double-exponentially, so the plain trapezoid rule is
    the double-exponential rule; the step is halved until stable.  Complex
    order is accepted.
    """
    with mpmath.workprec(prec + 20):
        x = mpmath.mpf(x)
        if x <= 0:
            raise ValueError("K-Bessel requires x > 0")
        nu = mpmath.mpmathify(order)
        target = (prec + 30) * mpmath.log(2)
        anu = abs(nu.real) if isinstance(nu, mpmath.mpc) else abs(nu)
        # x (cosh T - 1) - |nu| T > target
        top = mpmath.acosh(1 + (target + anu * 4) / x) + 1
        while x * (mpmath.cosh(top) - 1) - anu * top < target:
            top += 1

        def g(t):
            return mpmath.exp(-x * mpmath.cosh(t)) * mpmath.cosh(nu * t)

        eps = mpmath.ldexp(1, -prec - 4)
        h = mpmath.mpf(1) / 4
        n = int(top / h) + 1
        h = top / n
        total = g(mpmath.mpf(0)) / 2 + mpmath.fsum(g(j * h) for j in range(1, n + 1))
        est = total * h
        for _ in range(12):
            total += mpmath.fsum(g((j + mpmath.mpf(1) / 2) * h) for j in range(n))
            n *= 2
            h /= 2
            new = total * h
            if abs(new - est) < eps * abs(new):
                est = new
                break
            est = new
        else:
            raise ConvergenceError("K-Bessel trapezoid did not stabilise")
    with mpmath.workprec(prec):
        return +est


def bessel_k_array(order, xs, step: float = 0.05) -> np.ndarray:
    """Same trapezoid rule in double precision on an array of x > 0."""
    xs = np.asarray(xs, dtype=float)
    if np.any(xs <= 0):
        raise ValueError("K-Bessel requires x > 0")
    nu = complex(order)
    xmin = float(xs.min())
    target = 50.0 + 4 * abs(nu.real)
    top = math.acosh(1 + target / xmin) + 1
    while xmin * (math.cosh(top) - 1) - abs(nu.real) * top < 45.0:
        top += 1
    n = int(top / step) + 1
    t = np.linspace(0.0, top, n + 1)
    w = np.full(t.size, top / n)
    w[0] /= 2
    kernel = np.cosh(nu * t) if nu.imag else np.cosh(nu.real * t)
    vals = np.exp(-np.outer(xs.ravel(), np.cosh(t))) @ (w * kernel)
    return vals.reshape(xs.shape)


# ---------------------------------------------------------------------------
# vertical-line Mellin kernels

def _to_mpfr(x):
    """Exact conversion of an mpmath mpf to a gmpy2 mpfr."""
    import gmpy2

    sign, man, exp, _ = x._mpf_
    if not man:
        return gmpy2.mpfr(0)
    val = gmpy2.mul_2exp(gmpy2.mpfr(int(man)), exp)
    return -val if sign else val


@dataclass
class ContourKernel:
    """Cached trapezoid rule for (1/2 pi i) int_(sigma) y^-u phi(u) du.

    ``phi`` returns mpmath complex values; nodes u_j = sigma + i t_j with
    |t_j| <= height, weights already include h / (2 pi).
    """

    phi: Callable
    sigma: float
    height: float
    step: float
    prec: int = DEFAULT_PREC
    _us: list = field(default_factory=list, repr=False)
    _ws: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        with mpmath.workprec(self.prec + 20):
            n = int(math.ceil(self.height / self.step))
            h = mpmath.mpf(self.height) / n
            self.step = float(h)
            self._h = h
            for j in range(-n, n + 1):
                u = mpmath.mpc(self.sigma, j * h)
                self._us.append(u)
                self._ws.append(self.phi(u) * h / (2 * mpmath.pi))
        self._u_np = np.array([complex(u) for u in self._us])
        self._w_np = np.array([complex(w) for w in self._ws])

    def __call__(self, y):
        with mpmath.workprec(self.prec + 20):
            ly = mpmath.log(mpmath.mpf(y))
            acc = mpmath.fsum(w * mpmath.exp(-u * ly) for u, w in zip(self._us, self._ws))
        with mpmath.workprec(self.prec):
            return +acc.real

    def evaluate_many(self, ys, prec: int | None = None) -> list:
        """High-precision values on a list of y > 0.

        Requires phi(conj u) = conj phi(u).  With z = exp(-i h log y) the rule
        is y^-sigma (w_0 + 2 Re sum_{j>0} w_j z^j), evaluated by Horner in gmpy2.
        """
        import gmpy2

        prec = self.prec if prec is None else prec
        n = len(self._ws) // 2
        with gmpy2.context(precision=prec + 20):
            ws = [gmpy2.mpc(_to_mpfr(w.real), _to_mpfr(w.imag)) for w in self._ws[n:]]
            h = _to_mpfr(self._h)
            sigma = gmpy2.mpfr(self.sigma)
            out = []
            for y in ys:
                ym = _to_mpfr(y) if isinstance(y, mpmath.mpf) else gmpy2.mpfr(y)
                ly = gmpy2.log(ym)
                z = gmpy2.exp(gmpy2.mpc(0, -1) * h * ly)
                acc = gmpy2.mpc(0)
                for w in reversed(ws[1:]):
                    acc = (acc + w) * z
                val = gmpy2.exp(-sigma * ly) * (ws[0].real + 2 * acc.real)
                man, exp = val.as_mantissa_exp()
                with mpmath.workprec(prec):
                    out.append(mpmath.mpf((int(man), int(exp))))
        return out

    def evaluate(self, ys) -> np.ndarray:
        """Double-precision values on an array of y > 0 (real part)."""
        ys = np.asarray(ys, dtype=float)
        ly = np.log(ys).ravel()
        out = np.empty(ly.size)
        chunk = 4096
        for i in range(0, ly.size, chunk):
            block = np.exp(-np.outer(ly[i:i + chunk], self._u_np))
            out[i:i + chunk] = (block @ self._w_np).real
        return out.reshape(ys.shape)


@dataclass(frozen=True)
class VProfile:
    """Parameters of the AFE weight V_{1/2} for the weight vector ``weights``."""

    weights: tuple[int, ...]
    contour_abscissa: float = 1.5
    truncation_height: float | None = None
    step: float | None = None
    target_precision: int = DEFAULT_PREC
    test_scale: float = 1.0  # test factor exp(u^2 / test_scale)
    y_max: float = 1e12

    def __post_init__(self):
        if not self.weights or any(k < 4 or k % 2 for k in self.weights):
            raise ValueError("weights must be even integers >= 4")
        if self.contour_abscissa <= 0:
            raise ValueError("contour abscissa must be positive")
        if self.test_scale <= 0:
            raise ValueError("test scale must be positive")
        if self.truncation_height is not None:
            s = self.contour_abscissa
            t = self.truncation_height
            if (s * s - t * t) / self.test_scale > -(self.target_precision + 8) * math.log(2):
                raise ValueError("truncation height too small for the target precision")

    @property
    def height(self) -> float:
        if self.truncation_height is not None:
            return self.truncation_height
        s = self.contour_abscissa
        return math.sqrt(s * s + self.test_scale * (self.target_precision + 16) * math.log(2))

    def default_step(self) -> float:
        # left strip of width ~ sigma to the pole at u = 0; y^a growth from log(y_max)
        a = 0.9 * self.contour_abscissa
        return 2 * math.pi * a / ((self.target_precision + 16) * math.log(2)
                                  + a * math.log(max(self.y_max, 2.0)))

    def phi(self, u):
        prec = self.target_precision + 20
        with mpmath.workprec(prec):
            half = mpmath.mpf(1) / 2
            lg = 0
            for k in self.weights:
                lg += (log_gamma(half + u, prec) + log_gamma(k - half + u, prec)
                       - log_gamma(half, prec) - log_gamma(k - half, prec))
            return mpmath.exp(lg + u * u / self.test_scale) / u


@lru_cache(maxsize=64)
def v_kernel(profile: VProfile) -> ContourKernel:
    step = profile.step if profile.step is not None else profile.default_step()
    return ContourKernel(profile.phi, profile.contour_abscissa, profile.height, step,
                         profile.target_precision)


def v_half(y, profile: VProfile):
    """V_{1/2}(y) = (1/2 pi i) int_(sigma) y^-u e^{u^2} L_inf(1/2+u)/L_inf(1/2) du/u."""
    if y <= 0:
        raise ValueError("V_{1/2} requires y > 0")
    return v_kernel(profile)(y)


def v_half_array(ys, profile: VProfile) -> np.ndarray:
    ys = np.asarray(ys, dtype=float)
    if np.any(ys <= 0):
        raise ValueError("V_{1/2} requires y > 0")
    return v_kernel(profile).evaluate(ys)
