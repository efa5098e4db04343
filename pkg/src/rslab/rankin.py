"""Rankin-Selberg L-functions of level-one eigenforms and Eisenstein series.

L(s, f x g) = zeta(2s) sum lambda_f(n) lambda_g(n) n^-s with gamma factor
gamma(s) = (2 pi)^-2s Gamma(s) Gamma(s + k - 1); Lambda = gamma L satisfies
Lambda(s) = Lambda(1 - s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np

from .arith import QQ, ideal_norm_counts, sigma_table
from .modforms import Eigenform, SeriesOrderError
from .specfun import (ContourKernel, VProfile, bessel_k, bessel_k_array, gauss_legendre,
                      log_gamma, v_kernel)


class TruncationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# coefficients

def lambda_array(form: Eigenform, limit: int | None = None) -> np.ndarray:
    """Normalized eigenvalues lambda(0..limit) as float64 (lambda(0) = 0)."""
    limit = form.coeff_limit if limit is None else limit
    if limit > form.coeff_limit:
        raise SeriesOrderError(f"need {limit} coefficients, form has {form.coeff_limit}")
    return np.array([float(x) for x in form.normalized[:limit + 1]])


def _divisor_square_sum(prod: Sequence, limit: int, level: int, zero):
    """b_j = sum_{d^2 e = j} a_d prod[e] for j <= limit."""
    counts = ideal_norm_counts(QQ, level, max(1, math.isqrt(limit))).counts
    out = [zero] * (limit + 1)
    d = 1
    while d * d <= limit:
        if counts[d]:
            step = d * d
            for e in range(1, limit // step + 1):
                out[e * step] += prod[e]
        d += 1
    return out


def rs_dirichlet_coefficients(f: Eigenform, g: Eigenform, limit: int, level: int = 1) -> list:
    """b_j with L(s, f x g) = sum b_j j^-s, b_0 = 0."""
    if limit > min(f.coeff_limit, g.coeff_limit):
        raise SeriesOrderError(f"need eigenvalues up to {limit}")
    with mpmath.workprec(min(f.precision, g.precision)):
        prod = [mpmath.mpf(0)] + [f.normalized[e] * g.normalized[e] for e in range(1, limit + 1)]
        return _divisor_square_sum(prod, limit, level, mpmath.mpf(0))


def rs_coefficients_array(f: Eigenform, g: Eigenform, limit: int, level: int = 1) -> np.ndarray:
    """Float64 version of :func:`rs_dirichlet_coefficients`."""
    prod = lambda_array(f, limit) * lambda_array(g, limit)
    out = np.zeros(limit + 1)
    counts = ideal_norm_counts(QQ, level, max(1, math.isqrt(limit))).counts
    d = 1
    while d * d <= limit:
        if counts[d]:
            m = limit // (d * d)
            out[d * d::d * d][:m] += prod[1:m + 1]
        d += 1
    return out


# ---------------------------------------------------------------------------
# approximate functional equation

def v_cutoff(profile: VProfile, tol: float) -> float:
    """Smallest grid point y with |V(y')| < tol for every grid point y' >= y."""
    ys = np.logspace(0, math.log10(profile.y_max), 481)
    vals = np.abs(v_kernel(profile).evaluate(ys))
    above = np.nonzero(vals >= tol)[0]
    if above.size == 0:
        return float(ys[0])
    if above[-1] + 1 >= ys.size:
        raise TruncationError("V does not decay below the tolerance inside y_max")
    return float(ys[above[-1] + 1])


def afe_coeff_limit(k: int, tol: float = 1e-11, t_cut_factor: float = 1.0) -> int:
    """Largest index m with 4 pi^2 m <= t_cut_factor * y_cut(tol)."""
    y = v_cutoff(VProfile((k,), target_precision=64), tol) * t_cut_factor
    return int(y / (4 * math.pi ** 2)) + 1


@dataclass(frozen=True)
class RSContext:
    f: Eigenform
    g: Eigenform
    vprofile: VProfile
    coeff_limit: int | None = None
    precision: int = 53
    level_norm: int = 1
    tail_tol: float = 1e-11

    def __post_init__(self):
        if self.f.weight != self.g.weight:
            raise ValueError("f and g must share the weight")
        if tuple(self.vprofile.weights) != (self.f.weight,):
            raise ValueError("V profile weights must be (k,)")
        if self.level_norm != 1:
            raise ValueError("only level one is supported")


@dataclass(frozen=True)
class CentralValue:
    value: object             # L(1/2, f x g)
    t_cut: float
    terms: int
    afe_error_estimate: float
    afe_sum: object = None    # 2 sum_n b_n n^-1/2 V(4 pi^2 n)
    polar_term: object = 0.0  # nonzero only for f = g


def polar_term(f: Eigenform, profile: VProfile, prec: int = 53):
    """Contribution of the poles of Lambda(s, f x f) at s = 1, 0 to the AFE sum.

    Shifting the contour from Re u = sigma to -sigma crosses u = +-1/2 as well
    as u = 0, so 2 * sum = L(1/2) + 4 rho G(1/2) L_inf(1) / L_inf(1/2), with
    rho = Res_{s=1} L(s, f x f) = (4 pi)^k zeta(2) <f, f> / Gamma(k) and
    G(u) = exp(u^2 / test_scale).
    """
    k = f.weight
    with mpmath.workprec(max(prec, 53) + 20):
        rho = (4 * mpmath.pi) ** k * mpmath.zeta(2) * f.petersson_norm / mpmath.gamma(k)
        ratio = mpmath.gamma(k) / (2 * mpmath.pi * mpmath.gamma(mpmath.mpf(1) / 2) * mpmath.gamma(k - mpmath.mpf(1) / 2))
        val = 4 * rho * mpmath.exp(mpmath.mpf(1) / (4 * profile.test_scale)) * ratio
    if prec <= 53:
        return float(val)
    with mpmath.workprec(prec):
        return +val


def _same_form(f: Eigenform, g: Eigenform) -> bool:
    return f is g or (f.weight == g.weight and f.index == g.index)


def central_value(ctx: RSContext, t_cut: float | None = None) -> CentralValue:
    """L(1/2, f x g) from 2 sum_n b_n n^-1/2 V(4 pi^2 n), summed in increasing n.

    For f = g the polar term (see :func:`polar_term`) is subtracted.
    The sum stops where 4 pi^2 n > k t_cut; by default t_cut is set so that V
    stays below ``tail_tol`` beyond it.  Precision <= 53 bits uses float64
    throughout, otherwise the kernel is evaluated at ``precision`` bits.
    The error estimate is the change against the sum cut at t_cut / 2.
    """
    k = ctx.f.weight
    if t_cut is None:
        t_cut = v_cutoff(ctx.vprofile, ctx.tail_tol) / k
    n_max = int(k * t_cut / (4 * math.pi ** 2))
    limit = min(ctx.f.coeff_limit, ctx.g.coeff_limit)
    if ctx.coeff_limit is not None:
        limit = min(limit, ctx.coeff_limit)
    if n_max > limit:
        raise TruncationError(f"AFE needs coefficients up to {n_max}, have {limit}")
    n_half = int(k * t_cut / 2 / (4 * math.pi ** 2))
    kernel = v_kernel(ctx.vprofile)
    ys = 4 * math.pi ** 2 * np.arange(1, n_max + 1, dtype=float)
    if ctx.precision <= 53:
        b = rs_coefficients_array(ctx.f, ctx.g, n_max)[1:]
        terms = b / np.sqrt(np.arange(1, n_max + 1)) * kernel.evaluate(ys)
        half = 2 * math.fsum(terms[:n_half])
        val = 2 * math.fsum(terms)
        pole = polar_term(ctx.f, ctx.vprofile) if _same_form(ctx.f, ctx.g) else 0.0
        return CentralValue(val - pole, t_cut, n_max, abs(val - half), val, pole)
    b = rs_dirichlet_coefficients(ctx.f, ctx.g, n_max)[1:]
    with mpmath.workprec(ctx.precision + 10):
        four_pi2 = 4 * mpmath.pi ** 2
        vs = kernel.evaluate_many([four_pi2 * n for n in range(1, n_max + 1)], ctx.precision + 10)
        terms = [b[i] * vs[i] / mpmath.sqrt(i + 1) for i in range(n_max)]
        half = 2 * mpmath.fsum(terms[:n_half])
        val = 2 * mpmath.fsum(terms)
        pole = polar_term(ctx.f, ctx.vprofile, ctx.precision + 10) if _same_form(ctx.f, ctx.g) else mpmath.mpf(0)
    with mpmath.workprec(ctx.precision):
        return CentralValue(+(val - pole), t_cut, n_max, float(abs(val - half)), +val, +pole)


def weighted_d_sum(profile: VProfile, m_max: int, level: int = 1) -> np.ndarray:
    """W(m) = sum_d a_d V(4 pi^2 m d^2) / d for m = 0..m_max (W(0) = 0).

    The d-sum runs while 4 pi^2 m d^2 stays inside the decay range of V.
    """
    kernel = v_kernel(profile)
    y_stop = v_cutoff(profile, 1e-18)
    counts = ideal_norm_counts(QQ, level, max(2, math.isqrt(int(y_stop / (4 * math.pi ** 2))) + 2)).counts
    m = np.arange(1, m_max + 1, dtype=float)
    out = np.zeros(m_max + 1)
    d = 1
    while 4 * math.pi ** 2 * d * d <= y_stop and d < counts.size:
        ys = 4 * math.pi ** 2 * m * d * d
        mask = ys <= y_stop
        if counts[d] and mask.any():
            out[1:][mask] += counts[d] * kernel.evaluate(ys[mask]) / d
        d += 1
    return out


# ---------------------------------------------------------------------------
# L(s) away from the centre by a smoothed functional equation

def _gamma_log(s, k, prec):
    return log_gamma(s, prec) + log_gamma(s + k - 1, prec)


@lru_cache(maxsize=32)
def _fe_kernels(k: int, s: float, contour: float, scale: float, prec: int):
    """Kernels for Lambda(s) = I(s) + I(1 - s), both divided by gamma(s).

    G(u) = exp(u^2/scale) (1 - u^2/(1-s)^2)(1 - u^2/s^2) vanishes where the
    shifted contour would pick up the poles of Lambda at 0 and 1.
    """
    wp = prec + 20
    with mpmath.workprec(wp):
        sm = mpmath.mpf(s)
        base = _gamma_log(sm, k, wp)

        def G(u):
            return mpmath.exp(u * u / scale) * (1 - u * u / (1 - sm) ** 2) * (1 - u * u / sm ** 2)

        def phi_direct(u):
            return mpmath.exp(_gamma_log(sm + u, k, wp) - base) * G(u) / u

        log_ratio = (4 * sm - 2) * mpmath.log(2 * mpmath.pi)

        def phi_dual(u):
            return mpmath.exp(_gamma_log(1 - sm + u, k, wp) - base + log_ratio) * G(u) / u

    height = math.sqrt(contour ** 2 + scale * ((prec + 40) * math.log(2) + 8 * math.log(contour + 10)))
    # nearest singularity left of the line: u = 0 or u = s - 1
    strip = 0.9 * min(contour, contour - (s - 1) if s > 1 else contour)
    step = 2 * math.pi * strip / ((prec + 16) * math.log(2) + strip * math.log(1e12))
    return (ContourKernel(phi_direct, contour, height, step, prec),
            ContourKernel(phi_dual, contour, height, step, prec))


def rs_lvalue(f: Eigenform, g: Eigenform, s: float, contour: float = 3.0, scale: float = 8.0,
              tol: float = 1e-14) -> float:
    """L(s, f x g) for real s from the smoothed functional equation (float64).

    The test function vanishes at u = +-s, +-(1 - s), so the poles of
    Lambda(s, f x f) contribute nothing.
    """
    if f.weight != g.weight:
        raise ValueError("weights differ")
    k = f.weight
    if contour <= max(s, 1 - s):
        raise ValueError("contour must lie right of max(s, 1-s) so both series converge")
    direct, dual = _fe_kernels(k, float(s), float(contour), float(scale), 53)
    ys = 4 * math.pi ** 2 * np.logspace(0, 12, 481)
    vals = np.abs(direct.evaluate(ys)) + np.abs(dual.evaluate(ys))
    above = np.nonzero(vals >= tol)[0]
    n_max = int(ys[above[-1] + 1] / (4 * math.pi ** 2)) + 1 if above.size else 1
    limit = min(f.coeff_limit, g.coeff_limit)
    if n_max > limit:
        raise TruncationError(f"L({s}) needs coefficients up to {n_max}, have {limit}")
    b = rs_coefficients_array(f, g, n_max)[1:]
    n = np.arange(1, n_max + 1, dtype=float)
    y = 4 * math.pi ** 2 * n
    total = b * n ** (-s) * direct.evaluate(y) + b * n ** (s - 1) * dual.evaluate(y)
    return math.fsum(total)


# ---------------------------------------------------------------------------
# Shimura residue

@dataclass(frozen=True)
class ResidueCheck:
    residue_estimate: float
    formula_value: float
    relative_gap: float


def shimura_residue_check(f: Eigenform, x_grid: Sequence[int] | int) -> ResidueCheck:
    """Slope of sum_{j <= X} b_j (f x f) against X versus the residue formula.

    formula = (4 pi)^k zeta(2) Gamma(k)^-1 <f, f> with the covolume-normalized norm.
    """
    if isinstance(x_grid, int):
        x_grid = np.linspace(x_grid // 10, x_grid, 200).astype(int)
    x_grid = np.asarray(sorted(set(int(x) for x in x_grid)))
    x_max = int(x_grid[-1])
    b = rs_coefficients_array(f, f, x_max)
    partial = np.cumsum(b)
    slope, _ = np.polyfit(x_grid.astype(float), partial[x_grid], 1)
    k = f.weight
    with mpmath.workprec(f.precision):
        formula = (4 * mpmath.pi) ** k * mpmath.zeta(2) / mpmath.exp(log_gamma(k).real) * f.petersson_norm
    formula = float(formula)
    return ResidueCheck(float(slope), formula, abs(slope - formula) / formula)


# ---------------------------------------------------------------------------
# Eisenstein series

def xi(s, prec: int = 64):
    """Completed zeta pi^(-s/2) Gamma(s/2) zeta(s)."""
    with mpmath.workprec(prec + 10):
        s = mpmath.mpmathify(s)
        # the complex log keeps the sign of Gamma at negative arguments
        val = mpmath.exp(-s / 2 * mpmath.log(mpmath.pi) + log_gamma(s / 2, prec + 10)) * mpmath.zeta(s)
        if not isinstance(s, mpmath.mpc):
            val = val.real
    with mpmath.workprec(prec):
        return +val


@dataclass(frozen=True)
class EisensteinSeries:
    s: complex
    truncation: int | None = None
    completed: bool = True
    prec: int = 64


def _fourier_terms(y: float, prec: int) -> int:
    # e^(-2 pi N y) below 2^-prec with a little room for n^|s| growth
    return int(((prec + 20) * math.log(2)) / (2 * math.pi * y)) + 2


def eisenstein_constant_term(y, s, prec: int = 64):
    """xi(2s) y^s + xi(2s - 1) y^(1-s); s must avoid 1/2 and 1."""
    with mpmath.workprec(prec + 10):
        y = mpmath.mpf(y)
        s = mpmath.mpmathify(s)
        val = xi(2 * s, prec + 10) * y ** s + xi(2 * s - 1, prec + 10) * y ** (1 - s)
    with mpmath.workprec(prec):
        return +val


def constant_term_half_closed(y, prec: int = 64):
    """Pole-cancelled constant term at s = 1/2: sqrt(y) (log y + euler - log 4 pi)."""
    with mpmath.workprec(prec + 10):
        y = mpmath.mpf(y)
        val = mpmath.sqrt(y) * (mpmath.log(y) + mpmath.euler - mpmath.log(4 * mpmath.pi))
    with mpmath.workprec(prec):
        return +val


def constant_term_half_limit(y, radius: float = 1e-3, prec: int = 128):
    """Constant term at s = 1/2 as the symmetric limit s = 1/2 +- r, Richardson-extrapolated."""
    wp = prec + 40
    with mpmath.workprec(wp):
        def sym(r):
            r = mpmath.mpf(r)
            return (eisenstein_constant_term(y, mpmath.mpf(1) / 2 + r, wp)
                    + eisenstein_constant_term(y, mpmath.mpf(1) / 2 - r, wp)) / 2
        # the symmetric average is even in r: two Richardson levels in r^2
        c1, c2, c3 = (sym(mpmath.mpf(radius) / m) for m in (1, 2, 4))
        r1, r2 = (4 * c2 - c1) / 3, (4 * c3 - c2) / 3
        val = (16 * r2 - r1) / 15
    with mpmath.workprec(prec):
        return +val


def eisenstein_value(z, s, series: EisensteinSeries | None = None):
    """E*(z, s) = pi^-s Gamma(s) E(z, s) by its Fourier expansion (E if not completed).

    E(z, s) = sum over (c, d) != 0 modulo +-1 of y^s / |cz + d|^2s.
    """
    series = series if series is not None else EisensteinSeries(s)
    prec = series.prec
    z = complex(z)
    x, y = z.real, z.imag
    if y <= 0:
        raise ValueError("z must lie in the upper half-plane")
    with mpmath.workprec(prec + 20):
        sm = mpmath.mpmathify(s)
        ym = mpmath.mpf(y)
        xm = mpmath.mpf(x)
        half = mpmath.mpf(1) / 2
        at_half = sm == half
        if at_half:
            const = constant_term_half_closed(ym, prec + 20)
        else:
            const = eisenstein_constant_term(ym, sm, prec + 20)
        nterms = series.truncation or _fourier_terms(y, prec)
        acc = mpmath.mpc(0)
        for n in range(1, nterms + 1):
            sig = mpmath.fsum(mpmath.mpf(d) ** (1 - 2 * sm) for d in range(1, n + 1) if n % d == 0)
            kb = bessel_k(sm - half, 2 * mpmath.pi * n * ym, prec + 20)
            acc += mpmath.mpf(n) ** (sm - half) * sig * kb * mpmath.cospi(2 * n * xm)
        val = const + 4 * mpmath.sqrt(ym) * acc
        if not series.completed:
            val = val * mpmath.pi ** sm / mpmath.gamma(sm)
        if isinstance(val, mpmath.mpc) and val.imag == 0:
            val = val.real
    with mpmath.workprec(prec):
        return +val


def eisenstein_array(xs, ys, s: float) -> np.ndarray:
    """E(z, s) (not completed) in float64 for real s > 1/2, s != 1, on arrays of points."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    ymin = float(ys.min())
    nterms = _fourier_terms(ymin, 53)
    sig = np.array([sum(d ** (1 - 2 * s) for d in range(1, n + 1) if n % d == 0)
                    for n in range(1, nterms + 1)])
    norm = float(mpmath.pi ** s / mpmath.gamma(s))
    c1 = float(xi(2 * s)) * norm
    c2 = float(xi(2 * s - 1)) * norm
    out = c1 * ys ** s + c2 * ys ** (1 - s)
    for n in range(1, nterms + 1):
        kb = bessel_k_array(s - 0.5, 2 * math.pi * n * ys)
        out = out + 4 * norm * np.sqrt(ys) * n ** (s - 0.5) * sig[n - 1] * kb * np.cos(2 * math.pi * n * xs)
    return out


def eisenstein_lattice_sum(z, s: float, height: int = 200, d_cut: int = 2000) -> float:
    """Brute-force E(z, s) = sum_{(c,d) != 0 mod +-1} y^s / |cz + d|^2s, real s > 1.

    Rows c <= height are summed directly for |d + c x| <= d_cut with
    Euler-Maclaurin tails; rows c > height use the leading Poisson term
    sqrt(pi) Gamma(s-1/2)/Gamma(s) (c y)^(1-2s), whose correction is
    O(exp(-2 pi c y)).
    """
    z = complex(z)
    x, y = z.real, z.imag
    from scipy.special import gamma as sgamma, zeta as hzeta

    total = float(mpmath.zeta(2 * s)) * y ** s
    for c in range(1, height + 1):
        cx, cy = c * x, c * y
        center = -round(cx)
        d = np.arange(center - d_cut, center + d_cut + 1, dtype=float)
        row = np.sum(((c * x + d) ** 2 + cy * cy) ** (-s))
        # tails beyond |t| > T where t = cx + d, Euler-Maclaurin with two correction terms
        for t_edge in (cx + center + d_cut, -(cx + center - d_cut)):
            T = t_edge + 0.5  # midpoint rule: sum_{t > T-1/2} ~ int_T^inf
            row += _em_tail(T, cy, s)
        total += y ** s * row
    lead = math.sqrt(math.pi) * sgamma(s - 0.5) / sgamma(s) * y ** (1 - s)
    total += lead * float(hzeta(2 * s - 1, height + 1))
    return total


def _em_tail(T: float, a: float, s: float) -> float:
    """int_T^inf (t^2 + a^2)^-s dt minus the midpoint correction (f'(T)/24)."""
    from scipy.integrate import quad

    val, _ = quad(lambda t: (t * t + a * a) ** (-s), T, np.inf, epsabs=0, epsrel=1e-13, limit=200)
    fprime = -2 * s * T * (T * T + a * a) ** (-s - 1)
    return val + fprime / 24


def eisenstein_half_bound(y_max: float = 50.0, nx: int = 41, ny: int = 60, prec: int = 53) -> dict:
    """max |E*(z, 1/2)| / sqrt(y) over a grid of the fundamental domain with y <= y_max."""
    best = 0.0
    arg = None
    xs = np.linspace(0, 0.5, nx)
    for x in xs:
        y0 = math.sqrt(1 - x * x)
        for y in np.geomspace(y0, y_max, ny):
            v = abs(float(eisenstein_value(complex(x, y), 0.5, EisensteinSeries(0.5, prec=prec))))
            r = v / math.sqrt(y)
            if r > best:
                best, arg = r, (float(x), float(y))
    return {"max_ratio": best, "argmax": arg, "y_max": y_max,
            "log_growth_ratio": best / (math.log(y_max) + 1)}


# ---------------------------------------------------------------------------
# unfolding

@dataclass(frozen=True)
class UnfoldCheck:
    lhs: float
    rhs: float
    relative_gap: float
    lhs_refined: float


def _form_values(form: Eigenform, xs, ys, terms: int) -> np.ndarray:
    k = form.weight
    lam = lambda_array(form, terms)
    n = np.arange(1, terms + 1, dtype=float)
    a = lam[1:] * n ** ((k - 1) / 2)
    zq = np.exp(2j * np.pi * (xs + 1j * ys))
    out = np.zeros(np.shape(xs), dtype=complex)
    power = np.ones(np.shape(xs), dtype=complex)
    for an in a:
        power = power * zq
        out += an * power
    return out


def _unfold_lhs(f: Eigenform, g: Eigenform, s: float, nodes: int, y_top: float, terms: int) -> float:
    """(3/pi) int_F f conj(g) E(z, s) y^k dmu, float64."""
    k = f.weight
    gx, gw = (np.array([float(t) for t in arr]) for arr in gauss_legendre(nodes, 64))
    # sliver: x in [0, 1/2], y in [sqrt(1 - x^2), 1]; doubled by x -> -x symmetry
    xs = 0.25 * (gx + 1)
    wx = 0.25 * gw
    lo = np.sqrt(1 - xs ** 2)
    X = np.repeat(xs[:, None], nodes, axis=1)
    Y = lo[:, None] + (1 - lo[:, None]) * (gx[None, :] + 1) / 2
    W = wx[:, None] * (1 - lo[:, None]) / 2 * gw[None, :]
    vals = _form_values(f, X, Y, terms) * np.conj(_form_values(g, X, Y, terms))
    sliver = 2 * np.sum(W * (vals * eisenstein_array(X, Y, s)).real * Y ** (k - 2))
    # strip y in [1, y_top]: trapezoid in x (periodic), Gauss-Legendre panels in y
    nx = 2 * nodes
    xg = np.arange(nx) / nx - 0.5
    panels = np.linspace(1, y_top, 9)
    strip = 0.0
    for a, b in zip(panels[:-1], panels[1:]):
        yg = a + (b - a) * (gx + 1) / 2
        wy = (b - a) / 2 * gw
        X = np.repeat(xg[:, None], nodes, axis=1)
        Y = np.repeat(yg[None, :], nx, axis=0)
        vals = _form_values(f, X, Y, terms) * np.conj(_form_values(g, X, Y, terms))
        integrand = (vals * eisenstein_array(X, Y, s)).real * Y ** (k - 2)
        strip += np.sum(integrand * wy[None, :]) / nx
    return (sliver + strip) * 3 / math.pi


def unfold_identity_check(f: Eigenform, g: Eigenform, s: float, nodes: int = 48,
                          tolerance: float = 1e-4) -> UnfoldCheck:
    """Quadrature of (3/pi) int_F f conj(g) E(., s) y^k dmu against
    (3/pi) Gamma(s + k - 1) (4 pi)^(1 - s - k) L(s, f x g)."""
    if not 1 < s <= 2:
        raise ValueError("s must lie in (1, 2]")
    k = f.weight
    y_top = 1 + (k + 2 * s + 40) / (4 * math.pi)
    terms = min(f.coeff_limit, g.coeff_limit, 80)
    lhs = _unfold_lhs(f, g, s, nodes, y_top, terms)
    lhs2 = _unfold_lhs(f, g, s, 2 * nodes, y_top + 2, terms)
    if abs(lhs - lhs2) > tolerance * abs(lhs2) / 10:
        raise RuntimeError("unfolding quadrature did not converge")
    L = rs_lvalue(f, g, s)
    rhs = 3 / math.pi * math.exp(math.lgamma(s + k - 1) + (1 - s - k) * math.log(4 * math.pi)) * L
    return UnfoldCheck(lhs2, rhs, abs(lhs2 - rhs) / abs(rhs), lhs)
