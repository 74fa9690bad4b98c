"""Closed-form moments of monomials over the supported (domain, measure) pairs.

All arithmetic runs in MPFR at the oracle's working precision. ``moment``
rounds to double; ``moment_mp`` hands the extended value to the assembly
code in ``bounds``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import _mp
from .domains import (
    LEBESGUE,
    Ball,
    Box,
    DomainSpec,
    MeasureSpec,
    Polygon,
    Simplex,
    box_jacobi,
    ball_jacobi,
    check_compatible,
    triangulate,
)
from .errors import DimensionError


@lru_cache(maxsize=None)
def _gamma(x: Fraction, bits: int):
    """Gamma(x) for x > 0; exact recursion from sqrt(pi) and 1 when 2x is an integer."""
    with _mp.precision(bits):
        if (2 * x).denominator == 1:
            if x.denominator == 1:
                return mpfr(math.factorial(int(x) - 1))
            k = int(x - Fraction(1, 2))
            return mpfr(math.factorial(2 * k)) / (mpfr(4) ** k * math.factorial(k)) * gmpy2.sqrt(gmpy2.const_pi())
        if x > 2:
            return (x.numerator - x.denominator) * _gamma(x - 1, bits) / x.denominator
        return gmpy2.gamma(mpfr(gmpy2.mpq(x.numerator, x.denominator)))


def _frac(lam: float) -> Fraction:
    return Fraction(lam)


def _interval_moments(lam: float, kmax: int, bits: int) -> list:
    """mu_k = int_{-1}^{1} t^k (1 - t^2)^lam dt for k = 0..kmax."""
    with _mp.precision(bits):
        lamf = _frac(lam)
        mu0 = _gamma(Fraction(1, 2), bits) * _gamma(lamf + 1, bits) / _gamma(lamf + Fraction(3, 2), bits)
        out = [mpfr(0)] * (kmax + 1)
        out[0] = mu0
        two_lam = mpfr(gmpy2.mpq(lamf.numerator, lamf.denominator)) * 2
        for k in range(2, kmax + 1, 2):
            # mu_{k} / mu_{k-2} = (k - 1) / (k + 1 + 2 lam)
            out[k] = out[k - 2] * (k - 1) / (k + 1 + two_lam)
        return out


@dataclass(frozen=True)
class NormalizationConstant:
    """C_{n,lam} = int over the unit ball of (1 - |x|^2)^lam dx."""

    n: int
    lam: float
    value: float


def _normalization_mp(n: int, lam: float, bits: int):
    lamf = _frac(lam)
    with _mp.precision(bits):
        pi_half = gmpy2.const_pi() ** (mpfr(n) / 2)
        return pi_half * _gamma(lamf + 1, bits) / _gamma(lamf + 1 + Fraction(n, 2), bits)


def normalization_constant(n: int, lam: float, precision_bits: int = _mp.DEFAULT_PRECISION) -> NormalizationConstant:
    if n < 1:
        raise ValueError("n must be positive")
    if not lam > -1:
        raise ValueError("lambda must exceed -1")
    return NormalizationConstant(n, float(lam), float(_normalization_mp(n, lam, precision_bits)))


class MomentOracle:
    """alpha -> integral of x^alpha over (domain, measure).

    Values are memoized; the cache is filled under a lock so concurrent
    callers observe the same results as a cache-free oracle.
    """

    def __init__(self, domain: DomainSpec, measure: MeasureSpec = LEBESGUE, precision_bits: int = _mp.DEFAULT_PRECISION):
        check_compatible(domain, measure)
        if precision_bits < 53:
            raise ValueError("precision_bits must be at least 53")
        self.domain = domain
        self.measure = measure
        self.precision_bits = int(precision_bits)
        self._cache: dict[tuple[int, ...], object] = {}
        self._lock = threading.RLock()
        self._degree_ready = -1

    @property
    def n_vars(self) -> int:
        return self.domain.n_vars

    def moment(self, alpha) -> float:
        return float(self.moment_mp(alpha))

    def moment_mp(self, alpha):
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n_vars:
            raise DimensionError(f"exponent {alpha} has length {len(alpha)}, expected {self.n_vars}")
        if any(a < 0 for a in alpha):
            raise ValueError("exponents must be non-negative")
        value = self._cache.get(alpha)
        if value is None:
            with self._lock:
                value = self._cache.get(alpha)
                if value is None:
                    self.prepare(sum(alpha))
                    value = self._cache[alpha]
        return value

    def prepare(self, degree: int) -> None:
        """Compute and cache every moment of total degree <= degree."""
        with self._lock:
            if degree <= self._degree_ready:
                return
            degree = max(degree, 2 * self._degree_ready + 1, 8)
            with _mp.precision(self.precision_bits):
                table = self._compute_all(degree)
            self._cache.update(table)
            self._degree_ready = degree

    def _compute_all(self, degree: int) -> dict:
        d = self.domain
        if isinstance(d, Box):
            return _box_table(d, self.measure, degree, self.precision_bits)
        if isinstance(d, Ball):
            return _ball_table(d, self.measure, degree, self.precision_bits)
        if isinstance(d, Simplex):
            return _simplex_table(d, degree)
        if isinstance(d, Polygon):
            total: dict = {}
            for tri in triangulate(d):
                for k, v in _simplex_table(tri, degree).items():
                    total[k] = total.get(k, 0) + v
            return total
        raise TypeError(f"unsupported domain {d!r}")


def _exponents(n: int, degree: int):
    """All exponent vectors of total degree <= degree, graded then lexicographic (descending)."""
    out = []
    for d in range(degree + 1):
        out.extend(_exponents_exact(n, d))
    return out


@lru_cache(maxsize=None)
def _exponents_exact(n: int, d: int) -> tuple[tuple[int, ...], ...]:
    if n == 1:
        return ((d,),)
    out = []
    for first in range(d, -1, -1):
        for rest in _exponents_exact(n - 1, d - first):
            out.append((first,) + rest)
    return tuple(out)


def _placed_1d(mu, centre: float, half: float, kmax: int) -> list:
    """int x^k w over [c - s, c + s] from the canonical moments mu via x = c + s t."""
    c, s = mpfr(centre), mpfr(half)
    if centre == 0.0:
        return [s ** (k + 1) * mu[k] for k in range(kmax + 1)]
    out = []
    for k in range(kmax + 1):
        acc = mpfr(0)
        for j in range(0, k + 1, 2):
            acc += math.comb(k, j) * c ** (k - j) * s ** j * mu[j]
        out.append(s * acc)
    return out


def _box_table(d: Box, measure: MeasureSpec, degree: int, bits: int) -> dict:
    mu = _interval_moments(measure.lam, degree, bits)
    axes = [_placed_1d(mu, c, s, degree) for c, s in zip(d.centre, d.half_widths)]
    table = {}
    for alpha in _exponents(d.n, degree):
        v = mpfr(1)
        for i, a in enumerate(alpha):
            v *= axes[i][a]
        table[alpha] = v
    return table


def _unit_ball_moment(alpha, lam: float, bits: int):
    if any(a % 2 for a in alpha):
        return mpfr(0)
    lamf = _frac(lam)
    v = _gamma(lamf + 1, bits)
    for a in alpha:
        v *= _gamma(Fraction(a + 1, 2), bits)
    return v / _gamma(Fraction(sum(alpha) + len(alpha), 2) + lamf + 1, bits)


def _ball_table(d: Ball, measure: MeasureSpec, degree: int, bits: int) -> dict:
    n = d.n
    exps = _exponents(n, degree)
    unit = {alpha: _unit_ball_moment(alpha, measure.lam, bits) for alpha in exps}
    if d.is_canonical():
        return unit
    # x = c + rho u: apply the binomial transform one axis at a time on a dense table
    dense = _mp.zeros((degree + 1,) * n)
    for alpha, v in unit.items():
        dense[alpha] = v
    rho = mpfr(d.radius)
    for axis, c in enumerate(d.centre):
        c = mpfr(c)
        P = _mp.zeros((degree + 1, degree + 1))
        for a in range(degree + 1):
            for b in range(a + 1):
                P[a, b] = math.comb(a, b) * c ** (a - b) * rho ** b
        dense = np.moveaxis(np.tensordot(P, np.moveaxis(dense, axis, 0), axes=(1, 0)), 0, axis)
    scale = rho ** n
    return {alpha: scale * dense[alpha] for alpha in exps}


def _simplex_table(d: Simplex, degree: int) -> dict:
    """Moments via E[(sum_j lam_j l_j)^k] = k! n!/(k+n)! h_k(l_0..l_n) for uniform barycentrics.

    Here l_j = <s, v_j> is a linear form in auxiliary variables s, and h_k is
    the complete homogeneous symmetric polynomial. The coefficient of
    s^alpha in (<s, x>)^k is the multinomial k!/alpha! times x^alpha, so
    int x^alpha = vol * n! alpha! / (k+n)! * [s^alpha] h_k.
    """
    n = d.n_vars
    verts = [[mpfr(x) for x in v] for v in d.vertices]
    with_det = _det_mp([[verts[j][i] - verts[0][i] for j in range(1, n + 1)] for i in range(n)])
    vol = abs(with_det) / math.factorial(n)
    unit = [tuple(1 if i == j else 0 for i in range(n)) for j in range(n)]

    def times_form(poly: dict, j: int) -> dict:
        out: dict = {}
        for e, c in poly.items():
            for i in range(n):
                if verts[j][i] != 0:
                    key = tuple(a + b for a, b in zip(e, unit[i]))
                    out[key] = out.get(key, 0) + c * verts[j][i]
        return out

    # h[j] = complete homogeneous polynomial of the current degree in l_0..l_j
    zero = (0,) * n
    h_prev = [{zero: mpfr(1)} for _ in range(n + 1)]
    table = {zero: vol}
    for k in range(1, degree + 1):
        h_cur = []
        for j in range(n + 1):
            term = times_form(h_prev[j], j)
            if j:
                for e, c in h_cur[j - 1].items():
                    term[e] = term.get(e, 0) + c
            h_cur.append(term)
        scale = vol * math.factorial(n) / mpfr(math.factorial(k + n))
        top = h_cur[n]
        for alpha in _exponents_exact(n, k):
            coef = top.get(alpha, 0)
            mult = 1
            for a in alpha:
                mult *= math.factorial(a)
            table[alpha] = scale * mult * coef if coef else mpfr(0)
        h_prev = h_cur
    return table


def _det_mp(rows):
    n = len(rows)
    a = [list(r) for r in rows]
    det = mpfr(1)
    for col in range(n):
        piv = max(range(col, n), key=lambda i: abs(a[i][col]))
        if a[piv][col] == 0:
            return mpfr(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        for i in range(col + 1, n):
            f = a[i][col] / a[col][col]
            for j in range(col, n):
                a[i][j] -= f * a[col][j]
    return det


def reduce_ball_to_interval(n: int, lam: float, k: int, precision_bits: int = _mp.DEFAULT_PRECISION) -> tuple[float, float]:
    """Both sides of int_{B^n} x1^k w_lam = C_{n-1,lam} int_{-1}^{1} t^k w_{lam+(n-1)/2}(t) dt."""
    if n < 2:
        raise ValueError("the reduction needs n >= 2")
    ball = MomentOracle(Ball(n), ball_jacobi(lam), precision_bits)
    line = MomentOracle(Box(1), box_jacobi(lam + (n - 1) / 2), precision_bits)
    lhs = ball.moment_mp((k,) + (0,) * (n - 1))
    with _mp.precision(precision_bits):
        rhs = _normalization_mp(n - 1, lam, precision_bits) * line.moment_mp((k,))
    return float(lhs), float(rhs)
