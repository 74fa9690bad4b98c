"""Upper bounds f^(r) from moment matrices, and feasible needle-density bounds.

f^(r) is the smallest eigenvalue of M v = lambda B v, where B is the Gram
matrix of the monomials of degree <= r under mu and M the same matrix
weighted by f. In the monomial basis B is badly conditioned, so both
matrices and the Cholesky factor of B are built in MPFR; only the
transformed symmetric matrix L^-1 M L^-T goes to a double eigensolver.

For a whole series the basis is graded by degree and the inverse factor
L^-1 is extended by one degree block per order (a bordered Cholesky
update), so each order costs O(N^2 k) extra work instead of O(N^3).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import gmpy2
import numpy as np
import scipy.stats
from gmpy2 import mpfr

from . import _mp
from .domains import LEBESGUE, DomainSpec, MeasureSpec, cone_constants
from .errors import ConvergedExactly, NumericalError, OutOfRegimeError, PrecisionError, PreconditionError
from .moments import MomentOracle, _exponents, _exponents_exact
from .needles import (
    ConvexMultivariate,
    ConvexUnivariate,
    InteriorCone,
    MultiNeedleSpec,
    NeedleSpec,
    RadialNeedle,
    h_schedule,
    integrate_against,
)
from .poly import Polynomial, evaluate, gradient

MASS_TOL = 1e-8


def graded_basis(n: int, r: int) -> list[tuple[int, ...]]:
    """Monomial exponents of degree <= r, ordered by degree."""
    return _exponents(n, r)


@dataclass
class MomentMatrixPair:
    """M[a, b] = int x^(a+b) f dmu and B[a, b] = int x^(a+b) dmu, as MPFR object arrays."""

    M: np.ndarray
    B: np.ndarray
    basis: list[tuple[int, ...]]
    r: int
    precision_bits: int

    def as_float(self) -> tuple[np.ndarray, np.ndarray]:
        return _mp.to_float(self.M), _mp.to_float(self.B)


class _WeightedMoments:
    """delta -> int x^delta f dmu, memoized, in the oracle's precision."""

    def __init__(self, f: Polynomial, oracle: MomentOracle):
        if f.n_vars != oracle.n_vars:
            raise PreconditionError("polynomial and domain dimensions differ")
        self.terms = list(f.terms.items())
        self.degree = f.degree()
        self.oracle = oracle
        self.cache: dict = {}

    def __call__(self, delta):
        v = self.cache.get(delta)
        if v is None:
            acc = mpfr(0)
            for gamma, c in self.terms:
                acc += c * self.oracle.moment_mp(tuple(a + b for a, b in zip(delta, gamma)))
            self.cache[delta] = v = acc
        return v


def _fill(basis, rows, cols, entry):
    out = np.empty((len(rows), len(cols)), dtype=object)
    for i, ri in enumerate(rows):
        a = basis[ri]
        for j, cj in enumerate(cols):
            out[i, j] = entry(tuple(x + y for x, y in zip(a, basis[cj])))
    return out


def assemble(f: Polynomial, oracle: MomentOracle, r: int) -> MomentMatrixPair:
    basis = graded_basis(oracle.n_vars, r)
    oracle.prepare(2 * r + f.degree())
    fm = _WeightedMoments(f, oracle)
    idx = range(len(basis))
    with _mp.precision(oracle.precision_bits):
        B = _fill(basis, idx, idx, oracle.moment_mp)
        M = _fill(basis, idx, idx, fm)
    return MomentMatrixPair(M, B, basis, r, oracle.precision_bits)


@dataclass
class BoundResult:
    """f^(r) with its optimal density q = (sum_a v_a x^a)^2, normalized to unit mass."""

    r: int
    value: float
    density_coeffs: np.ndarray
    residual: float
    mass: float
    basis: list[tuple[int, ...]]
    wall_ms: float = 0.0
    coeffs_mp: np.ndarray | None = field(default=None, repr=False)

    def density(self, x) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        V = np.stack([np.prod(pts ** np.array(a), axis=1) for a in self.basis], axis=1)
        return (V @ self.density_coeffs) ** 2


def _finish(A: np.ndarray, Linv: np.ndarray, M: np.ndarray, B: np.ndarray, basis, r: int) -> BoundResult:
    Af = _mp.to_float(A)
    Af = (Af + Af.T) / 2
    w, Y = np.linalg.eigh(Af)
    y = _mp.to_mp(Y[:, 0])
    v = Linv.T @ y
    Bv = B @ v
    mass = v @ Bv
    if abs(float(mass) - 1) > MASS_TOL:
        raise PrecisionError(
            f"density mass {float(mass)!r} deviates from 1 at r={r}; increase precision_bits"
        )
    Mv = M @ v
    value = (v @ Mv) / mass
    scale = 1 / gmpy2.sqrt(mass)
    v = v * scale
    resid = _mp.norm(Mv * scale - value * (Bv * scale)) / _mp.norm(v)
    return BoundResult(r, float(value), _mp.to_float(v), float(resid), float(mass), list(basis), coeffs_mp=v)


def solve(pair: MomentMatrixPair) -> BoundResult:
    with _mp.precision(pair.precision_bits):
        L = _mp.cholesky(pair.B)
        Linv = _mp.lower_inverse(L)
        A = Linv @ pair.M @ Linv.T
        return _finish(A, Linv, pair.M, pair.B, pair.basis, pair.r)


class GradedSolver:
    """Produces f^(0), f^(1), ... reusing the factorization of the previous order."""

    def __init__(self, f: Polynomial, oracle: MomentOracle):
        self.f = f
        self.oracle = oracle
        self.fm = _WeightedMoments(f, oracle)
        self.n = oracle.n_vars
        self.r = -1
        self.basis: list[tuple[int, ...]] = []
        with _mp.precision(oracle.precision_bits):
            self.B = _mp.zeros((0, 0))
            self.M = _mp.zeros((0, 0))
            self.Linv = _mp.zeros((0, 0))
            self.A = _mp.zeros((0, 0))

    def advance(self) -> BoundResult:
        t0 = time.perf_counter()
        r = self.r + 1
        new = list(_exponents_exact(self.n, r))
        n0, k = len(self.basis), len(new)
        N = n0 + k
        basis = self.basis + new
        self.oracle.prepare(2 * r + self.fm.degree)
        with _mp.precision(self.oracle.precision_bits):
            B = _mp.zeros((N, N))
            M = _mp.zeros((N, N))
            B[:n0, :n0], M[:n0, :n0] = self.B, self.M
            all_idx, new_idx = range(N), range(n0, N)
            B[n0:, :] = _fill(basis, new_idx, all_idx, self.oracle.moment_mp)
            M[n0:, :] = _fill(basis, new_idx, all_idx, self.fm)
            B[:n0, n0:] = B[n0:, :n0].T
            M[:n0, n0:] = M[n0:, :n0].T

            # bordered Cholesky: B = [[L0, 0], [C, D]] [[L0, 0], [C, D]]^T
            Linv = _mp.zeros((N, N))
            Linv[:n0, :n0] = self.Linv
            if n0:
                C = B[n0:, :n0] @ self.Linv.T
                S = B[n0:, n0:] - C @ C.T
            else:
                C = None
                S = B[n0:, n0:]
            try:
                D = _mp.cholesky(S)
            except NumericalError as exc:
                raise NumericalError(f"Cholesky of the moment matrix failed at r={r}: {exc}") from None
            Dinv = _mp.lower_inverse(D)
            Linv[n0:, n0:] = Dinv
            if n0:
                Linv[n0:, :n0] = -(Dinv @ C) @ self.Linv
            rows = (Linv[n0:, :] @ M) @ Linv.T
            A = _mp.zeros((N, N))
            A[:n0, :n0] = self.A
            A[n0:, :] = rows
            A[:n0, n0:] = rows[:, :n0].T
            result = _finish(A, Linv, M, B, basis, r)
        self.r, self.basis, self.B, self.M, self.Linv, self.A = r, basis, B, M, Linv, A
        result.wall_ms = 1000 * (time.perf_counter() - t0)
        return result


@dataclass
class BoundSeries:
    results: list[BoundResult]
    f_min: float

    @property
    def rs(self) -> list[int]:
        return [res.r for res in self.results]

    @property
    def values(self) -> np.ndarray:
        return np.array([res.value for res in self.results])

    @property
    def errors(self) -> np.ndarray:
        return self.values - self.f_min

    def error_map(self) -> dict[int, float]:
        return dict(zip(self.rs, self.errors.tolist()))

    def __getitem__(self, r: int) -> BoundResult:
        for res in self.results:
            if res.r == r:
                return res
        raise KeyError(r)


def upper_bound_series(
    f: Polynomial,
    d: DomainSpec,
    m: MeasureSpec,
    r_max: int,
    f_min: float,
    precision_bits: int = _mp.DEFAULT_PRECISION,
    oracle: MomentOracle | None = None,
    r_min: int = 1,
) -> BoundSeries:
    """BoundResult for every r in r_min..r_max."""
    if r_max < 1 or r_min < 0 or r_min > r_max:
        raise ValueError("need 0 <= r_min <= r_max and r_max >= 1")
    if oracle is None:
        oracle = MomentOracle(d, m, precision_bits)
    elif oracle.domain != d or oracle.measure != m:
        raise PreconditionError("oracle does not match the requested domain and measure")
    solver = GradedSolver(f, oracle)
    results = []
    for r in range(r_max + 1):
        res = solver.advance()
        if r >= r_min:
            results.append(res)
    return BoundSeries(results, float(f_min))


def rate_fit(series: BoundSeries | Mapping[int, float], window: tuple[int, int]) -> tuple[float, float]:
    """Least-squares slope (and its standard error) of log E^(r) against log r over the window."""
    errors = series.error_map() if isinstance(series, BoundSeries) else dict(series)
    lo, hi = window
    rs = [r for r in sorted(errors) if lo <= r <= hi]
    if len(rs) < 2 or rs[0] != lo or rs[-1] != hi:
        raise ValueError(f"window {window} is not covered by the series")
    es = np.array([errors[r] for r in rs], dtype=float)
    if np.any(es <= 0):
        raise ConvergedExactly("non-positive error in the fit window: the bound converged exactly")
    fit = scipy.stats.linregress(np.log(rs), np.log(es))
    stderr = float(fit.stderr) if np.isfinite(fit.stderr) else 0.0
    return float(fit.slope), stderr


# needle bounds


@dataclass(frozen=True)
class ConvexBody:
    """Boundary-minimizer regime: half-needle along the gradient, needles across it."""


@dataclass(frozen=True)
class NeedleBound:
    value: float
    numerator: float
    mass: float
    h: float
    in_regime: bool
    degree: int
    density: object


def needle_bound_details(
    f: Polynomial,
    d: DomainSpec,
    a: Sequence[float],
    r: int,
    regime,
    strict: bool = True,
    oracle: MomentOracle | None = None,
) -> NeedleBound:
    """int q f / int q for the needle density of order r centred at the minimizer a = 0."""
    n = d.n_vars
    a = np.asarray(a, dtype=float)
    if a.shape != (n,) or np.linalg.norm(a) > 1e-12:
        raise PreconditionError("needle bounds expect the minimizer at the origin; apply recentre first")
    if abs(evaluate(f, a)) > 1e-9:
        raise PreconditionError("needle bounds expect f(0) = 0; apply recentre first")
    if d.farthest_distance(np.zeros(n)) > 1 + 1e-12:
        raise PreconditionError("needle bounds expect the domain inside the unit ball")
    if oracle is None:
        oracle = MomentOracle(d, LEBESGUE)
    elif oracle.measure != LEBESGUE or oracle.domain != d:
        raise PreconditionError("needle bounds use the Lebesgue measure on the given domain")
    cone = cone_constants(d)

    grad = np.array([evaluate(g, a) for g in gradient(f)])
    if isinstance(regime, ConvexBody) and np.linalg.norm(grad) == 0:
        regime = InteriorCone(2.0)
    if isinstance(regime, InteriorCone):
        sched = h_schedule(regime, n, r, cone)
    elif isinstance(regime, ConvexBody):
        sched = h_schedule(ConvexUnivariate() if n == 1 else ConvexMultivariate(), n, r, cone)
    else:
        raise TypeError(f"unknown regime {regime!r}")
    if strict and not sched.in_regime:
        raise OutOfRegimeError(
            f"h({r}) = {sched.raw:.4g} exceeds epsilon_K = {cone.epsilon:.4g}; increase r"
        )
    if isinstance(regime, InteriorCone):
        density = RadialNeedle(NeedleSpec(r, sched.h))
    elif n == 1:
        sign = 1.0 if grad[0] > 0 else -1.0
        spec = NeedleSpec(r, sched.h, "half")
        density = _DirectionalNeedle(spec, sign)
    else:
        density = MultiNeedleSpec(r, sched.h, tuple(grad / np.linalg.norm(grad)))
    num, mass = integrate_against(density, f, oracle)
    return NeedleBound(num / mass, num, mass, sched.h, sched.in_regime, density.degree, density)


def needle_bound(f, d, a, r, regime, strict: bool = True, oracle=None) -> float:
    return needle_bound_details(f, d, a, r, regime, strict, oracle).value


@dataclass(frozen=True)
class _DirectionalNeedle:
    spec: NeedleSpec
    sign: float

    @property
    def degree(self) -> int:
        return self.spec.degree

    def __call__(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        return self.spec(self.sign * pts[:, 0])
