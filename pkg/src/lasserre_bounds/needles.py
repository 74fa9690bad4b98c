"""Chebyshev polynomials, needle polynomials and their integrals against f.

Needle ratios T_r(y)^2 / T_r(y0)^2 overflow doubles for moderate r h, so
above ``DIRECT_MAX_R`` they are evaluated from log |T_r|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .domains import ConeConstants, Polygon, Simplex
from .errors import DimensionError
from .poly import Polynomial, evaluate
from . import quadrature

DIRECT_MAX_R = 25


def chebyshev(r: int, t):
    """T_r(t) from cos(r arccos t) on [-1, 1] and the hyperbolic branch outside."""
    if r < 0:
        raise ValueError("r must be non-negative")
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    inside = np.abs(t) <= 1
    out[inside] = np.cos(r * np.arccos(t[inside]))
    big = ~inside
    sign = np.where(t[big] < 0, (-1.0) ** r, 1.0)
    with np.errstate(over="ignore"):
        out[big] = sign * np.cosh(r * np.arccosh(np.abs(t[big])))
    return out if out.ndim else float(out)


def chebyshev_recurrence(r: int, t):
    """T_r(t) from T_{k+1} = 2 t T_k - T_{k-1}."""
    t = np.asarray(t, dtype=float)
    prev, cur = np.ones_like(t), t.copy()
    if r == 0:
        return prev if prev.ndim else float(prev)
    for _ in range(r - 1):
        prev, cur = cur, 2 * t * cur - prev
    return cur if cur.ndim else float(cur)


def log_abs_chebyshev(r: int, t):
    """log |T_r(t)|, finite for arguments where T_r itself would overflow."""
    a = np.abs(np.asarray(t, dtype=float))
    out = np.empty_like(a)
    inside = a <= 1
    with np.errstate(divide="ignore"):
        out[inside] = np.log(np.abs(np.cos(r * np.arccos(a[inside]))))
    u = r * np.arccosh(a[~inside])
    # cosh(u) = e^u (1 + e^{-2u}) / 2
    out[~inside] = u + np.log1p(np.exp(-2 * u)) - math.log(2)
    return out if out.ndim else float(out)


def _square_ratio(r: int, y, y0: float, method: str):
    if method == "auto":
        method = "direct" if r <= DIRECT_MAX_R else "log"
    if method == "direct":
        return (chebyshev(r, y) / chebyshev(r, y0)) ** 2
    with np.errstate(under="ignore"):
        return np.exp(2 * (log_abs_chebyshev(r, y) - log_abs_chebyshev(r, y0)))


def needle(r: int, h: float, t, method: str = "auto"):
    """nu_r^h(t) = T_r^2(1 + h^2 - t^2) / T_r^2(1 + h^2)."""
    t = np.asarray(t, dtype=float)
    return _square_ratio(r, 1 + h * h - t * t, 1 + h * h, method)


def half_needle(r: int, h: float, t, method: str = "auto"):
    """kappa_r^h(t) = T_2r^2((2 + h - 2t)/(2 - h)) / T_2r^2((2 + h)/(2 - h))."""
    t = np.asarray(t, dtype=float)
    return _square_ratio(2 * r, (2 + h - 2 * t) / (2 - h), (2 + h) / (2 - h), method)


def lambda_lower(r: int, t):
    """Lambda_r(t) = max(1 - 2 r^2 t, 0)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    out = np.maximum(1 - 2 * r * r * t, 0.0)
    return out if out.ndim else float(out)


def markov_factor(degree: int, a: float = -1.0, b: float = 1.0) -> float:
    """max |p'| <= markov_factor * max |p| on [a, b] for deg p <= degree."""
    return 2 * degree * degree / (b - a)


@dataclass(frozen=True)
class NeedleSpec:
    """Univariate needle (variant 'needle') or half-needle ('half'); degree 4r."""

    r: int
    h: float
    variant: Literal["needle", "half"] = "needle"

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("r must be non-negative")
        if not 0 < self.h < 1:
            raise ValueError("h must lie in (0, 1)")
        if self.variant not in ("needle", "half"):
            raise ValueError("variant must be 'needle' or 'half'")

    @property
    def degree(self) -> int:
        return 4 * self.r

    def __call__(self, t, method: str = "auto"):
        return needle_eval(self, t, method)


def needle_eval(s: NeedleSpec, t, method: str = "auto"):
    if s.variant == "needle":
        return needle(s.r, s.h, t, method)
    return half_needle(s.r, s.h, t, method)


def householder_frame(v) -> np.ndarray:
    """Orthonormal rows w_1..w_{n-1} completing the unit vector v."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    n = len(v)
    e = np.zeros(n)
    e[0] = 1.0
    u = v - e if v[0] <= 0 else v + e
    nu = np.linalg.norm(u)
    H = np.eye(n) if nu == 0 else np.eye(n) - 2 * np.outer(u, u) / nu ** 2
    # H maps e_1 to +-v; its other columns span v-perp
    return H[:, 1:].T.copy()


@dataclass(frozen=True)
class MultiNeedleSpec:
    """sigma_r^h(x) = kappa_r^{h^2}(<x, v>) prod_j nu_r^h(<x, w_j>); degree 4 n r."""

    r: int
    h: float
    v: tuple[float, ...]
    W: tuple[tuple[float, ...], ...] = field(default=())

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        if not 0 < self.h < 1:
            raise ValueError("h must lie in (0, 1)")
        nv = np.linalg.norm(v)
        if nv == 0:
            raise ValueError("direction v must be non-zero")
        v = v / nv
        W = householder_frame(v) if len(self.W) == 0 else np.asarray(self.W, dtype=float).reshape(len(v) - 1, len(v))
        frame = np.vstack([v, W])
        if not np.allclose(frame @ frame.T, np.eye(len(v)), atol=1e-12):
            raise ValueError("v and W must form an orthonormal basis")
        object.__setattr__(self, "v", tuple(v))
        object.__setattr__(self, "W", tuple(tuple(w) for w in W))

    @property
    def n_vars(self) -> int:
        return len(self.v)

    @property
    def degree(self) -> int:
        return 4 * self.n_vars * self.r

    def __call__(self, x, method: str = "auto"):
        return multineedle_eval(self, x, method)


def multineedle_eval(m: MultiNeedleSpec, x, method: str = "auto"):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != m.n_vars:
        raise DimensionError("point dimension does not match the needle")
    out = half_needle(m.r, m.h * m.h, pts @ np.array(m.v), method)
    for w in m.W:
        out = out * needle(m.r, m.h, pts @ np.array(w), method)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class RadialNeedle:
    """x -> nu_r^h(|x|), a polynomial of degree 4r in x."""

    spec: NeedleSpec

    @property
    def degree(self) -> int:
        return self.spec.degree

    def __call__(self, x, method: str = "auto"):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        return needle_eval(self.spec, np.linalg.norm(pts, axis=1), method)


@dataclass(frozen=True)
class ConstantDensity:
    degree: int = 0

    def __call__(self, x):
        return np.ones(len(np.atleast_2d(x)))


# h(r) schedules


@dataclass(frozen=True)
class InteriorCone:
    beta: float


@dataclass(frozen=True)
class ConvexUnivariate:
    pass


@dataclass(frozen=True)
class ConvexMultivariate:
    pass


@dataclass(frozen=True)
class Schedule:
    h: float
    raw: float
    in_regime: bool


def h_schedule(kind, n: int, r: float, cone: ConeConstants | None = None) -> Schedule:
    """Needle width for order r; clamped to [1/(64 r^2), epsilon] when cone constants are given."""
    if r < 2:
        raise ValueError("schedules need r >= 2")
    lr = math.log(r)
    if isinstance(kind, InteriorCone):
        raw = 2 * (2 * n + kind.beta) * lr / r
    elif isinstance(kind, ConvexUnivariate):
        raw = (8 * lr / r) ** 2
    elif isinstance(kind, ConvexMultivariate):
        raw = (8 * n + 4) * lr / r
    else:
        raise TypeError(f"unknown schedule {kind!r}")
    eps = cone.epsilon if cone is not None else 1.0
    # needle widths live in the open interval (0, 1)
    h = min(max(raw, 1 / (64 * r * r)), eps, math.nextafter(1.0, 0.0))
    return Schedule(h, raw, raw <= eps)


_certified: set = set()


def integrate_against(density, f: Polynomial | Callable, oracle, f_degree: int | None = None) -> tuple[float, float]:
    """(int q f dmu, int q dmu) with a rule exact for deg q + deg f.

    ``f`` may be a Polynomial or any callable on (m, n) point arrays, in
    which case ``f_degree`` fixes the rule (non-polynomial integrands are
    then integrated approximately).
    """
    if f_degree is None:
        f_degree = f.degree() if isinstance(f, Polynomial) else 0
    deg = density.degree + f_degree
    rule = quadrature.rule(oracle.domain, oracle.measure, deg)
    if isinstance(oracle.domain, (Simplex, Polygon)):
        key = (oracle.domain, deg)
        if key not in _certified:
            quadrature.certify(oracle.domain, oracle.measure, deg, oracle)
            _certified.add(key)
    if isinstance(density, NeedleSpec):
        # a bare univariate needle acts on the single coordinate
        if oracle.domain.n_vars != 1:
            raise DimensionError("a univariate needle needs a 1-D domain; wrap it in RadialNeedle")
        q = density(rule.nodes[:, 0])
    else:
        q = density(rule.nodes)
    fv = evaluate(f, rule.nodes) if isinstance(f, Polynomial) else np.asarray(f(rule.nodes), dtype=float)
    return rule.integrate(q * fv), rule.integrate(q)
