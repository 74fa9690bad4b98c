"""Upper estimators g >= f exact at a point, and recentring into the unit ball."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import DomainSpec, affine_map
from .errors import PreconditionError
from .poly import Polynomial, compose_affine, evaluate, gradient

CERT_POINTS = 10_000
CERT_TOL = 1e-7


@dataclass(frozen=True)
class EstimatorReport:
    g: Polynomial
    anchor: tuple[float, ...]
    kind: str
    certified_on: DomainSpec | None


def certificate_points(d: DomainSpec, count: int = CERT_POINTS, seed: int = 0) -> np.ndarray:
    """About ``count`` points of d: a deterministic grid plus uniform rejection samples."""
    k = max(2, int(round((count / 2) ** (1 / d.n_vars))))
    grid = d.grid_points(k)
    rng = np.random.default_rng(seed)
    lo, hi = d.bounding_box()
    extra = []
    need = max(count - len(grid), 0)
    while need > 0:
        cand = lo + (hi - lo) * rng.random((2 * need + 16, d.n_vars))
        cand = cand[d.contains(cand)][:need]
        extra.append(cand)
        need -= len(cand)
    return np.vstack([grid] + extra)


def certify_upper(f: Polynomial, g, d: DomainSpec, a, tol: float = CERT_TOL) -> None:
    """Raise unless g(a) = f(a) and g >= f - tol on the certificate points of d."""
    a = np.asarray(a, dtype=float)
    gv = g if callable(g) and not isinstance(g, Polynomial) else (lambda x: evaluate(g, x))
    if abs(float(np.atleast_1d(gv(a[None, :]))[0]) - evaluate(f, a)) > 1e-9:
        raise PreconditionError("estimator is not exact at the anchor")
    pts = certificate_points(d)
    gap = gv(pts) - evaluate(f, pts)
    if np.min(gap) < -tol:
        worst = pts[np.argmin(gap)]
        raise PreconditionError(f"estimator falls below f by {-np.min(gap):.3g} at {worst}")


def _linear_part(f: Polynomial, a: np.ndarray) -> tuple[float, np.ndarray]:
    return evaluate(f, a), np.array([evaluate(g, a) for g in gradient(f)])


def _shifted_square(a: np.ndarray) -> Polynomial:
    n = len(a)
    out = Polynomial({}, n)
    for i in range(n):
        xi = Polynomial.variable(i, n) - float(a[i])
        out = out + xi * xi
    return out


def _affine(value: float, grad: np.ndarray, a: np.ndarray) -> Polynomial:
    n = len(a)
    out = Polynomial.constant(value - float(grad @ a), n)
    for i in range(n):
        out = out + float(grad[i]) * Polynomial.variable(i, n)
    return out


def quadratic_estimator(f: Polynomial, a, gamma: float, domain: DomainSpec | None = None) -> EstimatorReport:
    """g(x) = f(a) + <grad f(a), x - a> + gamma |x - a|^2, grid-certified on domain if given."""
    a = np.asarray(a, dtype=float)
    if gamma < 0:
        raise PreconditionError("gamma must be non-negative")
    value, grad = _linear_part(f, a)
    g = _affine(value, grad, a) + gamma * _shifted_square(a)
    if domain is not None:
        certify_upper(f, g, domain, a)
    return EstimatorReport(g, tuple(a), "quadratic", domain)


def linear_estimator_on_ball(
    f: Polynomial,
    a,
    gamma: float,
    lam: float | None = None,
    centre=None,
    radius: float = 1.0,
    domain: DomainSpec | None = None,
) -> EstimatorReport:
    """h(x) = f(a) + (lam + 2 gamma)(rho^2 + <x - c, c - a>) for a on the sphere |a - c| = rho.

    Requires grad f(a) = lam (c - a) with lam >= 0, i.e. the gradient points
    into the ball. If lam is None it is read off the gradient.
    """
    a = np.asarray(a, dtype=float)
    n = len(a)
    c = np.zeros(n) if centre is None else np.asarray(centre, dtype=float)
    rho = float(radius)
    if abs(np.linalg.norm(a - c) - rho) > 1e-9:
        raise PreconditionError("anchor must lie on the boundary sphere")
    value, grad = _linear_part(f, a)
    inward = c - a
    if lam is None:
        lam = float(grad @ inward) / rho ** 2
    if lam < -1e-12 or np.linalg.norm(grad - lam * inward) > 1e-8:
        raise PreconditionError("grad f(a) is not a non-negative multiple of the inward normal c - a")
    slope = lam + 2 * gamma
    h = Polynomial.constant(value + slope * (rho ** 2 - float(c @ inward)), n)
    for i in range(n):
        h = h + slope * float(inward[i]) * Polynomial.variable(i, n)
    if domain is not None:
        certify_upper(f, h, domain, a)
    return EstimatorReport(h, tuple(a), "linear", domain)


@dataclass(frozen=True)
class LipschitzBound:
    """x -> f(a) + beta |x - a|; not a polynomial."""

    value: float
    anchor: tuple[float, ...]
    beta: float

    def __call__(self, x):
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = self.value + self.beta * np.linalg.norm(pts - np.array(self.anchor), axis=1)
        return float(out[0]) if single else out


def lipschitz_estimator(f: Polynomial, a, beta: float, domain: DomainSpec | None = None) -> LipschitzBound:
    a = np.asarray(a, dtype=float)
    if beta < 0:
        raise PreconditionError("beta must be non-negative")
    bound = LipschitzBound(evaluate(f, a), tuple(a), float(beta))
    if domain is not None:
        certify_upper(f, bound, domain, a)
    return bound


@dataclass(frozen=True)
class AffineMap:
    """x -> U x + c."""

    U: np.ndarray
    c: np.ndarray

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.U.T + self.c

    def inverse(self, y):
        return np.linalg.solve(self.U, (np.atleast_2d(y) - self.c).T).T.reshape(np.shape(y))

    @property
    def scale(self) -> float:
        return float(1 / self.U[0, 0])


def recentre(f: Polynomial, d: DomainSpec, a, margin: float = 0.0) -> tuple[Polynomial, DomainSpec, AffineMap]:
    """Move a to the origin and shrink d into the closed unit ball.

    phi(x) = (x - a) / s with s = margin + max_{x in d} |x - a|, so the
    farthest point of d lands on the unit sphere when margin = 0. Returns
    f o phi^-1 - f(a), phi(d) and phi.
    """
    a = np.asarray(a, dtype=float)
    if not d.contains(a, tol=1e-9):
        raise PreconditionError("recentring point lies outside the domain")
    n = d.n_vars
    s = d.farthest_distance(a) + margin
    phi = AffineMap(np.eye(n) / s, -a / s)
    f_new = compose_affine(f, s * np.eye(n), a) - evaluate(f, a)
    return f_new, affine_map(d, phi.U, phi.c), phi
