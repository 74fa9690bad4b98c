"""Polynomial-exact quadrature rules for the supported (domain, measure) pairs."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .domains import Ball, Box, DomainSpec, MeasureSpec, Polygon, Simplex, check_compatible, triangulate
from .errors import QuadratureBudgetError, UnsupportedDomainError

MAX_DEGREE = 400


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray  # (m, n)
    weights: np.ndarray  # (m,)
    degree: int

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def _gauss_jacobi_01(m: int, a: float, b: float):
    """Nodes/weights on [0, 1] for the weight (1 - s)^a s^b."""
    x, w = roots_jacobi(m, a, b)
    return (1 + x) / 2, w / 2 ** (a + b + 1)


def rule(domain: DomainSpec, measure: MeasureSpec, degree: int) -> QuadratureRule:
    """A rule integrating every polynomial of total degree <= degree exactly."""
    if degree > MAX_DEGREE:
        raise QuadratureBudgetError(f"degree {degree} exceeds the quadrature budget of {MAX_DEGREE}")
    check_compatible(domain, measure)
    return _rule(domain, measure, max(int(degree), 0))


@lru_cache(maxsize=64)
def _rule(domain, measure, degree) -> QuadratureRule:
    m = degree // 2 + 1
    if isinstance(domain, Box):
        t, w = roots_jacobi(m, measure.lam, measure.lam)
        c, s = domain.centre, domain.half_widths
        mesh = np.meshgrid(*([t] * domain.n), indexing="ij")
        wmesh = np.meshgrid(*([w] * domain.n), indexing="ij")
        nodes = c + s * np.stack([g.ravel() for g in mesh], axis=-1)
        weights = np.prod(np.stack([g.ravel() for g in wmesh], axis=-1), axis=1) * np.prod(s)
        return QuadratureRule(nodes, weights, degree)
    if isinstance(domain, Ball):
        nodes, weights = _unit_ball_rule(domain.n, measure.lam, degree)
        rho = domain.radius
        return QuadratureRule(np.array(domain.centre) + rho * nodes, weights * rho ** domain.n, degree)
    if isinstance(domain, Simplex):
        nodes, weights = _simplex_rule(domain, degree)
        return QuadratureRule(nodes, weights, degree)
    if isinstance(domain, Polygon):
        parts = [_simplex_rule(t, degree) for t in triangulate(domain)]
        return QuadratureRule(np.vstack([p[0] for p in parts]), np.concatenate([p[1] for p in parts]), degree)
    raise UnsupportedDomainError(f"no quadrature for {domain.kind!r}")


def _unit_ball_rule(n: int, lam: float, degree: int):
    if n == 1:
        t, w = roots_jacobi(degree // 2 + 1, lam, lam)
        return t[:, None], w
    # the spherical average of a degree-D polynomial is a polynomial of degree D//2 in s = |x|^2;
    # int_B p w = 1/2 int_0^1 s^{(n-2)/2} (1-s)^lam [int_S p(sqrt(s) u) du] ds
    s, ws = _gauss_jacobi_01(degree // 4 + 1, lam, (n - 2) / 2)
    ws = ws / 2
    if n == 2:
        k = degree + 1
        th = 2 * np.pi * np.arange(k) / k
        u = np.stack([np.cos(th), np.sin(th)], axis=1)
        wu = np.full(k, 2 * np.pi / k)
    elif n == 3:
        z, wz = roots_jacobi(degree // 2 + 1, 0.0, 0.0)
        k = degree + 1
        phi = 2 * np.pi * np.arange(k) / k
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        r = np.sqrt(1 - zz * zz)
        u = np.stack([(r * np.cos(pp)).ravel(), (r * np.sin(pp)).ravel(), zz.ravel()], axis=1)
        wu = np.outer(wz, np.full(k, 2 * np.pi / k)).ravel()
    else:
        raise UnsupportedDomainError("ball quadrature is implemented for n <= 3")
    nodes = (np.sqrt(s)[:, None, None] * u[None, :, :]).reshape(-1, n)
    weights = np.outer(ws, wu).ravel()
    return nodes, weights


def _simplex_rule(d: Simplex, degree: int):
    """Collapsed (Duffy) tensor rule: x = v0 + s1 (v1 - v0) + s1 s2 (v2 - v1) + ..."""
    n = d.n_vars
    v = d.vertex_array()
    m = degree // 2 + 1
    factors = [_gauss_jacobi_01(m, 0.0, float(n - 1 - k)) for k in range(n)]
    mesh = np.meshgrid(*[f[0] for f in factors], indexing="ij")
    wmesh = np.meshgrid(*[f[1] for f in factors], indexing="ij")
    s = np.stack([g.ravel() for g in mesh], axis=-1)
    w = np.prod(np.stack([g.ravel() for g in wmesh], axis=-1), axis=1)
    x = np.tile(v[0], (len(s), 1))
    prod = np.ones(len(s))
    for k in range(n):
        prod = prod * s[:, k]
        x = x + prod[:, None] * (v[k + 1] - v[k])
    jac = abs(np.linalg.det(d.edge_matrix()))
    return x, w * jac


def certify(domain: DomainSpec, measure: MeasureSpec, degree: int, oracle, count: int = 20, seed: int = 0, tol: float = 1e-9) -> float:
    """Worst relative error of the rule on random monomials of total degree ``degree``.

    The error is relative to max(|moment|, int |x|^deg dmu); the second
    term dominates |x^alpha| pointwise, so monomials whose integral cancels
    are judged on the scale of their absolute size. Raises if the worst
    error exceeds tol.
    """
    q = rule(domain, measure, degree)
    rng = np.random.default_rng(seed)
    n = domain.n_vars
    worst = 0.0
    envelope = q.integrate(np.linalg.norm(q.nodes, axis=1) ** degree)
    for _ in range(count):
        cuts = np.sort(rng.integers(0, degree + 1, size=n - 1))
        alpha = np.diff(np.r_[0, cuts, degree]).astype(int)
        vals = np.prod(q.nodes ** alpha, axis=1)
        approx = q.integrate(vals)
        exact = oracle.moment(tuple(alpha))
        worst = max(worst, abs(approx - exact) / max(abs(exact), envelope, np.finfo(float).tiny))
    if worst > tol:
        raise QuadratureBudgetError(f"quadrature failed certification at degree {degree}: error {worst:.3g}")
    return worst
