"""Sparse multivariate polynomials with real coefficients.

Exponent vectors are stored densely (one entry per variable); coefficients
are doubles. Instances are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.linalg

from .errors import DimensionError, SingularMapError

Exponent = tuple[int, ...]


class Polynomial:
    __slots__ = ("_terms", "_n")

    def __init__(self, terms: Mapping[Exponent, float] | Iterable[tuple[Exponent, float]], n_vars: int):
        if n_vars < 1:
            raise DimensionError("n_vars must be positive")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Exponent, float] = {}
        for exp, coef in items:
            exp = tuple(int(e) for e in exp)
            if len(exp) != n_vars:
                raise DimensionError(f"exponent {exp} has length {len(exp)}, expected {n_vars}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            acc[exp] = acc.get(exp, 0.0) + float(coef)
        self._terms = {e: c for e, c in sorted(acc.items()) if c != 0.0}
        self._n = n_vars

    # construction helpers
    @classmethod
    def constant(cls, c: float, n_vars: int) -> "Polynomial":
        return cls({(0,) * n_vars: c}, n_vars)

    @classmethod
    def variable(cls, i: int, n_vars: int) -> "Polynomial":
        exp = [0] * n_vars
        exp[i] = 1
        return cls({tuple(exp): 1.0}, n_vars)

    @classmethod
    def from_json(cls, obj: Mapping) -> "Polynomial":
        n = int(obj["n"])
        return cls([(tuple(t["exp"]), float(t["coef"])) for t in obj["terms"]], n)

    def to_json(self) -> dict:
        return {"n": self._n, "terms": [{"exp": list(e), "coef": c} for e, c in self._terms.items()]}

    @property
    def n_vars(self) -> int:
        return self._n

    @property
    def terms(self) -> dict[Exponent, float]:
        return dict(self._terms)

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, exp: Exponent) -> float:
        return self._terms.get(tuple(exp), 0.0)

    # arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other._n != self._n:
                raise DimensionError("polynomials live in different numbers of variables")
            return other
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Polynomial.constant(float(other), self._n)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Polynomial(list(self._terms.items()) + list(other._terms.items()), self._n)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({e: -c for e, c in self._terms.items()}, self._n)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Exponent, float] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return Polynomial(out, self._n)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if int(k) != k or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Polynomial.constant(1.0, self._n)
        base = self
        k = int(k)
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._n == other._n and self._terms == other._terms

    def __hash__(self):
        return hash((self._n, tuple(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            return f"Polynomial(0, n_vars={self._n})"
        parts = []
        for e, c in self._terms.items():
            mono = "*".join(f"x{i + 1}^{k}" if k > 1 else f"x{i + 1}" for i, k in enumerate(e) if k)
            parts.append(f"{c:g}*{mono}" if mono else f"{c:g}")
        return f"Polynomial({' + '.join(parts)})"

    def __call__(self, x):
        return evaluate(self, x)


def evaluate(p: Polynomial, x):
    """Evaluate p at a point (shape (n,)) or at a batch of points (shape (m, n))."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != p.n_vars:
        raise DimensionError(f"expected points with {p.n_vars} coordinates, got shape {np.shape(x)}")
    out = np.zeros(pts.shape[0])
    powers: dict[tuple[int, int], np.ndarray] = {}
    for exp, coef in p._terms.items():
        term = np.full(pts.shape[0], coef)
        for i, k in enumerate(exp):
            if k:
                key = (i, k)
                if key not in powers:
                    powers[key] = pts[:, i] ** k
                term = term * powers[key]
        out += term
    return float(out[0]) if single else out


def derivative(p: Polynomial, i: int) -> Polynomial:
    out = {}
    for e, c in p._terms.items():
        if e[i]:
            d = list(e)
            d[i] -= 1
            out[tuple(d)] = c * e[i]
    return Polynomial(out, p.n_vars)


def gradient(p: Polynomial) -> list[Polynomial]:
    return [derivative(p, i) for i in range(p.n_vars)]


def hessian(p: Polynomial) -> list[list[Polynomial]]:
    g = gradient(p)
    return [[derivative(gi, j) for j in range(p.n_vars)] for gi in g]


def check_invertible(U: np.ndarray, tol: float = 1e-12) -> None:
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U.shape[0] != U.shape[1]:
        raise DimensionError("affine map matrix must be square")
    _, _, upper = scipy.linalg.lu(U)
    if np.min(np.abs(np.diag(upper))) < tol:
        raise SingularMapError("affine map matrix is singular")


def compose_affine(p: Polynomial, U, c) -> Polynomial:
    """Return q with q(x) = p(Ux + c)."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    n = p.n_vars
    if U.shape != (n, n) or c.shape != (n,):
        raise DimensionError(f"affine map must be {n}x{n} with a length-{n} shift")
    check_invertible(U)
    linear = []
    for i in range(n):
        terms = {(0,) * n: c[i]}
        for j in range(n):
            e = [0] * n
            e[j] = 1
            terms[tuple(e)] = U[i, j]
        linear.append(Polynomial(terms, n))
    cache: dict[tuple[int, int], Polynomial] = {}

    def power(i, k):
        if (i, k) not in cache:
            cache[(i, k)] = linear[i] ** k
        return cache[(i, k)]

    out = Polynomial({}, n)
    for exp, coef in p._terms.items():
        term = Polynomial.constant(coef, n)
        for i, k in enumerate(exp):
            if k:
                term = term * power(i, k)
        out = out + term
    return out


@dataclass(frozen=True)
class SmoothnessConstants:
    """Grid estimates of max ||grad f|| and half the max Hessian spectral norm."""

    beta: float
    gamma: float


def smoothness_constants(p: Polynomial, domain, grid_density: int) -> SmoothnessConstants:
    """Maximize ||grad p|| and ||hess p||/2 over deterministic grids of ``domain``.

    The sample set is the union of the domain's grids for every density
    2..grid_density, so the result is a lower approximation of the true
    maximum that never decreases as grid_density grows.
    """
    if grid_density < 2:
        raise ValueError("grid_density must be at least 2")
    if domain.n_vars != p.n_vars:
        raise DimensionError("domain and polynomial dimensions differ")
    pts = np.vstack([domain.grid_points(k) for k in range(2, grid_density + 1)])
    grad = np.stack([evaluate(g, pts) for g in gradient(p)], axis=-1)
    hess = np.stack([np.stack([evaluate(h, pts) for h in row], axis=-1) for row in hessian(p)], axis=-2)
    beta = float(np.max(np.linalg.norm(grad, axis=1)))
    gamma = float(np.max(np.linalg.norm(hess, ord=2, axis=(-2, -1)))) / 2
    return SmoothnessConstants(beta, gamma)
