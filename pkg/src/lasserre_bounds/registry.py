"""Named test functions, domains and measures used by the experiment runner."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .domains import (
    CHEBYSHEV,
    LEBESGUE,
    Ball,
    Box,
    DomainSpec,
    MeasureSpec,
    Simplex,
    ball_jacobi,
    box_jacobi,
    domain_from_json,
    regular_octagon,
)
from .poly import Polynomial


class RegistryError(ValueError):
    pass


@dataclass(frozen=True)
class RegistryEntry:
    name: str
    poly: Polynomial
    f_min: float
    minimizers: tuple[tuple[float, ...], ...]


def _p(n: int, terms: dict) -> Polynomial:
    return Polynomial(terms, n)


def table_functions() -> dict[str, RegistryEntry]:
    """The six bivariate benchmark polynomials with their minima on [-1, 1]^2."""
    x1, x2 = Polynomial.variable(0, 2), Polynomial.variable(1, 2)
    booth = (10 * x1 + 20 * x2 - 7) ** 2 + (20 * x1 + 10 * x2 - 5) ** 2
    entries = [
        RegistryEntry("linear", x1, -1.0, ((-1.0, 0.0),)),
        RegistryEntry("quadratic", x1 + x2 * x2, -1.0, ((-1.0, 0.0),)),
        RegistryEntry("booth", booth, 0.0, ((0.1, 0.3),)),
        RegistryEntry("matyas", _p(2, {(2, 0): 26, (0, 2): 26, (1, 1): -48}), 0.0, ((0.0, 0.0),)),
        RegistryEntry(
            "camel",
            _p(2, {(2, 0): 50, (4, 0): -2625 / 4, (6, 0): 15625 / 6, (1, 1): 25, (0, 2): 25}),
            0.0,
            ((0.0, 0.0),),
        ),
        RegistryEntry(
            "motzkin",
            _p(2, {(4, 2): 64, (2, 4): 64, (2, 2): -48, (0, 0): 1}),
            0.0,
            ((0.5, 0.5), (0.5, -0.5), (-0.5, 0.5), (-0.5, -0.5)),
        ),
    ]
    return {e.name: e for e in entries}


TABLE_FUNCTIONS = ("linear", "quadratic", "booth", "matyas", "camel", "motzkin")

# Minima that differ from the [-1, 1]^2 value on a registry domain.
_MINIMUM_OVERRIDES = {
    ("linear", "simplex2"): (0.0, ((0.0, 0.0),)),
    ("quadratic", "simplex2"): (0.0, ((0.0, 0.0),)),
}


def domains() -> dict[str, DomainSpec]:
    return {
        "box1": Box(1),
        "box2": Box(2),
        "box3": Box(3),
        "ball2": Ball(2),
        "ball3": Ball(3),
        "simplex2": Simplex.standard(2),
        "octagon": regular_octagon(),
        "interval01": Box(1, [0.0], [1.0]),
    }


def resolve_domain(spec: str | dict) -> tuple[str, DomainSpec]:
    if isinstance(spec, dict):
        return json.dumps(spec, sort_keys=True), domain_from_json(spec)
    table = domains()
    if spec in table:
        return spec, table[spec]
    text = spec.strip()
    if text.startswith("{"):
        try:
            return text, domain_from_json(json.loads(text))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise RegistryError(f"bad domain literal: {exc}") from None
    raise RegistryError(f"unknown domain {spec!r}; choose from {sorted(table)} or give a JSON literal")


def resolve_measure(name: str, lam: float | None, domain: DomainSpec) -> MeasureSpec:
    if name == "lebesgue":
        return LEBESGUE
    if name == "chebyshev":
        if not isinstance(domain, Box):
            raise RegistryError("the Chebyshev measure is defined on boxes only")
        return CHEBYSHEV
    if name == "jacobi":
        if lam is None:
            raise RegistryError("the jacobi measure needs --lambda")
        if isinstance(domain, Box):
            return box_jacobi(lam)
        if isinstance(domain, Ball):
            return ball_jacobi(lam)
        raise RegistryError("Jacobi weights are defined on boxes and balls only")
    raise RegistryError(f"unknown measure {name!r}; choose lebesgue, chebyshev or jacobi")


def _embed(p: Polynomial, n: int) -> Polynomial:
    """Read p in the first p.n_vars of n variables."""
    if n == p.n_vars:
        return p
    if n < p.n_vars:
        if any(any(e[n:]) for e in p.terms):
            raise RegistryError(f"function needs {p.n_vars} variables, domain has {n}")
        return Polynomial({e[:n]: c for e, c in p.terms.items()}, n)
    return Polynomial({e + (0,) * (n - p.n_vars): c for e, c in p.terms.items()}, n)


def resolve_function(spec: str | dict, domain_name: str, domain: DomainSpec) -> RegistryEntry:
    """Registry name, constant<c>, x4, or a JSON polynomial literal, embedded in the domain's dimension."""
    n = domain.n_vars
    if isinstance(spec, dict) or (isinstance(spec, str) and spec.strip().startswith("{")):
        try:
            obj = spec if isinstance(spec, dict) else json.loads(spec)
            p = Polynomial.from_json(obj)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise RegistryError(f"bad polynomial literal: {exc}") from None
        p = _embed(p, n)
        return RegistryEntry("literal", p, math.nan, ())
    m = re.fullmatch(r"constant(-?\d+(?:\.\d+)?)", spec)
    if m:
        c = float(m.group(1))
        return RegistryEntry(spec, Polynomial.constant(c, n), c, ((0.0,) * n,))
    if spec == "x4":
        p = _embed(Polynomial({(4,): 1.0}, 1), n)
        return RegistryEntry(spec, p, 0.0, ((0.0,) * n,))
    table = table_functions()
    if spec not in table:
        raise RegistryError(f"unknown function {spec!r}; choose from {sorted(table)}, constant<c>, x4 or a JSON literal")
    entry = table[spec]
    p = _embed(entry.poly, n)
    f_min, mins = _MINIMUM_OVERRIDES.get((spec, domain_name), (entry.f_min, entry.minimizers))
    mins = tuple(tuple(m[:n]) + (0.0,) * (n - len(m[:n])) for m in mins)
    if n < 2 and spec != "linear":
        raise RegistryError(f"{spec} is a bivariate function")
    if n == 1:
        # x1 on a 1-D domain: the minimum sits at the left end
        lo = domain.bounding_box()[0]
        f_min, mins = float(lo[0]), ((float(lo[0]),),)
    elif domain_name not in domains():
        f_min, mins = math.nan, ()
    return RegistryEntry(spec, p, f_min, mins)


def grid_minimum(p: Polynomial, domain: DomainSpec, density: int = 200) -> tuple[float, np.ndarray]:
    """Grid estimate of the minimum, used when no exact minimum is registered."""
    pts = domain.grid_points(density if domain.n_vars < 3 else 60)
    vals = p(pts)
    i = int(np.argmin(vals))
    return float(vals[i]), pts[i]
