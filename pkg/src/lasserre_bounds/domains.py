"""Compact sets, reference measures, affine transport and triangulation.

Boxes and balls default to [-1, 1]^n and the unit ball; an explicit
placement (bounds, or centre and radius) is allowed so that recentred sets
stay in closed form. Jacobi weights are always taken relative to the
domain's own placement, which makes them the pushforward of the canonical
weight under the placing map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.special

from .errors import (
    DegenerateGeometryError,
    DimensionError,
    IncompatibleMeasureError,
    UnsupportedDomainError,
)
from .poly import check_invertible


def _tuple(values) -> tuple[float, ...]:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)))


def _points(x, n):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != n:
        raise DimensionError(f"expected points with {n} coordinates")
    return pts, single


def _cartesian_grid(lo, hi, k):
    axes = [np.linspace(a, b, k) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


class DomainSpec:
    """Common interface of the supported compact sets."""

    kind: ClassVar[str] = ""

    @property
    def n_vars(self) -> int:
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-12):
        raise NotImplementedError

    def volume(self) -> float:
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def farthest_distance(self, a) -> float:
        raise NotImplementedError

    def boundary_points(self, m: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def grid_points(self, k: int) -> np.ndarray:
        """Deterministic sample of the set: a k-per-axis grid clipped to the set plus boundary points."""
        lo, hi = self.bounding_box()
        pts = _cartesian_grid(lo, hi, k)
        pts = pts[self.contains(pts)]
        return np.vstack([pts, self._boundary_grid(k)])

    def _boundary_grid(self, k: int) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Box(DomainSpec):
    """Axis-aligned box; [-1, 1]^n unless bounds are given."""

    n: int
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None
    kind: ClassVar[str] = "box"

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError("n must be positive")
        lo = _tuple(self.lower) if self.lower is not None else (-1.0,) * self.n
        hi = _tuple(self.upper) if self.upper is not None else (1.0,) * self.n
        if len(lo) != self.n or len(hi) != self.n:
            raise DimensionError("box bounds must have length n")
        if any(b <= a for a, b in zip(lo, hi)):
            raise DegenerateGeometryError("box has empty interior")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n_vars(self):
        return self.n

    @property
    def centre(self) -> np.ndarray:
        return (np.array(self.lower) + np.array(self.upper)) / 2

    @property
    def half_widths(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / 2

    def is_canonical(self) -> bool:
        return self.lower == (-1.0,) * self.n and self.upper == (1.0,) * self.n

    def contains(self, x, tol=1e-12):
        pts, single = _points(x, self.n)
        ok = np.all((pts >= np.array(self.lower) - tol) & (pts <= np.array(self.upper) + tol), axis=1)
        return bool(ok[0]) if single else ok

    def volume(self):
        return float(np.prod(2 * self.half_widths))

    def bounding_box(self):
        return np.array(self.lower), np.array(self.upper)

    def corners(self) -> np.ndarray:
        return _cartesian_grid(self.lower, self.upper, 2)

    def farthest_distance(self, a):
        return float(np.max(np.linalg.norm(self.corners() - np.asarray(a, dtype=float), axis=1)))

    def boundary_points(self, m, rng):
        lo, hi = self.bounding_box()
        pts = lo + (hi - lo) * rng.random((m, self.n))
        axis = rng.integers(self.n, size=m)
        side = rng.integers(2, size=m)
        pts[np.arange(m), axis] = np.where(side == 1, hi[axis], lo[axis])
        return pts

    def _boundary_grid(self, k):
        return self.corners()

    def to_json(self):
        return {"kind": "box", "n": self.n, "lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class Ball(DomainSpec):
    """Euclidean ball; the unit ball unless centre and radius are given."""

    n: int
    centre: tuple[float, ...] | None = None
    radius: float = 1.0
    kind: ClassVar[str] = "ball"

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError("n must be positive")
        c = _tuple(self.centre) if self.centre is not None else (0.0,) * self.n
        if len(c) != self.n:
            raise DimensionError("ball centre must have length n")
        if not self.radius > 0:
            raise DegenerateGeometryError("ball radius must be positive")
        object.__setattr__(self, "centre", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def n_vars(self):
        return self.n

    def is_canonical(self) -> bool:
        return self.centre == (0.0,) * self.n and self.radius == 1.0

    def contains(self, x, tol=1e-12):
        pts, single = _points(x, self.n)
        ok = np.linalg.norm(pts - np.array(self.centre), axis=1) <= self.radius + tol
        return bool(ok[0]) if single else ok

    def volume(self):
        return unit_ball_volume(self.n) * self.radius ** self.n

    def bounding_box(self):
        c = np.array(self.centre)
        return c - self.radius, c + self.radius

    def farthest_distance(self, a):
        return float(np.linalg.norm(np.asarray(a, dtype=float) - np.array(self.centre)) + self.radius)

    def boundary_points(self, m, rng):
        u = rng.standard_normal((m, self.n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        return np.array(self.centre) + self.radius * u

    def _boundary_grid(self, k):
        c, rho = np.array(self.centre), self.radius
        if self.n == 1:
            u = np.array([[-1.0], [1.0]])
        elif self.n == 2:
            th = np.linspace(0, 2 * np.pi, 4 * k, endpoint=False)
            u = np.stack([np.cos(th), np.sin(th)], axis=1)
        else:
            # Fibonacci lattice on the sphere, then padded with zeros for n > 3
            m = 4 * k * k
            i = np.arange(m) + 0.5
            z = 1 - 2 * i / m
            phi = np.pi * (1 + 5 ** 0.5) * i
            s = np.sqrt(1 - z * z)
            u = np.zeros((m, self.n))
            u[:, 0], u[:, 1], u[:, 2] = s * np.cos(phi), s * np.sin(phi), z
        return c + rho * u

    def to_json(self):
        return {"kind": "ball", "n": self.n, "centre": list(self.centre), "radius": self.radius}


def _as_vertices(vertices) -> tuple[tuple[float, ...], ...]:
    arr = np.asarray(vertices, dtype=float)
    if arr.ndim != 2:
        raise DimensionError("vertices must be a list of points")
    return tuple(tuple(float(v) for v in row) for row in arr)


@dataclass(frozen=True)
class Simplex(DomainSpec):
    """Convex hull of n+1 affinely independent points in R^n."""

    vertices: tuple[tuple[float, ...], ...]
    kind: ClassVar[str] = "simplex"

    def __post_init__(self):
        verts = _as_vertices(self.vertices)
        n = len(verts) - 1
        if n < 1 or any(len(v) != n for v in verts):
            raise DimensionError("a simplex in R^n needs n+1 vertices of length n")
        object.__setattr__(self, "vertices", verts)
        if abs(np.linalg.det(self.edge_matrix())) < 1e-10:
            raise DegenerateGeometryError("simplex vertices are affinely dependent")

    @classmethod
    def standard(cls, n: int) -> "Simplex":
        return cls(np.vstack([np.zeros(n), np.eye(n)]))

    @property
    def n_vars(self):
        return len(self.vertices) - 1

    def vertex_array(self) -> np.ndarray:
        return np.array(self.vertices)

    def edge_matrix(self) -> np.ndarray:
        """Columns are v_i - v_0."""
        v = np.array(self.vertices)
        return (v[1:] - v[0]).T

    def barycentric(self, x) -> np.ndarray:
        pts, _ = _points(x, self.n_vars)
        v0 = np.array(self.vertices[0])
        lam = np.linalg.solve(self.edge_matrix(), (pts - v0).T).T
        return np.hstack([1 - lam.sum(axis=1, keepdims=True), lam])

    def contains(self, x, tol=1e-12):
        pts, single = _points(x, self.n_vars)
        ok = np.all(self.barycentric(pts) >= -tol, axis=1)
        return bool(ok[0]) if single else ok

    def volume(self):
        return abs(float(np.linalg.det(self.edge_matrix()))) / math.factorial(self.n_vars)

    def bounding_box(self):
        v = self.vertex_array()
        return v.min(axis=0), v.max(axis=0)

    def farthest_distance(self, a):
        return float(np.max(np.linalg.norm(self.vertex_array() - np.asarray(a, dtype=float), axis=1)))

    def boundary_points(self, m, rng):
        n = self.n_vars
        v = self.vertex_array()
        drop = rng.integers(n + 1, size=m)
        lam = rng.dirichlet(np.ones(n), size=m) if n > 1 else np.ones((m, 1))
        out = np.empty((m, n))
        for i in range(m):
            face = np.delete(v, drop[i], axis=0)
            out[i] = lam[i] @ face
        return out

    def _boundary_grid(self, k):
        v = self.vertex_array()
        t = np.linspace(0, 1, k)[:, None]
        edges = [v[i] + t * (v[j] - v[i]) for i in range(len(v)) for j in range(i + 1, len(v))]
        return np.vstack([v] + edges)

    def to_json(self):
        return {"kind": "simplex", "vertices": [list(v) for v in self.vertices]}


@dataclass(frozen=True)
class Polygon(DomainSpec):
    """Convex polygon in R^2 with vertices listed counterclockwise."""

    vertices: tuple[tuple[float, ...], ...]
    kind: ClassVar[str] = "polygon"

    def __post_init__(self):
        verts = _as_vertices(self.vertices)
        if len(verts) < 3 or any(len(v) != 2 for v in verts):
            raise DimensionError("a polygon needs at least 3 planar vertices")
        object.__setattr__(self, "vertices", verts)
        v = np.array(verts)
        e = np.roll(v, -1, axis=0) - v
        turn = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = float(np.max(np.abs(v))) ** 2
        if self.signed_area() <= 1e-14 * scale:
            raise DegenerateGeometryError("polygon must be counterclockwise with positive area")
        if np.any(turn < -1e-12 * scale):
            raise DegenerateGeometryError("polygon is not convex")

    @property
    def n_vars(self):
        return 2

    def vertex_array(self) -> np.ndarray:
        return np.array(self.vertices)

    def signed_area(self) -> float:
        v = np.array(self.vertices)
        w = np.roll(v, -1, axis=0)
        return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - v[:, 1] * w[:, 0]))

    def contains(self, x, tol=1e-12):
        pts, single = _points(x, 2)
        v = self.vertex_array()
        e = np.roll(v, -1, axis=0) - v
        rel = pts[:, None, :] - v[None, :, :]
        cross = e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0]
        ok = np.all(cross >= -tol * np.linalg.norm(e, axis=1)[None, :], axis=1)
        return bool(ok[0]) if single else ok

    def volume(self):
        return self.signed_area()

    def bounding_box(self):
        v = self.vertex_array()
        return v.min(axis=0), v.max(axis=0)

    def farthest_distance(self, a):
        return float(np.max(np.linalg.norm(self.vertex_array() - np.asarray(a, dtype=float), axis=1)))

    def boundary_points(self, m, rng):
        v = self.vertex_array()
        i = rng.integers(len(v), size=m)
        t = rng.random((m, 1))
        return v[i] + t * (v[(i + 1) % len(v)] - v[i])

    def _boundary_grid(self, k):
        v = self.vertex_array()
        t = np.linspace(0, 1, k)[:, None]
        return np.vstack([v[i] + t * (v[(i + 1) % len(v)] - v[i]) for i in range(len(v))])

    def to_json(self):
        return {"kind": "polygon", "vertices": [list(v) for v in self.vertices]}


def regular_octagon() -> Polygon:
    """conv{(+-1, 0), (0, +-1), (+-sqrt2/2, +-sqrt2/2)}."""
    angles = np.arange(8) * np.pi / 4
    pts = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    pts[np.abs(pts) < 1e-15] = 0.0
    return Polygon(pts)


def domain_from_json(obj) -> DomainSpec:
    kind = obj.get("kind")
    if kind == "box":
        return Box(int(obj["n"]), obj.get("lower"), obj.get("upper"))
    if kind == "ball":
        return Ball(int(obj["n"]), obj.get("centre"), float(obj.get("radius", 1.0)))
    if kind == "simplex":
        return Simplex(obj["vertices"])
    if kind == "polygon":
        return Polygon(obj["vertices"])
    raise UnsupportedDomainError(f"unknown domain kind {kind!r}")


# measures


@dataclass(frozen=True)
class MeasureSpec:
    """Lebesgue measure or a Jacobi-type weight relative to a box or ball."""

    kind: str = "lebesgue"
    lam: float = 0.0
    KINDS: ClassVar[tuple[str, ...]] = ("lebesgue", "box_jacobi", "ball_jacobi")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if not self.lam > -1:
            raise ValueError("Jacobi exponent must exceed -1")
        object.__setattr__(self, "lam", float(self.lam))
        if self.kind == "lebesgue" and self.lam != 0.0:
            raise ValueError("the Lebesgue measure takes no exponent")

    def weight(self, domain: DomainSpec, x) -> np.ndarray:
        check_compatible(domain, self)
        pts, _ = _points(x, domain.n_vars)
        if self.kind == "lebesgue":
            return np.ones(len(pts))
        if self.kind == "box_jacobi":
            t = (pts - domain.centre) / domain.half_widths
            return np.prod(np.clip(1 - t * t, 0, None) ** self.lam, axis=1)
        u = (pts - np.array(domain.centre)) / domain.radius
        return np.clip(1 - np.sum(u * u, axis=1), 0, None) ** self.lam

    def to_json(self):
        return {"kind": self.kind, "lambda": self.lam}


LEBESGUE = MeasureSpec()


def box_jacobi(lam: float) -> MeasureSpec:
    return MeasureSpec("box_jacobi", lam)


def ball_jacobi(lam: float) -> MeasureSpec:
    return MeasureSpec("ball_jacobi", lam)


CHEBYSHEV = box_jacobi(-0.5)


def check_compatible(domain: DomainSpec, measure: MeasureSpec) -> None:
    if measure.kind == "box_jacobi" and not isinstance(domain, Box):
        raise IncompatibleMeasureError("box Jacobi weights require a box domain")
    if measure.kind == "ball_jacobi" and not isinstance(domain, Ball):
        raise IncompatibleMeasureError("ball Jacobi weights require a ball domain")


# affine transport and triangulation


def affine_map(d: DomainSpec, U, c) -> DomainSpec:
    """Image {Ux + c : x in d}, when it is again one of the supported kinds."""
    n = d.n_vars
    U = np.atleast_2d(np.asarray(U, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if U.shape != (n, n) or c.shape != (n,):
        raise DimensionError(f"affine map must be {n}x{n} with a length-{n} shift")
    check_invertible(U)
    if isinstance(d, Simplex):
        return Simplex(d.vertex_array() @ U.T + c)
    if isinstance(d, Polygon):
        v = d.vertex_array() @ U.T + c
        return Polygon(v if np.linalg.det(U) > 0 else v[::-1])
    if isinstance(d, Box):
        if np.count_nonzero(U - np.diag(np.diag(U))) == 0:
            a = np.diag(U) * np.array(d.lower) + c
            b = np.diag(U) * np.array(d.upper) + c
            return Box(n, np.minimum(a, b), np.maximum(a, b))
        if n == 2:
            lo, hi = d.lower, d.upper
            corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
            v = corners @ U.T + c
            return Polygon(v if np.linalg.det(U) > 0 else v[::-1])
        raise UnsupportedDomainError("unsupported image kind: a non-axis-aligned box in n != 2")
    if isinstance(d, Ball):
        gram = U @ U.T
        s2 = float(np.trace(gram)) / n
        if not np.allclose(gram, s2 * np.eye(n), rtol=0, atol=1e-12 * max(s2, 1.0)):
            raise UnsupportedDomainError("unsupported image kind: an ellipsoid")
        return Ball(n, U @ np.array(d.centre) + c, d.radius * math.sqrt(s2))
    raise UnsupportedDomainError(f"cannot map domain kind {d.kind!r}")


def triangulate(d: Polygon) -> list[Simplex]:
    """Fan triangulation from vertex 0."""
    if isinstance(d, Simplex) and d.n_vars == 2:
        return [d]
    if not isinstance(d, Polygon):
        raise UnsupportedDomainError("only polygons can be triangulated")
    v = d.vertex_array()
    scale = float(np.max(np.abs(v))) ** 2
    out = []
    for i in range(1, len(v) - 1):
        e1, e2 = v[i] - v[0], v[i + 1] - v[0]
        if e1[0] * e2[1] - e1[1] * e2[0] <= 1e-14 * scale:
            raise DegenerateGeometryError(f"fan triangle {i} is degenerate (collinear vertices)")
        out.append(Simplex([v[0], v[i], v[i + 1]]))
    return out


# interior cone constants


@dataclass(frozen=True)
class ConeConstants:
    """Radius and volume fraction of the interior cone condition."""

    epsilon: float
    eta: float

    def __post_init__(self):
        if not (0 < self.epsilon <= 1 and 0 < self.eta <= 1):
            raise ValueError("cone constants out of range")


def _cap_volume(radius: float, height: float, n: int) -> float:
    # cap of a ball no larger than a hemisphere
    x = (2 * radius * height - height * height) / radius ** 2
    return 0.5 * unit_ball_volume(n) * radius ** n * scipy.special.betainc((n + 1) / 2, 0.5, x)


def ball_boundary_fraction(n: int, radius: float, delta: float) -> float:
    """vol(B_delta(x) ∩ B_radius) / vol(B_delta) for x on the sphere, delta <= radius."""
    a = delta * delta / (2 * radius)
    lens = _cap_volume(delta, delta - a, n) + _cap_volume(radius, a, n)
    return lens / (unit_ball_volume(n) * delta ** n)


def _polytope_facets(d) -> tuple[np.ndarray, np.ndarray]:
    """Outward unit normals A and offsets b with d = {x : A x <= b}."""
    if isinstance(d, Polygon):
        v = d.vertex_array()
        e = np.roll(v, -1, axis=0) - v
        normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        return normals, np.sum(normals * v, axis=1)
    v = d.vertex_array()
    normals, offsets = [], []
    for i in range(len(v)):
        face = np.delete(v, i, axis=0)
        if d.n_vars == 1:
            nrm = np.sign(face[0] - v[i])
        else:
            nrm = scipy.linalg.null_space(face[1:] - face[0]).ravel()
            if nrm @ (face[0] - v[i]) < 0:
                nrm = -nrm
        nrm = nrm / np.linalg.norm(nrm)
        normals.append(nrm)
        offsets.append(float(nrm @ face[0]))
    return np.array(normals), np.array(offsets)


def _inradius(d) -> float:
    normals, offsets = _polytope_facets(d)
    n = d.n_vars
    res = scipy.optimize.linprog(
        np.r_[np.zeros(n), -1.0],
        A_ub=np.hstack([normals, np.ones((len(normals), 1))]),
        b_ub=offsets,
        bounds=[(None, None)] * n + [(0, None)],
    )
    return float(-res.fun)


def _vertex_fractions(d) -> list[float]:
    v = d.vertex_array()
    n = d.n_vars
    if n == 1:
        return [0.5, 0.5]
    if isinstance(d, Polygon):
        out = []
        for i in range(len(v)):
            a, b = v[i - 1] - v[i], v[(i + 1) % len(v)] - v[i]
            ang = math.acos(np.clip(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)), -1, 1))
            out.append(ang / (2 * math.pi))
        return out
    if n == 2:
        return _vertex_fractions(Polygon(v if np.linalg.det(d.edge_matrix()) > 0 else v[::-1]))
    if n == 3:
        out = []
        for i in range(4):
            a, b, c = (v[j] - v[i] for j in range(4) if j != i)
            a, b, c = (u / np.linalg.norm(u) for u in (a, b, c))
            num = abs(a @ np.cross(b, c))
            den = 1 + a @ b + b @ c + c @ a
            out.append(2 * math.atan2(num, den) / (4 * math.pi))
        return out
    raise UnsupportedDomainError("cone constants for simplices are implemented for n <= 3")


def _vertex_clearance(d) -> float:
    """Smallest distance from a vertex to a facet that does not contain it."""
    normals, offsets = _polytope_facets(d)
    v = d.vertex_array()
    best = math.inf
    for x in v:
        gap = offsets - normals @ x
        best = min(best, float(np.min(gap[gap > 1e-12 * (1 + np.abs(offsets))])))
    return best


def cone_constants(d: DomainSpec) -> ConeConstants:
    """Constants (epsilon, eta) with vol(B_delta(x) ∩ d) >= eta delta^n vol(B^n) for x in d, delta <= epsilon."""
    if isinstance(d, Box):
        return ConeConstants(min(1.0, float(np.min(d.half_widths))), 2.0 ** -d.n)
    if isinstance(d, Ball):
        eps = min(1.0, d.radius)
        return ConeConstants(eps, ball_boundary_fraction(d.n, d.radius, eps))
    if isinstance(d, (Simplex, Polygon)):
        eps = min(1.0, _inradius(d), _vertex_clearance(d))
        return ConeConstants(eps, min(_vertex_fractions(d)))
    raise UnsupportedDomainError(f"no cone constants for {d.kind!r}")
