"""Triangle parameterisation, affine normalisation and angle data.

A triangle of area S is described by (a, c): vertices V0 = (-c, 0),
V1 = (c, 0), V2 = (a, b) with b = S/c.  The reference triangle of the same
area is the equilateral one, a = 0, c = c0(S) = sqrt(S/sqrt(3)), apex height
b0 = sqrt(sqrt(3)*S).  Boundary sides carry fixed labels:

    side 0: V0-V1 (the base, length 2c)
    side 1: V0-V2
    side 2: V1-V2

which is the labelling every boundary-weighted form in this package uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_DEGENERATE_ANGLE = 1e-6


@dataclass(frozen=True)
class TriangleParams:
    """Shape parameters (a, c) at fixed area S."""

    a: float
    c: float
    S: float

    def __post_init__(self) -> None:
        if not (self.c > 0.0) or not math.isfinite(self.c):
            raise DomainError(f"c must be positive and finite, got {self.c}")
        if not (self.S > 0.0) or not math.isfinite(self.S):
            raise DomainError(f"S must be positive and finite, got {self.S}")
        if not math.isfinite(self.a):
            raise DomainError(f"a must be finite, got {self.a}")

    @property
    def b(self) -> float:
        """Apex height S/c."""
        return self.S / self.c


def c0(S: float) -> float:
    """Half-base of the equilateral triangle of area S."""
    return math.sqrt(S / math.sqrt(3.0))


def b0(S: float) -> float:
    """Apex height of the equilateral triangle of area S."""
    return math.sqrt(math.sqrt(3.0) * S)


def equilateral_params(S: float) -> TriangleParams:
    return TriangleParams(0.0, c0(S), S)


@dataclass(frozen=True)
class TriangleGeometry:
    """Derived geometric data for one parameter triple."""

    params: TriangleParams
    vertices: tuple[tuple[float, float], ...]
    side_lengths: tuple[float, float, float]
    perimeter: float
    angles: tuple[float, float, float]
    theta_star: float
    L_prime: float
    apex_index: int
    bisector: tuple[float, float]
    degenerate: bool

    @property
    def apex_vertex(self) -> tuple[float, float]:
        return self.vertices[self.apex_index]

    def vertex_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)


@dataclass(frozen=True)
class AffineMap:
    """Unit-determinant map taking the equilateral reference onto Omega_{a,c}."""

    matrix: np.ndarray
    inverse_matrix: np.ndarray
    metric: np.ndarray
    inverse_metric: np.ndarray

    def apply(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.matrix.T

    def pull_back(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.inverse_matrix.T


def perimeter(params: TriangleParams) -> float:
    """Closed-form boundary length 2c + |V0V2| + |V1V2|."""
    a, c, S = params.a, params.c, params.S
    return (
        2.0 * c
        + math.sqrt(S * S / (c * c) + (a - c) ** 2)
        + math.sqrt(S * S / (c * c) + (a + c) ** 2)
    )


def perimeter_min_over_a(c: float, S: float) -> float:
    """Minimum of the perimeter over a at fixed (c, S), attained at a = 0."""
    if not (c > 0.0 and S > 0.0):
        raise DomainError("perimeter_min_over_a needs c > 0 and S > 0")
    return 2.0 * c + 2.0 * math.sqrt(c * c + S * S / (c * c))


def _angle(at: np.ndarray, p: np.ndarray, q: np.ndarray) -> float:
    u = p - at
    v = q - at
    # atan2 form stays accurate for very thin triangles where arccos loses digits
    return math.atan2(abs(u[0] * v[1] - u[1] * v[0]), float(u @ v))


def make_triangle(a: float, c: float, S: float) -> TriangleGeometry:
    """Build the full geometry record for Omega_{a,c} with area S."""
    params = TriangleParams(float(a), float(c), float(S))
    b = params.b
    verts = np.array([[-params.c, 0.0], [params.c, 0.0], [params.a, b]])
    sides = (
        2.0 * params.c,
        float(np.hypot(params.a + params.c, b)),
        float(np.hypot(params.a - params.c, b)),
    )
    angles = tuple(
        _angle(verts[i], verts[(i + 1) % 3], verts[(i + 2) % 3]) for i in range(3)
    )
    apex = int(np.argmin(angles))
    theta = min(angles[apex], math.pi / 3.0)

    # the two sides meeting at vertex i are the ones not labelled by _opposite(i)
    adjacent = {0: (0, 1), 1: (0, 2), 2: (1, 2)}
    l_prime = min(sides[k] for k in adjacent[apex])

    others = [(apex + 1) % 3, (apex + 2) % 3]
    d1 = verts[others[0]] - verts[apex]
    d2 = verts[others[1]] - verts[apex]
    bis = d1 / np.linalg.norm(d1) + d2 / np.linalg.norm(d2)
    bis = bis / np.linalg.norm(bis)

    return TriangleGeometry(
        params=params,
        vertices=tuple((float(x), float(y)) for x, y in verts),
        side_lengths=sides,
        perimeter=perimeter(params),
        angles=angles,
        theta_star=theta,
        L_prime=float(l_prime),
        apex_index=apex,
        bisector=(float(bis[0]), float(bis[1])),
        degenerate=bool(theta < _DEGENERATE_ANGLE),
    )


def smallest_angle_data(tri: TriangleGeometry) -> tuple[float, float, tuple[float, float], tuple[float, float]]:
    """(theta_star, L', apex vertex, inward unit bisector) at the smallest angle."""
    return tri.theta_star, tri.L_prime, tri.apex_vertex, tri.bisector


def affine_map(params: TriangleParams) -> AffineMap:
    """Map with matrix [[c/c0, a/b0], [0, b/b0]]; det = 1 exactly since c*b = S."""
    a, c, S = params.a, params.c, params.S
    cc0 = c0(S)
    bb0 = b0(S)
    m = np.array([[c / cc0, a / bb0], [0.0, params.b / bb0]])
    inv = np.array([[params.b / bb0, -a / bb0], [0.0, c / cc0]])
    metric = m.T @ m
    s3 = math.sqrt(3.0)
    inv_metric = np.array(
        [
            [(a * a * c * c + S * S) / (s3 * c * c * S), -a * c / S],
            [-a * c / S, s3 * c * c / S],
        ]
    )
    return AffineMap(matrix=m, inverse_matrix=inv, metric=metric, inverse_metric=inv_metric)


def perimeter_normalizer(tri: TriangleGeometry) -> float:
    """Scale factor gamma in (0, 1] making gamma*Omega match the equilateral perimeter."""
    gamma = 6.0 * c0(tri.params.S) / tri.perimeter
    return min(gamma, 1.0)


def edge_stretch_weights(params: TriangleParams) -> tuple[float, float, float]:
    """Per-side length ratios |side_k(a,c)| / |side_k(equilateral)|.

    These are the boundary weights of the transported Robin form; they sum to
    sqrt(sqrt(3)/S) * perimeter / 2.
    """
    base = 2.0 * c0(params.S)
    tri_sides = (
        2.0 * params.c,
        math.hypot(params.a + params.c, params.b),
        math.hypot(params.a - params.c, params.b),
    )
    return tuple(s / base for s in tri_sides)
