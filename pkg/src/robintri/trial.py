"""Trial-function upper bounds for the lowest Robin eigenvalue.

All bounds evaluate the Rayleigh quotient of an explicit field.  Two of them
live on the equilateral reference triangle and are transported through the
area-preserving affine map (so only the quadratic-form coefficients change):

  * TransplantedGroundState -- the equilateral ground state u0;
  * ConstantOne             -- the constant field.

The third, SectorExponential, lives on the physical triangle: u(x) =
exp(alpha * x' / sin(theta*/2)) with x' the coordinate along the bisector of
the smallest angle; its gradient has |grad u| = |alpha| u / sin(theta*/2)
pointwise, which gives a closed upper bound once the membrane is replaced by
the infinite sector.

Verdicts certify strict inequalities and therefore include a small safety
margin: a bound counts only when it clears its target by 1e-10 relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _quad
from .equilateral import EquilateralSolution, GroundStateField, closed_form_norms, ground_state, solve_equilateral
from .errors import DomainError
from .geometry import (
    TriangleGeometry,
    TriangleParams,
    b0,
    c0,
    edge_stretch_weights,
    make_triangle,
)

_SQRT3 = math.sqrt(3.0)
_MARGIN = 1e-10
_EXP_FLOOR = -700.0


def strictly_below(value: float, target: float) -> bool:
    """value < target with a 1e-10 relative safety margin."""
    return value < target - _MARGIN * max(1.0, abs(target))


@dataclass(frozen=True)
class FormValue:
    """Pieces of the Robin quadratic form evaluated on one trial field."""

    gradient_term: float
    boundary_term: float
    l2_norm_sq: float

    @property
    def raw(self) -> float:
        return self.gradient_term + self.boundary_term

    @property
    def rayleigh(self) -> float:
        return self.raw / self.l2_norm_sq


class TransplantedGroundState:
    """Equilateral ground state used as a trial field on other triangles."""

    def __init__(self, solution: EquilateralSolution):
        self.solution = solution
        self._field = ground_state(solution)

    def values_and_grads(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self._field.values_and_grads(pts)


class ConstantOne:
    """The constant trial field."""

    def values_and_grads(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = np.asarray(pts).shape[0]
        return np.ones(n), np.zeros((n, 2))


@dataclass(frozen=True)
class SectorExponential:
    """exp(alpha x'/sin(theta/2)) anchored at `apex`, decaying along `bisector`."""

    theta_star: float
    L_prime: float
    apex: tuple[float, float]
    bisector: tuple[float, float]
    alpha: float

    @classmethod
    def from_triangle(cls, tri: TriangleGeometry, alpha: float, vertex: int | None = None) -> "SectorExponential":
        """Anchor at the smallest angle, or at an explicit vertex index."""
        if vertex is None:
            return cls(tri.theta_star, tri.L_prime, tri.apex_vertex, tri.bisector, alpha)
        theta, l_prime, apex, bis = _vertex_angle_data(tri, vertex)
        return cls(theta, l_prime, apex, bis, alpha)

    def values_and_grads(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(pts, dtype=float)
        rel = pts - np.asarray(self.apex)
        proj = rel @ np.asarray(self.bisector)
        rate = self.alpha / math.sin(0.5 * self.theta_star)
        vals = np.exp(np.maximum(rate * proj, _EXP_FLOOR))
        grads = (rate * vals)[:, None] * np.asarray(self.bisector)[None, :]
        return vals, grads


TrialField = TransplantedGroundState | ConstantOne | SectorExponential


def _vertex_angle_data(tri: TriangleGeometry, idx: int) -> tuple[float, float, tuple[float, float], tuple[float, float]]:
    """(angle, shorter adjacent side, vertex, inward unit bisector) at vertex idx."""
    verts = tri.vertex_array()
    at = verts[idx]
    o1 = verts[(idx + 1) % 3]
    o2 = verts[(idx + 2) % 3]
    d1 = o1 - at
    d2 = o2 - at
    n1, n2 = np.linalg.norm(d1), np.linalg.norm(d2)
    angle = math.atan2(abs(d1[0] * d2[1] - d1[1] * d2[0]), float(d1 @ d2))
    bis = d1 / n1 + d2 / n2
    bis = bis / np.linalg.norm(bis)
    return angle, float(min(n1, n2)), (float(at[0]), float(at[1])), (float(bis[0]), float(bis[1]))


def _as_params(tri) -> TriangleParams:
    if isinstance(tri, TriangleGeometry):
        return tri.params
    if isinstance(tri, TriangleParams):
        return tri
    raise DomainError(f"expected TriangleParams or TriangleGeometry, got {type(tri)!r}")


def _reference_vertices(S: float) -> np.ndarray:
    cc, bb = c0(S), b0(S)
    return np.array([[-cc, 0.0], [cc, 0.0], [0.0, bb]])


def form_hat(alpha: float, tri, psi) -> FormValue:
    """Transported Robin form of a reference-triangle field psi on Omega_{a,c}.

    gradient term:  integral of (inverse metric) grad psi . grad psi
    boundary term:  alpha * sum_k (side stretch factor_k) * ||psi||^2 on side k
    both over the equilateral reference of the same area.
    """
    if isinstance(psi, SectorExponential):
        raise DomainError(
            "SectorExponential lives on the physical triangle; use sector_bound"
        )
    params = _as_params(tri)
    if not (alpha < 0.0):
        raise DomainError(f"alpha must be negative, got {alpha}")
    a, c, S = params.a, params.c, params.S
    verts = _reference_vertices(S)

    def moments(pts: np.ndarray) -> np.ndarray:
        vals, grads = psi.values_and_grads(pts)
        return np.column_stack(
            [grads[:, 0] ** 2, grads[:, 1] ** 2, grads[:, 0] * grads[:, 1], vals**2]
        )

    A1, A2, A12, L2 = _quad.triangle_integrate(moments, verts, n=8, tol=1e-12)
    g11 = a * a / (_SQRT3 * S) + S / (_SQRT3 * c * c)
    g12 = -a * c / S
    g22 = _SQRT3 * c * c / S
    gradient = g11 * A1 + 2.0 * g12 * A12 + g22 * A2

    w = edge_stretch_weights(params)
    edges = ((verts[0], verts[1]), (verts[0], verts[2]), (verts[1], verts[2]))
    boundary = 0.0
    for wk, (p0, p1) in zip(w, edges):
        ek = _quad.segment_integrate(lambda p: psi.values_and_grads(p)[0] ** 2, p0, p1, n=10, tol=1e-12)
        boundary += wk * float(ek)
    return FormValue(gradient_term=float(gradient), boundary_term=alpha * boundary, l2_norm_sq=float(L2))


def shape_coefficient(params: TriangleParams) -> float:
    """Trace of the inverse metric minus 2; zero exactly at the equilateral shape."""
    a, c, S = params.a, params.c, params.S
    return _SQRT3 * c * c / S + S / (_SQRT3 * c * c) + a * a / (_SQRT3 * S) - 2.0


def delta_transplant(alpha: float, tri) -> float:
    """Closed-form excess of the transported form of u0 over its equilateral value.

    delta <= 0 certifies lambda(alpha, a, c) <= lambda0(alpha, S); built from
    the closed-form norms, so no quadrature is involved.
    """
    params = _as_params(tri)
    sol = solve_equilateral(alpha, params.S)
    d1, bdry, _ = closed_form_norms(sol)
    f1 = sum(edge_stretch_weights(params))
    return shape_coefficient(params) * d1 + alpha * (f1 - 3.0) * bdry / 3.0


def transplant_verdict(alpha: float, tri) -> tuple[float, bool]:
    """(delta, certified) with the strict safety margin on the delta scale."""
    params = _as_params(tri)
    sol = solve_equilateral(alpha, params.S)
    _, bdry, _ = closed_form_norms(sol)
    delta = delta_transplant(alpha, params)
    scale = abs(alpha) * bdry
    return delta, delta < -_MARGIN * scale


def constant_bound(alpha: float, tri) -> tuple[float, bool]:
    """Rayleigh quotient of the constant field, alpha * perimeter / area.

    The verdict is True when this upper bound lies strictly below lambda0,
    i.e. when perimeter/area alone already certifies the inequality.
    """
    params = _as_params(tri)
    if not (alpha < 0.0):
        raise DomainError(f"alpha must be negative, got {alpha}")
    geom = make_triangle(params.a, params.c, params.S)
    bound = alpha * geom.perimeter / params.S
    lam0 = solve_equilateral(alpha, params.S).lambda0
    return bound, strictly_below(bound, lam0)


def lambda0_lower_bound(alpha: float, S: float) -> float:
    """-4 alpha^2 + 24 alpha / sqrt(sqrt(3) S) - 36/(sqrt(3) S), a bound below lambda0."""
    if not (alpha < 0.0 and S > 0.0):
        raise DomainError("lambda0_lower_bound needs alpha < 0 and S > 0")
    root = math.sqrt(_SQRT3 * S)
    return -4.0 * alpha * alpha + 24.0 * alpha / root - 36.0 / (root * root)


def sector_closed_upper(alpha: float, theta: float, l_prime: float) -> float:
    """-(alpha/sin(theta/2))^2 (1 - 2 exp(2 alpha L' cot(theta/2)))."""
    half = 0.5 * theta
    expo = 2.0 * alpha * l_prime / math.tan(half)
    tail = 2.0 * math.exp(max(expo, _EXP_FLOOR))
    return -(alpha / math.sin(half)) ** 2 * (1.0 - tail)


def sector_bound(alpha: float, tri: TriangleGeometry, anchor_vertex: int | None = None) -> tuple[float, float]:
    """(rayleigh_upper, closed_upper) for the sector exponential.

    rayleigh_upper is the exact Rayleigh quotient on the triangle by adaptive
    quadrature; closed_upper replaces the volume norm by the infinite-sector
    integral and the boundary norm by the two adjacent sides truncated at L',
    so rayleigh_upper <= closed_upper always.  By default the field anchors at
    the smallest angle; anchor_vertex pins it to a chosen vertex instead (the
    inequality holds per-vertex with that vertex's angle data).
    """
    if not (alpha < 0.0):
        raise DomainError(f"alpha must be negative, got {alpha}")
    field = SectorExponential.from_triangle(tri, alpha, vertex=anchor_vertex)
    verts = tri.vertex_array()

    def moments(pts: np.ndarray) -> np.ndarray:
        vals, grads = field.values_and_grads(pts)
        return np.column_stack([vals**2, grads[:, 0] ** 2 + grads[:, 1] ** 2])

    l2, grad = _quad.triangle_integrate(moments, verts, n=8, tol=1e-12)
    bdry = 0.0
    for i, j in ((0, 1), (0, 2), (1, 2)):
        bdry += float(
            _quad.segment_integrate(
                lambda p: field.values_and_grads(p)[0] ** 2, verts[i], verts[j], n=10, tol=1e-12
            )
        )
    rayleigh = (float(grad) + alpha * bdry) / float(l2)
    closed = sector_closed_upper(alpha, field.theta_star, field.L_prime)
    return rayleigh, closed


def sector_condition(alpha: float, tri: TriangleGeometry, anchor_vertex: int | None = None) -> bool:
    """True when the closed sector bound drops below the closed lower bound for lambda0.

    This is the fully closed-form certificate chain; it is vacuous for the
    equilateral triangle, which is rejected as a domain error.
    """
    if tri.theta_star >= math.pi / 3.0 - 1e-12:
        raise DomainError("sector condition is undefined for the equilateral triangle")
    if anchor_vertex is None:
        theta, l_prime = tri.theta_star, tri.L_prime
    else:
        theta, l_prime, _, _ = _vertex_angle_data(tri, anchor_vertex)
    closed = sector_closed_upper(alpha, theta, l_prime)
    lower = lambda0_lower_bound(alpha, tri.params.S)
    return strictly_below(closed, lower)


def small_coupling_functions(alpha: float, tri) -> tuple[float, float, float]:
    """(z, f1, g1) controlling the transplant certificate at weak coupling.

    f1 is the stretch-weight sum (half the scaled perimeter), z divides the
    boundary excess by the gradient excess, and g1 is the coupling-dependent
    threshold 3||grad psi0||^2 / (-2 alpha ||psi0||^2_bdry); g1 <= z is
    equivalent to delta_transplant <= 0.  z is NaN at the equilateral shape
    where both excesses vanish.
    """
    params = _as_params(tri)
    f1 = sum(edge_stretch_weights(params))
    coef = shape_coefficient(params)
    z = (f1 - 3.0) / coef if coef > 1e-14 else float("nan")
    sol = solve_equilateral(alpha, params.S)
    _, bdry, l2 = closed_form_norms(sol)
    b = bdry / l2
    grad_sq = sol.lambda0 - alpha * b
    g1 = 3.0 * grad_sq / (-2.0 * alpha * b)
    return z, f1, g1
