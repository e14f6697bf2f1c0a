"""P1 finite elements for the Robin eigenvalue on a triangle.

Structured meshes: refinement level n slices the triangle into 4^n congruent
affine copies ((2^n+1)(2^n+2)/2 nodes), so Richardson extrapolation in the
mesh size is clean and the discrete ground energy decreases monotonically
toward the true one from above (conforming elements).

The solver is inverse power iteration on (K + alpha*B - sigma*M)^{-1} M with
the fixed shift sigma = -2 alpha^2 / sin^2(theta*/2) - 1, a deliberately low
guess for the ground energy.  The iteration converges to the eigenvalue
nearest sigma; if the converged vector is not of one sign (i.e. an excited
state was picked up because sigma landed in the wrong gap), the shift is
doubled and the solve retried.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .equilateral import lambda0
from .errors import DomainError, NumericError, PrecisionError, ResourceError
from .geometry import TriangleGeometry, TriangleParams, c0, make_triangle

MAX_LEVEL = 10


@dataclass(frozen=True)
class FemMesh:
    nodes: np.ndarray          # (N, 2)
    elements: np.ndarray       # (M, 3) int
    boundary_edges: np.ndarray  # (E, 2) int, node pairs
    boundary_labels: np.ndarray  # (E,) int in {0, 1, 2}
    refinement_level: int


@dataclass(frozen=True)
class FemSystem:
    stiffness: sp.csr_matrix
    boundary_mass: sp.csr_matrix
    mass: sp.csr_matrix
    alpha: float


@dataclass(frozen=True)
class EigenResult:
    lambda1: float
    eigenvector: np.ndarray | None
    iterations: int
    residual: float
    extrapolated: float | None = None
    lambda2: float | None = None
    converged: bool = True
    level: int | None = None
    history: tuple[float, ...] = ()


def _as_geometry(tri) -> TriangleGeometry:
    if isinstance(tri, TriangleGeometry):
        return tri
    if isinstance(tri, TriangleParams):
        return make_triangle(tri.a, tri.c, tri.S)
    raise DomainError(f"expected TriangleParams or TriangleGeometry, got {type(tri)!r}")


def build_mesh(tri, level: int) -> FemMesh:
    """Structured level-`level` mesh; raises ResourceError above MAX_LEVEL."""
    geom = _as_geometry(tri)
    if level < 0:
        raise DomainError(f"refinement level must be >= 0, got {level}")
    if level > MAX_LEVEL:
        raise ResourceError(
            f"refinement level {level} exceeds the cap {MAX_LEVEL} "
            f"({(2**level + 1) * (2**level + 2) // 2} nodes)"
        )
    n = 2**level
    v = geom.vertex_array()

    # lattice node (i, j): v0 + (i/n)(v1 - v0) + (j/n)(v2 - v0), i + j <= n
    ids = {}
    coords = []
    k = 0
    for j in range(n + 1):
        for i in range(n + 1 - j):
            ids[(i, j)] = k
            coords.append(v[0] + (i / n) * (v[1] - v[0]) + (j / n) * (v[2] - v[0]))
            k += 1
    elems = []
    for j in range(n):
        for i in range(n - j):
            elems.append((ids[(i, j)], ids[(i + 1, j)], ids[(i, j + 1)]))
            if i + j <= n - 2:
                elems.append((ids[(i + 1, j)], ids[(i + 1, j + 1)], ids[(i, j + 1)]))
    edges = []
    labels = []
    for i in range(n):
        edges.append((ids[(i, 0)], ids[(i + 1, 0)]))
        labels.append(0)
    for j in range(n):
        edges.append((ids[(0, j)], ids[(0, j + 1)]))
        labels.append(1)
    for j in range(n):
        edges.append((ids[(n - j, j)], ids[(n - j - 1, j + 1)]))
        labels.append(2)
    return FemMesh(
        nodes=np.asarray(coords),
        elements=np.asarray(elems, dtype=np.int64),
        boundary_edges=np.asarray(edges, dtype=np.int64),
        boundary_labels=np.asarray(labels, dtype=np.int64),
        refinement_level=level,
    )


def dump_mesh(mesh: FemMesh, path: str) -> None:
    """Plain-text node / element / boundary-edge listing for debugging."""
    with open(path, "w") as fh:
        fh.write(f"# level {mesh.refinement_level}\n")
        fh.write(f"nodes {len(mesh.nodes)}\n")
        for x, y in mesh.nodes:
            fh.write(f"{x:.17g} {y:.17g}\n")
        fh.write(f"elements {len(mesh.elements)}\n")
        for tri in mesh.elements:
            fh.write(f"{tri[0]} {tri[1]} {tri[2]}\n")
        fh.write(f"boundary_edges {len(mesh.boundary_edges)}\n")
        for (i, j), lab in zip(mesh.boundary_edges, mesh.boundary_labels):
            fh.write(f"{i} {j} {lab}\n")


def assemble(mesh: FemMesh, alpha: float) -> FemSystem:
    """Assemble stiffness, boundary mass and mass matrices (all CSR)."""
    if not (math.isfinite(alpha) and alpha < 0.0):
        raise DomainError(f"alpha must be finite and strictly negative, got {alpha}")
    pts = mesh.nodes
    el = mesh.elements
    p0, p1, p2 = pts[el[:, 0]], pts[el[:, 1]], pts[el[:, 2]]
    det = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p2[:, 0] - p0[:, 0]) * (
        p1[:, 1] - p0[:, 1]
    )
    area = 0.5 * np.abs(det)
    total = float(area.sum())
    if np.any(area < 1e-14 * total):
        raise NumericError(
            f"degenerate element: min area {area.min():g} vs total {total:g}"
        )

    # hat-function gradients via the opposite-edge normals
    bvec = np.stack(
        [p1[:, 1] - p2[:, 1], p2[:, 1] - p0[:, 1], p0[:, 1] - p1[:, 1]], axis=1
    )
    cvec = np.stack(
        [p2[:, 0] - p1[:, 0], p0[:, 0] - p2[:, 0], p1[:, 0] - p0[:, 0]], axis=1
    )
    n = len(pts)
    rows = np.repeat(el, 3, axis=1).ravel()
    cols = np.tile(el, (1, 3)).ravel()
    ke = (
        bvec[:, :, None] * bvec[:, None, :] + cvec[:, :, None] * cvec[:, None, :]
    ) / (4.0 * area)[:, None, None]
    stiff = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    me = np.tile(np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0, (len(el), 1, 1))
    me *= area[:, None, None]
    mass = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    be = mesh.boundary_edges
    q0, q1 = pts[be[:, 0]], pts[be[:, 1]]
    lengths = np.hypot(*(q1 - q0).T)
    brows = np.repeat(be, 2, axis=1).ravel()
    bcols = np.tile(be, (1, 2)).ravel()
    edge_local = np.tile(np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0, (len(be), 1, 1))
    edge_local *= lengths[:, None, None]
    bmass = sp.coo_matrix((edge_local.ravel(), (brows, bcols)), shape=(n, n)).tocsr()

    return FemSystem(stiffness=stiff, boundary_mass=bmass, mass=mass, alpha=float(alpha))


def _power_iterate(lu, A, M, x0, tol=1e-12, max_iter=500, project_out=None):
    """Shifted inverse iteration; returns (rayleigh, vector, iterations)."""
    x = x0 / math.sqrt(float(x0 @ (M @ x0)))
    rho_prev = None
    for it in range(1, max_iter + 1):
        y = lu.solve(M @ x)
        if project_out is not None:
            u = project_out
            y = y - float(u @ (M @ y)) * u
        nrm = math.sqrt(float(y @ (M @ y)))
        if not (nrm > 0.0 and math.isfinite(nrm)):
            raise NumericError("inverse iteration produced a zero/overflowed vector")
        x = y / nrm
        rho = float(x @ (A @ x))
        if rho_prev is not None and abs(rho - rho_prev) <= tol * max(1.0, abs(rho)):
            return rho, x, it
        rho_prev = rho
    raise NumericError(f"inverse iteration did not converge in {max_iter} steps")


def _factor_counting(A, M, sigma: float):
    """Factor A - sigma*M without row pivoting and read off its inertia.

    With symmetric-mode elimination the U diagonal carries the pivot signs,
    so the number of negative entries equals the number of eigenvalues of the
    pencil below sigma.  That gives a certificate that a shift sits under the
    whole spectrum (count zero), which the ground-state iteration needs.
    """
    lu = splu(
        (A - sigma * M).tocsc(),
        diag_pivot_thresh=0.0,
        permc_spec="MMD_AT_PLUS_A",
        options=dict(SymmetricMode=True),
    )
    return lu, int((lu.U.diagonal() < 0.0).sum())


def lowest_eigenpair(
    system: FemSystem, tri, compute_gap: bool = False, sigma0: float | None = None
) -> EigenResult:
    """Ground eigenpair of K + alpha*B against M on the assembled mesh.

    The shift starts at -2 alpha^2/sin^2(theta*/2) - 1 (callers that already
    know the eigenvalue from a coarser mesh pass a warm sigma0 instead) and is
    then steered by the factorisation's inertia count: doubling until no
    eigenvalue lies below it, bisecting upward afterwards.  Iterating at a
    certified shift always converges onto the lowest eigenvalue, which matters
    on flat triangles where corner-localised ground and excited states are
    both nearly positive and sign inspection cannot tell them apart.
    """
    geom = _as_geometry(tri)
    alpha = system.alpha
    A = (system.stiffness + alpha * system.boundary_mass).tocsc()
    M = system.mass.tocsr()
    n = A.shape[0]
    sigma = sigma0 if sigma0 is not None else (
        -2.0 * (alpha / math.sin(0.5 * geom.theta_star)) ** 2 - 1.0
    )
    ones = np.ones(n)
    # Start vector: constant plus a fixed asymmetric ripple.  The ripple keeps
    # a usable overlap with antisymmetric ground states (symmetric meshes of
    # isosceles triangles produce them), which a pure constant start misses.
    x0 = ones + 0.01 * (np.arange(n) % 11 - 5.0)
    # Rayleigh quotient of the constant vector (it lies in the P1 space): an
    # exact upper bound on the discrete ground value at every level, so just
    # above it there is always at least one eigenvalue.
    ub = float(ones @ (A @ ones)) / float(ones @ (M @ ones))
    if sigma >= ub:
        sigma = ub - 0.05 * max(1.0, abs(ub))
    hi = ub + 0.01 * max(1.0, abs(ub))
    lu_lo = None
    for _ in range(80):
        try:
            lu, neg = _factor_counting(A, M, sigma)
        except RuntimeError:
            # Singular factorisation: sigma sits on an eigenvalue.
            hi = min(hi, sigma)
            sigma = 2.0 * sigma - 1.0
            continue
        if neg == 0:
            lu_lo = lu
            break
        hi = min(hi, sigma)
        sigma = 2.0 * sigma - 1.0
    else:
        raise NumericError(f"no shift below the spectrum found (last {sigma:g})")
    lo = sigma
    lam = vec = None
    iters_total = 0
    for _ in range(60):
        if hi - lo <= 0.35 * max(1.0, abs(lo)):
            try:
                lam, vec, its = _power_iterate(lu_lo, A, M, x0)
                iters_total += its
                break
            except NumericError:
                # Unresolved cluster just above lo; narrowing the bracket
                # pushes lo against lambda1 and shrinks the convergence factor.
                pass
        if hi - lo <= 1e-10 * max(1.0, abs(lo)):
            raise NumericError(
                f"iteration stalled inside a degenerate cluster at {lo:.12g}"
            )
        mid = 0.5 * (lo + hi)
        try:
            lu, neg = _factor_counting(A, M, mid)
        except RuntimeError:
            hi = mid
            continue
        if neg == 0:
            lo, lu_lo = mid, lu
        else:
            hi = mid
    else:
        raise NumericError(
            f"ground-state iteration did not converge (bracket [{lo:g}, {hi:g}])"
        )
    if float(vec.sum()) < 0.0:
        vec = -vec

    r = A @ vec - lam * (M @ vec)
    lu_m = splu(M.tocsc())
    residual = math.sqrt(max(float(r @ lu_m.solve(r)), 0.0))

    lam2 = None
    if compute_gap:
        # Refactorise close to lambda1 so the deflated iteration separates
        # lambda2 from lambda3 quickly even when the original shift was far off.
        sigma2 = lam - 1e-2 * max(1.0, abs(lam))
        lu = splu((A - sigma2 * M).tocsc())
        z0 = system.mass @ (np.arange(n) % 7 - 3.0) + 1e-3
        z0 = z0 - float(vec @ (M @ z0)) * vec
        lam2, _, its2 = _power_iterate(lu, A, M, z0, tol=1e-9, max_iter=400, project_out=vec)
        iters_total += its2

    return EigenResult(
        lambda1=float(lam),
        eigenvector=vec,
        iterations=iters_total,
        residual=residual,
        lambda2=lam2,
        level=None,
    )


def solve_at_level(
    tri, alpha: float, level: int, compute_gap: bool = False, sigma0: float | None = None
) -> EigenResult:
    geom = _as_geometry(tri)
    mesh = build_mesh(geom, level)
    system = assemble(mesh, alpha)
    res = lowest_eigenpair(system, geom, compute_gap=compute_gap, sigma0=sigma0)
    return replace(res, level=level)


def eigenvalue_converged(
    tri,
    alpha: float,
    rel_tol: float = 1e-6,
    abs_tol: float | None = None,
    min_level: int = 2,
    max_level: int = 9,
    compute_gap: bool = False,
) -> EigenResult:
    """Refine until the Richardson-extrapolated eigenvalue settles.

    lambda1 carries the extrapolated value, residual its error estimate (the
    change in the extrapolation over the last refinement).  If the level cap
    is hit first the best value is returned with converged=False.  A level
    whose iteration fails to certify (tight but not-yet-degenerate pairs do
    this on very flat triangles) is skipped; the extrapolation then spans the
    level gap with the matching 4^gap factor.
    """
    if rel_tol < 1e-8:
        raise DomainError(f"rel_tol below the supported floor 1e-8: {rel_tol}")
    if max_level > MAX_LEVEL:
        raise ResourceError(f"max_level {max_level} exceeds cap {MAX_LEVEL}")
    geom = _as_geometry(tri)
    vals: list[float] = []
    lev_ids: list[int] = []
    extrs: list[float] = []
    iters = 0
    result = None
    sigma0 = None
    for level in range(min_level, max_level + 1):
        try:
            res = solve_at_level(geom, alpha, level, sigma0=sigma0)
        except NumericError:
            sigma0 = None
            continue
        iters += res.iterations
        vals.append(res.lambda1)
        lev_ids.append(level)
        # warm shift for the next level: a bit below the value just found,
        # padded by the observed level-to-level movement
        drop = 2.0 * abs(vals[-1] - vals[-2]) if len(vals) >= 2 else 0.1 * abs(vals[-1])
        sigma0 = vals[-1] - drop - 0.02 * abs(vals[-1]) - 1.0
        result = res
        if len(vals) < 2:
            continue
        span = 4.0 ** (lev_ids[-1] - lev_ids[-2]) - 1.0
        extrs.append(vals[-1] + (vals[-1] - vals[-2]) / span)
        if len(extrs) < 2:
            continue
        err = abs(extrs[-1] - extrs[-2])
        tol_met = err <= abs_tol if abs_tol is not None else err <= rel_tol * abs(extrs[-1])
        if tol_met:
            final = res
            if compute_gap:
                final = solve_at_level(geom, alpha, level, compute_gap=True, sigma0=sigma0)
                iters += final.iterations
            return EigenResult(
                lambda1=extrs[-1],
                eigenvector=final.eigenvector,
                iterations=iters,
                residual=err,
                extrapolated=extrs[-1],
                lambda2=final.lambda2,
                converged=True,
                level=level,
                history=tuple(vals),
            )
    if len(vals) < 2:
        raise NumericError(
            f"fewer than two mesh levels certified up to level {max_level}"
        )
    err = abs(extrs[-1] - extrs[-2]) if len(extrs) >= 2 else float("inf")
    return EigenResult(
        lambda1=extrs[-1],
        eigenvector=result.eigenvector if result is not None else None,
        iterations=iters,
        residual=err,
        extrapolated=extrs[-1],
        lambda2=None,
        converged=False,
        level=max_level,
        history=tuple(vals),
    )


@dataclass(frozen=True)
class FdDerivatives:
    """Central differences of the FEM eigenvalue around the equilateral point."""

    grad_a: float
    grad_c: float
    hess_aa: float
    hess_cc: float
    hess_ac: float
    lambda_center: float
    h: float
    fem_error_estimate: float


def fd_derivatives_at_equilateral(
    alpha: float,
    S: float,
    h: float | None = None,
    rel_tol: float = 1e-8,
    max_level: int = 9,
) -> FdDerivatives:
    """Gradient and Hessian of (a, c) -> lambda1 at (0, c0(S)) by 3x3 stencil.

    Each eigenvalue is converged in absolute terms to a small fraction of the
    h^2 scale; if that cannot be certified the PrecisionError names the
    achieved estimate so the caller can enlarge h or the level cap.
    """
    cc = c0(S)
    if h is None:
        h = 1e-3 * cc
    if not (0.0 < h < 0.5 * cc):
        raise DomainError(f"stencil width h={h} out of range for c0={cc}")
    lam0 = lambda0(alpha, S)
    guard = 0.01 * h * h * abs(lam0)
    vals: dict[tuple[int, int], float] = {}
    worst = 0.0
    for ia in (-1, 0, 1):
        for ic in (-1, 0, 1):
            tri = TriangleParams(ia * h, cc + ic * h, S)
            res = eigenvalue_converged(
                tri, alpha, rel_tol=rel_tol, abs_tol=guard / 4.0, max_level=max_level
            )
            worst = max(worst, res.residual)
            if not res.converged or res.residual > guard:
                raise PrecisionError(
                    f"FEM error estimate {res.residual:g} exceeds the stencil "
                    f"guard {guard:g} at offset ({ia}, {ic}); refine further or "
                    f"enlarge h"
                )
            vals[(ia, ic)] = res.lambda1
    f = vals
    grad_a = (f[(1, 0)] - f[(-1, 0)]) / (2.0 * h)
    grad_c = (f[(0, 1)] - f[(0, -1)]) / (2.0 * h)
    hess_aa = (f[(1, 0)] - 2.0 * f[(0, 0)] + f[(-1, 0)]) / (h * h)
    hess_cc = (f[(0, 1)] - 2.0 * f[(0, 0)] + f[(0, -1)]) / (h * h)
    hess_ac = (f[(1, 1)] - f[(1, -1)] - f[(-1, 1)] + f[(-1, -1)]) / (4.0 * h * h)
    return FdDerivatives(
        grad_a=grad_a,
        grad_c=grad_c,
        hess_aa=hess_aa,
        hess_cc=hess_cc,
        hess_ac=hess_ac,
        lambda_center=f[(0, 0)],
        h=h,
        fem_error_estimate=worst,
    )
