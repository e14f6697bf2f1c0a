"""Grid scans and verification suites over the triangle family.

Batch layer on top of the closed-form, trial-function, and finite-element
modules: it evaluates one predicate per grid cell (certificate sign, bound
value, or eigenvalue comparison), isolates per-cell failures, and serialises
the outcome as deterministic CSV plus an optional two-colour SVG heatmap.

Modes
-----
g-curve             sign profile of the threshold function g along t
transplant-region   delta(alpha, a) certificate of the transplanted field
constant-region     constant trial function: alpha*perimeter/area vs lambda0
condition-region    closed sufficient condition for the corner trial field
sector-region       Rayleigh quotient of the corner exponential vs lambda0
fem-conjecture      extrapolated FEM eigenvalue vs lambda0 on an (a, c) grid
local-optimality    finite-difference criticality/Hessian report per alpha
perimeter-variant   fixed-perimeter rescaling chain on an (a, c) grid
monotonicity        eigenvalue ordering across areas {S/2, S, 2S}

Every cell row carries the numeric evidence its verdict was derived from, a
verdict flag, and a status tag ("ok", "unconverged", "domain-error",
"numeric-error", "precision-error").  Timestamps stay in the in-memory
provenance; serialized headers echo only the config and package version so
identical configs produce byte-identical files.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from functools import partial
from multiprocessing import get_context

import numpy as np

from .equilateral import (
    g_threshold,
    hessian_upper_bounds,
    lambda0,
    local_optimality_alpha_bound,
)
from .errors import DomainError, NumericError, PrecisionError, ResourceError
from .fem import eigenvalue_converged, fd_derivatives_at_equilateral, solve_at_level
from .geometry import c0, make_triangle, perimeter_normalizer
from .trial import (
    constant_bound,
    delta_transplant,
    lambda0_lower_bound,
    sector_bound,
    sector_closed_upper,
    sector_condition,
    strictly_below,
    transplant_verdict,
)

MODES = (
    "g-curve",
    "transplant-region",
    "constant-region",
    "condition-region",
    "sector-region",
    "fem-conjecture",
    "local-optimality",
    "perimeter-variant",
    "monotonicity",
)

_SQRT3 = math.sqrt(3.0)
_NAN = float("nan")


def _check_range(name: str, rng, *, collapsed_ok: bool = False,
                 lo_min: float | None = None, hi_max: float | None = None) -> None:
    try:
        lo, hi, n = rng
    except (TypeError, ValueError):
        raise DomainError(f"{name} must be a (lo, hi, n) triple, got {rng!r}")
    n = int(n)
    if n >= 2:
        if not lo < hi:
            raise DomainError(f"{name}: need lo < hi for n >= 2, got {rng!r}")
    elif n == 1 and collapsed_ok:
        if lo != hi:
            raise DomainError(f"{name}: collapsed range needs lo == hi, got {rng!r}")
    else:
        raise DomainError(f"{name}: need n >= 2 (or a collapsed single value), got {rng!r}")
    if lo_min is not None and not lo > lo_min:
        raise DomainError(f"{name}: requires lo > {lo_min}, got {rng!r}")
    if hi_max is not None and not hi < hi_max:
        raise DomainError(f"{name}: requires hi < {hi_max}, got {rng!r}")


def _grid(rng) -> tuple[float, ...]:
    lo, hi, n = rng
    return tuple(float(x) for x in np.linspace(lo, hi, int(n)))


@dataclass(frozen=True)
class ScanConfig:
    """Declarative description of one scan run.

    alpha_range / a_range / c_range are (lo, hi, n) triples; axes a mode does
    not grid over may be collapsed to a single value (n = 1, lo == hi).  For
    g-curve the a_range supplies the t axis and must lie inside (0, 1).
    c_fixed defaults to the equilateral half-base c0(S) when left unset.
    """

    mode: str
    alpha_range: tuple[float, float, int] = (-10.0, -0.01, 60)
    a_range: tuple[float, float, int] = (0.0, 5.0, 60)
    c_fixed: float | None = None
    c_range: tuple[float, float, int] | None = None
    S: float = 1.0 / _SQRT3
    fem_rel_tol: float = 1e-6
    output_path: str = "scan.csv"
    emit_svg: bool = False
    anchor_left: bool = False

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise DomainError(f"unknown mode {self.mode!r}; choose one of {', '.join(MODES)}")
        if not (math.isfinite(self.S) and self.S > 0.0):
            raise DomainError(f"area S must be positive and finite, got {self.S}")
        if self.fem_rel_tol < 1e-8:
            raise DomainError(f"fem_rel_tol below supported floor 1e-8: {self.fem_rel_tol}")
        if not self.output_path:
            raise DomainError("output_path must be non-empty")
        if self.c_fixed is not None and not self.c_fixed > 0.0:
            raise DomainError(f"c_fixed must be positive, got {self.c_fixed}")
        mode = self.mode
        if mode == "g-curve":
            _check_range("a_range (t axis)", self.a_range, lo_min=0.0, hi_max=1.0)
        elif mode in ("transplant-region", "constant-region", "condition-region", "sector-region"):
            _check_range("alpha_range", self.alpha_range, hi_max=0.0)
            _check_range("a_range", self.a_range)
            if self.c_range is not None:
                raise DomainError(f"mode {mode} grids (alpha, a); use c_fixed, not c_range")
        elif mode == "fem-conjecture":
            _check_range("alpha_range", self.alpha_range, collapsed_ok=True, hi_max=0.0)
            _check_range("a_range", self.a_range)
            if self.c_range is None:
                raise DomainError("fem-conjecture needs a c_range")
            _check_range("c_range", self.c_range, lo_min=0.0)
        elif mode == "local-optimality":
            _check_range("alpha_range", self.alpha_range, collapsed_ok=True, hi_max=0.0)
        elif mode == "perimeter-variant":
            _check_range("alpha_range", self.alpha_range, collapsed_ok=True, hi_max=0.0)
            if self.alpha_range[2] != 1:
                raise DomainError("perimeter-variant uses a single alpha (collapsed alpha_range)")
            _check_range("a_range", self.a_range)
            if self.c_range is None:
                raise DomainError("perimeter-variant needs a c_range")
            _check_range("c_range", self.c_range, lo_min=0.0)
        elif mode == "monotonicity":
            _check_range("alpha_range", self.alpha_range, collapsed_ok=True, hi_max=0.0)

    def resolved_c(self) -> float:
        return self.c_fixed if self.c_fixed is not None else c0(self.S)


@dataclass(frozen=True)
class ScanResult:
    """In-memory scan outcome: tabular payload plus axes and provenance.

    verdict_grid is row-major over (second axis, first axis); scans with a
    third (alpha) axis reduce it by logical AND, which the provenance notes.
    """

    mode: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    axes: dict[str, tuple[float, ...]]
    provenance: dict[str, str]
    verdict_grid: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise DomainError(
                    f"row width {len(row)} does not match {len(self.columns)} columns"
                )
        names = list(self.axes)
        nx = len(self.axes[names[0]])
        ny = len(self.axes[names[1]]) if len(names) > 1 else 1
        if len(self.verdict_grid) != ny or any(len(r) != nx for r in self.verdict_grid):
            raise DomainError("verdict grid shape does not match the axes")


# ---------------------------------------------------------------------------
# per-cell evaluators (top-level functions so worker pools can pickle them)

def _status_of(exc: Exception) -> str:
    if isinstance(exc, PrecisionError):
        return "precision-error"
    if isinstance(exc, (NumericError, ResourceError)):
        return "numeric-error"
    if isinstance(exc, DomainError):
        return "domain-error"
    raise exc


def _cell_g(t: float) -> tuple:
    try:
        g = g_threshold(t)
        return (t, g, int(g < 0.0), "ok")
    except Exception as exc:  # noqa: BLE001 - isolation boundary
        return (t, _NAN, 0, _status_of(exc))


def _cell_transplant(task, *, c: float, S: float) -> tuple:
    alpha, a = task
    try:
        delta, ok = transplant_verdict(alpha, make_triangle(a, c, S))
        return (alpha, a, delta, int(ok), "ok")
    except Exception as exc:  # noqa: BLE001
        return (alpha, a, _NAN, 0, _status_of(exc))


def _cell_constant(task, *, c: float, S: float) -> tuple:
    alpha, a = task
    try:
        bound, ok = constant_bound(alpha, make_triangle(a, c, S))
        return (alpha, a, bound, lambda0(alpha, S), int(ok), "ok")
    except Exception as exc:  # noqa: BLE001
        return (alpha, a, _NAN, _NAN, 0, _status_of(exc))


def _cell_condition(task, *, c: float, S: float) -> tuple:
    alpha, a = task
    try:
        tri = make_triangle(a, c, S)
        closed = sector_closed_upper(alpha, tri.theta_star, tri.L_prime)
        lower = lambda0_lower_bound(alpha, S)
        try:
            ok = sector_condition(alpha, tri)
            status = "ok"
        except DomainError:  # vacuous at the equilateral corner of the grid
            ok = False
            status = "domain-error"
        return (alpha, a, closed, lower, int(ok), status)
    except Exception as exc:  # noqa: BLE001
        return (alpha, a, _NAN, _NAN, 0, _status_of(exc))


def _cell_sector(task, *, c: float, S: float, anchor_left: bool) -> tuple:
    alpha, a = task
    try:
        tri = make_triangle(a, c, S)
        ray, closed = sector_bound(alpha, tri, anchor_vertex=0 if anchor_left else None)
        lam0 = lambda0(alpha, S)
        return (alpha, a, ray, closed, lam0, int(strictly_below(ray, lam0)), "ok")
    except Exception as exc:  # noqa: BLE001
        return (alpha, a, _NAN, _NAN, _NAN, 0, _status_of(exc))


def _fem_pad(lam0: float, err: float) -> float:
    return 10.0 * err + 1e-9 * max(1.0, abs(lam0))


def _cell_fem(task, *, S: float, rel_tol: float, max_level: int = 9) -> tuple:
    alpha, a, c = task
    try:
        res = eigenvalue_converged(make_triangle(a, c, S), alpha,
                                   rel_tol=rel_tol, max_level=max_level)
        lam0 = lambda0(alpha, S)
        margin = res.lambda1 - lam0
        ok = margin <= _fem_pad(lam0, res.residual)
        status = "ok" if res.converged else "unconverged"
        return (alpha, a, c, res.lambda1, res.residual, lam0, margin, int(ok), status)
    except Exception as exc:  # noqa: BLE001
        return (alpha, a, c, _NAN, _NAN, _NAN, _NAN, 0, _status_of(exc))


def _cell_perimeter(task, *, alpha: float, S: float, rel_tol: float) -> tuple:
    a, c = task
    try:
        tri = make_triangle(a, c, S)
        gamma = perimeter_normalizer(tri)
        scaled = make_triangle(gamma * a, gamma * c, gamma * gamma * S)
        res = eigenvalue_converged(scaled, alpha, rel_tol=rel_tol)
        lam0_scaled = lambda0(alpha, gamma * gamma * S)
        lam0_ref = lambda0(alpha, S)
        m1 = res.lambda1 - lam0_scaled
        m2 = lam0_scaled - lam0_ref
        m = res.lambda1 - lam0_ref
        pad = _fem_pad(lam0_ref, res.residual)
        ok = (m1 <= pad) and (m2 <= 1e-12 * abs(lam0_ref)) and (m <= pad)
        status = "ok" if res.converged else "unconverged"
        return (a, c, gamma, res.lambda1, res.residual, lam0_scaled, lam0_ref,
                m1, m2, m, int(ok), status)
    except Exception as exc:  # noqa: BLE001
        return (a, c, _NAN, _NAN, _NAN, _NAN, _NAN, _NAN, _NAN, _NAN, 0, _status_of(exc))


def _cell_local(alpha: float, *, S: float) -> tuple:
    simple, _improved = local_optimality_alpha_bound(S)
    claimed = int(alpha >= simple)
    try:
        fd = None
        # stronger coupling needs a wider stencil before the difference
        # quotients rise above the eigenvalue solver's accuracy
        for h_rel in (1e-2, 3e-2, 1e-1, 2e-1):
            try:
                fd = fd_derivatives_at_equilateral(alpha, S, h=h_rel * c0(S), max_level=8)
                break
            except PrecisionError:
                continue
        if fd is None:
            fd = fd_derivatives_at_equilateral(alpha, S, h=1e-2 * c0(S), max_level=8)
        hb = hessian_upper_bounds(alpha, S)
        half_span = math.sqrt(0.25 * (fd.hess_aa - fd.hess_cc) ** 2 + fd.hess_ac**2)
        eig_max = 0.5 * (fd.hess_aa + fd.hess_cc) + half_span
        C = -0.5 * eig_max
        lam = lambda0(alpha, S)
        cc = c0(S)
        tol_g = 1e-3 * abs(lam) / cc
        tol_h = 1e-3 * abs(lam) / cc**2
        flat = abs(fd.grad_a) < tol_g and abs(fd.grad_c) < tol_g and abs(fd.hess_ac) < tol_h
        concave = fd.hess_aa < 0.0 and fd.hess_cc < 0.0 and C > 0.0
        bounded = fd.hess_aa <= hb.bound_aa + tol_h and fd.hess_cc <= hb.bound_cc + tol_h
        verdict = int(bool(claimed) and flat and concave and bounded)
        status = "ok" if claimed else "no-claim"
        return (alpha, fd.grad_a, fd.grad_c, fd.hess_aa, fd.hess_cc, fd.hess_ac,
                hb.bound_aa, hb.bound_cc, C, claimed, verdict, status)
    except Exception as exc:  # noqa: BLE001
        return (alpha, _NAN, _NAN, _NAN, _NAN, _NAN, _NAN, _NAN, _NAN,
                claimed, 0, _status_of(exc))


def _cell_monotone(alpha: float, *, S: float, rel_tol: float) -> tuple:
    areas = (0.5 * S, S, 2.0 * S)
    try:
        lam0s = [lambda0(alpha, s) for s in areas]
        fems = []
        errs = []
        for s in areas:
            res = eigenvalue_converged(make_triangle(0.0, c0(s), s), alpha, rel_tol=rel_tol)
            fems.append(res.lambda1)
            errs.append(res.residual)
        pad = [_fem_pad(l, e) for l, e in zip(lam0s, errs)]
        ok_closed = lam0s[0] < lam0s[1] < lam0s[2]
        ok_fem = (fems[0] < fems[1] + pad[0] + pad[1]) and (fems[1] < fems[2] + pad[1] + pad[2])
        return (alpha, *lam0s, *fems, int(ok_closed and ok_fem), "ok")
    except Exception as exc:  # noqa: BLE001
        return (alpha, _NAN, _NAN, _NAN, _NAN, _NAN, _NAN, 0, _status_of(exc))


_MODE_COLUMNS = {
    "g-curve": ("t", "g_value", "verdict", "status"),
    "transplant-region": ("alpha", "a", "delta", "verdict", "status"),
    "constant-region": ("alpha", "a", "bound", "lambda0", "verdict", "status"),
    "condition-region": ("alpha", "a", "closed_upper", "lower_bound", "verdict", "status"),
    "sector-region": ("alpha", "a", "rayleigh", "closed_upper", "lambda0", "verdict", "status"),
    "fem-conjecture": ("alpha", "a", "c", "lambda_fem", "fem_error", "lambda0",
                       "margin", "verdict", "status"),
    "local-optimality": ("alpha", "grad_a", "grad_c", "hess_aa", "hess_cc", "hess_ac",
                         "bound_aa", "bound_cc", "C", "claimed", "verdict", "status"),
    "perimeter-variant": ("a", "c", "gamma", "lambda_fem", "fem_error", "lambda0_scaled",
                          "lambda0", "margin_link1", "margin_link2", "margin",
                          "verdict", "status"),
    "monotonicity": ("alpha", "lambda0_half", "lambda0_base", "lambda0_twice",
                     "fem_half", "fem_base", "fem_twice", "verdict", "status"),
}


def _map_cells(fn, tasks, workers: int) -> list[tuple]:
    if workers > 1 and len(tasks) > 1:
        with get_context("fork").Pool(workers) as pool:
            return pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers)))
    return [fn(t) for t in tasks]


def _provenance(cfg: ScanConfig, extra: dict[str, str] | None = None) -> dict[str, str]:
    fmt = lambda v: "%.17g" % v  # noqa: E731
    prov = {
        "version": _package_version(),
        "mode": cfg.mode,
        "alpha_range": ",".join(fmt(v) for v in cfg.alpha_range[:2]) + f",{cfg.alpha_range[2]}",
        "a_range": ",".join(fmt(v) for v in cfg.a_range[:2]) + f",{cfg.a_range[2]}",
        "S": fmt(cfg.S),
        "fem_rel_tol": fmt(cfg.fem_rel_tol),
        "anchor_left": str(cfg.anchor_left).lower(),
    }
    if cfg.c_range is not None:
        prov["c_range"] = ",".join(fmt(v) for v in cfg.c_range[:2]) + f",{cfg.c_range[2]}"
    else:
        prov["c"] = fmt(cfg.resolved_c())
    if extra:
        prov.update(extra)
    prov["timestamp"] = datetime.now(timezone.utc).isoformat()
    return prov


def _package_version() -> str:
    from . import __version__

    return __version__


def _verdict_grid_2d(rows, columns, x_vals, y_vals, x_col, y_col) -> tuple[tuple[int, ...], ...]:
    vi = columns.index("verdict")
    xi = columns.index(x_col)
    yi = columns.index(y_col)
    xpos = {v: i for i, v in enumerate(x_vals)}
    ypos = {v: i for i, v in enumerate(y_vals)}
    grid = [[1] * len(x_vals) for _ in y_vals]
    seen = [[False] * len(x_vals) for _ in y_vals]
    for row in rows:
        ix, iy = xpos[row[xi]], ypos[row[yi]]
        grid[iy][ix] = grid[iy][ix] and int(row[vi])
        seen[iy][ix] = True
    for iy, srow in enumerate(seen):
        for ix, s in enumerate(srow):
            if not s:
                grid[iy][ix] = 0
    return tuple(tuple(int(v) for v in r) for r in grid)


def run_scan(cfg: ScanConfig, workers: int = 1) -> ScanResult:
    """Evaluate one grid scan, write its CSV (and SVG on request), return it.

    Cell failures are recorded in the row's status and never abort the scan;
    I/O failures do abort.  Row order is the deterministic nested loop over
    the axes, independent of the worker count.
    """
    mode = cfg.mode
    S = cfg.S
    columns = _MODE_COLUMNS[mode]
    extra: dict[str, str] = {}

    if mode == "g-curve":
        ts = _grid(cfg.a_range)
        rows = _map_cells(_cell_g, list(ts), workers)
        axes = {"t": ts}
        grid = (tuple(int(r[columns.index("verdict")]) for r in rows),)
    elif mode in ("transplant-region", "constant-region", "condition-region", "sector-region"):
        alphas = _grid(cfg.alpha_range)
        avals = _grid(cfg.a_range)
        c = cfg.resolved_c()
        tasks = [(al, a) for al in alphas for a in avals]
        fn = {
            "transplant-region": partial(_cell_transplant, c=c, S=S),
            "constant-region": partial(_cell_constant, c=c, S=S),
            "condition-region": partial(_cell_condition, c=c, S=S),
            "sector-region": partial(_cell_sector, c=c, S=S, anchor_left=cfg.anchor_left),
        }[mode]
        rows = _map_cells(fn, tasks, workers)
        axes = {"a": avals, "alpha": alphas}
        grid = _verdict_grid_2d(rows, columns, avals, alphas, "a", "alpha")
    elif mode == "fem-conjecture":
        alphas = _grid(cfg.alpha_range)
        avals = _grid(cfg.a_range)
        cvals = _grid(cfg.c_range)
        tasks = [(al, a, c) for al in alphas for a in avals for c in cvals]
        rows = _map_cells(partial(_cell_fem, S=S, rel_tol=cfg.fem_rel_tol), tasks, workers)
        if len(alphas) > 1:
            axes = {"a": avals, "c": cvals, "alpha": alphas}
            extra["verdict_grid_reduction"] = "and-over-alpha"
        else:
            axes = {"a": avals, "c": cvals}
        grid = _verdict_grid_2d(rows, columns, avals, cvals, "a", "c")
    elif mode == "local-optimality":
        alphas = _grid(cfg.alpha_range)
        rows = _map_cells(partial(_cell_local, S=S), list(alphas), workers)
        axes = {"alpha": alphas}
        grid = (tuple(int(r[columns.index("verdict")]) for r in rows),)
    elif mode == "perimeter-variant":
        alpha = cfg.alpha_range[0]
        avals = _grid(cfg.a_range)
        cvals = _grid(cfg.c_range)
        tasks = [(a, c) for a in avals for c in cvals]
        rows = _map_cells(
            partial(_cell_perimeter, alpha=alpha, S=S, rel_tol=cfg.fem_rel_tol), tasks, workers
        )
        axes = {"a": avals, "c": cvals}
        grid = _verdict_grid_2d(rows, columns, avals, cvals, "a", "c")
    else:  # monotonicity
        alphas = _grid(cfg.alpha_range)
        rows = _map_cells(partial(_cell_monotone, S=S, rel_tol=cfg.fem_rel_tol),
                          list(alphas), workers)
        axes = {"alpha": alphas}
        grid = (tuple(int(r[columns.index("verdict")]) for r in rows),)

    result = ScanResult(
        mode=mode,
        columns=columns,
        rows=tuple(rows),
        axes=axes,
        provenance=_provenance(cfg, extra),
        verdict_grid=grid,
    )
    emit_csv(result, cfg.output_path)
    if cfg.emit_svg:
        emit_svg(result, os.path.splitext(cfg.output_path)[0] + ".svg")
    return result


def verify_local(alpha_list, S: float) -> ScanResult:
    """Criticality/Hessian report at the equilateral point for each alpha.

    Rows above the simple coupling threshold carry a certified verdict (flat
    gradient, negative-definite Hessian within its closed-form caps, C > 0 in
    the quadratic model); rows below it report the same numbers with status
    "no-claim" and no verdict asserted.
    """
    alphas = [float(a) for a in alpha_list]
    if not alphas or any(a >= 0.0 for a in alphas):
        raise DomainError("alpha_list must be non-empty and strictly negative")
    rows = tuple(_cell_local(a, S=S) for a in alphas)
    columns = _MODE_COLUMNS["local-optimality"]
    prov = {
        "version": _package_version(),
        "mode": "local-optimality",
        "alpha_list": ",".join("%.17g" % a for a in alphas),
        "S": "%.17g" % S,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    grid = (tuple(int(r[columns.index("verdict")]) for r in rows),)
    return ScanResult(
        mode="local-optimality",
        columns=columns,
        rows=rows,
        axes={"alpha": tuple(alphas)},
        provenance=prov,
        verdict_grid=grid,
    )


def verify_perimeter_variant(alpha: float, S: float, grid) -> ScanResult:
    """Fixed-perimeter comparison for each (a, c) in the given iterable.

    Each triangle is shrunk onto the equilateral perimeter, FEM-solved, and
    chained against the closed forms: scaled eigenvalue <= scaled equilateral
    value < reference equilateral value.  Margins for both links and their
    combination are reported per cell.
    """
    if alpha >= 0.0:
        raise DomainError(f"alpha must be negative, got {alpha}")
    pairs = [(float(a), float(c)) for a, c in grid]
    if not pairs:
        raise DomainError("empty (a, c) grid")
    rows = tuple(_cell_perimeter(p, alpha=alpha, S=S, rel_tol=1e-6) for p in pairs)
    columns = _MODE_COLUMNS["perimeter-variant"]
    avals = tuple(dict.fromkeys(p[0] for p in pairs))
    cvals = tuple(dict.fromkeys(p[1] for p in pairs))
    prov = {
        "version": _package_version(),
        "mode": "perimeter-variant",
        "alpha": "%.17g" % alpha,
        "S": "%.17g" % S,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    full = len(pairs) == len(avals) * len(cvals)
    if full:
        gridv = _verdict_grid_2d(rows, columns, avals, cvals, "a", "c")
        axes = {"a": avals, "c": cvals}
    else:
        gridv = (tuple(int(r[columns.index("verdict")]) for r in rows),)
        axes = {"cell": tuple(float(i) for i in range(len(pairs)))}
    return ScanResult(
        mode="perimeter-variant",
        columns=columns,
        rows=rows,
        axes=axes,
        provenance=prov,
        verdict_grid=gridv,
    )


def verify_monotone(alpha: float, S: float, rel_tol: float = 1e-5) -> ScanResult:
    """Single-coupling area-monotonicity check across {S/2, S, 2S}.

    Both the closed-form equilateral values and the FEM values must increase
    with the area (FEM within its padded error estimates).
    """
    if alpha >= 0.0:
        raise DomainError(f"alpha must be negative, got {alpha}")
    row = _cell_monotone(alpha, S=S, rel_tol=rel_tol)
    columns = _MODE_COLUMNS["monotonicity"]
    prov = {
        "version": _package_version(),
        "mode": "monotonicity",
        "alpha": "%.17g" % alpha,
        "S": "%.17g" % S,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    return ScanResult(
        mode="monotonicity",
        columns=columns,
        rows=(row,),
        axes={"alpha": (float(alpha),)},
        provenance=prov,
        verdict_grid=((int(row[columns.index("verdict")]),),),
    )


def soundness_sweep(
    alpha_values,
    a_values,
    c: float,
    S: float,
    fem_rel_tol: float = 1e-3,
    max_level: int = 9,
    workers: int = 1,
) -> ScanResult:
    """Cross-check every certificate against the FEM oracle on an (a, alpha) grid.

    For each cell the three trial-function certificates are evaluated; on the
    cells where at least one fires, the extrapolated FEM eigenvalue must sit
    below the equilateral value by ten times its own error estimate.  The
    verdict is 1 for uncertified cells and for certified-and-confirmed cells,
    0 only for a contradiction.
    """
    alphas = [float(x) for x in alpha_values]
    avals = [float(x) for x in a_values]
    if any(a >= 0.0 for a in alphas):
        raise DomainError("alpha values must be strictly negative")
    tasks = [(al, a) for al in alphas for a in avals]
    fn = partial(_soundness_cell, c=c, S=S, rel_tol=fem_rel_tol, max_level=max_level)
    rows = tuple(_map_cells(fn, tasks, workers))
    columns = ("alpha", "a", "delta", "constant_ok", "condition_ok", "certified",
               "lambda_fem", "fem_error", "lambda0", "sound", "verdict", "status")
    prov = {
        "version": _package_version(),
        "mode": "soundness",
        "c": "%.17g" % c,
        "S": "%.17g" % S,
        "fem_rel_tol": "%.17g" % fem_rel_tol,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    grid = _verdict_grid_2d(rows, columns, tuple(avals), tuple(alphas), "a", "alpha")
    return ScanResult(
        mode="soundness",
        columns=columns,
        rows=rows,
        axes={"a": tuple(avals), "alpha": tuple(alphas)},
        provenance=prov,
        verdict_grid=grid,
    )


def _raw_upper_bound(tri, alpha: float, rel_tol: float, max_level: int,
                     min_level: int = 3,
                     sound_target: float | None = None) -> tuple[float, float, bool]:
    """(lambda_h, correction_estimate, settled) from the raw mesh ladder.

    lambda_h is the finest certified level's value itself — a conforming
    upper bound for the true eigenvalue regardless of extrapolation — and
    the estimate is the one-sided Richardson correction still expected
    below it.

    When ``sound_target`` is given the ladder also stops as soon as
    lambda_h + 10*estimate <= sound_target: the true eigenvalue sits below
    the conforming value, so the comparison is already decided and further
    refinement can only reconfirm it.
    """
    lam = lam_prev = None
    lev_prev = 0
    est = math.inf
    sigma0 = None
    for lev in range(min_level, max_level + 1):
        try:
            res = solve_at_level(tri, alpha, lev, sigma0=sigma0)
        except NumericError:
            continue
        lam_prev, lam = lam, res.lambda1
        if lam_prev is not None:
            est = abs(lam - lam_prev) / (4.0 ** (lev - lev_prev) - 1.0)
            drop = 2.0 * abs(lam - lam_prev)
        else:
            drop = 0.1 * abs(lam)
        lev_prev = lev
        if est <= rel_tol * abs(lam):
            return lam, est, True
        if (sound_target is not None and lam_prev is not None
                and lam + 10.0 * est <= sound_target):
            return lam, est, True
        sigma0 = lam - drop - 0.02 * abs(lam) - 1.0
    if lam is None:
        raise NumericError(f"no mesh level up to {max_level} produced a certified eigenvalue")
    if lam_prev is None:
        est = 0.1 * abs(lam)
    return lam, est, False


def _soundness_cell(task, *, c: float, S: float, rel_tol: float, max_level: int) -> tuple:
    alpha, a = task
    try:
        tri = make_triangle(a, c, S)
        delta, delta_ok = transplant_verdict(alpha, tri)
        _, const_ok = constant_bound(alpha, tri)
        try:
            cond_ok = sector_condition(alpha, tri)
        except DomainError:
            cond_ok = False
        certified = delta_ok or const_ok or cond_ok
        lam0 = lambda0(alpha, S)
        if not certified:
            return (alpha, a, delta, int(const_ok), int(cond_ok), 0,
                    _NAN, _NAN, lam0, 1, 1, "ok")
        lam, err, settled = _raw_upper_bound(tri, alpha, rel_tol, max_level,
                                             sound_target=lam0)
        sound = lam <= lam0 - 10.0 * err
        status = "ok" if settled else "unconverged"
        return (alpha, a, delta, int(const_ok), int(cond_ok), 1,
                lam, err, lam0, int(sound), int(sound), status)
    except Exception as exc:  # noqa: BLE001
        return (alpha, a, _NAN, 0, 0, 0, _NAN, _NAN, _NAN, 0, 0, _status_of(exc))


# ---------------------------------------------------------------------------
# serialisation

def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def emit_csv(result: ScanResult, path: str) -> None:
    """Write the scan table: '#'-prefixed provenance, header row, data rows.

    Floats are printed with 17 significant digits so re-parsing reproduces
    them bit-exactly; the in-memory timestamp is deliberately not written,
    keeping the bytes a function of the config alone.
    """
    lines = ["# robintri scan output"]
    for key in sorted(result.provenance):
        if key == "timestamp":
            continue
        lines.append(f"# {key} = {result.provenance[key]}")
    lines.append(",".join(result.columns))
    for row in result.rows:
        lines.append(",".join(_format_cell(v) for v in row))
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


_SVG_OK = "#2d7f5e"
_SVG_BAD = "#b5443c"


def emit_svg(result: ScanResult, path: str) -> None:
    """Render the verdict grid as a two-colour SVG heatmap.

    Axis order follows the result's axes dict (first = horizontal).  The
    output is plain hand-assembled XML with fixed-precision coordinates, so a
    given result always serialises to identical bytes.
    """
    names = list(result.axes)
    xs = result.axes[names[0]]
    ys = result.axes[names[1]] if len(names) > 1 else (0.0,)
    ylabel = names[1] if len(names) > 1 else ""
    grid = result.verdict_grid
    width, height = 640, 480
    ml, mr, mt, mb = 80, 20, 36, 56
    pw, ph = width - ml - mr, height - mt - mb
    nx, ny = len(xs), len(ys)
    cw, ch = pw / nx, ph / ny
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width / 2:.1f}" y="20" font-family="monospace" font-size="14" '
        f'text-anchor="middle">{result.mode}</text>',
    ]
    for iy in range(ny):
        for ix in range(nx):
            colour = _SVG_OK if grid[iy][ix] else _SVG_BAD
            x = ml + ix * cw
            # row 0 at the bottom so the vertical axis increases upward
            y = mt + (ny - 1 - iy) * ch
            parts.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw:.2f}" height="{ch:.2f}" '
                f'fill="{colour}"/>'
            )
    parts.append(
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#000000" stroke-width="1"/>'
    )
    n_ticks = min(5, nx)
    for k in range(n_ticks):
        idx = round(k * (nx - 1) / max(1, n_ticks - 1)) if nx > 1 else 0
        x = ml + (idx + 0.5) * cw
        parts.append(
            f'<text x="{x:.2f}" y="{mt + ph + 18}" font-family="monospace" font-size="11" '
            f'text-anchor="middle">{xs[idx]:.4g}</text>'
        )
    if len(names) > 1:
        n_ticks = min(5, ny)
        for k in range(n_ticks):
            idx = round(k * (ny - 1) / max(1, n_ticks - 1)) if ny > 1 else 0
            y = mt + (ny - 1 - idx + 0.5) * ch
            parts.append(
                f'<text x="{ml - 8}" y="{y:.2f}" font-family="monospace" font-size="11" '
                f'text-anchor="end" dominant-baseline="middle">{ys[idx]:.4g}</text>'
            )
    parts.append(
        f'<text x="{ml + pw / 2:.1f}" y="{height - 14}" font-family="monospace" '
        f'font-size="13" text-anchor="middle">{names[0]}</text>'
    )
    if ylabel:
        parts.append(
            f'<text x="22" y="{mt + ph / 2:.1f}" font-family="monospace" font-size="13" '
            f'text-anchor="middle" transform="rotate(-90 22 {mt + ph / 2:.1f})">{ylabel}</text>'
        )
    parts.append("</svg>")
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# config files

_RANGE_KEYS = ("alpha_range", "a_range", "c_range")
_FLOAT_KEYS = ("c_fixed", "S", "fem_rel_tol")
_BOOL_KEYS = ("emit_svg", "anchor_left")


def parse_config(path: str, overrides: dict | None = None) -> ScanConfig:
    """Read a flat "key = value" config file into a ScanConfig.

    Keys match the ScanConfig fields exactly; ranges are comma triples
    "lo,hi,n", booleans are true/false.  Blank lines and '#' comments are
    ignored.  Entries in overrides (CLI flags) replace file values.
    """
    raw: dict[str, object] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DomainError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DomainError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _RANGE_KEYS:
            pieces = [p.strip() for p in value.split(",")]
            if len(pieces) != 3:
                raise DomainError(f"{path}:{lineno}: {key} needs 'lo,hi,n'")
            try:
                raw[key] = (float(pieces[0]), float(pieces[1]), int(pieces[2]))
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: bad {key}: {exc}") from exc
        elif key in _FLOAT_KEYS:
            try:
                raw[key] = float(value)
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: bad {key}: {exc}") from exc
        elif key in _BOOL_KEYS:
            low = value.lower()
            if low in ("true", "1", "yes"):
                raw[key] = True
            elif low in ("false", "0", "no"):
                raw[key] = False
            else:
                raise DomainError(f"{path}:{lineno}: {key} must be true/false")
        elif key in ("mode", "output_path"):
            raw[key] = value
        else:
            raise DomainError(f"{path}:{lineno}: unknown config key {key!r}")
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    if "mode" not in raw:
        raise DomainError(f"config {path} does not set a mode")
    return ScanConfig(**raw)
