"""Numerical toolkit for the lowest Robin eigenvalue on triangles.

Closed-form equilateral data, transplanted trial-function bounds, a P1
finite-element reference solver, and parameter-plane scans with certificate
output.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import DomainError, NumericError, PrecisionError, ResourceError
from .geometry import (
    AffineMap,
    TriangleGeometry,
    TriangleParams,
    affine_map,
    b0,
    c0,
    equilateral_params,
    make_triangle,
    perimeter,
    perimeter_min_over_a,
    perimeter_normalizer,
    smallest_angle_data,
)
from .equilateral import (
    EquilateralSolution,
    GroundStateField,
    HessianBounds,
    T0,
    closed_form_norms,
    coupling_elasticity,
    g_root,
    g_threshold,
    ground_state,
    hessian_upper_bounds,
    lambda0,
    local_optimality_alpha_bound,
    solve_equilateral,
)
from .trial import (
    constant_bound,
    delta_transplant,
    form_hat,
    lambda0_lower_bound,
    sector_bound,
    sector_closed_upper,
    sector_condition,
    shape_coefficient,
    small_coupling_functions,
    strictly_below,
    transplant_verdict,
)
from .fem import (
    EigenResult,
    FdDerivatives,
    FemMesh,
    FemSystem,
    assemble,
    build_mesh,
    dump_mesh,
    eigenvalue_converged,
    fd_derivatives_at_equilateral,
    lowest_eigenpair,
    solve_at_level,
)
from .scan import (
    MODES,
    ScanConfig,
    ScanResult,
    emit_csv,
    emit_svg,
    parse_config,
    run_scan,
    soundness_sweep,
    verify_local,
    verify_monotone,
    verify_perimeter_variant,
)

__all__ = [
    "AffineMap",
    "DomainError",
    "EigenResult",
    "EquilateralSolution",
    "FdDerivatives",
    "FemMesh",
    "FemSystem",
    "GroundStateField",
    "HessianBounds",
    "MODES",
    "NumericError",
    "PrecisionError",
    "ResourceError",
    "ScanConfig",
    "ScanResult",
    "T0",
    "TriangleGeometry",
    "TriangleParams",
    "affine_map",
    "assemble",
    "b0",
    "build_mesh",
    "c0",
    "closed_form_norms",
    "constant_bound",
    "coupling_elasticity",
    "delta_transplant",
    "dump_mesh",
    "eigenvalue_converged",
    "emit_csv",
    "emit_svg",
    "equilateral_params",
    "fd_derivatives_at_equilateral",
    "form_hat",
    "g_root",
    "g_threshold",
    "ground_state",
    "hessian_upper_bounds",
    "lambda0",
    "lambda0_lower_bound",
    "local_optimality_alpha_bound",
    "lowest_eigenpair",
    "make_triangle",
    "parse_config",
    "perimeter",
    "perimeter_min_over_a",
    "perimeter_normalizer",
    "run_scan",
    "sector_bound",
    "sector_closed_upper",
    "sector_condition",
    "shape_coefficient",
    "small_coupling_functions",
    "smallest_angle_data",
    "solve_at_level",
    "solve_equilateral",
    "soundness_sweep",
    "strictly_below",
    "transplant_verdict",
    "verify_local",
    "verify_monotone",
    "verify_perimeter_variant",
    "__version__",
]
