"""Casimir forces from imaginary-frequency Green's functions on a grid."""

from .materials import (
    ConstantDielectric,
    Drude,
    Material,
    PerfectMetal,
    Vacuum,
    PERFECT_METAL,
    VACUUM,
    drude_gold_preset,
    epsilon_iw,
)
from .geometry import Body, Disk, Rectangle, Scene, Slab, HalfPlaneSlab, rasterize, shift_body
from .grid_operator import OperatorSpec, apply, assemble, point_source
from .linear_solver import SolveOptions, solve, solve_dense_oracle
from .green_stress import (
    StressContour,
    FieldCorrelations,
    StressSample,
    ForceResult,
    box_contour,
    default_contour,
    correlations_at,
    stress_at,
    contour_integral,
    subtracted_contour_integral,
    stress_map,
)
from .quadrature import QuadratureSpec, integrate_w, integrate_kz, z_invariant_weight

__version__ = "0.1.0"
