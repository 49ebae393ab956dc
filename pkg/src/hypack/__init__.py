"""Generalized hyperbolic circle packings on closed triangulated surfaces.

Circles, horocycles and hypercycles are handled uniformly through
log-curvatures ``K = ln k``; target total geodesic curvatures are realized by
curvature flows or by Newton's method on the convex energy.
"""

from .assembly import (
    JacobianMatrix,
    SpectralDecomposition,
    calabi_energy,
    energy,
    energy_along_path,
    fractional_laplace_apply,
    jacobian,
    laplace_apply,
    p_laplace_apply,
    total_curvature,
)
from .flows import FlowSpec, FlowTrace, Status, fit_exponential_rate, integrate, newton_solve, rhs
from .hypgeom import (
    CurvatureClass,
    GeneralizedCircle,
    GeometryError,
    ThreeCircleConfig,
    arc_curvature,
    classify,
    config_jacobian,
    edge_length,
    solve_config,
)
from .surface import (
    AdmissibilityReport,
    SurfaceError,
    TriangulatedSurface,
    admissible,
    bundled,
    icosahedron,
    octahedron,
    tetrahedron,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityReport",
    "admissible",
    "arc_curvature",
    "bundled",
    "calabi_energy",
    "classify",
    "config_jacobian",
    "CurvatureClass",
    "edge_length",
    "energy",
    "energy_along_path",
    "fit_exponential_rate",
    "FlowSpec",
    "FlowTrace",
    "fractional_laplace_apply",
    "GeneralizedCircle",
    "GeometryError",
    "icosahedron",
    "integrate",
    "jacobian",
    "JacobianMatrix",
    "laplace_apply",
    "newton_solve",
    "octahedron",
    "p_laplace_apply",
    "rhs",
    "solve_config",
    "SpectralDecomposition",
    "Status",
    "SurfaceError",
    "tetrahedron",
    "ThreeCircleConfig",
    "total_curvature",
    "TriangulatedSurface",
    "validate",
]
