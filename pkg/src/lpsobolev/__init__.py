"""Discrete L_p Minkowski problems, optimal Sobolev bodies and affine Sobolev inequalities.

The modules build on each other:

``geometry``       polytopes, sphere measures, L_p mixed volumes
``solver``         the discrete L_p Minkowski problem
``pwa``            piecewise-affine functions and their gradient measures
``sphere``         spherical quadrature, projection bodies, affine energies
``rearrangement``  distribution functions and convex symmetrization
``harness``        inequality checks over seeded corpora
``cli``            command line front end
"""
from .errors import (
    DegenerateDirection,
    DimensionMismatch,
    DivergentIntegral,
    EmptyInterior,
    EmptyMeasure,
    HemisphereViolation,
    InputError,
    LpSobolevError,
    MeshOverlayFailure,
    NonpositiveSupport,
    NotConverged,
    QuadratureMissing,
    SingularMatrix,
    TrivialFunction,
    UnboundedBody,
)
from .geometry import (
    DiscreteSphereMeasure,
    Polytope,
    SupportBody,
    ball,
    box,
    canonicalize,
    from_vertices,
    lp_combination,
    lp_mixed_volume,
    lp_surface_measure,
    polar_polytope,
    polar_volume,
    regular_polygon,
    transform,
)
from .pwa import (
    PwaFunction,
    compose_linear,
    cone_function,
    directional_energy,
    gradient_measure,
    lattice_join,
    lattice_meet,
    lp_star_norm,
    sobolev_body,
    sobolev_body_normalized,
)
from .rearrangement import (
    RadialConvexFunction,
    RadialProfile,
    convex_symmetrization,
    decreasing_rearrangement,
    distribution_function,
    radial_gradient_norm,
    xi_factor,
)
from .solver import SolverConfig, SolverTrace, blaschke_sum, hemisphere_check, solve, solve_normalized
from .sphere import (
    EnergyValue,
    SphericalQuadrature,
    affine_energy,
    build_quadrature,
    cosine_transform_plus,
    normalized_projection_body,
    projection_body,
)

__version__ = "0.1.0"

__all__ = [
    "affine_energy",
    "ball",
    "blaschke_sum",
    "box",
    "build_quadrature",
    "canonicalize",
    "compose_linear",
    "cone_function",
    "convex_symmetrization",
    "cosine_transform_plus",
    "decreasing_rearrangement",
    "DegenerateDirection",
    "DimensionMismatch",
    "directional_energy",
    "DiscreteSphereMeasure",
    "distribution_function",
    "DivergentIntegral",
    "EmptyInterior",
    "EmptyMeasure",
    "EnergyValue",
    "from_vertices",
    "gradient_measure",
    "hemisphere_check",
    "HemisphereViolation",
    "InputError",
    "lattice_join",
    "lattice_meet",
    "lp_combination",
    "lp_mixed_volume",
    "lp_star_norm",
    "lp_surface_measure",
    "LpSobolevError",
    "MeshOverlayFailure",
    "NonpositiveSupport",
    "normalized_projection_body",
    "NotConverged",
    "polar_polytope",
    "polar_volume",
    "Polytope",
    "projection_body",
    "PwaFunction",
    "QuadratureMissing",
    "radial_gradient_norm",
    "RadialConvexFunction",
    "RadialProfile",
    "regular_polygon",
    "SingularMatrix",
    "sobolev_body",
    "sobolev_body_normalized",
    "solve",
    "solve_normalized",
    "SolverConfig",
    "SolverTrace",
    "SphericalQuadrature",
    "SupportBody",
    "transform",
    "TrivialFunction",
    "UnboundedBody",
    "xi_factor",
]
