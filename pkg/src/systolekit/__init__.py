"""Systolic geometry of piecewise-flat cycles: meshes, length metrics, relative
systoles, cubical extensions, chain fillings and regularity checks."""
from __future__ import annotations

from . import chains, cubical, errors, homotopy, mesh, metric, regularity
from .chains import (CubicalChain, FillingResult, IsoperimetricConstants, boundary, chain_volume,
                     filling_lp, isoperimetric_check, isoperimetric_constants, linf_cell_volume,
                     regularity_constant_A)
from .cubical import (CubeCell, CubeComplex, ExtensionParams, PeriodicLineModel, build_extension,
                      coordinate_map, cube_distance, embed, face_separation_check, image_cycle,
                      injectivity_check, minimal_face, retract_complex, retract_scalar)
from .errors import SystoleKitError
from .homotopy import (EdgeHomomorphism, GroupPresentation, covering_ball, pointwise_systole,
                       relative_systole, systolic_ratio, word_is_trivial)
from .mesh import (PLMetric, Pseudomanifold, SimplicialComplex, simplex_volume, total_volume,
                   validate_pseudomanifold)
from .metric import (BallGrowthProfile, EpsilonNet, GeodesicGraph, alpha_dense_net,
                     ball_volume_profile, build_geodesic_graph, distance, hausdorff_distance,
                     net_distortion_report)
from .regularity import (coarea_check, epsilon_regular_verdict, filling_regular_check,
                         gromov_constant, growth_lemma_check, growth_lower_bound,
                         nerve_count_bound_check, nerve_of_cover, systole_monotonicity_check)

__version__ = "0.1.0"


__all__ = [
    "alpha_dense_net", "annotations", "ball_volume_profile", "BallGrowthProfile", "boundary",
    "build_extension", "build_geodesic_graph", "chain_volume", "chains", "coarea_check",
    "coordinate_map", "covering_ball", "cube_distance", "CubeCell", "CubeComplex", "cubical",
    "CubicalChain", "distance", "EdgeHomomorphism", "embed", "epsilon_regular_verdict",
    "EpsilonNet", "errors", "ExtensionParams", "face_separation_check", "filling_lp",
    "filling_regular_check", "FillingResult", "GeodesicGraph", "gromov_constant",
    "GroupPresentation", "growth_lemma_check", "growth_lower_bound", "hausdorff_distance",
    "homotopy", "image_cycle", "injectivity_check", "isoperimetric_check",
    "isoperimetric_constants", "IsoperimetricConstants", "linf_cell_volume", "mesh", "metric",
    "minimal_face", "nerve_count_bound_check", "nerve_of_cover", "net_distortion_report",
    "PeriodicLineModel", "PLMetric", "pointwise_systole", "Pseudomanifold", "regularity",
    "regularity_constant_A", "relative_systole", "retract_complex", "retract_scalar",
    "simplex_volume", "SimplicialComplex", "systole_monotonicity_check", "SystoleKitError",
    "systolic_ratio", "total_volume", "validate_pseudomanifold", "word_is_trivial",
]
