"""Computational geometry on the manifold of SPD matrices.

epsilon-ball hulls (finite horoball intersections approximating the
geodesic convex hull) and epsilon-approximate horo-center points.
"""

from .ballhull import BallHull, build_eps_ball_hull, hull_contains
from .centerpt import CenterResult, approx_horo_center, depth_threshold
from .dirgrid import DirectionGrid, angle_distance, build_grid, givens_decompose, grid_resolution
from .estimators import EpsilonBallHull, HoroCenter, check_spd_array
from .exceptions import DomainError, NumericalError, PDGeoError, ResourceError, SolverError
from .horofn import Flat, Horoball, Horofunction, busemann, horo_project, horoextent
from .symcore import (
    Geodesic,
    geodesic_anisotropy,
    geodesic_between,
    metric_dist,
    spd_exp,
    spd_log,
    sym_eig,
)

__version__ = "0.1.0"

__all__ = [
    "BallHull", "CenterResult", "DirectionGrid", "DomainError", "EpsilonBallHull", "Flat",
    "Geodesic", "HoroCenter", "Horoball", "Horofunction", "NumericalError", "PDGeoError",
    "ResourceError", "SolverError", "angle_distance", "approx_horo_center", "build_eps_ball_hull",
    "build_grid", "busemann", "check_spd_array", "depth_threshold", "geodesic_anisotropy",
    "geodesic_between", "givens_decompose", "grid_resolution", "horo_project", "horoextent",
    "hull_contains", "metric_dist", "spd_exp", "spd_log", "sym_eig",
]
