"""HEDAC multi-agent area surveying on irregular domains.

A Helmholtz potential solved with quadratic finite elements steers
constant-speed agents with a bounded turn rate; an escape-route maneuver
optimizer keeps them clear of the boundary and of each other.
"""

from hedac.geometry import (
    DomainGeometry,
    MeshError,
    Polygon,
    TriMesh,
    circle_circle_intersection_area,
    circle_outside_domain_area,
    distance_to_boundary,
    load_mesh,
    locate_point,
    write_mesh,
)
from hedac.fem import (
    HelmholtzSystem,
    assemble,
    eval_field,
    eval_gradient,
    factorize,
    solve_potential,
)
from hedac.coverage import SensingFunction, TargetDensity
from hedac.dubins import AgentState
from hedac.avoidance import EscapeRoutes, ManeuverProblem

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "DomainGeometry",
    "EscapeRoutes",
    "HelmholtzSystem",
    "ManeuverProblem",
    "MeshError",
    "Polygon",
    "SensingFunction",
    "TargetDensity",
    "TriMesh",
    "assemble",
    "circle_circle_intersection_area",
    "circle_outside_domain_area",
    "distance_to_boundary",
    "eval_field",
    "eval_gradient",
    "factorize",
    "load_mesh",
    "locate_point",
    "solve_potential",
    "write_mesh",
]
