"""Risk-aware contingency motion planning with Bayesian intent beliefs."""

from branchplan.frenet import (
    CartesianState,
    FrenetState,
    ReferencePath,
    build_reference_path,
    frenet_to_cartesian,
    project_to_frenet,
    trajectory_curvature,
)

__all__ = [
    "CartesianState",
    "FrenetState",
    "ReferencePath",
    "build_reference_path",
    "frenet_to_cartesian",
    "project_to_frenet",
    "trajectory_curvature",
]
