"""Velocity coordination for unsignalized intersections."""

from intercoord._core import (
    AssemblyError,
    Conflict,
    PlanningError,
    ScenarioError,
    VelocityProfile,
    oracle_solve,
    select,
    simulate,
    solve,
    synchronize,
    to_dot,
)

__all__ = [
    "AssemblyError",
    "Conflict",
    "PlanningError",
    "ScenarioError",
    "VelocityProfile",
    "oracle_solve",
    "select",
    "simulate",
    "solve",
    "synchronize",
    "to_dot",
]
