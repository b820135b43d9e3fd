"""extlab: numerical workbench for weighted extension-operator inequalities."""

from extlab.geometry import (
    BoxGrid,
    DirectionSet,
    PhaseGrid,
    ResolutionError,
    SphereGrid,
    build_sphere_grid,
    cantor_direction_set,
    cap_set,
    cap_union_set,
    full_set,
    midpoint_set,
    reflect,
)

__all__ = [
    "BoxGrid",
    "DirectionSet",
    "PhaseGrid",
    "ResolutionError",
    "SphereGrid",
    "build_sphere_grid",
    "cantor_direction_set",
    "cap_set",
    "cap_union_set",
    "full_set",
    "midpoint_set",
    "reflect",
]
