"""Exact cone, chamber and group computations for elliptic-fibration instances."""

from .chamberwalk import (
    BoundaryWallError,
    Chamber,
    GuardTripped,
    PreconditionError,
    cross_wall,
    enumerate_chambers,
    enumerate_up_to_group,
    make_nef,
    movable_precheck,
)
from .conestruct import build_k, build_u, effective_membership, lift_to_absolute, relative_movable_cone
from .groupact import fundamental_domain_check, orbit_reduce, quotient_translation, validate_group_element
from .polycone import PolyCone, from_generators, from_inequalities, intersect
from .varmodel import VarietyInstance, bundled_instance, load_and_validate, load_instance

__version__ = "0.1.0"

__all__ = [
    "BoundaryWallError",
    "Chamber",
    "GuardTripped",
    "PolyCone",
    "PreconditionError",
    "VarietyInstance",
    "build_k",
    "build_u",
    "bundled_instance",
    "cross_wall",
    "effective_membership",
    "enumerate_chambers",
    "enumerate_up_to_group",
    "from_generators",
    "from_inequalities",
    "fundamental_domain_check",
    "intersect",
    "lift_to_absolute",
    "load_and_validate",
    "load_instance",
    "make_nef",
    "movable_precheck",
    "orbit_reduce",
    "quotient_translation",
    "relative_movable_cone",
    "validate_group_element",
]
