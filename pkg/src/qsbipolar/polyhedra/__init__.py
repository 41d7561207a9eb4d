"""Exact polyhedral kernel: LP, projection, containment, polars."""
from .lp import CertificateError, LpOutcome, solve_lp
from .hpoly import (
    ContainmentVerdict,
    FinitePointSet,
    HPolyhedron,
    LinearFunctional,
    contains,
    cylinder,
    downset_hull,
    lp_optimize,
    polar,
    pullback,
    remove_redundant,
    same_set,
    solid_downset,
    support_value,
)
from .fm import REDUNDANCY_THRESHOLD, eliminate
from .vertices import vertices

__all__ = [
    "CertificateError", "LpOutcome", "solve_lp", "ContainmentVerdict", "FinitePointSet",
    "HPolyhedron", "LinearFunctional", "contains", "cylinder", "downset_hull", "lp_optimize",
    "polar", "pullback", "remove_redundant", "same_set", "solid_downset", "support_value",
    "REDUNDANCY_THRESHOLD", "eliminate", "vertices",
]
