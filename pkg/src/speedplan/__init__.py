"""Minimum-time speed planning with jerk limits via a convex relaxation."""

from .certify import Certificate, Verdict, ceiling_precheck, certify_primal, structure_checks
from .dual import AscentOptions, DualPoint, dual_ascend, dual_exactness, dual_inner_solution
from .geometry import PathSpec, load_path, speed_ceiling
from .nonconvex import brute_force, local_refine
from .pipeline import PlanResult, plan
from .problem import Instance, InstanceError, check_feasible, load_instance, objective, save_instance
from .relaxation import RelaxedSolution, build_socp, solve_relaxation

__all__ = [
    "AscentOptions",
    "Certificate",
    "DualPoint",
    "Instance",
    "InstanceError",
    "PathSpec",
    "PlanResult",
    "RelaxedSolution",
    "Verdict",
    "brute_force",
    "build_socp",
    "ceiling_precheck",
    "certify_primal",
    "check_feasible",
    "dual_ascend",
    "dual_exactness",
    "dual_inner_solution",
    "load_instance",
    "load_path",
    "local_refine",
    "objective",
    "plan",
    "save_instance",
    "solve_relaxation",
    "speed_ceiling",
    "structure_checks",
]
