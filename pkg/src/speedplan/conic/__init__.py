"""Embedded conic interior-point solver (nonnegative orthant + second-order cones)."""

from .cones import Nonneg, SecondOrder
from .ipm import SolverOptions, solve
from .program import ConicProgram, ConicSolution, Status, dump_program, residuals

__all__ = [
    "ConicProgram",
    "ConicSolution",
    "Nonneg",
    "SecondOrder",
    "SolverOptions",
    "Status",
    "dump_program",
    "residuals",
    "solve",
]
