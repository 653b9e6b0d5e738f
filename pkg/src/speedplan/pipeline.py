"""Relax, certify, refine: the full planning algorithm."""

from __future__ import annotations

import dataclasses

import numpy as np

from .certify import Certificate, Verdict, certify_primal
from .conic import SolverOptions
from .nonconvex import RefineOptions, RefineResult, local_refine
from .problem import Instance
from .relaxation import RelaxedSolution, solve_relaxation


@dataclasses.dataclass(frozen=True)
class PlanResult:
    w: np.ndarray | None  # best feasible profile, None when none was found
    certificate: Certificate
    relaxed: RelaxedSolution
    refined: RefineResult | None = None

    @property
    def objective(self) -> float:
        return self.certificate.upper_bound


def plan(
    inst: Instance,
    tol: float = 1e-5,
    solver: SolverOptions | None = None,
    refine: RefineOptions | None = None,
) -> PlanResult:
    """Solve the relaxation; if its optimum is infeasible, refine it locally.

    The certificate always brackets the true optimum: the lower bound is the
    relaxation value and the upper bound the time of the returned profile.
    """
    rsol = solve_relaxation(inst, solver)
    cert = certify_primal(inst, rsol, tol)
    if cert.verdict is Verdict.EXACT:
        return PlanResult(w=rsol.w.copy(), certificate=cert, relaxed=rsol)
    if cert.verdict is Verdict.UNKNOWN:
        return PlanResult(w=None, certificate=cert, relaxed=rsol)
    ref = local_refine(inst, rsol, refine)
    if ref.feasible:
        cert = cert.with_upper_bound(ref.objective, method="refined")
        return PlanResult(w=ref.w, certificate=cert, relaxed=rsol, refined=ref)
    return PlanResult(w=None, certificate=cert, relaxed=rsol, refined=ref)
