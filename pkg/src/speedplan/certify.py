"""Exactness certificates for the relaxation.

A relaxed optimum whose ``w`` already satisfies the nonconvex jerk
constraints is optimal for the original problem, so the interval
``[g(t*), f(w)]`` collapses to a point. Otherwise the certificate lists the
violating samples and leaves the upper bound open until a feasible profile
is found.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .problem import Instance, check_feasible
from .relaxation import RelaxedSolution


class Verdict(str, enum.Enum):
    EXACT = "exact"
    INEXACT = "inexact"
    UNKNOWN = "unknown"


@dataclasses.dataclass(frozen=True)
class Certificate:
    """Verdict plus the bound interval ``[lower_bound, upper_bound]``.

    ``violations`` maps interior sample index (0-based, full-vector indexing)
    to the largest jerk violation there. ``gap_rel`` is ``None`` while the
    upper bound is infinite.
    """

    verdict: Verdict
    lower_bound: float
    upper_bound: float = math.inf
    max_pos_jerk_viol: float = 0.0
    max_neg_jerk_viol: float = 0.0
    violations: tuple[tuple[int, float], ...] = ()
    method: str = "primal"
    tol: float = 1e-5

    def __post_init__(self):
        if self.upper_bound < self.lower_bound - 1e-9 * max(1.0, abs(self.lower_bound)):
            raise ValueError("upper bound below lower bound")

    @property
    def exact(self) -> bool:
        return self.verdict is Verdict.EXACT

    @property
    def inexact_indices(self) -> list[int]:
        return [i for i, _ in self.violations]

    @property
    def gap_rel(self) -> float | None:
        if not math.isfinite(self.upper_bound):
            return None
        if self.lower_bound <= 0:
            return 0.0 if self.upper_bound == self.lower_bound else None
        return max(0.0, (self.upper_bound - self.lower_bound) / self.lower_bound)

    def with_upper_bound(self, upper: float, method: str | None = None) -> "Certificate":
        return dataclasses.replace(
            self, upper_bound=max(float(upper), self.lower_bound), method=method or self.method
        )

    def to_dict(self) -> dict[str, Any]:
        def num(x):
            return x if math.isfinite(x) else None

        return {
            "verdict": self.verdict.value,
            "lower_bound": num(self.lower_bound),
            "upper_bound": num(self.upper_bound),
            "gap_rel": self.gap_rel,
            "max_pos_jerk_viol": self.max_pos_jerk_viol,
            "max_neg_jerk_viol": self.max_neg_jerk_viol,
            "violations": [{"index": i, "magnitude": v} for i, v in self.violations],
            "method": self.method,
            "tol": self.tol,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Certificate":
        def num(x, default):
            return default if x is None else float(x)

        return cls(
            verdict=Verdict(data["verdict"]),
            lower_bound=num(data.get("lower_bound"), -math.inf),
            upper_bound=num(data.get("upper_bound"), math.inf),
            max_pos_jerk_viol=float(data.get("max_pos_jerk_viol", 0.0)),
            max_neg_jerk_viol=float(data.get("max_neg_jerk_viol", 0.0)),
            violations=tuple((int(v["index"]), float(v["magnitude"])) for v in data.get("violations", [])),
            method=data.get("method", "primal"),
            tol=float(data.get("tol", 1e-5)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Certificate":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _finite(x: float) -> float:
    # violations at w_i = 0 come back as -inf; report them as 0
    return float(x) if math.isfinite(x) else 0.0


def certify_primal(inst: Instance, rsol: RelaxedSolution, tol: float = 1e-5) -> Certificate:
    """Check whether the relaxed ``w*`` is feasible for the nonconvex problem."""
    lower = rsol.objective
    if not rsol.ok:
        return Certificate(Verdict.UNKNOWN, lower_bound=-math.inf, tol=tol)
    rep = check_feasible(inst, rsol.w, tol)
    pos, neg = rep.pos_jerk_each, rep.neg_jerk_each
    worst = np.maximum(pos, neg)
    bad = np.flatnonzero(worst > tol)
    violations = tuple((int(k + 1), float(worst[k])) for k in bad)
    common = dict(
        lower_bound=lower,
        max_pos_jerk_viol=max(_finite(rep.pos_jerk), 0.0),
        max_neg_jerk_viol=max(_finite(rep.neg_jerk), 0.0),
        violations=violations,
        tol=tol,
    )
    if rep.feasible:
        return Certificate(Verdict.EXACT, upper_bound=lower, **common)
    if not violations:
        # jerk rows hold but a linear row is off by more than tol: solver trouble
        return Certificate(Verdict.UNKNOWN, **common)
    return Certificate(Verdict.INEXACT, **common)


@dataclasses.dataclass(frozen=True)
class StructureReport:
    neg_jerk_clean: bool
    pos_viol_at_ceiling: bool
    neg_violations: tuple[int, ...]
    pos_off_ceiling: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return self.neg_jerk_clean and self.pos_viol_at_ceiling


def structure_checks(inst: Instance, rsol: RelaxedSolution | np.ndarray, tol: float = 1e-6) -> StructureReport:
    """Check the sign pattern of jerk violations at a relaxed optimum.

    On the base problem negative-jerk rows are never violated and a
    positive-jerk row can only be violated where ``w`` sits on its ceiling.
    """
    w = rsol if isinstance(rsol, np.ndarray) else rsol.w
    rep = check_feasible(inst, w, tol)
    neg = np.flatnonzero(rep.neg_jerk_each > tol) + 1
    pos = np.flatnonzero(rep.pos_jerk_each > tol) + 1
    wmax = inst.w_max
    off = pos[w[pos] < wmax[pos] - tol * (1.0 + wmax[pos])]
    return StructureReport(
        neg_jerk_clean=neg.size == 0,
        pos_viol_at_ceiling=off.size == 0,
        neg_violations=tuple(int(i) for i in neg),
        pos_off_ceiling=tuple(int(i) for i in off),
    )


def ceiling_excess(inst: Instance) -> np.ndarray:
    """Positive-jerk excess ``dw_i - h / sqrt(w_i)`` of the ceiling profile itself."""
    wm = inst.w_max
    lhs = (wm[:-2] - (2.0 + inst.rho) * wm[1:-1] + wm[2:]) / (inst.h * inst.J)
    with np.errstate(divide="ignore"):
        rhs = np.where(wm[1:-1] > 0, inst.h / np.sqrt(np.maximum(wm[1:-1], 0.0)), np.inf)
    return lhs - rhs


def ceiling_precheck(inst: Instance) -> bool:
    """True when the ceiling profile satisfies every positive-jerk row.

    On the base problem this guarantees an exact relaxation without solving.
    """
    return bool(np.all(ceiling_excess(inst) <= 0))
