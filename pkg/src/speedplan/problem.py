"""Discretized minimum-time speed planning problem on squared speeds.

Decision vector ``w`` (length ``n``) holds squared speeds at equally spaced
arc-length samples, ``w[0] = w[n-1] = 0``. Interior samples carry jerk
constraints and per-step acceleration/jerk bounds ``A[k]``, ``J[k]`` with
``k = i - 1`` for interior sample ``i`` (0-based). Acceleration rows bound
every step ``(i, i + 1)``; the step leaving sample ``i`` uses ``A[i - 1]``
and the first step, which has no interior sample on its left, uses ``A[0]``.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Any

import numpy as np


class InstanceError(ValueError):
    """Raised when instance data violates its invariants."""


@dataclasses.dataclass(frozen=True, eq=False)
class Instance:
    """Problem data for the discretized planning problem.

    Attributes:
      n: Number of samples (>= 3).
      h: Grid step in meters.
      A: Acceleration bounds, one per interior sample (length n-2).
      J: Jerk bounds, one per interior sample (length n-2).
      w_max: Squared-speed ceiling, length n; endpoints must be 0.
      w_min: Squared-speed floor, length n (defaults to zeros).
      rho: Curvature regularizer added to the central difference (>= 0).
    """

    n: int
    h: float
    A: np.ndarray
    J: np.ndarray
    w_max: np.ndarray
    w_min: np.ndarray | None = None
    rho: float = 0.0

    def __post_init__(self):
        n = int(self.n)
        if n < 3:
            raise InstanceError(f"need n >= 3, got {n}")
        A = np.broadcast_to(np.asarray(self.A, dtype=float), (n - 2,)).copy()
        J = np.broadcast_to(np.asarray(self.J, dtype=float), (n - 2,)).copy()
        w_max = np.asarray(self.w_max, dtype=float).copy()
        w_min = np.zeros(n) if self.w_min is None else np.asarray(self.w_min, dtype=float).copy()
        if w_max.shape != (n,) or w_min.shape != (n,):
            raise InstanceError(f"w_max/w_min must have length n={n}")
        if not self.h > 0:
            raise InstanceError(f"h must be positive, got {self.h}")
        if not (np.all(A > 0) and np.all(J > 0)):
            raise InstanceError("A and J must be positive")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(J)) and np.all(np.isfinite(w_max))):
            raise InstanceError("A, J and w_max must be finite")
        if w_max[0] != 0 or w_max[-1] != 0:
            raise InstanceError("w_max must vanish at both endpoints")
        if np.any(w_min < 0) or np.any(w_min > w_max):
            raise InstanceError("need 0 <= w_min <= w_max")
        if not self.rho >= 0:
            raise InstanceError(f"rho must be nonnegative, got {self.rho}")
        for arr in (A, J, w_max, w_min):
            arr.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "w_max", w_max)
        object.__setattr__(self, "w_min", w_min)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def m(self) -> int:
        """Number of interior samples."""
        return self.n - 2

    @property
    def has_floor(self) -> bool:
        return bool(np.any(self.w_min > 0))

    def replace(self, **changes) -> "Instance":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "n": self.n,
            "h": self.h,
            "A": self.A.tolist(),
            "J": self.J.tolist(),
            "w_max": self.w_max.tolist(),
        }
        if self.has_floor:
            out["w_min"] = self.w_min.tolist()
        if self.rho:
            out["rho"] = self.rho
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Instance":
        try:
            return cls(
                n=int(data["n"]),
                h=float(data["h"]),
                A=data["A"],
                J=data["J"],
                w_max=data["w_max"],
                w_min=data.get("w_min"),
                rho=float(data.get("rho", 0.0)),
            )
        except KeyError as exc:
            raise InstanceError(f"instance is missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InstanceError):
                raise
            raise InstanceError(str(exc)) from None


def load_instance(path: str | Path) -> Instance:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise InstanceError(f"{path}: expected a JSON object")
    return Instance.from_dict(data)


def save_instance(inst: Instance, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(inst.to_dict(), fh)


def objective(inst: Instance, w: np.ndarray) -> float:
    """Traversal time ``sum_i h / sqrt(w_i)`` over interior samples."""
    wi = np.asarray(w, dtype=float)[1:-1]
    if np.any(wi <= 0):
        raise ValueError("objective is infinite: an interior squared speed is <= 0")
    return float(np.sum(inst.h / np.sqrt(wi)))


def delta_w_all(inst: Instance, w: np.ndarray) -> np.ndarray:
    """Scaled second differences for every interior sample (length n-2)."""
    w = np.asarray(w, dtype=float)
    return (w[:-2] - (2.0 + inst.rho) * w[1:-1] + w[2:]) / (inst.h * inst.J)


def delta_w(inst: Instance, w: np.ndarray, i: int) -> float:
    """Scaled second difference at interior sample ``i`` (0-based, 1..n-2)."""
    if not 1 <= i <= inst.n - 2:
        raise IndexError(f"interior index must lie in [1, {inst.n - 2}], got {i}")
    w = np.asarray(w, dtype=float)
    return float((w[i - 1] - (2.0 + inst.rho) * w[i] + w[i + 1]) / (inst.h * inst.J[i - 1]))


def jerk_budget(inst: Instance, w: np.ndarray) -> np.ndarray:
    """``h / sqrt(w_i)`` per interior sample, ``+inf`` where ``w_i <= 0``."""
    wi = np.asarray(w, dtype=float)[1:-1]
    with np.errstate(divide="ignore"):
        return np.where(wi > 0, inst.h / np.sqrt(np.maximum(wi, 0.0)), np.inf)


@dataclasses.dataclass(frozen=True)
class Violations:
    """Largest violation of each constraint family (<= 0 means satisfied)."""

    bounds: float
    accel: float
    pos_jerk: float
    neg_jerk: float
    pos_jerk_each: np.ndarray
    neg_jerk_each: np.ndarray
    tol: float

    @property
    def worst(self) -> float:
        return max(self.bounds, self.accel, self.pos_jerk, self.neg_jerk)

    @property
    def jerk(self) -> float:
        return max(self.pos_jerk, self.neg_jerk)

    @property
    def feasible(self) -> bool:
        return self.worst <= self.tol


def pair_accel(inst: Instance) -> np.ndarray:
    """Acceleration bound of each of the ``n - 1`` steps ``(i, i + 1)``."""
    return np.concatenate((inst.A[:1], inst.A))


def check_feasible(inst: Instance, w: np.ndarray, tol: float = 1e-5) -> Violations:
    """Measure how far ``w`` is from satisfying every constraint.

    Jerk violations are measured as ``+-dw_i - h / sqrt(w_i)``; an interior
    zero has an infinite budget and never violates.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (inst.n,):
        raise ValueError(f"profile must have length {inst.n}")
    bounds = max(
        float(np.max(w - inst.w_max)),
        float(np.max(inst.w_min - w)),
        abs(float(w[0])),
        abs(float(w[-1])),
    )
    step = np.abs(np.diff(w)) - inst.h * pair_accel(inst)
    dw = delta_w_all(inst, w)
    budget = jerk_budget(inst, w)
    with np.errstate(invalid="ignore"):
        pos = np.where(np.isinf(budget), -np.inf, dw - budget)
        neg = np.where(np.isinf(budget), -np.inf, -dw - budget)
    return Violations(
        bounds=bounds,
        accel=float(step.max()),
        pos_jerk=float(pos.max()),
        neg_jerk=float(neg.max()),
        pos_jerk_each=pos,
        neg_jerk_each=neg,
        tol=tol,
    )


def scale(inst: Instance, rho_scale: float, solution=None):
    """Apply the grid scaling ``(h, A, J) -> (r h, A / r, J / r^2)``.

    The squared speeds are unchanged; ``t``, ``x1`` and ``x2`` of a relaxed
    solution are multiplied by ``r``. Returns ``(instance, solution)``.
    """
    r = float(rho_scale)
    if r == 0:
        raise ValueError("scale factor must be nonzero")
    if r < 0:
        raise ValueError("use a positive scale factor; h must stay positive")
    scaled = inst.replace(h=inst.h * r, A=inst.A / r, J=inst.J / r**2)
    if solution is None:
        return scaled, None
    if isinstance(solution, np.ndarray):
        return scaled, solution.copy()
    return scaled, solution.scaled(r)
