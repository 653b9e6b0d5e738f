"""Path description and the curvature-limited squared-speed ceiling."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np


class PathError(ValueError):
    pass


@dataclasses.dataclass(frozen=True, eq=False)
class PathSpec:
    """Arc-length parameterized path described by curvature samples.

    ``samples`` is an ``(N, 2)`` array of ``(s, k)`` pairs with ``s`` strictly
    increasing from 0 to ``s_f``. ``a_t_max`` and ``j_max`` are optional
    tangential acceleration and jerk limits carried along for convenience.
    """

    samples: np.ndarray
    s_f: float
    v_max: float
    a_n_max: float
    a_t_max: float | None = None
    j_max: float | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 2 or samples.shape[0] < 2:
            raise PathError("samples must be a list of at least two [s, k] pairs")
        s = samples[:, 0]
        if np.any(np.diff(s) <= 0):
            raise PathError("sample positions must be strictly increasing")
        if s[0] != 0 or not np.isclose(s[-1], self.s_f) or self.s_f <= 0:
            raise PathError("samples must span [0, s_f] with s_f > 0")
        if not (self.v_max > 0 and self.a_n_max > 0):
            raise PathError("v_max and a_n_max must be positive")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_dict(cls, data: dict) -> "PathSpec":
        try:
            return cls(
                samples=data["samples"],
                s_f=float(data["s_f"]),
                v_max=float(data["v_max"]),
                a_n_max=float(data["a_n_max"]),
                a_t_max=data.get("a_t_max"),
                j_max=data.get("j_max"),
            )
        except KeyError as exc:
            raise PathError(f"path is missing field {exc}") from None


def load_path(path: str | Path) -> PathSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PathError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise PathError(f"{path}: expected a JSON object")
    return PathSpec.from_dict(data)


def grid(path: PathSpec, n: int) -> np.ndarray:
    if n < 3:
        raise PathError(f"need n >= 3 grid points, got {n}")
    return np.linspace(0.0, path.s_f, n)


def speed_ceiling(path: PathSpec, n: int) -> np.ndarray:
    """Squared-speed ceiling ``min(v_max^2, a_n_max / |k(s_i)|)`` on ``n`` points.

    Curvature is linearly interpolated between samples; zero curvature gives
    ``v_max^2``.
    """
    s = grid(path, n)
    k = np.abs(np.interp(s, path.samples[:, 0], path.samples[:, 1]))
    with np.errstate(divide="ignore", over="ignore"):
        lateral = np.where(k > 0, path.a_n_max / np.where(k > 0, k, 1.0), np.inf)
    return np.minimum(path.v_max**2, lateral)
