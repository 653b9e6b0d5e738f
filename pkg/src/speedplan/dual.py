"""Lagrangian dual of the planning problem and projected supergradient ascent.

Multipliers ``lam``/``gam`` price the positive/negative jerk rows, one per
interior sample, and ``alpha``/``beta`` the forward/backward acceleration
rows, one per step ``(p, p + 1)`` for ``p = 0..n-2``. After eliminating ``t`` the inner problem separates into
scalar problems ``min (1 - lam - gam) h / sqrt(w) + G w`` over the box, with a
closed-form minimizer. Its value ``F`` is a lower bound on both the
relaxation and the original optimum for every feasible multiplier.
"""

from __future__ import annotations

import dataclasses
import enum

import numpy as np

from .problem import Instance, delta_w_all, pair_accel


class Region(enum.IntEnum):
    """Which closed-form branch gives the inner minimizer at a sample."""

    STATIONARY = 1  # interior stationary point below the ceiling
    CEILING = 2  # objective weight positive, minimizer on the ceiling
    CEILING_SATURATED = 3  # lam + gam = 1 and G < 0
    FLOOR = 4  # lam + gam = 1 and G > 0
    TIE = 5  # lam + gam = 1 and G = 0, any w in the box is optimal


@dataclasses.dataclass(frozen=True)
class DualPoint:
    lam: np.ndarray
    gam: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    value: float = float("nan")

    def __post_init__(self):
        for name in ("lam", "gam", "alpha", "beta"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @classmethod
    def zeros(cls, m: int) -> "DualPoint":
        return cls(np.zeros(m), np.zeros(m), np.zeros(m + 1), np.zeros(m + 1))

    def is_feasible(self, tol: float = 1e-12) -> bool:
        parts = (self.lam, self.gam, self.alpha, self.beta)
        return all(np.all(p >= -tol) for p in parts) and bool(np.all(self.lam + self.gam <= 1 + tol))


@dataclasses.dataclass(frozen=True)
class InnerSolution:
    w: np.ndarray
    value: float
    gamma_coef: np.ndarray  # G_i, the linear coefficient of w_i
    region: np.ndarray  # Region per interior sample


def _second_diff_adjoint(inst: Instance, mult: np.ndarray) -> np.ndarray:
    """Coefficient of ``w_j`` in ``sum_i mult_i dw_i`` for interior ``j``."""
    q = mult / (inst.h * inst.J)
    out = -(2.0 + inst.rho) * q
    out[1:] += q[:-1]
    out[:-1] += q[1:]
    return out


def gamma_coefficients(inst: Instance, omega: DualPoint) -> np.ndarray:
    """``G_i = D(lam)_i - D(gam)_i + beta_i - alpha_i - beta_{i-1} + alpha_{i-1}``.

    Step multipliers are indexed by the left sample, so interior ``i`` sees
    steps ``i - 1`` and ``i``.
    """
    G = _second_diff_adjoint(inst, omega.lam) - _second_diff_adjoint(inst, omega.gam)
    a, b = omega.alpha, omega.beta
    return G + (b[1:] - a[1:]) + (a[:-1] - b[:-1])


def dual_inner_solution(inst: Instance, omega: DualPoint, sat_tol: float = 0.0) -> InnerSolution:
    """Closed-form minimizer ``w(omega)`` of the Lagrangian and its value ``F``.

    ``sat_tol`` widens the test ``lam + gam = 1``. In the tie case the
    lowest admissible value (0 on the base problem) is returned.
    """
    m = inst.m
    shapes = (omega.lam.shape, omega.gam.shape, omega.alpha.shape, omega.beta.shape)
    if shapes != ((m,), (m,), (m + 1,), (m + 1,)):
        raise ValueError(f"need jerk multipliers of length {m} and step multipliers of length {m + 1}")
    if not omega.is_feasible():
        raise ValueError("infeasible multipliers: need all >= 0 and lam + gam <= 1")
    h = inst.h
    lo, hi = inst.w_min[1:-1], inst.w_max[1:-1]
    c = np.maximum(1.0 - omega.lam - omega.gam, 0.0)
    G = gamma_coefficients(inst, omega)
    sat = c <= sat_tol

    w = np.empty(m)
    region = np.empty(m, dtype=np.int64)
    pos = G > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = np.where(pos & ~sat, (c * h / (2.0 * np.where(pos, G, 1.0))) ** (2.0 / 3.0), np.inf)
    r1 = ~sat & pos & (stat <= hi)
    r2 = ~sat & ~r1
    r3 = sat & (G < 0)
    r4 = sat & pos
    r5 = sat & (G == 0)
    w[r1] = np.maximum(stat[r1], lo[r1])
    w[r2 | r3] = hi[r2 | r3]
    w[r4 | r5] = lo[r4 | r5]
    region[r1], region[r2], region[r3] = Region.STATIONARY, Region.CEILING, Region.CEILING_SATURATED
    region[r4], region[r5] = Region.FLOOR, Region.TIE

    with np.errstate(divide="ignore", invalid="ignore"):
        barrier = np.where(c > 0, c * h / np.sqrt(w), 0.0)
    Fi = barrier + G * w
    value = float(Fi.sum() - np.sum((omega.alpha + omega.beta) * h * pair_accel(inst)))
    return InnerSolution(w=w, value=value, gamma_coef=G, region=region)


def supergradient(inst: Instance, w_int: np.ndarray, cap: float) -> tuple[np.ndarray, ...]:
    """Constraint values at ``w(omega)``: a supergradient of ``F``.

    ``h / sqrt(w)`` is capped at ``cap`` where ``w = 0``; the cap only
    affects the length of steps that already push ``lam + gam`` below 1.
    """
    w = np.concatenate(([0.0], w_int, [0.0]))
    dw = delta_w_all(inst, w)
    with np.errstate(divide="ignore"):
        budget = np.where(w_int > 0, inst.h / np.sqrt(np.maximum(w_int, 0.0)), np.inf)
    budget = np.minimum(budget, cap)
    step = np.diff(w)
    hA = inst.h * pair_accel(inst)
    return dw - budget, -dw - budget, step - hA, -step - hA


def project(lam, gam, alpha, beta):
    """Euclidean projection onto ``{lam, gam >= 0, lam + gam <= 1}`` x ``{alpha, beta >= 0}``."""
    lam0, gam0 = np.asarray(lam, dtype=float), np.asarray(gam, dtype=float)
    lam, gam = np.maximum(lam0, 0.0), np.maximum(gam0, 0.0)
    over = lam + gam > 1.0
    if over.any():
        # closest point of the simplex edge lam + gam = 1, clipped to its ends
        d = 0.5 * (lam0[over] + gam0[over] - 1.0)
        lo = np.clip(lam0[over] - d, 0.0, 1.0)
        lam[over], gam[over] = lo, 1.0 - lo
    return lam, gam, np.maximum(alpha, 0.0), np.maximum(beta, 0.0)


@dataclasses.dataclass(frozen=True)
class AscentOptions:
    iters: int = 5000
    step: float = 1.0  # initial step; adapted by backtracking
    start: DualPoint | None = None


@dataclasses.dataclass(frozen=True)
class AscentResult:
    best: DualPoint
    history: np.ndarray  # F at the start and after every iteration
    best_iter: int


def _jerk_metric(inst: Instance) -> np.ndarray:
    # lam_i and gam_i act through lam_i / (h J_i), so small J_i means a stiff
    # coordinate; equal weights per pair keep the projection exact. The full
    # 1 / J_i^2 curvature ratio over-damps, the square root of it works well
    return inst.J / inst.J.max()


def _dot(xs, ys) -> float:
    return sum(float(x @ y) for x, y in zip(xs, ys))


def dual_ascend(inst: Instance, opts: AscentOptions | None = None) -> AscentResult:
    """Accelerated projected (super)gradient ascent on ``F``; returns the best iterate.

    ``F`` is differentiable wherever ``lam + gam < 1`` because the inner
    problem is then strictly convex, so each step is a projected gradient
    step from an extrapolated point, in a diagonal metric that damps the
    jerk multipliers of samples with small ``J_i``. The step length backtracks until the
    quadratic lower model holds, and momentum restarts whenever ``F`` drops.
    Every evaluated ``F`` is a valid lower bound, so the best one is kept.
    """
    opts = opts or AscentOptions()
    m = inst.m
    omega = opts.start or DualPoint.zeros(m)
    wmax = inst.w_max[1:-1]
    wpos = wmax[wmax > 0]
    cap = 10.0 * inst.h / np.sqrt(wpos.min() if wpos.size else 1.0) + 1.0

    def evaluate(x):
        inner = dual_inner_solution(inst, DualPoint(*x))
        return inner.value, supergradient(inst, inner.w, cap)

    x = list(project(*(np.array(v, dtype=float) for v in (omega.lam, omega.gam, omega.alpha, omega.beta))))
    pj = _jerk_metric(inst)
    metric = (pj, pj, np.ones(m + 1), np.ones(m + 1))
    y = [v.copy() for v in x]
    f_y, g_y = evaluate(y)
    inv_step = 1.0 / opts.step
    theta = 1.0
    hist = np.empty(opts.iters + 1)
    hist[0] = f_y
    best, best_iter, f_prev = DualPoint(*(v.copy() for v in x), value=f_y), 0, f_y
    for k in range(1, opts.iters + 1):
        while True:
            z = list(project(*(v + D * g / inv_step for v, g, D in zip(y, g_y, metric))))
            f_z, _ = evaluate(z)
            d = [a - b for a, b in zip(z, y)]
            model = f_y + _dot(g_y, d) - 0.5 * inv_step * _dot(d, [v / D for v, D in zip(d, metric)])
            # the cap only matters at kinks, where the model need not hold
            if f_z >= model - 1e-12 * abs(f_y) or inv_step > 1e12:
                break
            inv_step *= 2.0
        hist[k] = f_z
        if f_z > best.value:
            best, best_iter = DualPoint(*(v.copy() for v in z), value=f_z), k
        theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        mom = (theta - 1.0) / theta_next
        if f_z < f_prev:
            theta_next, mom = 1.0, 0.0
        f_prev = f_z
        y = list(project(*(a + mom * (a - b) for a, b in zip(z, x))))
        x, theta = z, theta_next
        f_y, g_y = evaluate(y)
        inv_step *= 0.9
    return AscentResult(best=best, history=hist, best_iter=best_iter)


class DualVerdict(str, enum.Enum):
    CERTIFIED_EXACT = "certified_exact"
    INCONCLUSIVE = "inconclusive"


@dataclasses.dataclass(frozen=True)
class DualExactness:
    verdict: DualVerdict
    saturated: tuple[int, ...]  # samples with lam + gam ~ 1
    suspect: tuple[int, ...]  # saturated samples with lam ~ 1 and G < 0


def dual_exactness(inst: Instance, omega: DualPoint, tol: float = 1e-6) -> DualExactness:
    """Certify exactness when every ``lam + gam`` stays below 1.

    Indices are 0-based full-vector sample indices.
    """
    s = omega.lam + omega.gam
    sat = np.flatnonzero(s >= 1.0 - tol)
    G = gamma_coefficients(inst, omega)
    suspect = sat[(omega.lam[sat] >= 1.0 - tol) & (G[sat] < 0)]
    verdict = DualVerdict.CERTIFIED_EXACT if sat.size == 0 else DualVerdict.INCONCLUSIVE
    return DualExactness(
        verdict=verdict,
        saturated=tuple(int(k + 1) for k in sat),
        suspect=tuple(int(k + 1) for k in suspect),
    )
