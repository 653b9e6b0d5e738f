"""Convex relaxation of the planning problem and its second-order cone form.

The relaxation replaces ``t_i = h / sqrt(w_i)`` by ``t_i >= h / sqrt(w_i)``
and minimizes ``sum t_i`` subject to ``t_i >= |dw_i|`` plus the linear
acceleration and bound constraints. ``t >= h / sqrt(w)`` is written with two
auxiliaries ``x1, x2 >= 0`` and three 3-dimensional second-order cones::

    ||(2 x2 / sqrt(h), t - 1)|| <= t + 1        (x2^2 <= t h)
    ||(2 x1 / sqrt(h), t - w)|| <= t + w        (x1^2 <= t w h)
    ||(2 h, x2 - x1)||          <= x2 + x1      (h^2 <= x1 x2)
"""

from __future__ import annotations

import dataclasses
import time

import numpy as np
import scipy.sparse as sp

from .conic import ConicProgram, ConicSolution, Nonneg, SecondOrder, SolverOptions, Status, solve
from .problem import Instance, InstanceError, delta_w_all, pair_accel


@dataclasses.dataclass(frozen=True)
class Layout:
    """Column and row bookkeeping for the standard-form relaxation."""

    m: int
    free: np.ndarray  # interior indices whose w is a decision variable
    w_col: np.ndarray  # column of w_k, -1 where w_k is fixed
    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    soc: np.ndarray  # (m, 3, 3): cone block j of sample k, coordinates 0..2
    n_cols: int
    n_rows: int


@dataclasses.dataclass(frozen=True)
class RelaxedSolution:
    """Optimal point of the relaxation with solver diagnostics."""

    w: np.ndarray
    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    objective: float
    status: Status
    iters: int
    gap: float
    residual_primal: float
    residual_dual: float
    solve_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    def scaled(self, r: float) -> "RelaxedSolution":
        return dataclasses.replace(
            self,
            w=self.w.copy(),
            t=self.t * r,
            x1=self.x1 * r,
            x2=self.x2 * r,
            objective=self.objective * r,
        )


def _fixed_values(inst: Instance) -> np.ndarray:
    """Full-length w with fixed entries filled and NaN where w is free."""
    w = np.full(inst.n, np.nan)
    w[0] = w[-1] = 0.0
    fixed = inst.w_min == inst.w_max
    fixed[0] = fixed[-1] = True
    w[fixed] = inst.w_max[fixed]
    return w


def build_socp(
    inst: Instance, linearize: np.ndarray | None = None, w_ref: np.ndarray | None = None
) -> tuple[ConicProgram, Layout]:
    """Standard-form conic program whose optimum is the relaxation optimum.

    Samples with ``w_min == w_max`` (always the two endpoints) are constants
    rather than columns.

    ``linearize`` (a mask over interior samples) swaps the jerk rows
    ``t_k >= +-dw_k`` of the masked samples for the inner approximation
    ``+-dw_k <= h / sqrt(w_ref_k) - (h/2) w_ref_k^{-3/2} (w_k - w_ref_k)``
    of the nonconvex rows ``+-dw_k <= h / sqrt(w_k)``.
    """
    m, h = inst.m, inst.h
    if np.any(inst.w_max[1:-1] <= 0):
        raise InstanceError("interior w_max must be strictly positive")
    wfix = _fixed_values(inst)
    interior_fixed = ~np.isnan(wfix[1:-1])
    free = np.flatnonzero(~interior_fixed)
    floor = free[inst.w_min[1:-1][free] > 0]
    mf, ml = free.size, floor.size

    # nonnegative columns
    off = 0

    def take(k):
        nonlocal off
        idx = np.arange(off, off + k)
        off += k
        return idx

    t, x1, x2 = take(m), take(m), take(m)
    wcols = take(mf)
    upper = take(mf)
    lower = take(ml)
    sp_, sn_ = take(m), take(m)
    sa, sd = take(m + 1), take(m + 1)
    n_lin = off
    soc = (n_lin + np.arange(9 * m)).reshape(m, 3, 3)
    n_cols = n_lin + 9 * m

    w_col = np.full(m, -1, dtype=np.int64)
    w_col[free] = wcols

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    rhs: list[np.ndarray] = []
    nrow = 0

    def add_rows(count, entries, b):
        """entries: list of (col_array_or_-1, coeff_array) for `count` new rows."""
        nonlocal nrow
        r = nrow + np.arange(count)
        b = np.array(np.broadcast_to(np.asarray(b, dtype=float), (count,)))
        for col, coef in entries:
            col = np.broadcast_to(col, (count,))
            coef = np.broadcast_to(np.asarray(coef, dtype=float), (count,))
            rows.append(r)
            cols.append(col)
            vals.append(coef)
        rhs.append(b)
        nrow += count

    def w_terms(offset_k, coef):
        """Move fixed w into the rhs and return (entries, rhs contribution).

        ``offset_k`` maps interior k to the full-vector index of the w used.
        """
        full = offset_k
        vals_fixed = np.nan_to_num(wfix[full], nan=0.0)
        is_var = np.isnan(wfix[full])
        col = np.where(is_var, w_col[np.clip(full - 1, 0, m - 1)], -1)
        return (col, np.where(is_var, coef, 0.0)), coef * vals_fixed

    k = np.arange(m)
    ii = k + 1  # full index of interior sample k
    inv_sqrt_h = 2.0 / np.sqrt(h)

    # cone A: (t + 1, 2 x2 / sqrt h, t - 1)
    add_rows(m, [(soc[:, 0, 0], 1.0), (t, -1.0)], 1.0)
    add_rows(m, [(soc[:, 0, 1], 1.0), (x2, -inv_sqrt_h)], 0.0)
    add_rows(m, [(soc[:, 0, 2], 1.0), (t, -1.0)], -1.0)
    # cone B: (t + w, 2 x1 / sqrt h, t - w)
    e, fixed_part = w_terms(ii, -1.0)
    add_rows(m, [(soc[:, 1, 0], 1.0), (t, -1.0), e], -fixed_part)
    add_rows(m, [(soc[:, 1, 1], 1.0), (x1, -inv_sqrt_h)], 0.0)
    e, fixed_part = w_terms(ii, 1.0)
    add_rows(m, [(soc[:, 1, 2], 1.0), (t, -1.0), e], -fixed_part)
    # cone C: (x2 + x1, 2 h, x2 - x1)
    add_rows(m, [(soc[:, 2, 0], 1.0), (x2, -1.0), (x1, -1.0)], 0.0)
    add_rows(m, [(soc[:, 2, 1], 1.0)], 2.0 * h)
    add_rows(m, [(soc[:, 2, 2], 1.0), (x2, -1.0), (x1, 1.0)], 0.0)

    # jerk rows: t - dw - sp = 0 and t + dw - sn = 0, or the tangent cuts
    # +-dw + slope w + s = 3h / (2 sqrt(w_ref)) on linearized samples
    hj = h * inst.J
    lin = np.zeros(m, dtype=bool) if linearize is None else np.asarray(linearize, dtype=bool)
    if lin.any():
        wr = np.asarray(w_ref, dtype=float)[1:-1]
        if np.any(wr[lin] <= 0):
            raise ValueError("linearization point must be positive on linearized rows")
        wr = np.where(lin, wr, 1.0)
        slope = np.where(lin, 0.5 * h * wr**-1.5, 0.0)
        level = np.where(lin, 1.5 * h / np.sqrt(wr), 0.0)
    else:
        slope = level = np.zeros(m)
    keep_t = np.where(lin, 0.0, 1.0)
    for sign, slack in ((-1.0, sp_), (1.0, sn_)):
        # relaxed:  t -+ dw - s = 0;  cut, negated:  -+dw - slope w - s = -level
        entries = [(t, keep_t), (slack, -1.0)]
        const = np.zeros(m)
        for shift, c in ((-1, 1.0), (0, -(2.0 + inst.rho)), (1, 1.0)):
            e, fixed_part = w_terms(ii + shift, sign * c / hj)
            entries.append(e)
            const += fixed_part
        e, fixed_part = w_terms(ii, -slope)
        entries.append(e)
        const += fixed_part
        add_rows(m, entries, -const - level)

    # bounds on free w
    if mf:
        add_rows(mf, [(wcols, 1.0), (upper, 1.0)], inst.w_max[1:-1][free])
    if ml:
        add_rows(ml, [(w_col[floor], 1.0), (lower, -1.0)], inst.w_min[1:-1][floor])

    # acceleration on every step p: +-(w_{p+1} - w_p) + slack = h A_p
    hA = h * pair_accel(inst)
    p = np.arange(m + 1)
    for sign, slack in ((1.0, sa), (-1.0, sd)):
        e1, f1 = w_terms(p + 1, sign)
        e0, f0 = w_terms(p, -sign)
        add_rows(m + 1, [(slack, 1.0), e1, e0], hA - f1 - f0)

    r = np.concatenate(rows)
    c_ = np.concatenate(cols)
    v = np.concatenate(vals)
    keep = (c_ >= 0) & (v != 0)
    A = sp.csr_matrix((v[keep], (r[keep], c_[keep])), shape=(nrow, n_cols))
    A.sum_duplicates()
    b = np.concatenate(rhs)
    cost = np.zeros(n_cols)
    cost[t] = 1.0
    cones = (Nonneg(n_lin),) + tuple(SecondOrder(3) for _ in range(3 * m))
    layout = Layout(
        m=m, free=free, w_col=w_col, t=t, x1=x1, x2=x2, soc=soc, n_cols=n_cols, n_rows=nrow
    )
    return ConicProgram(c=cost, A_eq=A, b_eq=b, cones=cones), layout


def extract_w(inst: Instance, layout: Layout, z: np.ndarray) -> np.ndarray:
    w = _fixed_values(inst)
    interior = w[1:-1]
    interior[layout.free] = z[layout.w_col[layout.free]]
    return w


def solve_relaxation(
    inst: Instance, opts: SolverOptions | None = None, normalize: bool = True
) -> RelaxedSolution:
    """Solve the relaxation; ``objective`` is a lower bound on the true optimum.

    With ``normalize`` the program is built for the equivalent unit-step
    instance ``(1, h A, h^2 J)`` and ``t, x1, x2`` are scaled back by ``h``.
    Solutions then do not depend on how a problem is split between ``h`` and
    the bounds, which an interior-point method alone only gives up to its
    stopping tolerance.
    """
    h = inst.h
    work = inst.replace(h=1.0, A=inst.A * h, J=inst.J * h * h) if normalize and h != 1.0 else inst
    prog, layout = build_socp(work)
    start = time.perf_counter()
    sol = solve(prog, opts)
    elapsed = time.perf_counter() - start
    out = _package(inst, layout, sol, elapsed)
    return out.scaled(h) if work is not inst else out


def _package(inst: Instance, layout: Layout, sol: ConicSolution, elapsed: float) -> RelaxedSolution:
    z = sol.z_primal
    w = extract_w(inst, layout, z)
    # cone coordinates can sit a hair outside the box; clip back for downstream use
    w = np.clip(w, inst.w_min, inst.w_max)
    t = z[layout.t].copy()
    return RelaxedSolution(
        w=w,
        t=t,
        x1=z[layout.x1].copy(),
        x2=z[layout.x2].copy(),
        objective=float(t.sum()),
        status=sol.status,
        iters=sol.iters,
        gap=sol.gap,
        residual_primal=sol.residual_primal,
        residual_dual=sol.residual_dual,
        solve_time=elapsed,
    )


def recover_t_tight(inst: Instance, w: np.ndarray) -> np.ndarray:
    """Smallest ``t`` compatible with ``w``: ``max(h/sqrt(w_i), |dw_i|)``."""
    w = np.asarray(w, dtype=float)
    wi = w[1:-1]
    if np.any(wi <= 0):
        raise ValueError("interior squared speeds must be positive")
    dw = delta_w_all(inst, w)
    return np.maximum(inst.h / np.sqrt(wi), np.abs(dw))
