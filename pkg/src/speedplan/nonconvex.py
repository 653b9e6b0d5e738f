"""Feasible profiles for the nonconvex problem.

``local_refine`` turns a relaxed optimum into a feasible profile and improves
it by sequential convexification: the reverse-convex jerk rows
``+-dw_i <= h / sqrt(w_i)`` are replaced by tangent cuts, which lie inside the
true feasible set, so every accepted iterate stays feasible and the objective
never increases. ``brute_force`` is an independent lattice oracle for tiny
instances.
"""

from __future__ import annotations

import dataclasses
import logging
import math

import numpy as np

from .conic import SolverOptions, Status, solve
from .problem import Instance, check_feasible, delta_w_all, objective, pair_accel
from .relaxation import RelaxedSolution, build_socp, extract_w

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class RefineOptions:
    tol: float = 1e-8  # feasibility tolerance of the returned profile
    max_iters: int = 30
    step_tol: float = 1e-8
    margin: float = 1e-10  # repair aims this far inside each jerk row
    solver: SolverOptions = SolverOptions()


@dataclasses.dataclass(frozen=True)
class RefineResult:
    w: np.ndarray
    objective: float
    iters: int
    feasible: bool
    degraded: bool
    history: tuple[float, ...] = ()


# -- monotone repair ---------------------------------------------------------


def _largest_root_below(fn, lo: float, hi: float, iters: int = 200) -> float:
    """Largest ``x`` in ``[lo, hi]`` near the first sign change of ``fn`` from ``lo``.

    ``fn(lo) <= 0`` is required; returns a point with ``fn <= 0``.
    """
    a, b = lo, hi
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if fn(mid) <= 0:
            a = mid
        else:
            b = mid
    return a


def _lower_neighbors(new, w, lo, i, excess) -> bool:
    """Cut ``w[i-1] + w[i+1]`` by ``excess``, sharing it between movable neighbors.

    Positive-jerk rows are only violated where ``w`` sits on its ceiling, so
    the cheap fix is to lower the neighbors rather than ``w[i]``, which would
    push the adjacent negative-jerk rows out and cascade.
    """
    last = len(w) - 1
    idx = [j for j in (i - 1, i + 1) if 0 < j < last]
    room = {j: w[j] - lo[j] for j in idx}
    if sum(room.values()) < excess:
        return False
    # give the tighter neighbor what it can take, the other the rest
    idx.sort(key=lambda j: room[j])
    left = excess
    for pos, j in enumerate(idx):
        share = min(room[j], left / (len(idx) - pos))
        new[j] = min(new[j], w[j] - share)
        left -= share
    return True


def repair(inst: Instance, w: np.ndarray, margin: float = 1e-10, max_sweeps: int = 20000):
    """Lower entries of ``w`` until every constraint holds.

    A positive-jerk excess is removed by lowering the two neighbors, a
    negative-jerk excess by lowering the sample itself. Only decreases are made, so the process is monotone and terminates; it
    fails only when a floor ``w_min`` blocks a needed decrease. Returns
    ``(w, ok)``.
    """
    w = np.clip(np.asarray(w, dtype=float).copy(), inst.w_min, inst.w_max)
    w[0] = w[-1] = 0.0
    h, rho = inst.h, inst.rho
    hj = h * inst.J
    hA = h * pair_accel(inst)
    lo = inst.w_min
    for _ in range(max_sweeps):
        dw = delta_w_all(inst, w)
        wi = w[1:-1]
        with np.errstate(divide="ignore"):
            budget = np.where(wi > 0, h / np.sqrt(np.maximum(wi, 0.0)), np.inf)
        jerk = (np.abs(dw) - budget > 0) & (wi > 0)
        step = np.diff(w)
        fwd = step > hA  # w_{p+1} too high
        bwd = -step > hA  # w_p too high
        if not (jerk.any() or fwd.any() or bwd.any()):
            return w, True
        new = w.copy()
        # clamp with a margin so rounding cannot leave the step an ulp over
        for p in np.flatnonzero(fwd):
            new[p + 1] = min(new[p + 1], w[p] + hA[p] - margin)
        for p in np.flatnonzero(bwd):
            new[p] = min(new[p], w[p + 1] + hA[p] - margin)
        for k in np.flatnonzero(jerk):
            i = k + 1
            a = w[i - 1] + w[i + 1]
            c = hj[k]

            d = (a - (2.0 + rho) * w[i]) / c
            sign = 1.0 if d > 0 else -1.0

            # only the violated side: -dw - b is increasing in x and dw - b is
            # concave, so either way one root separates w[i] from feasibility
            def f(x, a=a, c=c, sign=sign):
                b = h / math.sqrt(x) if x > 0 else math.inf
                return sign * (a - (2.0 + rho) * x) / c - b + margin

            if f(w[i]) <= 0:
                continue
            if sign > 0 and _lower_neighbors(new, w, lo, i, c * f(w[i])):
                continue
            floor = lo[i]
            if floor > 0 and f(floor) > 0:
                new[i] = min(new[i], floor)
                continue
            if floor == 0:
                # h / sqrt(x) dominates near 0; find a small feasible start
                x0 = w[i]
                while x0 > 1e-300 and f(x0) > 0:
                    x0 *= 0.25
                if f(x0) > 0:
                    return w, False
                floor = x0
            new[i] = min(new[i], _largest_root_below(f, floor, w[i]))
        new = np.maximum(new, lo)
        if np.array_equal(new, w):
            break
        w = new
    rep = check_feasible(inst, w, 0.0)
    return w, rep.feasible


# -- sequential convexification ---------------------------------------------


def _solve_cut_program(inst: Instance, mask: np.ndarray, w_ref: np.ndarray, opts: SolverOptions):
    prog, layout = build_socp(inst, linearize=mask, w_ref=w_ref)
    sol = solve(prog, opts)
    if sol.status is not Status.OPTIMAL:
        return None
    return np.clip(extract_w(inst, layout, sol.z_primal), inst.w_min, inst.w_max)


def local_refine(
    inst: Instance, start: RelaxedSolution | np.ndarray, opts: RefineOptions | None = None
) -> RefineResult:
    """Feasible profile no worse than the repaired relaxed point.

    Rows violated by the start are linearized at the current iterate; rows
    that become violated by a candidate join the linearized set and the
    subproblem is re-solved from the same point.
    """
    opts = opts or RefineOptions()
    w0 = np.asarray(start if isinstance(start, np.ndarray) else start.w, dtype=float)
    rep = check_feasible(inst, w0, opts.tol)
    if rep.feasible and np.all(w0[1:-1] > 0):
        f0 = objective(inst, w0)
        return RefineResult(w0.copy(), f0, 0, True, False, (f0,))

    mask = (rep.pos_jerk_each > opts.tol) | (rep.neg_jerk_each > opts.tol)
    w, ok = repair(inst, w0, opts.margin)
    if not ok or np.any(w[1:-1] <= 0):
        logger.warning("repair could not reach a feasible profile")
        f = objective(inst, w) if np.all(w[1:-1] > 0) else math.inf
        return RefineResult(w, f, 0, False, True, ())
    f = objective(inst, w)
    history = [f]
    iters = 0
    while iters < opts.max_iters:
        iters += 1
        cand = _solve_cut_program(inst, mask, w, opts.solver)
        if cand is None or np.any(cand[1:-1] <= 0):
            logger.info("cut subproblem failed at iteration %d", iters)
            break
        crep = check_feasible(inst, cand, opts.tol)
        newly = ((crep.pos_jerk_each > 1e-6) | (crep.neg_jerk_each > 1e-6)) & ~mask
        if newly.any():
            mask |= newly
            continue
        fixed, ok = repair(inst, cand, opts.margin)
        if not ok or np.any(fixed[1:-1] <= 0):
            break
        f_new = objective(inst, fixed)
        step = float(np.max(np.abs(fixed - w)))
        if f_new >= f:
            break
        w, f = fixed, f_new
        history.append(f)
        if step <= opts.step_tol * (1.0 + float(np.max(np.abs(w)))):
            break
    final = check_feasible(inst, w, opts.tol)
    return RefineResult(w, f, iters, final.feasible, not final.feasible, tuple(history))


# -- lattice oracle ----------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class BruteForceResult:
    w: np.ndarray
    objective: float
    passes: int


def _dp_lattice(inst: Instance, lattices: list[np.ndarray]):
    """Exact minimum of ``f`` over the product lattice, by dynamic programming.

    The state is the pair ``(w_{i-1}, w_i)``; every jerk row couples one
    triple and every acceleration row one pair, so this is exhaustive search
    in ``O(m G^3)``. Ties go to the smallest lattice index (first ``argmin``).
    """
    h, rho = inst.h, inst.rho
    n = inst.n
    vals = [np.zeros(1)] + list(lattices) + [np.zeros(1)]

    def cost(v):
        with np.errstate(divide="ignore"):
            return np.where(v > 0, h / np.sqrt(np.maximum(v, 0.0)), np.inf)

    # V[a, b]: best cost of w_1..w_i with (w_{i-1}, w_i) = (a, b)
    hA = h * pair_accel(inst)
    V = np.where(vals[1] <= hA[0], cost(vals[1]), np.inf)[None, :]  # a = w_0 = 0
    back = []
    for i in range(1, n - 1):
        a = vals[i - 1][:, None, None]
        b = vals[i][None, :, None]
        c = vals[i + 1][None, None, :]
        k = i - 1
        dw = (a - (2.0 + rho) * b + c) / (h * inst.J[k])
        with np.errstate(divide="ignore"):
            budget = np.where(b > 0, h / np.sqrt(np.maximum(b, 0.0)), np.inf)
        ok = (np.abs(dw) <= budget) & (np.abs(c - b) <= hA[i])
        total = np.where(ok, V[:, :, None], np.inf)
        arg = np.argmin(total, axis=0)  # over a
        best = np.take_along_axis(total, arg[None], axis=0)[0]
        add = cost(vals[i + 1]) if i + 1 < n - 1 else np.zeros(1)
        V = best + add[None, :]
        back.append(arg)
    # V has shape (G_{n-2}, 1): the last state is (w_{n-2}, w_{n-1}=0)
    j = int(np.argmin(V[:, 0]))
    if not np.isfinite(V[j, 0]):
        return None, math.inf
    idx = [0, j]  # indices of (w_{n-1}, w_{n-2}) in reverse
    for i in range(n - 2, 0, -1):
        arg = back[i - 1]
        prev = int(arg[idx[-1], idx[-2]])
        idx.append(prev)
    idx.reverse()  # idx[i] indexes vals[i]
    w = np.array([vals[i][idx[i]] for i in range(n)])
    return w, float(V[j, 0])


def _feasible_rows(inst: Instance, W: np.ndarray) -> np.ndarray:
    """Exact (tol 0) feasibility of each row of ``W``."""
    h = inst.h
    dw = (W[:, :-2] - (2.0 + inst.rho) * W[:, 1:-1] + W[:, 2:]) / (h * inst.J)
    wi = W[:, 1:-1]
    with np.errstate(divide="ignore"):
        budget = np.where(wi > 0, h / np.sqrt(np.maximum(wi, 0.0)), np.inf)
    ok = np.all(np.abs(dw) <= budget, axis=1)
    ok &= np.all(np.abs(np.diff(W, axis=1)) <= h * pair_accel(inst), axis=1)
    ok &= np.all((W >= inst.w_min) & (W <= inst.w_max), axis=1)
    return ok


def _push_up(inst: Instance, w: np.ndarray, sweeps: int = 50, samples: int = 256) -> np.ndarray:
    """Coordinate ascent: raise each entry to its largest feasible value.

    The objective decreases in every coordinate, so this never hurts.
    """
    w = w.copy()
    for _ in range(sweeps):
        moved = False
        for i in range(1, inst.n - 1):
            cur, top = w[i], inst.w_max[i]
            if top <= cur:
                continue
            grid = np.linspace(cur, top, samples)
            trial = np.repeat(w[None, :], samples, axis=0)
            trial[:, i] = grid
            good = np.flatnonzero(_feasible_rows(inst, trial))
            if good.size == 0:
                continue
            j = good[-1]
            lo = grid[j]
            if j + 1 < samples:
                hi = grid[j + 1]
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    t = w.copy()
                    t[i] = mid
                    if _feasible_rows(inst, t[None, :])[0]:
                        lo = mid
                    else:
                        hi = mid
            if lo > cur * (1.0 + 1e-15):
                w[i] = lo
                moved = True
        if not moved:
            break
    return w


def brute_force(inst: Instance, grid_points_per_dim: int = 200, passes: int = 2) -> BruteForceResult:
    """Best strictly feasible profile found by lattice search plus local ascent.

    Each coordinate ranges over a uniform lattice on ``[w_min_i, w_max_i]``;
    when no lattice point is feasible the upper end is shrunk tenfold and the
    search repeats. Later passes zoom in around the incumbent, keeping it on
    the lattice. The result is a valid upper bound on the optimum.
    """
    if inst.n > 7:
        raise ValueError(f"brute force supports n <= 7, got n={inst.n}")
    G = int(grid_points_per_dim)
    if G < 2:
        raise ValueError("need at least 2 grid points per dimension")
    lo, hi = inst.w_min[1:-1].copy(), inst.w_max[1:-1].copy()
    top = hi.copy()
    best_w, best_f = None, math.inf
    for _ in range(60):
        lattices = [np.linspace(l, max(t, l), G) for l, t in zip(lo, top)]
        best_w, best_f = _dp_lattice(inst, lattices)
        if best_w is not None:
            break
        top = np.maximum(lo, top * 0.1)
    if best_w is None:
        raise ValueError("no feasible lattice point found")
    spacing = np.array([(t - l) / (G - 1) for l, t in zip(lo, top)])
    done = 1
    for _ in range(passes - 1):
        center = best_w[1:-1]
        half = spacing * 2.0
        lattices = []
        for c, d, l, u in zip(center, half, lo, hi):
            pts = c + np.linspace(-d, d, G)
            pts = np.concatenate([pts, [c]])
            lattices.append(np.unique(np.clip(pts, l, u)))
        w, f = _dp_lattice(inst, lattices)
        done += 1
        if w is not None and f <= best_f:
            best_w, best_f = w, f
        spacing = half * 2.0 / (G - 1)
    best_w = _push_up(inst, best_w)
    return BruteForceResult(w=best_w, objective=objective(inst, best_w), passes=done)
