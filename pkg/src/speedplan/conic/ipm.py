"""Primal-dual interior-point method for linear + second-order cone programs.

The iteration works on the homogeneous self-dual embedding

    A z - b tau = 0,   A^T y + s - c tau = 0,   b^T y - c^T z - kappa = 0,

with Nesterov-Todd scaling and a Mehrotra predictor-corrector step. Dividing
by ``tau`` recovers an optimal pair; ``tau -> 0`` with ``kappa > 0`` yields an
infeasibility certificate.
"""

from __future__ import annotations

import dataclasses
import logging

import numpy as np

from .cones import NTScaling
from .kkt import NormalSolver
from .program import ConicProgram, ConicSolution, Status, residuals

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    infeas_tol: float = 1e-9
    max_iters: int = 200
    step_fraction: float = 0.99
    refine_steps: int = 2
    # once feas_tol/gap_tol hold, take up to polish_iters more steps toward polish_tol
    polish_tol: float = 1e-10
    polish_iters: int = 5
    verbose: bool = False


def solve(prog: ConicProgram, opts: SolverOptions | None = None) -> ConicSolution:
    """Solve ``prog`` and return the primal-dual pair with diagnostics."""
    opts = opts or SolverOptions()
    A, b, c = prog.A_eq, prog.b_eq, prog.c
    AT = A.T.tocsr()
    cones = prog.cone_product
    m, n = A.shape
    nu = cones.degree

    kkt = NormalSolver(A, cones)
    e = cones.identity()
    z, s = e.copy(), e.copy()
    y = np.zeros(m)
    tau, kappa = 1.0, 1.0

    bnorm = 1.0 + np.linalg.norm(b)
    cnorm = 1.0 + np.linalg.norm(c)
    status = Status.ITER_LIMIT
    best = None
    met_at = None  # first iteration meeting the stopping tolerances
    it = 0
    for it in range(opts.max_iters + 1):
        zt, yt, st = z / tau, y / tau, s / tau
        pres, dres, gap = residuals(prog, zt, yt, st)
        pobj, dobj = c @ zt, b @ yt
        if opts.verbose:
            logger.info(
                "%3d pobj=% .8e dobj=% .8e pres=%.2e dres=%.2e gap=%.2e tau=%.2e kappa=%.2e",
                it, pobj, dobj, pres, dres, gap, tau, kappa,
            )
        score = max(pres, dres, gap)
        ok = pres <= opts.feas_tol and dres <= opts.feas_tol and gap <= opts.gap_tol
        if met_at is None or ok:
            if best is None or score < best[0] or (ok and met_at is None):
                best = (score, zt, yt, st, pres, dres, gap)
        if ok and met_at is None:
            met_at = it
            status = Status.OPTIMAL
        if met_at is not None:
            if score <= opts.polish_tol or it - met_at >= opts.polish_iters:
                break
        else:
            # infeasibility certificates on the unnormalized iterate
            by, cz = b @ y, c @ z
            if by > 0 and np.linalg.norm(AT @ y + s) / by <= opts.infeas_tol * cnorm:
                status = Status.INFEASIBLE
                break
            if cz < 0 and np.linalg.norm(A @ z) / -cz <= opts.infeas_tol * bnorm:
                status = Status.UNBOUNDED
                break
        if it == opts.max_iters:
            break

        r_p = b * tau - A @ z
        r_d = c * tau - AT @ y - s
        r_g = kappa + c @ z - b @ y
        mu = (z @ s + tau * kappa) / (nu + 1)

        W = NTScaling(cones, z, s)
        lam = W.lam
        lin, blocks = W.inv_sq_blocks()
        try:
            kkt.factor(lin, blocks)
        except np.linalg.LinAlgError:
            logger.warning("normal matrix factorization failed at iteration %d", it)
            break

        # direction for the tau column, shared by predictor and corrector
        winv2_c = _apply_inv_sq(W, c)
        dy2 = kkt.solve(b + A @ winv2_c)
        dz2 = _apply_inv_sq(W, AT @ dy2 - c)
        denom = c @ dz2 - b @ dy2 - kappa / tau

        def newton(rp, rd, rg, rc, rtk):
            """Solve the linearized embedding for a generic right-hand side.

            A dz - b dtau = rp, A^T dy + ds - c dtau = rd,
            dkappa + c^T dz - b^T dy = -rg, lam o (W dz + W^-1 ds) = rc,
            kappa dtau + tau dkappa = rtk.
            """
            q = cones.jordan_solve(lam, rc)
            wq = W.apply(q)
            dy1 = kkt.solve(rp + A @ _apply_inv_sq(W, rd - wq))
            dz1 = _apply_inv_sq(W, AT @ dy1 + wq - rd)
            dtau = (-rg - rtk / tau - c @ dz1 + b @ dy1) / denom
            dy = dy1 + dtau * dy2
            dz = dz1 + dtau * dz2
            ds = W.apply(q - W.apply(dz))
            dkappa = (rtk - kappa * dtau) / tau
            return dz, dy, ds, dtau, dkappa

        def direction(eta, r_c, r_tk):
            rhs = (eta * r_p, eta * r_d, eta * r_g, r_c, r_tk)

            def residual(d):
                dz, dy, ds, dtau, dkappa = d
                return (
                    rhs[0] - (A @ dz - b * dtau),
                    rhs[1] - (AT @ dy + ds - c * dtau),
                    rhs[2] + (dkappa + c @ dz - b @ dy),
                    rhs[3] - cones.jordan(lam, W.apply(dz) + W.apply_inv(ds)),
                    rhs[4] - (kappa * dtau + tau * dkappa),
                )

            def size(res):
                return max(float(np.max(np.abs(r))) if np.ndim(r) else abs(float(r)) for r in res)

            d = newton(*rhs)
            # refine against the unreduced system, since the normal equations lose
            # accuracy late; a correction is kept only if it shrinks the residual
            res = residual(d)
            err = size(res)
            for _ in range(opts.refine_steps):
                trial = tuple(x + dx for x, dx in zip(d, newton(*res)))
                res_t = residual(trial)
                err_t = size(res_t)
                if not err_t < err:
                    break
                d, res, err = trial, res_t, err_t
            return d

        def step_length(dz, ds, dtau, dkappa):
            a = min(cones.max_step(z, dz), cones.max_step(s, ds))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkappa < 0:
                a = min(a, -kappa / dkappa)
            return a

        # predictor
        lam_sq = cones.jordan(lam, lam)
        dz_a, dy_a, ds_a, dtau_a, dkappa_a = direction(1.0, -lam_sq, -tau * kappa)
        alpha_a = min(1.0, step_length(dz_a, ds_a, dtau_a, dkappa_a))
        sigma = (1.0 - alpha_a) ** 3

        # corrector
        corr = cones.jordan(W.apply(dz_a), W.apply_inv(ds_a))
        r_c = -lam_sq + sigma * mu * e - corr
        r_tk = -tau * kappa + sigma * mu - dtau_a * dkappa_a
        dz, dy, ds, dtau, dkappa = direction(1.0 - sigma, r_c, r_tk)
        alpha = min(1.0, opts.step_fraction * step_length(dz, ds, dtau, dkappa))
        # rounding can put a block on the boundary even inside the step limit
        while alpha > 1e-10:
            z_new, s_new = z + alpha * dz, s + alpha * ds
            if cones.well_interior(z_new) and cones.well_interior(s_new):
                break
            alpha *= 0.5
        else:
            logger.info("step length collapsed at iteration %d", it)
            break
        if not (np.all(np.isfinite(z_new)) and np.all(np.isfinite(dy))):
            break

        z, s = z_new, s_new
        y = y + alpha * dy
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa

    if status in (Status.OPTIMAL, Status.ITER_LIMIT):
        _, zt, yt, st, pres, dres, gap = best
    else:
        zt, yt, st = z, y, s
    return ConicSolution(
        z_primal=zt,
        y_dual=yt,
        s_dual=st,
        status=status,
        gap=float(gap),
        residual_primal=float(pres),
        residual_dual=float(dres),
        iters=it,
    )


def _apply_inv_sq(W: NTScaling, x: np.ndarray) -> np.ndarray:
    return W.apply_inv(W.apply_inv(x))
