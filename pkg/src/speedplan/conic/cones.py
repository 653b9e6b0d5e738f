"""Cone algebra for products of nonnegative orthants and second-order cones.

Second-order cone blocks use the convention ``x[0] >= ||x[1:]||``. All
operations are vectorized over blocks of equal dimension, so a program with
thousands of 3-dimensional cones costs a handful of numpy calls.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence, Union

import numpy as np


@dataclasses.dataclass(frozen=True)
class Nonneg:
    """Nonnegative orthant of dimension ``dim``."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"Nonneg cone needs dim >= 1, got {self.dim}")


@dataclasses.dataclass(frozen=True)
class SecondOrder:
    """Second-order cone ``{x : x[0] >= ||x[1:]||}`` of dimension ``dim``."""

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"SecondOrder cone needs dim >= 2, got {self.dim}")


Cone = Union[Nonneg, SecondOrder]


class ConeProduct:
    """Index bookkeeping and Jordan-algebra operations over a cone product."""

    def __init__(self, cones: Sequence[Cone]):
        self.cones = tuple(cones)
        lin: list[np.ndarray] = []
        soc: dict[int, list[np.ndarray]] = {}
        offset = 0
        for cone in self.cones:
            idx = np.arange(offset, offset + cone.dim)
            if isinstance(cone, Nonneg):
                lin.append(idx)
            elif isinstance(cone, SecondOrder):
                soc.setdefault(cone.dim, []).append(idx)
            else:
                raise TypeError(f"unknown cone type {type(cone).__name__}")
            offset += cone.dim
        self.dim = offset
        self.lin = np.concatenate(lin) if lin else np.zeros(0, dtype=np.int64)
        # one (nblocks, d) index array per distinct SOC dimension
        self.soc = [np.vstack(blocks) for _, blocks in sorted(soc.items())]
        self.degree = self.lin.size + sum(b.shape[0] for b in self.soc)

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[self.lin] = 1.0
        for idx in self.soc:
            e[idx[:, 0]] = 1.0
        return e

    def jordan(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Jordan product ``x o y``."""
        out = np.empty(self.dim)
        out[self.lin] = x[self.lin] * y[self.lin]
        for idx in self.soc:
            xb, yb = x[idx], y[idx]
            out[idx[:, 0]] = np.einsum("ij,ij->i", xb, yb)
            out[idx[:, 1:]] = xb[:, :1] * yb[:, 1:] + yb[:, :1] * xb[:, 1:]
        return out

    def jordan_solve(self, lam: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Solve ``lam o u = r`` for ``u`` (``lam`` must be interior)."""
        u = np.empty(self.dim)
        u[self.lin] = r[self.lin] / lam[self.lin]
        for idx in self.soc:
            lb, rb = lam[idx], r[idx]
            l0 = lb[:, 0]
            det = _jnorm_sq(lb)
            u0 = (l0 * rb[:, 0] - np.einsum("ij,ij->i", lb[:, 1:], rb[:, 1:])) / det
            u[idx[:, 0]] = u0
            u[idx[:, 1:]] = (rb[:, 1:] - u0[:, None] * lb[:, 1:]) / l0[:, None]
        return u

    def margin(self, x: np.ndarray) -> float:
        """Smallest eigenvalue of ``x`` over all blocks (> 0 means interior)."""
        vals = [np.inf]
        if self.lin.size:
            vals.append(x[self.lin].min())
        for idx in self.soc:
            xb = x[idx]
            vals.append((xb[:, 0] - np.linalg.norm(xb[:, 1:], axis=1)).min())
        return float(min(vals))

    def well_interior(self, x: np.ndarray, rel: float = 1e-13) -> bool:
        """True when every block is interior by a margin the scaling can resolve."""
        if self.lin.size and not np.all(x[self.lin] > 0):
            return False
        for idx in self.soc:
            xb = x[idx]
            if not np.all(xb[:, 0] - np.linalg.norm(xb[:, 1:], axis=1) > rel * xb[:, 0]):
                return False
        return True

    def max_step(self, x: np.ndarray, dx: np.ndarray) -> float:
        """Largest ``a >= 0`` with ``x + a dx`` in the cone (``x`` interior)."""
        amax = np.inf
        if self.lin.size:
            d = dx[self.lin]
            neg = d < 0
            if neg.any():
                amax = min(amax, float(np.min(-x[self.lin][neg] / d[neg])))
        for idx in self.soc:
            xb, db = x[idx], dx[idx]
            # det(x + a d) = qa a^2 + qb a + qc; first positive root is the boundary
            qa = db[:, 0] ** 2 - np.einsum("ij,ij->i", db[:, 1:], db[:, 1:])
            qb = 2.0 * (xb[:, 0] * db[:, 0] - np.einsum("ij,ij->i", xb[:, 1:], db[:, 1:]))
            qc = xb[:, 0] ** 2 - np.einsum("ij,ij->i", xb[:, 1:], xb[:, 1:])
            amax = min(amax, _first_positive_root(qa, qb, qc, xb[:, 0], db[:, 0]))
        return amax


def _first_positive_root(qa, qb, qc, x0, d0) -> float:
    disc = qb**2 - 4.0 * qa * qc
    roots = np.full(qa.shape, np.inf)
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    # stable quadratic formula: q = -(qb + sign(qb) sq) / 2, roots q/qa and qc/q
    q = -0.5 * (qb + np.copysign(sq, qb))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(qa != 0, q / qa, np.inf)
        r2 = np.where(q != 0, qc / q, np.inf)
    for r in (r1, r2):
        good = ok & (r > 0) & np.isfinite(r)
        roots = np.where(good, np.minimum(roots, r), roots)
    # linear case: det changes sign only through qb
    lin = ok & (qa == 0) & (qb < 0)
    roots = np.where(lin, np.minimum(roots, -qc / np.where(lin, qb, -1.0)), roots)
    # scalar part hitting zero also leaves the cone
    with np.errstate(divide="ignore", invalid="ignore"):
        r0 = np.where(d0 < 0, -x0 / d0, np.inf)
    roots = np.minimum(roots, r0)
    return float(roots.min()) if roots.size else np.inf


class NTScaling:
    """Nesterov-Todd scaling ``W`` with ``W z = W^{-1} s = lam``.

    ``W`` is symmetric positive definite and block diagonal. For second-order
    blocks ``W = beta (2 v v^T - J)`` with ``J = diag(1, -1, ..., -1)``.
    """

    def __init__(self, cones: ConeProduct, z: np.ndarray, s: np.ndarray):
        self.cones = cones
        self.d_lin = np.sqrt(s[cones.lin] / z[cones.lin])
        self.beta: list[np.ndarray] = []
        self.v: list[np.ndarray] = []
        for idx in cones.soc:
            zb, sb = z[idx], s[idx]
            zn = np.sqrt(_jnorm_sq(zb))
            sn = np.sqrt(_jnorm_sq(sb))
            zbar = zb / zn[:, None]
            sbar = sb / sn[:, None]
            gamma = np.sqrt(0.5 * (1.0 + np.einsum("ij,ij->i", zbar, sbar)))
            wbar = sbar.copy()
            wbar[:, 0] += zbar[:, 0]
            wbar[:, 1:] -= zbar[:, 1:]
            wbar /= 2.0 * gamma[:, None]
            v = wbar.copy()
            v[:, 0] += 1.0
            v /= np.sqrt(2.0 * (wbar[:, 0] + 1.0))[:, None]
            self.beta.append(np.sqrt(sn / zn))
            self.v.append(v)
        self.lam = self.apply(z)

    def apply(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        out[self.cones.lin] = self.d_lin * x[self.cones.lin]
        for idx, beta, v in zip(self.cones.soc, self.beta, self.v):
            xb = x[idx]
            vx = np.einsum("ij,ij->i", v, xb)
            r = 2.0 * vx[:, None] * v
            r[:, 0] -= xb[:, 0]
            r[:, 1:] += xb[:, 1:]
            out[idx] = beta[:, None] * r
        return out

    def apply_inv(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        out[self.cones.lin] = x[self.cones.lin] / self.d_lin
        for idx, beta, v in zip(self.cones.soc, self.beta, self.v):
            xb = x[idx]
            jv = v.copy()
            jv[:, 1:] *= -1.0
            jvx = np.einsum("ij,ij->i", jv, xb)
            r = 2.0 * jvx[:, None] * jv
            r[:, 0] -= xb[:, 0]
            r[:, 1:] += xb[:, 1:]
            out[idx] = r / beta[:, None]
        return out

    def inv_sq_blocks(self):
        """``W^{-2}`` as (diagonal of linear part, list of dense SOC blocks)."""
        lin = 1.0 / self.d_lin**2
        blocks = []
        for beta, v in zip(self.beta, self.v):
            jv = v.copy()
            jv[:, 1:] *= -1.0
            d = v.shape[1]
            winv = 2.0 * jv[:, :, None] * jv[:, None, :]
            winv[:, 0, 0] -= 1.0
            winv[:, np.arange(1, d), np.arange(1, d)] += 1.0
            winv /= beta[:, None, None]
            blocks.append(winv @ winv)
        return lin, blocks


def _jnorm_sq(a: np.ndarray) -> np.ndarray:
    # factored form avoids cancellation near the cone boundary
    r = np.linalg.norm(a[:, 1:], axis=1)
    return (a[:, 0] - r) * (a[:, 0] + r)
