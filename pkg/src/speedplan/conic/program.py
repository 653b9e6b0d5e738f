"""Standard-form conic programs and their solutions.

Primal:  minimize c^T z   subject to  A z = b,  z in K
Dual:    maximize b^T y   subject to  A^T y + s = c,  s in K
"""

from __future__ import annotations

import dataclasses
import enum
from typing import IO, Sequence

import numpy as np
import scipy.sparse as sp

from .cones import Cone, ConeProduct, Nonneg, SecondOrder


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITER_LIMIT = "iter_limit"


@dataclasses.dataclass(frozen=True)
class ConicProgram:
    """Linear objective over an affine slice of a cone product.

    Attributes:
      c: Cost vector, length equal to the total cone dimension.
      A_eq: Sparse equality matrix with one column per cone coordinate.
      b_eq: Equality right-hand side.
      cones: Ordered cone blocks partitioning the columns.
    """

    c: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    cones: tuple[Cone, ...]

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        b = np.asarray(self.b_eq, dtype=float)
        A = sp.csr_matrix(self.A_eq, dtype=float)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b_eq", b)
        object.__setattr__(self, "A_eq", A)
        object.__setattr__(self, "cones", tuple(self.cones))
        total = sum(k.dim for k in self.cones)
        if c.ndim != 1 or c.size != total:
            raise ValueError(f"c has length {c.size}, cones cover {total} columns")
        if A.shape != (b.size, total):
            raise ValueError(f"A_eq has shape {A.shape}, expected ({b.size}, {total})")

    @property
    def cone_product(self) -> ConeProduct:
        return ConeProduct(self.cones)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A_eq.shape


@dataclasses.dataclass(frozen=True)
class ConicSolution:
    z_primal: np.ndarray
    y_dual: np.ndarray
    s_dual: np.ndarray
    status: Status
    gap: float
    residual_primal: float
    residual_dual: float
    iters: int


def residuals(prog: ConicProgram, z: np.ndarray, y: np.ndarray, s: np.ndarray):
    """Relative primal residual, dual residual and duality gap.

    Returns ``(primal_res, dual_res, gap)`` with
    ``primal_res = ||A z - b|| / (1 + ||b||)``,
    ``dual_res = ||A^T y + s - c|| / (1 + ||c||)`` and
    ``gap = |c^T z - b^T y| / (1 + |c^T z|)``.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.asarray(s, dtype=float)
    m, n = prog.shape
    if z.shape != (n,) or s.shape != (n,) or y.shape != (m,):
        raise ValueError(
            f"dimension mismatch: z{z.shape} y{y.shape} s{s.shape} for program {m}x{n}"
        )
    A, b, c = prog.A_eq, prog.b_eq, prog.c
    pres = np.linalg.norm(A @ z - b) / (1.0 + np.linalg.norm(b))
    dres = np.linalg.norm(A.T @ y + s - c) / (1.0 + np.linalg.norm(c))
    pobj = c @ z
    gap = abs(pobj - b @ y) / (1.0 + abs(pobj))
    return float(pres), float(dres), float(gap)


def dump_program(prog: ConicProgram, out: IO[str]) -> None:
    """Write a plain-text standard-form listing, one nonzero per line."""
    m, n = prog.shape
    out.write(f"# standard form: min c'z  s.t.  A z = b,  z in K\n")
    out.write(f"ROWS {m}\nCOLS {n}\n")
    out.write("CONES")
    for cone in prog.cones:
        tag = "L" if isinstance(cone, Nonneg) else "Q"
        out.write(f" {tag}{cone.dim}")
    out.write("\nC\n")
    for j in np.flatnonzero(prog.c):
        out.write(f"{j} {float(prog.c[j])!r}\n")
    out.write("A\n")
    coo = prog.A_eq.tocoo()
    order = np.lexsort((coo.col, coo.row))
    for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
        out.write(f"{r} {c} {float(v)!r}\n")
    out.write("B\n")
    for i in np.flatnonzero(prog.b_eq):
        out.write(f"{i} {float(prog.b_eq[i])!r}\n")
    out.write("END\n")


def stack_cones(nonneg: int, soc_dims: Sequence[int]) -> tuple[Cone, ...]:
    """Convenience: one nonnegative block followed by second-order blocks."""
    cones: list[Cone] = []
    if nonneg:
        cones.append(Nonneg(nonneg))
    cones.extend(SecondOrder(d) for d in soc_dims)
    return tuple(cones)
