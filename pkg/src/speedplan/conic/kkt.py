"""Normal-equations factorization ``A W^{-2} A^T`` in banded form.

The row ordering is fixed once per program with reverse Cuthill-McKee on the
symbolic pattern of the normal matrix. Programs with chain-like coupling
(such as discretized speed profiles) then have a small half-bandwidth and
each iteration costs one LAPACK banded Cholesky.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .cones import ConeProduct


class NormalSolver:
    def __init__(self, A: sp.csr_matrix, cones: ConeProduct):
        self.m, self.n = A.shape
        self.cones = cones
        rows = [cones.lin]
        cols = [cones.lin]
        for idx in cones.soc:
            d = idx.shape[1]
            rows.append(np.repeat(idx, d, axis=1).ravel())
            cols.append(np.tile(idx, (1, d)).ravel())
        self._d_rows = np.concatenate(rows)
        self._d_cols = np.concatenate(cols)
        pattern = sp.csr_matrix(
            (np.ones(self._d_rows.size), (self._d_rows, self._d_cols)), shape=(self.n, self.n)
        )
        Apat = A.copy()
        Apat.data = np.ones_like(Apat.data)
        mpat = (Apat @ pattern @ Apat.T).tocsr()
        mpat.sum_duplicates()
        self.perm = np.asarray(reverse_cuthill_mckee(mpat, symmetric_mode=True), dtype=np.int64)
        self.iperm = np.empty_like(self.perm)
        self.iperm[self.perm] = np.arange(self.m)
        self.Ap = A[self.perm].tocsr()
        coo = mpat.tocoo()
        pr, pc = self.iperm[coo.row], self.iperm[coo.col]
        self.bandwidth = int(np.max(np.abs(pr - pc))) if coo.nnz else 0
        self._band = None
        self.reg = 0.0

    def factor(self, lin_diag: np.ndarray, soc_blocks) -> None:
        data = np.concatenate([lin_diag] + [b.ravel() for b in soc_blocks])
        D = sp.csr_matrix((data, (self._d_rows, self._d_cols)), shape=(self.n, self.n))
        M = (self.Ap @ D @ self.Ap.T).tocsr()
        self.M = M
        M = M.tocoo()
        keep = M.row >= M.col
        r, c, v = M.row[keep], M.col[keep], M.data[keep]
        k = self.bandwidth
        ab = np.zeros((k + 1, self.m))
        ab[r - c, c] = v
        # diagonal-relative shift: a global one swamps rows with small pivots
        base = np.maximum(ab[0], 1e-300)
        reg = 0.0
        for attempt in range(9):
            trial = ab.copy()
            trial[0] += reg * base
            try:
                self._band = la.cholesky_banded(trial, lower=True, check_finite=False)
                self.reg = reg
                return
            except la.LinAlgError:
                reg = 1e-14 if reg == 0.0 else reg * 100.0
        raise la.LinAlgError("normal matrix is not positive definite")

    def _solve_perm(self, rhs_p: np.ndarray) -> np.ndarray:
        return la.cho_solve_banded((self._band, True), rhs_p, check_finite=False)

    def solve(self, rhs: np.ndarray, refine: int = 2) -> np.ndarray:
        """Solve ``M x = rhs`` with a few steps of iterative refinement."""
        rhs_p = rhs[self.perm]
        x = self._solve_perm(rhs_p)
        M = self.M
        for _ in range(refine):
            res = rhs_p - M @ x
            x = x + self._solve_perm(res)
        out = np.empty_like(x)
        out[self.perm] = x
        return out

