"""
Sparse matrix assembly and reusable direct factorizations.

Matrices are :class:`scipy.sparse.csr_matrix` in canonical form (sorted
column indices, no duplicates). Factorizations wrap SuperLU so that a
time-invariant system is factored once and back-solved every step.

The default strategy first tries diagonal (static) pivots with a minimum
degree ordering of ``A^T + A``. The Biot systems are row scalings of
symmetric quasi-definite matrices, for which this always succeeds and keeps
the fill far below that of partial pivoting. A residual probe guards the
result; on failure the matrix is refactored with COLAMD and partial
pivoting.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = ["assemble_add", "Factorization", "factorize", "solve", "SingularMatrixError", "set_default_pivoting"]


class SingularMatrixError(RuntimeError):
    """Raised when LU factorization meets an exactly zero pivot."""


def assemble_add(rows, cols, values, shape) -> sp.csr_matrix:
    """Sum ``(row, col, value)`` triplets into a CSR matrix.

    Duplicate entries are added in a fixed order (sorted by row, column,
    value), so any permutation of the same triplets gives a bitwise-identical
    matrix.
    """
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    values = np.asarray(values, dtype=float).ravel()
    n_rows, n_cols = shape
    if not (rows.shape == cols.shape == values.shape):
        raise ValueError("rows, cols and values must have equal length")
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols):
        raise IndexError(f"triplet index out of range for shape {shape}")
    if rows.size == 0:
        return sp.csr_matrix((n_rows, n_cols))
    order = np.lexsort((values, cols, rows))
    rows, cols, values = rows[order], cols[order], values[order]
    key_change = np.empty(rows.size, dtype=bool)
    key_change[0] = True
    key_change[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    starts = np.flatnonzero(key_change)
    summed = np.add.reduceat(values, starts)
    r, c = rows[starts], cols[starts]
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.add.at(indptr, r + 1, 1)
    np.cumsum(indptr, out=indptr)
    A = sp.csr_matrix((summed, c, indptr), shape=(n_rows, n_cols))
    A.has_sorted_indices = True
    return A


PROBE_TOL = 1e-9
PIVOTING = ("auto", "static", "partial")
default_pivoting = "auto"


def set_default_pivoting(strategy: str) -> None:
    """Strategy used when :class:`Factorization` is built without one."""
    global default_pivoting
    if strategy not in PIVOTING:
        raise ValueError(f"unknown pivoting strategy {strategy!r}; choose from {PIVOTING}")
    default_pivoting = strategy


def _splu(A, pivoting: str):
    if pivoting == "static":
        return spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    return spla.splu(A, permc_spec="COLAMD")


class Factorization:
    """LU factors of one matrix snapshot, reused for many right-hand sides.

    Parameters
    ----------
    A : sparse matrix, square
    pivoting : {"auto", "static", "partial"}, optional
        Defaults to the module-wide setting. ``"auto"`` tries static pivots and falls back to partial pivoting
        when a zero pivot or a poor probe residual shows up.
    """

    def __init__(self, A, pivoting: str | None = None):
        pivoting = default_pivoting if pivoting is None else pivoting
        A = sp.csc_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"matrix must be square, got {A.shape}")
        if pivoting not in PIVOTING:
            raise ValueError(f"unknown pivoting strategy {pivoting!r}")
        self.shape = A.shape
        self.matrix = A
        self.pivoting = "partial" if pivoting == "partial" else "static"
        if self.pivoting == "static":
            try:
                self._lu = _splu(A, "static")
                self._check_pivots()
                self._probe()
            except (RuntimeError, SingularMatrixError) as exc:
                if pivoting == "static":
                    raise SingularMatrixError(f"static-pivot factorization failed: {exc}") from exc
                self.pivoting = "partial"
        if self.pivoting == "partial":
            try:
                self._lu = _splu(A, "partial")
            except RuntimeError as exc:
                raise SingularMatrixError(
                    f"zero pivot during LU factorization ({exc}); check Dirichlet constraints "
                    "and inf-sup stability of the discretization"
                ) from exc
            self._check_pivots()

    def _check_pivots(self):
        U = self._lu.U.diagonal()
        bad = np.flatnonzero(~np.isfinite(U) | (U == 0.0))
        if bad.size:
            raise SingularMatrixError(f"zero pivot at position {int(bad[0])}")

    def _probe(self):
        n = self.shape[0]
        b = self.matrix @ np.cos(np.arange(n, dtype=float))
        x = self._lu.solve(b)
        res = np.linalg.norm(self.matrix @ x - b) / max(np.linalg.norm(b), 1e-300)
        if not np.isfinite(res) or res > PROBE_TOL:
            raise SingularMatrixError(f"probe residual {res:.1e} above {PROBE_TOL:.0e}")

    def solve(self, rhs) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.shape[0]:
            raise ValueError(f"rhs length {rhs.shape[0]} does not match matrix size {self.shape[0]}")
        return self._lu.solve(rhs)


def factorize(A, pivoting: str | None = None) -> Factorization:
    return Factorization(A, pivoting)


def solve(fact: Factorization, rhs) -> np.ndarray:
    return fact.solve(rhs)
