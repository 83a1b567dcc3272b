"""Compressed-column sparse storage, LU factorization, and solves.

Small systems (n <= 64) take a dense elimination path; larger ones go
through SuperLU with its fill-reducing column ordering.  Either way the
external contract is the same: factorize once, then solve any number of
right-hand sides against the frozen factors.

A Factorization owns copies of what it needs; callers may reassemble the
originating matrix freely afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, TextIO, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import SingularMatrix

_DENSE_MAX = 64
_PIVOT_RTOL = 1e-14


@dataclass
class SparseMatrix:
    """Square compressed-column matrix.

    indptr has n+1 nondecreasing entries; rowind holds 0-based row indices,
    strictly ascending within each column.  (File formats such as Matrix
    Market use 1-based indices; conversion happens at the boundary.)
    """

    n: int
    indptr: np.ndarray
    rowind: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.indptr = np.asarray(self.indptr, dtype=np.int64)
        self.rowind = np.asarray(self.rowind, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.indptr) != self.n + 1:
            raise ValueError("indptr must have n+1 entries")
        if np.any(np.diff(self.indptr) < 0):
            raise ValueError("indptr must be nondecreasing")
        if self.indptr[-1] != len(self.rowind) or len(self.rowind) != len(self.values):
            raise ValueError("nnz mismatch between indptr, rowind, values")
        for j in range(self.n):
            rows = self.rowind[self.indptr[j]:self.indptr[j + 1]]
            if len(rows) and (rows.min() < 0 or rows.max() >= self.n):
                raise ValueError(f"row index out of range in column {j + 1}")
            if np.any(np.diff(rows) <= 0):
                raise ValueError(f"row indices not strictly ascending in column {j + 1}")

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    @classmethod
    def from_coo(cls, n: int, rows, cols, values) -> "SparseMatrix":
        """Build from 0-based coordinate triples (duplicates not allowed)."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        order = np.lexsort((rows, cols))
        rows, cols, values = rows[order], cols[order], values[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, cols + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(n=n, indptr=indptr, rowind=rows, values=values)

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "SparseMatrix":
        a = np.asarray(a, dtype=float)
        rows, cols = np.nonzero(a)
        return cls.from_coo(a.shape[0], rows, cols, a[rows, cols])

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for j in range(self.n):
            sl = slice(self.indptr[j], self.indptr[j + 1])
            a[self.rowind[sl], j] = self.values[sl]
        return a

    def to_scipy(self) -> scipy.sparse.csc_matrix:
        return scipy.sparse.csc_matrix(
            (self.values, self.rowind, self.indptr), shape=(self.n, self.n)
        )

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.to_scipy() @ np.asarray(x, dtype=float)

    def structure_fingerprint(self) -> Tuple[int, int, int]:
        return (self.n, self.nnz, id(self.indptr))


@dataclass
class Factorization:
    """Frozen LU factors of one assembled matrix.

    ``stamp`` records the (t, h) the owning stepper built it at; it is
    bookkeeping only.  Immutable after construction; concurrent solves
    against distinct right-hand sides are safe.
    """

    n: int
    fingerprint: Tuple[int, int, int]
    _dense: Optional[Tuple[np.ndarray, np.ndarray]] = None
    _splu: Optional[object] = None
    stamp: Tuple[float, float] = (0.0, 0.0)
    perturbed: bool = False
    solve_count: int = 0

    def solve(self, b: np.ndarray) -> np.ndarray:
        return solve(self, b)


def factorize(a: SparseMatrix, stamp: Tuple[float, float] = (0.0, 0.0)) -> Factorization:
    """PA = LU with partial pivoting; SuperLU adds a fill-reducing column
    ordering for n > 64.

    Raises SingularMatrix when a pivot falls below 1e-14 times its column's
    magnitude (dense path) or when SuperLU reports exact singularity and a
    last-resort tiny diagonal perturbation also fails.  The perturbation
    fallback exists for algebraically degenerate but consistently-posed
    systems (pure-Neumann potential blocks whose Newton right-hand side is
    zero); a Factorization built that way is flagged ``perturbed``.
    """
    if a.n <= _DENSE_MAX:
        dense = a.to_dense()
        col_mag = np.max(np.abs(dense), axis=0)
        lu, piv = scipy.linalg.lu_factor(dense, check_finite=False)
        diag = np.abs(np.diag(lu))
        bad = np.where(diag < _PIVOT_RTOL * np.maximum(col_mag, 1e-300))[0]
        if len(bad):
            raise SingularMatrix(column=int(bad[0]) + 1)
        return Factorization(n=a.n, fingerprint=a.structure_fingerprint(),
                             _dense=(lu, piv), stamp=stamp)

    csc = a.to_scipy()
    try:
        lu = scipy.sparse.linalg.splu(csc)
        return Factorization(n=a.n, fingerprint=a.structure_fingerprint(),
                             _splu=lu, stamp=stamp)
    except RuntimeError as err:
        if "singular" not in str(err).lower():
            raise
    # pivot-perturbation retry
    eps = 1e-12 * max(np.max(np.abs(a.values)), 1.0)
    perturbed = csc + scipy.sparse.identity(a.n, format="csc") * eps
    try:
        lu = scipy.sparse.linalg.splu(perturbed)
    except RuntimeError as err2:
        raise SingularMatrix(detail=str(err2))
    return Factorization(n=a.n, fingerprint=a.structure_fingerprint(),
                         _splu=lu, stamp=stamp, perturbed=True)


def solve(f: Factorization, b: np.ndarray) -> np.ndarray:
    """x = A^-1 b for the A that was factorized."""
    b = np.asarray(b, dtype=float)
    if b.shape != (f.n,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({f.n},)")
    f.solve_count += 1
    if f._dense is not None:
        return scipy.linalg.lu_solve(f._dense, b, check_finite=False)
    return f._splu.solve(b)


# --- Matrix Market (coordinate, general, real) ---------------------------


def write_matrix_market(a: SparseMatrix, fh: TextIO, pattern_only: bool = False) -> None:
    kind = "pattern" if pattern_only else "real"
    fh.write(f"%%MatrixMarket matrix coordinate {kind} general\n")
    fh.write(f"{a.n} {a.n} {a.nnz}\n")
    for j in range(a.n):
        for idx in range(a.indptr[j], a.indptr[j + 1]):
            if pattern_only:
                fh.write(f"{a.rowind[idx] + 1} {j + 1}\n")
            else:
                fh.write(f"{a.rowind[idx] + 1} {j + 1} {a.values[idx]:.17g}\n")


def read_matrix_market(fh: TextIO) -> SparseMatrix:
    header = fh.readline().strip().lower().split()
    if header[:4] != ["%%matrixmarket", "matrix", "coordinate", "real"] and \
       header[:4] != ["%%matrixmarket", "matrix", "coordinate", "pattern"]:
        raise ValueError("unsupported Matrix Market header")
    pattern = header[3] == "pattern"
    line = fh.readline()
    while line.startswith("%"):
        line = fh.readline()
    nrows, ncols, nnz = map(int, line.split())
    if nrows != ncols:
        raise ValueError("only square matrices are supported")
    rows, cols, vals = [], [], []
    for _ in range(nnz):
        parts = fh.readline().split()
        rows.append(int(parts[0]) - 1)
        cols.append(int(parts[1]) - 1)
        vals.append(1.0 if pattern else float(parts[2]))
    return SparseMatrix.from_coo(nrows, rows, cols, vals)
