"""Dense exact matrices over a :class:`~seclin.field.FieldSpec`.

Everything structural (rank, null space, products, submatrices) is exact.
The one floating-point routine is :func:`sym_eigs`, a cyclic Jacobi
eigensolver used for the real-field leakage bound.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .field import FieldError, FieldSpec, Scalar, format_scalar


class ShapeError(ValueError):
    """Dimension mismatch, bad index, or malformed matrix input."""


def index_set(indices: Iterable[int], bound: int | None = None) -> tuple[int, ...]:
    """Validate a strictly increasing, duplicate-free zero-based index list."""
    idx = tuple(int(i) for i in indices)
    for a, b in zip(idx, idx[1:]):
        if b <= a:
            raise ShapeError(f"index set must be strictly increasing: {idx}")
    if idx and idx[0] < 0:
        raise ShapeError(f"negative index in {idx}")
    if bound is not None and idx and idx[-1] >= bound:
        raise ShapeError(f"index {idx[-1]} out of range for dimension {bound}")
    return idx


class Matrix:
    """Immutable row-major matrix with canonical field entries."""

    __slots__ = ("field", "rows", "cols", "_data")

    def __init__(self, data: Sequence[Sequence], field: FieldSpec, cols: int | None = None):
        rows = [tuple(field.coerce(v) for v in row) for row in data]
        if cols is None:
            if not rows:
                raise ShapeError("empty matrix needs an explicit column count")
            cols = len(rows[0])
        for r in rows:
            if len(r) != cols:
                raise ShapeError(f"ragged matrix: expected {cols} columns, got {len(r)}")
        self.field = field
        self.rows = len(rows)
        self.cols = cols
        self._data = tuple(rows)

    @classmethod
    def _raw(cls, data, field: FieldSpec, rows: int, cols: int) -> "Matrix":
        # trusted constructor: entries already canonical
        m = object.__new__(cls)
        m.field, m.rows, m.cols, m._data = field, rows, cols, tuple(tuple(r) for r in data)
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int, field: FieldSpec) -> "Matrix":
        z = field.zero
        return cls._raw([[z] * cols for _ in range(rows)], field, rows, cols)

    @classmethod
    def identity(cls, n: int, field: FieldSpec) -> "Matrix":
        z, o = field.zero, field.one
        return cls._raw([[o if i == j else z for j in range(n)] for i in range(n)], field, n, n)

    # -- access ------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij):
        i, j = ij
        return self._data[i][j]

    def row(self, i: int) -> tuple:
        return self._data[i]

    def col(self, j: int) -> tuple:
        return tuple(r[j] for r in self._data)

    def tolist(self) -> list[list]:
        return [list(r) for r in self._data]

    def to_json(self) -> list[list]:
        return [[format_scalar(v) for v in r] for r in self._data]

    def to_numpy(self, dtype=float) -> np.ndarray:
        if dtype is float:
            arr = np.array([[float(v) for v in r] for r in self._data], dtype=float)
        else:
            arr = np.array([[int(v) for v in r] for r in self._data], dtype=dtype)
        return arr.reshape(self.rows, self.cols)

    def support(self, i: int) -> tuple[int, ...]:
        """Column indices of the nonzero entries in row ``i``."""
        return tuple(j for j, v in enumerate(self._data[i]) if v != 0)

    def col_support(self, j: int) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self._data) if r[j] != 0)

    def is_zero(self) -> bool:
        return all(v == 0 for r in self._data for v in r)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.field == other.field and self.shape == other.shape and self._data == other._data

    def __hash__(self):
        return hash((self.field, self.rows, self.cols, self._data))

    def __repr__(self):
        body = "; ".join(" ".join(str(format_scalar(v)) for v in r) for r in self._data)
        return f"Matrix[{self.rows}x{self.cols} over {self.field}]({body})"

    # -- structure ---------------------------------------------------------

    def _same(self, other: "Matrix"):
        if self.field != other.field:
            raise FieldError(f"field mismatch: {self.field} vs {other.field}")

    def transpose(self) -> "Matrix":
        data = [[r[j] for r in self._data] for j in range(self.cols)]
        return Matrix._raw(data, self.field, self.cols, self.rows)

    @property
    def T(self) -> "Matrix":
        return self.transpose()

    def select_rows(self, idx: Iterable[int]) -> "Matrix":
        idx = index_set(idx, self.rows)
        return Matrix._raw([self._data[i] for i in idx], self.field, len(idx), self.cols)

    def select_cols(self, idx: Iterable[int]) -> "Matrix":
        idx = index_set(idx, self.cols)
        return Matrix._raw([[r[j] for j in idx] for r in self._data], self.field, self.rows, len(idx))

    def delete_cols(self, idx: Iterable[int]) -> "Matrix":
        drop = set(index_set(idx, self.cols))
        return self.select_cols(j for j in range(self.cols) if j not in drop)

    def delete_rows(self, idx: Iterable[int]) -> "Matrix":
        drop = set(index_set(idx, self.rows))
        return self.select_rows(i for i in range(self.rows) if i not in drop)

    def hstack(self, other: "Matrix") -> "Matrix":
        self._same(other)
        if self.rows != other.rows:
            raise ShapeError(f"hstack row mismatch {self.shape} vs {other.shape}")
        return Matrix._raw([a + b for a, b in zip(self._data, other._data)],
                           self.field, self.rows, self.cols + other.cols)

    def vstack(self, other: "Matrix") -> "Matrix":
        self._same(other)
        if self.cols != other.cols:
            raise ShapeError(f"vstack column mismatch {self.shape} vs {other.shape}")
        return Matrix._raw(self._data + other._data, self.field, self.rows + other.rows, self.cols)

    def with_entry(self, i: int, j: int, value) -> "Matrix":
        data = self.tolist()
        data[i][j] = self.field.coerce(value)
        return Matrix._raw(data, self.field, self.rows, self.cols)

    # -- arithmetic --------------------------------------------------------

    def matmul(self, other: "Matrix") -> "Matrix":
        self._same(other)
        if self.cols != other.rows:
            raise ShapeError(f"cannot multiply {self.shape} by {other.shape}")
        f = self.field
        out = []
        cols = [other.col(j) for j in range(other.cols)]
        for r in self._data:
            row = []
            for c in cols:
                acc = f.zero
                for a, b in zip(r, c):
                    if a != 0 and b != 0:
                        acc = acc + a * b
                row.append(acc % f.p if f.p is not None else acc)
            out.append(row)
        return Matrix._raw(out, f, self.rows, other.cols)

    __matmul__ = matmul

    def __add__(self, other: "Matrix") -> "Matrix":
        self._same(other)
        if self.shape != other.shape:
            raise ShapeError(f"cannot add {self.shape} and {other.shape}")
        f = self.field
        return Matrix._raw([[f.add(a, b) for a, b in zip(r, s)] for r, s in zip(self._data, other._data)],
                           f, self.rows, self.cols)

    def __neg__(self) -> "Matrix":
        f = self.field
        return Matrix._raw([[f.neg(a) for a in r] for r in self._data], f, self.rows, self.cols)

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + (-other)

    def scale_row(self, i: int, factor) -> "Matrix":
        f = self.field
        factor = f.coerce(factor)
        data = self.tolist()
        data[i] = [f.mul(factor, v) for v in data[i]]
        return Matrix._raw(data, f, self.rows, self.cols)

    def scale_col(self, j: int, factor) -> "Matrix":
        f = self.field
        factor = f.coerce(factor)
        data = self.tolist()
        for r in data:
            r[j] = f.mul(factor, r[j])
        return Matrix._raw(data, f, self.rows, self.cols)

    def reduce_mod(self, p: int) -> "Matrix":
        """Map a rational matrix into GF(p)."""
        target = FieldSpec.gf(p)
        return Matrix(self._data, target, self.cols)

    # -- elimination -------------------------------------------------------

    def rref(self) -> tuple["Matrix", tuple[int, ...]]:
        """Reduced row echelon form and pivot columns (leftmost pivots)."""
        f = self.field
        m = [list(r) for r in self._data]
        pivots = []
        r = 0
        for c in range(self.cols):
            if r == self.rows:
                break
            piv = next((i for i in range(r, self.rows) if m[i][c] != 0), None)
            if piv is None:
                continue
            m[r], m[piv] = m[piv], m[r]
            inv = f.inv(m[r][c])
            m[r] = [f.mul(inv, v) for v in m[r]]
            for i in range(self.rows):
                if i != r and m[i][c] != 0:
                    factor = m[i][c]
                    m[i] = [f.sub(a, f.mul(factor, b)) for a, b in zip(m[i], m[r])]
            pivots.append(c)
            r += 1
        return Matrix._raw(m, f, self.rows, self.cols), tuple(pivots)

    def rank(self) -> int:
        return len(self.rref()[1])

    def null_space_basis(self) -> "Matrix":
        """Columns form a basis of ``{x : self @ x = 0}``; one column per free variable."""
        f = self.field
        red, pivots = self.rref()
        free = [j for j in range(self.cols) if j not in pivots]
        basis = []
        for j in free:
            v = [f.zero] * self.cols
            v[j] = f.one
            for r, pc in enumerate(pivots):
                v[pc] = f.neg(red[r, j])
            basis.append(v)
        if not basis:
            return Matrix._raw([[] for _ in range(self.cols)], f, self.cols, 0)
        return Matrix._raw(list(zip(*basis)), f, self.cols, len(basis))

    def left_null_space_basis(self) -> "Matrix":
        """Rows form a basis of ``{y : y @ self = 0}``."""
        return self.T.null_space_basis().T


def rank(m: Matrix) -> int:
    return m.rank()


def null_space_basis(m: Matrix) -> Matrix:
    return m.null_space_basis()


def matmul(a: Matrix, b: Matrix) -> Matrix:
    return a.matmul(b)


def same_column_span(a: Matrix, b: Matrix) -> bool:
    """True when the column spaces of ``a`` and ``b`` coincide (mutual rank test)."""
    if a.rows != b.rows:
        return False
    ra, rb = a.rank(), b.rank()
    return ra == rb == a.hstack(b).rank()


def sym_eigs(m, tol: float = 1e-10, max_sweeps: int = 100) -> list[float]:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm drops below ``tol``.
    Accepts a :class:`Matrix` (rational entries converted to float) or an
    array-like.  Returns eigenvalues in ascending order.
    """
    a = m.to_numpy() if isinstance(m, Matrix) else np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"sym_eigs needs a square matrix, got shape {a.shape}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = max(1.0, float(np.abs(a).max()) if a.size else 1.0)
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * scale):
        raise ShapeError("sym_eigs needs a symmetric matrix")
    a = (a + a.T) / 2.0
    n = a.shape[0]

    def off(x):
        o = x - np.diag(np.diag(x))
        return math.sqrt(float(np.sum(o * o)))

    for _ in range(max_sweeps):
        if off(a) < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)  # theta^2 would overflow
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
    else:
        if off(a) >= tol:
            raise ArithmeticError(f"Jacobi did not converge in {max_sweeps} sweeps")
    return sorted(float(v) for v in np.diag(a))
