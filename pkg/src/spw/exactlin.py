"""Exact sparse linear algebra over the rationals and over Q[hbar].

Everything is Fraction arithmetic; no floats anywhere.  Elimination is
fraction-free (Bareiss) on denominator-cleared integer rows, with the
pivot chosen as the smallest nonzero magnitude in the current column to
keep intermediate entries small.  Matrices are immutable and cache their
echelon form.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from .errors import CompositionNonzero, NoSolution

Rat = Fraction


def _as_rat(x) -> Rat:
    if isinstance(x, Rat):
        return x
    if isinstance(x, int):
        return Rat(x)
    raise TypeError(f"exact coefficient expected, got {type(x).__name__}")


class SparseMatrix:
    """Immutable sparse matrix over Q, stored as {(row, col): coeff}."""

    __slots__ = ("rows", "cols", "_entries", "_ech")

    def __init__(self, rows: int, cols: int, entries=None):
        if rows < 0 or cols < 0:
            raise ValueError("negative matrix dimensions")
        self.rows = rows
        self.cols = cols
        data = {}
        if entries:
            items = entries.items() if isinstance(entries, dict) else entries
            for key_or_triple in items:
                if isinstance(entries, dict):
                    (i, j), v = key_or_triple
                else:
                    i, j, v = key_or_triple
                v = _as_rat(v)
                if not (0 <= i < rows and 0 <= j < cols):
                    raise ValueError(f"entry ({i},{j}) outside {rows}x{cols}")
                if (i, j) in data:
                    raise ValueError(f"duplicate entry at ({i},{j})")
                if v != 0:
                    data[i, j] = v
        self._entries = data
        self._ech = None

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, rows: int, cols: int) -> "SparseMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(n, n, [(i, i, 1) for i in range(n)])

    @classmethod
    def from_rows(cls, rowlists, cols=None) -> "SparseMatrix":
        rowlists = [list(r) for r in rowlists]
        if cols is None:
            cols = len(rowlists[0]) if rowlists else 0
        ent = []
        for i, r in enumerate(rowlists):
            if len(r) != cols:
                raise ValueError("ragged rows")
            for j, v in enumerate(r):
                if v:
                    ent.append((i, j, v))
        return cls(len(rowlists), cols, ent)

    @classmethod
    def from_columns(cls, collists, rows=None) -> "SparseMatrix":
        collists = [list(c) for c in collists]
        if rows is None:
            rows = len(collists[0]) if collists else 0
        ent = []
        for j, c in enumerate(collists):
            if len(c) != rows:
                raise ValueError("ragged columns")
            for i, v in enumerate(c):
                if v:
                    ent.append((i, j, v))
        return cls(rows, len(collists), ent)

    # -- accessors ----------------------------------------------------

    def entry(self, i: int, j: int) -> Rat:
        return self._entries.get((i, j), Rat(0))

    def items(self):
        return self._entries.items()

    def is_zero(self) -> bool:
        return not self._entries

    def to_dense(self):
        out = [[Rat(0)] * self.cols for _ in range(self.rows)]
        for (i, j), v in self._entries.items():
            out[i][j] = v
        return out

    def __eq__(self, other):
        return (
            isinstance(other, SparseMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self._entries == other._entries
        )

    def __hash__(self):
        return hash((self.rows, self.cols, frozenset(self._entries.items())))

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, {len(self._entries)} entries)"

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch in matrix sum")
        data = dict(self._entries)
        for k, v in other._entries.items():
            w = data.get(k, Rat(0)) + v
            if w:
                data[k] = w
            else:
                data.pop(k, None)
        return SparseMatrix(self.rows, self.cols, data)

    def __neg__(self):
        return SparseMatrix(
            self.rows, self.cols, {k: -v for k, v in self._entries.items()}
        )

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "SparseMatrix":
        c = _as_rat(c)
        if c == 0:
            return SparseMatrix.zero(self.rows, self.cols)
        return SparseMatrix(
            self.rows, self.cols, {k: c * v for k, v in self._entries.items()}
        )

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in matrix product")
        by_row = {}
        for (i, j), v in other._entries.items():
            by_row.setdefault(i, []).append((j, v))
        acc = {}
        for (i, k), v in self._entries.items():
            for j, w in by_row.get(k, ()):
                key = (i, j)
                s = acc.get(key, Rat(0)) + v * w
                if s:
                    acc[key] = s
                else:
                    acc.pop(key, None)
        return SparseMatrix(self.rows, other.cols, acc)

    def mul_vec(self, v):
        if len(v) != self.cols:
            raise ValueError("vector length mismatch")
        out = [Rat(0)] * self.rows
        for (i, j), a in self._entries.items():
            if v[j]:
                out[i] += a * v[j]
        return tuple(out)

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(
            self.cols, self.rows, {(j, i): v for (i, j), v in self._entries.items()}
        )

    # -- elimination ---------------------------------------------------

    def _echelon(self):
        """Cached fraction-free echelon form.

        Returns (rows, pivot_cols): `rows` is a list of Fraction row
        vectors in echelon form (pivot entry normalised to 1), and
        `pivot_cols[r]` is the pivot column of row r.
        """
        if self._ech is None:
            self._ech = _bareiss_echelon(self.to_dense())
        return self._ech

    def rank(self) -> int:
        return len(self._echelon()[1])

    def pivot_columns(self):
        return tuple(self._echelon()[1])


def _clear_denominators(row):
    """Scale a Fraction row to coprime integers (sign preserved)."""
    lcm = 1
    for v in row:
        if v:
            lcm = lcm * v.denominator // gcd(lcm, v.denominator)
    ints = [int(v * lcm) for v in row]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    if g > 1:
        ints = [v // g for v in ints]
    return ints


def _bareiss_echelon(dense):
    """Fraction-free row echelon; returns normalised Fraction rows + pivots."""
    work = [_clear_denominators(r) for r in dense]
    work = [r for r in work if any(r)]
    n_cols = len(dense[0]) if dense else 0
    pivot_cols = []
    echelon_rows = []
    prev_pivot = 1
    col = 0
    while work and col < n_cols:
        # exact pivoting: smallest nonzero magnitude in this column
        cand = [(abs(r[col]), idx) for idx, r in enumerate(work) if r[col]]
        if not cand:
            col += 1
            continue
        _, best = min(cand)
        pivot_row = work.pop(best)
        p = pivot_row[col]
        nxt = []
        for r in work:
            # Bareiss step; rows with r[col] = 0 are still rescaled by
            # p/prev_pivot, otherwise later exact divisions would not be
            rc = r[col]
            r = [(p * r[j] - rc * pivot_row[j]) // prev_pivot for j in range(n_cols)]
            if any(r):
                nxt.append(r)
        work = nxt
        prev_pivot = p
        pivot_cols.append(col)
        echelon_rows.append(pivot_row)
        col += 1
    # back-substitute to reduced form over Q, pivots normalised to 1
    reduced = [[Rat(v) for v in r] for r in echelon_rows]
    for r_idx in range(len(reduced) - 1, -1, -1):
        pc = pivot_cols[r_idx]
        pv = reduced[r_idx][pc]
        reduced[r_idx] = [v / pv for v in reduced[r_idx]]
        for up in range(r_idx):
            f = reduced[up][pc]
            if f:
                reduced[up] = [
                    a - f * b for a, b in zip(reduced[up], reduced[r_idx])
                ]
    return reduced, pivot_cols


def kernel_basis(m: SparseMatrix):
    """Basis of ker(m) as Fraction tuples; empty matrix gives the standard basis."""
    reduced, pivot_cols = m._echelon()
    pivot_set = set(pivot_cols)
    free_cols = [j for j in range(m.cols) if j not in pivot_set]
    basis = []
    for f in free_cols:
        v = [Rat(0)] * m.cols
        v[f] = Rat(1)
        for r_idx in range(len(reduced) - 1, -1, -1):
            pc = pivot_cols[r_idx]
            s = sum(reduced[r_idx][j] * v[j] for j in range(pc + 1, m.cols) if v[j])
            v[pc] = -s
        basis.append(tuple(v))
    return basis


def rank(m: SparseMatrix) -> int:
    return m.rank()


class HomologyResult:
    """Dimension plus representative cycles for ker(d_out)/im(d_in)."""

    __slots__ = ("dimension", "representatives", "kernel_dimension", "image_rank")

    def __init__(self, dimension, representatives, kernel_dimension, image_rank):
        self.dimension = dimension
        self.representatives = representatives
        self.kernel_dimension = kernel_dimension
        self.image_rank = image_rank

    def __repr__(self):
        return f"HomologyResult(dim={self.dimension})"


def homology(d_in: SparseMatrix, d_out: SparseMatrix) -> HomologyResult:
    """Homology at the middle of  A --d_in--> B --d_out--> C.

    Checks d_out @ d_in == 0 exactly and raises CompositionNonzero otherwise.
    Representatives are kernel vectors projecting to a quotient basis.
    """
    if d_in.rows != d_out.cols:
        raise ValueError("middle dimensions disagree")
    if not (d_out @ d_in).is_zero():
        raise CompositionNonzero("d_out o d_in != 0")
    ker = kernel_basis(d_out)
    im_rank = d_in.rank()
    dim = len(ker) - im_rank
    # pick kernel vectors independent modulo the image: echelon the image
    # columns first, then keep kernel vectors that create new pivots
    n = d_in.rows
    image_cols = []
    for (i, j), v in d_in.items():
        while len(image_cols) <= j:
            image_cols.append([Rat(0)] * n)
        image_cols[j][i] = v
    image_cols = [c for c in image_cols if any(c)]
    reps = []
    stacked = list(image_cols)
    current_rank = SparseMatrix.from_columns(stacked, rows=n).rank() if stacked else 0
    for v in ker:
        trial = stacked + [list(v)]
        r = SparseMatrix.from_columns(trial, rows=n).rank()
        if r > current_rank:
            reps.append(v)
            stacked = trial
            current_rank = r
        if len(reps) == dim:
            break
    return HomologyResult(dim, reps, len(ker), im_rank)


def solve_linear(m: SparseMatrix, b):
    """One exact solution of m x = b plus a kernel basis.

    Raises NoSolution when b is not in the image.
    """
    if len(b) != m.rows:
        raise ValueError("rhs length mismatch")
    b = [_as_rat(x) for x in b]
    aug_dense = m.to_dense()
    for i in range(m.rows):
        aug_dense[i] = aug_dense[i] + [b[i]]
    reduced, pivot_cols = _bareiss_echelon(aug_dense) if m.rows else ([], [])
    if m.cols in pivot_cols:
        raise NoSolution("rhs not in the image")
    x = [Rat(0)] * m.cols
    for r_idx in range(len(reduced) - 1, -1, -1):
        pc = pivot_cols[r_idx]
        s = sum(reduced[r_idx][j] * x[j] for j in range(pc + 1, m.cols) if x[j])
        x[pc] = reduced[r_idx][m.cols] - s
    assert m.mul_vec(x) == tuple(b)
    return tuple(x), kernel_basis(m)


def maybe_solve(m: SparseMatrix, b):
    """solve_linear that returns None instead of raising."""
    try:
        return solve_linear(m, b)
    except NoSolution:
        return None


# ---------------------------------------------------------------------------
# Q[hbar]
# ---------------------------------------------------------------------------


class QPoly:
    """Dense univariate polynomial over Q in canonical expanded form."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = [_as_rat(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def const(cls, c):
        return cls((c,))

    @classmethod
    def hbar(cls, power=1):
        return cls((0,) * power + (1,))

    def is_zero(self):
        return not self.coeffs

    def degree(self):
        return len(self.coeffs) - 1

    def __add__(self, other):
        other = other if isinstance(other, QPoly) else QPoly.const(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return QPoly(
            [
                (self.coeffs[i] if i < len(self.coeffs) else 0)
                + (other.coeffs[i] if i < len(other.coeffs) else 0)
                for i in range(n)
            ]
        )

    __radd__ = __add__

    def __neg__(self):
        return QPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        other = other if isinstance(other, QPoly) else QPoly.const(other)
        return self + (-other)

    def __mul__(self, other):
        other = other if isinstance(other, QPoly) else QPoly.const(other)
        if self.is_zero() or other.is_zero():
            return QPoly()
        out = [Rat(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    if b:
                        out[i + j] += a * b
        return QPoly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = QPoly.const(other)
        return isinstance(other, QPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def evaluate(self, value) -> Rat:
        value = _as_rat(value)
        acc = Rat(0)
        for c in reversed(self.coeffs):
            acc = acc * value + c
        return acc

    def __repr__(self):
        if self.is_zero():
            return "0"
        parts = []
        for i, c in enumerate(self.coeffs):
            if not c:
                continue
            if i == 0:
                parts.append(str(c))
            elif i == 1:
                parts.append(f"{c}*h" if c != 1 else "h")
            else:
                parts.append(f"{c}*h^{i}" if c != 1 else f"h^{i}")
        return " + ".join(parts)


class PolySparseMatrix:
    """Immutable sparse matrix over Q[hbar]."""

    __slots__ = ("rows", "cols", "_entries")

    def __init__(self, rows, cols, entries=None):
        self.rows = rows
        self.cols = cols
        data = {}
        if entries:
            items = entries.items() if isinstance(entries, dict) else entries
            for item in items:
                if isinstance(entries, dict):
                    (i, j), v = item
                else:
                    i, j, v = item
                if not isinstance(v, QPoly):
                    v = QPoly.const(v)
                if not (0 <= i < rows and 0 <= j < cols):
                    raise ValueError(f"entry ({i},{j}) outside {rows}x{cols}")
                if (i, j) in data:
                    raise ValueError(f"duplicate entry at ({i},{j})")
                if not v.is_zero():
                    data[i, j] = v
        self._entries = data

    def entry(self, i, j) -> QPoly:
        return self._entries.get((i, j), QPoly())

    def items(self):
        return self._entries.items()

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        by_row = {}
        for (i, j), v in other._entries.items():
            by_row.setdefault(i, []).append((j, v))
        acc = {}
        for (i, k), v in self._entries.items():
            for j, w in by_row.get(k, ()):
                acc[i, j] = acc.get((i, j), QPoly()) + v * w
        return PolySparseMatrix(self.rows, other.cols, acc)

    def specialize(self, value) -> SparseMatrix:
        return SparseMatrix(
            self.rows,
            self.cols,
            {k: v.evaluate(value) for k, v in self._entries.items()},
        )

    def __eq__(self, other):
        return (
            isinstance(other, PolySparseMatrix)
            and (self.rows, self.cols) == (other.rows, other.cols)
            and self._entries == other._entries
        )

    def __repr__(self):
        return f"PolySparseMatrix({self.rows}x{self.cols}, {len(self._entries)} entries)"
