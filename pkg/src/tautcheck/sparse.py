"""Sparse exact integer matrices with factored entries.

Entries produced by the plumbing assembly all have the shape
``base * C(n, k)`` with a small base (one of +-1, +-nu) and a binomial
coefficient from the chart shift x -> x+1.  Storing the two factors
instead of the (potentially hundreds of digits) product keeps the big
workloads in hundreds of MB instead of GB and makes reduction mod p a
table lookup.  Entries read back from text files are kept verbatim in a
side table.

Entries are stored in canonical row-major order (row, then column); no
duplicate coordinates and no zero values are allowed.

Text format::

    <nrows> <ncols> M
    <row> <col> <value>        # 1-based coordinates, any order
    ...
    0 0 0
"""

from __future__ import annotations

import math

import numpy as np


class SparseMatrixError(ValueError):
    """Raised for malformed matrix data or files."""


def _pascal_mod(nmax: int, p: int) -> np.ndarray:
    """Table of C(n, k) mod p for 0 <= k <= n <= nmax."""
    t = np.zeros((nmax + 1, nmax + 1), dtype=np.int64)
    t[:, 0] = 1 % p
    for n in range(1, nmax + 1):
        t[n, 1:n + 1] = (t[n - 1, 1:n + 1] + t[n - 1, 0:n]) % p
    return t


class SparseIntMatrix:
    """Exact integer sparse matrix in coordinate form.

    Attributes
    ----------
    nrows, ncols : int
    row, col : int64 arrays, canonical (row-major) order
    base, bin_n, bin_k : arrays
        Entry i has value ``base[i] * C(bin_n[i], bin_k[i])`` unless
        overridden by `big`.
    big : dict
        Entry index -> exact value, for literal entries that do not fit
        the factored form.
    """

    __slots__ = ("nrows", "ncols", "row", "col", "base", "bin_n", "bin_k",
                 "big")

    def __init__(self, nrows: int, ncols: int, row, col, base, bin_n, bin_k,
                 big: dict[int, int] | None = None):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        row = np.asarray(row, dtype=np.int64)
        col = np.asarray(col, dtype=np.int64)
        base = np.asarray(base, dtype=np.int64)
        bin_n = np.asarray(bin_n, dtype=np.int32)
        bin_k = np.asarray(bin_k, dtype=np.int32)
        big = dict(big or {})
        if not (row.size == col.size == base.size == bin_n.size == bin_k.size):
            raise SparseMatrixError("entry arrays disagree in length")
        if row.size:
            if row.min() < 0 or row.max() >= self.nrows:
                raise SparseMatrixError("row index out of range")
            if col.min() < 0 or col.max() >= self.ncols:
                raise SparseMatrixError("column index out of range")
            if (bin_k < 0).any() or (bin_k > bin_n).any():
                raise SparseMatrixError("invalid binomial factor")
            order = np.lexsort((col, row))
            row, col = row[order], col[order]
            base, bin_n, bin_k = base[order], bin_n[order], bin_k[order]
            if big:
                pos = np.empty(order.size, dtype=np.int64)
                pos[order] = np.arange(order.size)
                big = {int(pos[i]): v for i, v in big.items()}
            dup = (np.diff(row) == 0) & (np.diff(col) == 0)
            if dup.any():
                i = int(np.nonzero(dup)[0][0])
                raise SparseMatrixError(
                    f"duplicate entry at row {int(row[i])}, col {int(col[i])}")
            if any(v == 0 for v in big.values()):
                raise SparseMatrixError("explicit zero entry")
            if (base == 0).any():
                # base 0 is only legal under a big-table override
                for i in np.nonzero(base == 0)[0]:
                    if int(i) not in big:
                        raise SparseMatrixError("zero-valued entry")
        self.row, self.col = row, col
        self.base, self.bin_n, self.bin_k = base, bin_n, bin_k
        self.big = big

    # -- constructors ------------------------------------------------------

    @classmethod
    def empty(cls, nrows: int, ncols: int) -> "SparseIntMatrix":
        z = np.zeros(0, dtype=np.int64)
        return cls(nrows, ncols, z, z, z, z, z)

    @classmethod
    def from_coo(cls, nrows: int, ncols: int,
                 triples) -> "SparseIntMatrix":
        """Build from (row, col, value) triples with exact int values."""
        rows, cols, bases = [], [], []
        big: dict[int, int] = {}
        lim = 1 << 62
        for i, (r, c, v) in enumerate(triples):
            rows.append(r)
            cols.append(c)
            if -lim < v < lim:
                bases.append(v)
            else:
                bases.append(1)
                big[i] = v
        z = np.zeros(len(rows), dtype=np.int32)
        return cls(nrows, ncols, rows, cols, bases, z, z, big)

    # -- basic queries -----------------------------------------------------

    @property
    def nnz(self) -> int:
        return int(self.row.size)

    @property
    def density(self) -> float:
        cells = self.nrows * self.ncols
        return self.nnz / cells if cells else 0.0

    def value(self, i: int) -> int:
        if i in self.big:
            return self.big[i]
        return int(self.base[i]) * math.comb(int(self.bin_n[i]),
                                             int(self.bin_k[i]))

    def entries(self):
        """Yield (row, col, exact int value) in canonical order."""
        for i in range(self.nnz):
            yield int(self.row[i]), int(self.col[i]), self.value(i)

    def to_dense(self) -> list[list[int]]:
        a = [[0] * self.ncols for _ in range(self.nrows)]
        for r, c, v in self.entries():
            a[r][c] = v
        return a

    # -- modular reduction -------------------------------------------------

    def arrays_mod(self, p: int):
        """(rows, cols, values mod p) with zero residues dropped."""
        base_m = self.base % p
        if self.bin_n.size and int(self.bin_n.max()) > 0:
            pas = _pascal_mod(int(self.bin_n.max()), p)
            vals = base_m * pas[self.bin_n, self.bin_k] % p
        else:
            vals = base_m
        for i, v in self.big.items():
            vals[i] = v % p
        keep = vals != 0
        return self.row[keep], self.col[keep], vals[keep]


# ---------------------------------------------------------------------------
# text format


def write_matrix_text(matrix: SparseIntMatrix, path: str) -> None:
    """Write the matrix in the line-based triple format (1-based indices,
    canonical row-major order, '0 0 0' terminator)."""
    with open(path, "w") as f:
        f.write(f"{matrix.nrows} {matrix.ncols} M\n")
        buf: list[str] = []
        for r, c, v in matrix.entries():
            buf.append(f"{r + 1} {c + 1} {v}\n")
            if len(buf) >= 65536:
                f.write("".join(buf))
                buf.clear()
        buf.append("0 0 0\n")
        f.write("".join(buf))


def matrix_to_text(matrix: SparseIntMatrix) -> str:
    lines = [f"{matrix.nrows} {matrix.ncols} M"]
    lines.extend(f"{r + 1} {c + 1} {v}" for r, c, v in matrix.entries())
    lines.append("0 0 0")
    return "\n".join(lines) + "\n"


def matrix_from_text(text: str) -> SparseIntMatrix:
    """Parse the triple format.  Entries may come in any order; duplicate
    coordinates, zero values, out-of-range indices, or a missing
    terminator are errors."""
    lines = text.splitlines()
    if not lines:
        raise SparseMatrixError("empty matrix file")
    head = lines[0].split()
    if len(head) != 3 or head[2] != "M":
        raise SparseMatrixError(f"bad header line {lines[0]!r}")
    try:
        nrows, ncols = int(head[0]), int(head[1])
    except ValueError:
        raise SparseMatrixError(f"bad header line {lines[0]!r}") from None
    if nrows < 0 or ncols < 0:
        raise SparseMatrixError("negative dimensions")
    triples: list[tuple[int, int, int]] = []
    done = False
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if done:
            raise SparseMatrixError(f"line {lineno}: content after terminator")
        parts = line.split()
        if len(parts) != 3:
            raise SparseMatrixError(f"line {lineno}: expected 3 fields")
        try:
            r, c, v = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            raise SparseMatrixError(f"line {lineno}: non-integer field") from None
        if r == 0 and c == 0 and v == 0:
            done = True
            continue
        if not (1 <= r <= nrows and 1 <= c <= ncols):
            raise SparseMatrixError(f"line {lineno}: index out of range")
        if v == 0:
            raise SparseMatrixError(f"line {lineno}: explicit zero entry")
        triples.append((r - 1, c - 1, v))
    if not done:
        raise SparseMatrixError("missing '0 0 0' terminator")
    return SparseIntMatrix.from_coo(nrows, ncols, triples)


def read_matrix_text(path: str) -> SparseIntMatrix:
    with open(path) as f:
        return matrix_from_text(f.read())
