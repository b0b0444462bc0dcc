"""Exact rank computations for large sparse integer matrices.

Strategy: reduce mod p, then

1. *peel* rows/columns with a single nonzero entry (each is a pivot and
   contributes exactly 1 to the rank — exact over a field);
2. solve the remaining core by dense vectorized elimination when it is
   small or dense enough, by deterministic sparse Markowitz elimination
   otherwise (with a periodic switch back to dense as it fills in).

The rational rank is certified from below by modular ranks: the rank mod
any prime never exceeds the rank over the rationals, and equals it for
all but finitely many primes.  `rank_over_Q` takes the max over a few
random 31-bit primes; `certified_rank` runs fraction-free elimination
over the integers for small matrices.
"""

from __future__ import annotations

import heapq
import math
import random

import numpy as np

_DEFAULT_SEED = 0x7A07
_DENSE_CELL_BUDGET = 1 << 25
_DENSE_ROW_SWITCH = 4096
_DENSE_DENSITY_SWITCH = 0.2


class LinalgError(ValueError):
    """Raised for invalid matrix arguments or exceeded size caps."""


# ---------------------------------------------------------------------------
# primes

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_probable_prime(n: int) -> bool:
    """Miller-Rabin with fixed bases; deterministic below 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than n."""
    m = n + 1
    while not is_probable_prime(m):
        m += 1
    return m


def sample_rank_primes(trials: int, seed: int = _DEFAULT_SEED) -> list[int]:
    """`trials` distinct random primes in (2^30, 2^31), deterministic in
    the seed (fixed default so reports are byte-identical across runs)."""
    rng = random.Random(seed)
    out: list[int] = []
    while len(out) < trials:
        cand = rng.randrange(2**30 + 1, 2**31) | 1
        if cand not in out and is_probable_prime(cand):
            out.append(cand)
    return out


# ---------------------------------------------------------------------------
# rank mod p


def _peel_mod_p(nrows: int, ncols: int, rows: np.ndarray, cols: np.ndarray,
                vals: np.ndarray) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    """Repeatedly pivot on rows/columns with a single nonzero entry.

    Returns (rank gained, remaining rows, cols, vals).  Exact over GF(p):
    a singleton row's column (and dually) can be eliminated wholesale.
    """
    rank = 0
    while rows.size:
        before = rows.size
        # rows with exactly one entry: pivot there, delete their columns
        rcnt = np.bincount(rows, minlength=nrows)
        mask = (rcnt == 1)[rows]
        if mask.any():
            pivot_cols = np.unique(cols[mask])
            rank += pivot_cols.size
            colmask = np.zeros(ncols, dtype=bool)
            colmask[pivot_cols] = True
            keep = ~colmask[cols]
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        if rows.size == 0:
            break
        # columns with exactly one entry: pivot there, delete their rows
        ccnt = np.bincount(cols, minlength=ncols)
        mask = (ccnt == 1)[cols]
        if mask.any():
            pivot_rows = np.unique(rows[mask])
            rank += pivot_rows.size
            rowmask = np.zeros(nrows, dtype=bool)
            rowmask[pivot_rows] = True
            keep = ~rowmask[rows]
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        if rows.size == before:
            break
    return rank, rows, cols, vals


def _dense_rank_mod_p(a: np.ndarray, p: int) -> int:
    """Gaussian elimination on an int64 array with entries in [0, p).

    Row updates are chunked so temporaries stay small; products fit in
    int64 because p < 2^31.
    """
    m, n = a.shape
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        inv = pow(int(a[r, c]), -1, p)
        a[r, c:] = a[r, c:] * inv % p
        tail = a[r + 1:, c]
        tidx = np.nonzero(tail)[0]
        if tidx.size:
            tidx += r + 1
            width = n - c
            chunk = max(1, (1 << 21) // max(width, 1))
            prow = a[r, c:]
            for lo in range(0, tidx.size, chunk):
                idx = tidx[lo:lo + chunk]
                a[idx, c:] = (a[idx, c:] - a[idx, c][:, None] * prow) % p
        r += 1
    return r


def _densify_and_rank(rowd: dict[int, dict[int, int]], p: int) -> int:
    rids = sorted(rowd)
    cids = sorted({c for rd in rowd.values() for c in rd})
    cpos = {c: i for i, c in enumerate(cids)}
    a = np.zeros((len(rids), len(cids)), dtype=np.int64)
    for i, r in enumerate(rids):
        for c, v in rowd[r].items():
            a[i, cpos[c]] = v
    return _dense_rank_mod_p(a, p)


def _sparse_core_rank_mod_p(rows: np.ndarray, cols: np.ndarray,
                            vals: np.ndarray, p: int,
                            dense_cell_budget: int) -> int:
    """Deterministic column-driven Markowitz elimination over GF(p).

    Pivot choice: the column with fewest entries (lowest id on ties), in
    it the row with fewest entries.  Every 64 pivots the active block is
    re-checked against the dense-switch rule.
    """
    rowd: dict[int, dict[int, int]] = {}
    colr: dict[int, set[int]] = {}
    for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
        rowd.setdefault(r, {})[c] = v
        colr.setdefault(c, set()).add(r)
    nnz = int(rows.size)
    col_heap = [(len(rs), c) for c, rs in colr.items()]
    heapq.heapify(col_heap)
    rank = 0
    steps = 0
    while colr:
        if steps % 64 == 0:
            m, n = len(rowd), len(colr)
            cells = m * n
            if cells and cells <= dense_cell_budget and (
                    m <= _DENSE_ROW_SWITCH or nnz / cells > _DENSE_DENSITY_SWITCH):
                return rank + _densify_and_rank(rowd, p)
        steps += 1
        # pop a valid (count, col) pair
        while True:
            cnt, c0 = heapq.heappop(col_heap)
            cur = colr.get(c0)
            if cur is None:
                continue
            if len(cur) != cnt:
                heapq.heappush(col_heap, (len(cur), c0))
                continue
            break
        r0 = min(colr[c0], key=lambda r: (len(rowd[r]), r))
        prow = rowd.pop(r0)
        inv = pow(prow[c0], -1, p)
        nnz -= len(prow)
        for c2 in prow:
            s = colr[c2]
            s.discard(r0)
            if s:
                if c2 != c0:
                    heapq.heappush(col_heap, (len(s), c2))
            else:
                del colr[c2]
        rank += 1
        targets = sorted(colr.get(c0, ()))
        if targets:
            del colr[c0]
        for r in targets:
            rd = rowd[r]
            f = rd.pop(c0) * inv % p
            nnz -= 1
            for c2, v2 in prow.items():
                if c2 == c0:
                    continue
                nv = (rd.get(c2, 0) - f * v2) % p
                if nv:
                    if c2 not in rd:
                        s = colr.setdefault(c2, set())
                        s.add(r)
                        heapq.heappush(col_heap, (len(s), c2))
                        nnz += 1
                    rd[c2] = nv
                elif c2 in rd:
                    del rd[c2]
                    nnz -= 1
                    s = colr[c2]
                    s.discard(r)
                    if s:
                        heapq.heappush(col_heap, (len(s), c2))
                    else:
                        del colr[c2]
            if not rd:
                del rowd[r]
    return rank


def rank_mod_p(matrix, p: int, *,
               dense_cell_budget: int = _DENSE_CELL_BUDGET) -> int:
    """Exact rank of an integer matrix over GF(p).

    Parameters
    ----------
    matrix : SparseIntMatrix-like
        Needs `nrows`, `ncols` and `arrays_mod(p) -> (rows, cols, vals)`
        with zero residues dropped.
    p : int
        A prime below 2^31.
    """
    if p < 2 or p >= 1 << 31 or not is_probable_prime(p):
        raise LinalgError(f"modulus {p} is not a prime below 2^31")
    rows, cols, vals = matrix.arrays_mod(p)
    rank, rows, cols, vals = _peel_mod_p(matrix.nrows, matrix.ncols,
                                         rows, cols, vals)
    if rows.size == 0:
        return rank
    _, rows = np.unique(rows, return_inverse=True)
    _, cols = np.unique(cols, return_inverse=True)
    m = int(rows.max()) + 1
    n = int(cols.max()) + 1
    cells = m * n
    if cells <= dense_cell_budget and (
            m <= _DENSE_ROW_SWITCH or rows.size / cells > _DENSE_DENSITY_SWITCH):
        a = np.zeros((m, n), dtype=np.int64)
        a[rows, cols] = vals
        return rank + _dense_rank_mod_p(a, p)
    return rank + _sparse_core_rank_mod_p(rows, cols, vals, p,
                                          dense_cell_budget)


# ---------------------------------------------------------------------------
# rank over Q


def modular_rank_survey(matrix, trials: int = 3,
                        seed: int = _DEFAULT_SEED) -> tuple[int, list[int]]:
    """Max rank over `trials` random 31-bit primes, with the primes used."""
    primes = sample_rank_primes(trials, seed)
    return max(rank_mod_p(matrix, q) for q in primes), primes


def rank_over_Q(matrix, trials: int = 3, seed: int = _DEFAULT_SEED) -> int:
    """Monte-Carlo rational rank: max modular rank over `trials` random
    31-bit primes.  Always a lower bound on the true rational rank; equal
    to it unless every sampled prime divides the same invariant factor."""
    return modular_rank_survey(matrix, trials, seed)[0]


def bad_primes(matrix, candidates: list[int], rank_q: int | None = None,
               trials: int = 3, seed: int = _DEFAULT_SEED) -> list[int]:
    """Candidate primes where the matrix drops rank compared to Q.

    When `rank_q` is not supplied it is computed as the max of a random
    modular survey and the candidate ranks themselves (every modular rank
    is a lower bound for the rational rank).  Only the candidates are
    tested; this is not a complete bad-prime enumeration.
    """
    ranks = {p: rank_mod_p(matrix, p) for p in sorted(set(candidates))}
    if rank_q is None:
        rank_q = rank_over_Q(matrix, trials, seed)
        if ranks:
            rank_q = max(rank_q, *ranks.values())
    return [p for p in sorted(ranks) if ranks[p] < rank_q]


# ---------------------------------------------------------------------------
# exact integer forms (small matrices)


def _nearest_quotient(v: int, piv: int) -> int:
    """Integer quotient rounding to the nearest multiple (exact for big
    ints, unlike round(v / piv))."""
    q, rem = divmod(v, piv)
    if 2 * abs(rem) > abs(piv):
        q += 1
    return q


def _dense_int_matrix(matrix, dim_cap: int) -> list[list[int]]:
    m, n = matrix.nrows, matrix.ncols
    if max(m, n) > dim_cap:
        raise LinalgError(f"matrix is {m} x {n}; exact integer elimination "
                          f"is capped at {dim_cap}")
    a = [[0] * n for _ in range(m)]
    for r, c, v in matrix.entries():
        a[r][c] = v
    return a


def certified_rank(matrix, dim_cap: int = 2000) -> int:
    """Exact rational rank by fraction-free (Bareiss) elimination with
    full pivoting over the integers.  Slow but certified; capped in
    dimension because entries grow like minors."""
    a = _dense_int_matrix(matrix, dim_cap)
    m = len(a)
    n = len(a[0]) if a else 0
    prev = 1
    r = 0
    while True:
        # smallest-magnitude nonzero entry in the active block as pivot
        pivot = None
        for i in range(r, m):
            row = a[i]
            for j in range(r, n):
                v = row[j]
                if v and (pivot is None or abs(v) < pivot[0]):
                    pivot = (abs(v), i, j)
        if pivot is None:
            return r
        _, pi, pj = pivot
        if pi != r:
            a[pi], a[r] = a[r], a[pi]
        if pj != r:
            for row in a:
                row[pj], row[r] = row[r], row[pj]
        piv = a[r][r]
        for i in range(r + 1, m):
            air = a[i][r]
            rowi = a[i]
            rowr = a[r]
            for j in range(r + 1, n):
                rowi[j] = (rowi[j] * piv - air * rowr[j]) // prev
            rowi[r] = 0
        prev = piv
        r += 1
        if r == m or r == n:
            # check whether anything nonzero remains
            if r == m:
                return r
            if all(a[i][j] == 0 for i in range(r, m) for j in range(r, n)):
                return r


def elementary_divisors(matrix, dim_cap: int = 2000) -> list[int]:
    """Nonzero invariant factors d_1 | d_2 | ... of an integer matrix
    (Smith normal form, smallest-pivot strategy)."""
    a = _dense_int_matrix(matrix, dim_cap)
    m = len(a)
    n = len(a[0]) if a else 0
    t = 0
    divisors: list[int] = []
    while t < min(m, n):
        # smallest-magnitude nonzero entry in the active block
        pivot = None
        for i in range(t, m):
            row = a[i]
            for j in range(t, n):
                v = row[j]
                if v and (pivot is None or abs(v) < pivot[0]):
                    pivot = (abs(v), i, j)
        if pivot is None:
            break
        _, pi, pj = pivot
        if pi != t:
            a[pi], a[t] = a[t], a[pi]
        if pj != t:
            for row in a:
                row[pj], row[t] = row[t], row[pj]
        while True:
            piv = a[t][t]
            dirty = False
            for i in range(t + 1, m):
                v = a[i][t]
                if v:
                    q = _nearest_quotient(v, piv)
                    if q:
                        rowi, rowt = a[i], a[t]
                        for j in range(t, n):
                            rowi[j] -= q * rowt[j]
                    if a[i][t]:
                        a[i], a[t] = a[t], a[i]
                        dirty = True
                        break
            if dirty:
                continue
            for j in range(t + 1, n):
                v = a[t][j]
                if v:
                    q = _nearest_quotient(v, piv)
                    if q:
                        for row in a:
                            row[j] -= q * row[t]
                    if a[t][j]:
                        for row in a:
                            row[j], row[t] = row[t], row[j]
                        dirty = True
                        break
            if dirty:
                continue
            # pivot must divide the rest of the block
            piv = a[t][t]
            offender = None
            for i in range(t + 1, m):
                row = a[i]
                for j in range(t + 1, n):
                    if row[j] % piv:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            rowo, rowt = a[offender], a[t]
            for j in range(t, n):
                rowt[j] += rowo[j]
        divisors.append(abs(a[t][t]))
        t += 1
    return divisors
