"""Plumbing models: charts, intersection points, generator catalogs and
the restriction-matrix assembly.

Geometry conventions, per vertex l with nu_l = -selfint(l):

* the vertex curve carries two affine charts glued over x0*x1 = 1 with
  y1 = x0**nu_l * y0;
* incident edges occupy up to three marked points, the *slots* "0"
  (x0 = 0), "inf" (x1 = 0) and "1" (x0 = 1), assigned in that order to
  the incident edges sorted by (neighbor index, edge index);
* at an intersection point the two sides are cross-glued by swapping
  local coordinates, xbar_other = y_self and y_other = xbar_self, where
  xbar is the local arm coordinate of the slot (x0, x1, or x0 - 1).

Rows of the restriction matrix live at intersection points, written in
the chart of the smaller-index endpoint (the *canonical side*): the
window spans the monomials xbar^s y^t d/dxbar (1 <= s < n_other,
0 <= t < n_side) and xbar^u y^v d/dy (0 <= u < n_other,
1 <= v < n_side), n_* the vertex multiplicities.  Columns are generator
sections of the twisted tangent sheaf of each vertex; entries are the
exact integer coordinates of their expansions, which all have the form
base * C(n, k) with base one of +-1, +-nu_l.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import (DualGraph, intersection_matrix, is_connected,
                    is_negative_definite, is_potentially_taut)
from .linalg import is_probable_prime
from .sparse import SparseIntMatrix

SLOT0 = "0"
SLOTINF = "inf"
SLOT1 = "1"
_SLOT_ORDER = (SLOT0, SLOTINF, SLOT1)

KIND_DX = "dx"
KIND_DY = "dy"

FAMILY_DY = "dy"
FAMILY_DX = "dx"
FAMILY_DX_EXTRA = "dx_extra"
_FAMILY_ORDER = (FAMILY_DY, FAMILY_DX, FAMILY_DX_EXTRA)


class PlumbingError(ValueError):
    """Raised for invalid models, slot assignments or expansion targets."""


@dataclass
class IntersectionPoint:
    """One edge of the graph, seen as a plumbing intersection point."""

    index: int
    va: int                  # endpoint vertex indices as declared
    vb: int
    side: int                # canonical side: the smaller vertex index
    other: int
    slot_side: str
    slot_other: str
    row_offset: int = 0
    dx_rows: int = 0
    dy_rows: int = 0


@dataclass
class RowIndex:
    """A row of the restriction matrix, in canonical-side coordinates:
    (kind, e1, e2) is xbar^e1 y^e2 d/dxbar for "dx" rows and
    xbar^e1 y^e2 d/dy for "dy" rows."""

    index: int
    point: int
    kind: str
    e1: int
    e2: int


@dataclass
class GeneratorColumn:
    """A generator section on `vertex`; families are "dy" (sections of
    the y-derivation catalog, parameters 1 <= b, 0 <= a <= nu(b-1)),
    "dx" (x-derivation catalog, 0 <= b, a up to nu*b + 1 depending on
    slot occupancy) and "dx_extra" (the one-per-b section hidden in the
    second chart, present when slot "inf" is free)."""

    index: int | None
    vertex: int
    family: str
    a: int
    b: int


@dataclass(eq=False)
class PlumbingModel:
    """A dual graph with uniform multiplicity j and slot assignments."""

    graph: DualGraph
    j: int
    primes: list[int]
    nu: list[int]
    mult: list[int]
    incident: list[list[int]]         # per vertex: edge indices, slot order
    slots: list[dict[int, str]]       # per vertex: edge index -> slot
    points: list[IntersectionPoint] = field(default_factory=list)
    row_count: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def occupancy(self, l: int) -> frozenset[str]:
        return frozenset(self.slots[l].values())

    def neighbors(self, l: int) -> set[int]:
        out = set()
        for a, b in self.graph.edge_indices():
            if a == l:
                out.add(b)
            elif b == l:
                out.add(a)
        return out


def build_model(g: DualGraph, j: int, primes: list[int],
                slot_assignment: dict[int, list[str]] | None = None
                ) -> PlumbingModel:
    """Validate the graph and fix charts, slots and row layout.

    Parameters
    ----------
    g : DualGraph
        Connected, negative definite, all genus 0, valence <= 3.
    j : int
        The uniform multiplicity: a prime not among `primes` (so every
        vertex multiplicity stays invertible in every characteristic).
    primes : list of int
        Candidate characteristics (primes) the matrix will be analyzed at.
    slot_assignment : dict, optional
        Per vertex index, the slot of each incident edge in canonical
        incident order; defaults to ("0", "inf", "1") truncated to the
        valence.  Any assignment of distinct slots is accepted (the rank
        is invariant under permutations; the matrix is not).
    """
    if not is_connected(g):
        raise PlumbingError("graph is not connected")
    if not is_negative_definite(g):
        raise PlumbingError("intersection matrix is not negative definite")
    if not is_potentially_taut(g):
        raise PlumbingError("graph is not potentially taut "
                            "(needs all genus 0 and valence <= 3)")
    if not is_probable_prime(j):
        raise PlumbingError(f"multiplicity j = {j} must be prime")
    for p in primes:
        if not is_probable_prime(p):
            raise PlumbingError(f"candidate characteristic {p} is not prime")
    if j in set(primes):
        raise PlumbingError(f"j = {j} divides a vertex multiplicity in "
                            f"characteristic {j}; pick j outside the "
                            f"candidate primes")
    n = g.n
    edge_idx = g.edge_indices()
    incident: list[list[int]] = [[] for _ in range(n)]
    for ei, (a, b) in enumerate(edge_idx):
        incident[a].append(ei)
        incident[b].append(ei)
    for l in range(n):
        incident[l].sort(key=lambda ei: (edge_idx[ei][0] + edge_idx[ei][1] - l,
                                         ei))
    slots: list[dict[int, str]] = []
    for l in range(n):
        if slot_assignment is not None and l in slot_assignment:
            chosen = list(slot_assignment[l])
            if len(chosen) != len(incident[l]):
                raise PlumbingError(f"vertex {l}: slot assignment needs "
                                    f"{len(incident[l])} slots")
            if len(set(chosen)) != len(chosen) or \
                    not set(chosen) <= set(_SLOT_ORDER):
                raise PlumbingError(f"vertex {l}: slots must be distinct "
                                    f"members of {_SLOT_ORDER}")
        else:
            chosen = list(_SLOT_ORDER[:len(incident[l])])
        slots.append(dict(zip(incident[l], chosen)))
    model = PlumbingModel(graph=g, j=j, primes=sorted(set(primes)),
                          nu=[-g.data[v].selfint for v in g.ids],
                          mult=[j] * n, incident=incident, slots=slots)
    for ei, (a, b) in enumerate(edge_idx):
        side, other = (a, b) if a < b else (b, a)
        model.points.append(IntersectionPoint(
            index=ei, va=a, vb=b, side=side, other=other,
            slot_side=slots[side][ei], slot_other=slots[other][ei]))
    layout, total = _point_layout(model, model.mult)
    for pt, (off, dxr, dyr) in zip(model.points, layout):
        pt.row_offset, pt.dx_rows, pt.dy_rows = off, dxr, dyr
    model.row_count = total
    return model


def _point_layout(model: PlumbingModel,
                  w: list[int]) -> tuple[list[tuple[int, int, int]], int]:
    """Row offsets and (dx, dy) window sizes per point, for per-vertex
    window bounds `w` (the vertex multiplicities, unless a test enlarges
    the window)."""
    out = []
    off = 0
    for pt in model.points:
        nc, no = w[pt.side], w[pt.other]
        dxr = (no - 1) * nc
        dyr = no * (nc - 1)
        out.append((off, dxr, dyr))
        off += dxr + dyr
    return out, off


def enumerate_points(model: PlumbingModel) -> list[IntersectionPoint]:
    return list(model.points)


def row_space(model: PlumbingModel) -> list[RowIndex]:
    """All rows in canonical order.  Materializes one object per row;
    intended for inspection and tests, not for the big workloads."""
    rows: list[RowIndex] = []
    for pt in model.points:
        nc, no = model.mult[pt.side], model.mult[pt.other]
        idx = pt.row_offset
        for s in range(1, no):
            for t in range(nc):
                rows.append(RowIndex(idx, pt.index, KIND_DX, s, t))
                idx += 1
        for u in range(no):
            for v in range(1, nc):
                rows.append(RowIndex(idx, pt.index, KIND_DY, u, v))
                idx += 1
    return rows


# ---------------------------------------------------------------------------
# generator catalogs


def _terms(family: str, vanish_one: bool, nu: int, chart: int):
    """Chart expressions of a family as term templates
    (coef, xa, xb, xc, e, yoff, kind): the term is
    coef * x^(xa*a + xb*b + xc) * (x-1)^e * y^(b+yoff) d/d<kind>,
    in the requested chart's coordinates."""
    if family == FAMILY_DY:
        if chart == 0:
            return ((1, 1, 0, 0, 0, 0, KIND_DY),)
        return ((1, -1, nu, -nu, 0, 0, KIND_DY),)
    if family == FAMILY_DX:
        if not vanish_one:
            if chart == 0:
                return ((1, 1, 0, 0, 0, 0, KIND_DX),)
            return ((-1, -1, nu, 2, 0, 0, KIND_DX),
                    (nu, -1, nu, 1, 0, 1, KIND_DY))
        if chart == 0:
            return ((1, 1, 0, 0, 1, 0, KIND_DX),)
        return ((1, -1, nu, 1, 1, 0, KIND_DX),
                (-nu, -1, nu, 0, 1, 1, KIND_DY))
    if family == FAMILY_DX_EXTRA:
        if not vanish_one:
            if chart == 0:
                return ((-1, 0, nu, 2, 0, 0, KIND_DX),
                        (nu, 0, nu, 1, 0, 1, KIND_DY))
            return ((1, 0, 0, 0, 0, 0, KIND_DX),)
        if chart == 0:
            return ((-1, 0, nu, 1, 1, 0, KIND_DX),
                    (nu, 0, nu, 1, 0, 1, KIND_DY))
        return ((-1, 0, 0, 0, 1, 0, KIND_DX),
                (nu, 0, 0, 0, 0, 1, KIND_DY))
    raise PlumbingError(f"unknown family {family!r}")


def _ragged_arange(lengths: np.ndarray) -> np.ndarray:
    total = int(lengths.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    starts = np.cumsum(lengths) - lengths
    return np.arange(total, dtype=np.int64) - np.repeat(starts, lengths)


@dataclass
class _ColumnBatch:
    vertex: int
    family: str
    vanish_one: bool
    col_start: int
    a: np.ndarray
    b: np.ndarray


def _candidate_columns(model: PlumbingModel,
                       b_cap: list[int]) -> list[_ColumnBatch]:
    """Per (vertex, family) parameter grids, in canonical column order
    (vertex, then family dy < dx < dx_extra, then b, then a)."""
    batches: list[_ColumnBatch] = []
    col = 0
    for l in range(model.graph.n):
        nu = model.nu[l]
        occ = model.occupancy(l)
        vanish_one = SLOT1 in occ
        a_lo = 1 if SLOT0 in occ else 0
        cap = b_cap[l]
        # dy: 1 <= b < cap, 0 <= a <= nu*(b-1)
        bs = np.arange(1, cap, dtype=np.int64)
        lens = nu * (bs - 1) + 1
        b_arr = np.repeat(bs, lens)
        a_arr = _ragged_arange(lens)
        batches.append(_ColumnBatch(l, FAMILY_DY, vanish_one, col, a_arr, b_arr))
        col += int(a_arr.size)
        # dx: 0 <= b < cap, a_lo <= a <= nu*b + (0 if vanishing at 1 else 1)
        bs = np.arange(0, cap, dtype=np.int64)
        a_hi = nu * bs + (0 if vanish_one else 1)
        lens = np.maximum(a_hi - a_lo + 1, 0)
        b_arr = np.repeat(bs, lens)
        a_arr = _ragged_arange(lens) + a_lo
        batches.append(_ColumnBatch(l, FAMILY_DX, vanish_one, col, a_arr, b_arr))
        col += int(a_arr.size)
        # dx_extra: present when slot "inf" is unoccupied; one per b
        if SLOTINF not in occ:
            b_arr = np.arange(0, cap, dtype=np.int64)
            a_arr = np.zeros(cap, dtype=np.int64)
            batches.append(_ColumnBatch(l, FAMILY_DX_EXTRA, vanish_one, col,
                                        a_arr, b_arr))
            col += int(b_arr.size)
    return batches


def _point_context(model: PlumbingModel, l: int, ei: int,
                   w: list[int]) -> tuple:
    """(point, slot at l, chart, shifted, swap, n_self, n_arm) for the
    expansion of vertex-l sections at edge ei's point."""
    pt = model.points[ei]
    nbr = pt.vb if pt.va == l else pt.va
    slot = model.slots[l][ei]
    chart = 1 if slot == SLOTINF else 0
    shifted = slot == SLOT1
    swap = pt.side != l
    return pt, slot, chart, shifted, swap, w[l], w[nbr]


def _row_ids(kind: str, xe: np.ndarray, ye: np.ndarray, swap: bool,
             n_self: int, n_arm: int, offset: int) -> np.ndarray:
    """Absolute row ids for side-l monomials (kind, xe, ye).  When the
    canonical side is the neighbor, the cross-gluing swaps the kind and
    the exponents."""
    if not swap:
        if kind == KIND_DX:
            return offset + (xe - 1) * n_self + ye
        return offset + (n_arm - 1) * n_self + xe * (n_self - 1) + (ye - 1)
    if kind == KIND_DX:
        # becomes a dy row (u = ye, v = xe) in the neighbor's coordinates
        return offset + (n_self - 1) * n_arm + ye * (n_arm - 1) + (xe - 1)
    # dy term becomes a dx row (s = ye, t = xe)
    return offset + (ye - 1) * n_arm + xe


def _window_mask(kind: str, xe: np.ndarray, ye: np.ndarray,
                 n_self: int, n_arm: int) -> np.ndarray:
    xlo = 1 if kind == KIND_DX else 0
    ylo = 1 if kind == KIND_DY else 0
    return (xe >= xlo) & (xe < n_arm) & (ye >= ylo) & (ye < n_self)


def assemble_matrix(model: PlumbingModel, *, drop_zero_columns: bool = True,
                    window: int | None = None, b_cap: int | None = None,
                    ) -> SparseIntMatrix:
    """Assemble the restriction matrix.

    Streams exact entries per (generator family, point) in vectorized
    batches; never materializes a dense row.  All-zero candidate columns
    are dropped unless `drop_zero_columns` is false.  `window` and
    `b_cap` override the row window and the generator b-range (used by
    the truncation-soundness tests); by default both equal the vertex
    multiplicities.

    The result is cached on the model for the default arguments.
    """
    key = (drop_zero_columns, window, b_cap)
    cached = model._cache.get(key)
    if cached is not None:
        return cached[0]
    w = [window if window is not None else m for m in model.mult]
    caps = [b_cap if b_cap is not None else m for m in model.mult]
    layout, nrows = _point_layout(model, w)
    batches = _candidate_columns(model, caps)
    total_cols = (batches[-1].col_start + batches[-1].a.size) if batches else 0
    parts_r, parts_c, parts_base, parts_bn, parts_bk = [], [], [], [], []

    for batch in batches:
        l = batch.vertex
        nu = model.nu[l]
        a_all, b_all = batch.a, batch.b
        if a_all.size == 0:
            continue
        cols_all = batch.col_start + np.arange(a_all.size, dtype=np.int64)
        for ei in model.incident[l]:
            pt, slot, chart, shifted, swap, n_self, n_arm = \
                _point_context(model, l, ei, w)
            offset = layout[ei][0]
            for coef, xa, xb, xc, e, yoff, kind in \
                    _terms(batch.family, batch.vanish_one, nu, chart):
                xe = xa * a_all + xb * b_all + xc
                ye = b_all + yoff
                if shifted:
                    # (xbar+1)^xe xbar^e -> sum_k C(xe, k-e) xbar^k
                    ylo = 1 if kind == KIND_DY else 0
                    klo = max(e, 1 if kind == KIND_DX else 0)
                    ymask = (ye >= ylo) & (ye < n_self) & (xe >= 0)
                    khi = np.minimum(xe + e, n_arm - 1)
                    lens = np.maximum(khi - klo + 1, 0) * ymask
                    if not lens.any():
                        continue
                    k = _ragged_arange(lens) + klo
                    xer = np.repeat(xe, lens)
                    yer = np.repeat(ye, lens)
                    cr = np.repeat(cols_all, lens)
                    rows = _row_ids(kind, k, yer, swap, n_self, n_arm, offset)
                    parts_r.append(rows)
                    parts_c.append(cr)
                    parts_base.append(np.full(k.size, coef, dtype=np.int64))
                    parts_bn.append(xer.astype(np.int32))
                    parts_bk.append((k - e).astype(np.int32))
                else:
                    pieces = ((coef, xe),) if e == 0 else \
                        ((coef, xe + 1), (-coef, xe))
                    for c2, xarr in pieces:
                        mask = _window_mask(kind, xarr, ye, n_self, n_arm)
                        if not mask.any():
                            continue
                        xm, ym = xarr[mask], ye[mask]
                        rows = _row_ids(kind, xm, ym, swap, n_self, n_arm,
                                        offset)
                        parts_r.append(rows)
                        parts_c.append(cols_all[mask])
                        parts_base.append(np.full(xm.size, c2, dtype=np.int64))
                        parts_bn.append(np.zeros(xm.size, dtype=np.int32))
                        parts_bk.append(np.zeros(xm.size, dtype=np.int32))

    if parts_r:
        rows = np.concatenate(parts_r)
        parts_r.clear()
        cols = np.concatenate(parts_c)
        parts_c.clear()
        base = np.concatenate(parts_base)
        parts_base.clear()
        bn = np.concatenate(parts_bn)
        parts_bn.clear()
        bk = np.concatenate(parts_bk)
        parts_bk.clear()
    else:
        rows = cols = base = np.zeros(0, dtype=np.int64)
        bn = bk = np.zeros(0, dtype=np.int32)

    if drop_zero_columns:
        present = np.unique(cols)
        cols = np.searchsorted(present, cols)
        ncols = int(present.size)
    else:
        present = None
        ncols = total_cols
    matrix = SparseIntMatrix(nrows, ncols, rows, cols, base, bn, bk)
    # column descriptors are materialized lazily by enumerate_generators
    model._cache[key] = (matrix, batches, present)
    return matrix


def enumerate_generators(model: PlumbingModel,
                         drop_zero_columns: bool = True
                         ) -> list[GeneratorColumn]:
    """The matrix columns (post zero-column drop), canonical order."""
    key = (drop_zero_columns, None, None)
    if key not in model._cache:
        assemble_matrix(model, drop_zero_columns=drop_zero_columns)
    ckey = ("columns", drop_zero_columns)
    if ckey not in model._cache:
        _, batches, present = model._cache[key]
        starts = [b.col_start for b in batches]
        columns: list[GeneratorColumn] = []
        if present is not None:
            ids = present.tolist()
        else:
            ids = range(sum(int(b.a.size) for b in batches))
        for new_id, old in enumerate(ids):
            bi = bisect.bisect_right(starts, old) - 1
            b = batches[bi]
            k = old - b.col_start
            columns.append(GeneratorColumn(new_id, b.vertex, b.family,
                                           int(b.a[k]), int(b.b[k])))
        model._cache[ckey] = columns
    return model._cache[ckey]


def expand_at_point(col: GeneratorColumn, pt: IntersectionPoint,
                    model: PlumbingModel) -> dict[tuple[str, int, int], int]:
    """Exact expansion of one generator in one point window.

    Returns a map (kind, e1, e2) -> value in canonical-side coordinates.
    Returns {} when the point does not touch the generator's vertex but
    does touch a neighbor (the restriction is zero there); raises
    PlumbingError when the point is entirely elsewhere.  Components
    outside the window are dropped (for catalog generators they are
    fixed contributions, independent of the window).

    The descriptor's (a, b) are not range-checked; expanding an
    out-of-range descriptor may hit a negative exponent in the second
    chart, which is an error.
    """
    l = col.vertex
    if l not in (pt.va, pt.vb):
        if pt.va in model.neighbors(l) or pt.vb in model.neighbors(l):
            return {}
        raise PlumbingError(f"point {pt.index} is not incident to vertex "
                            f"{l} or its neighbors")
    nu = model.nu[l]
    _, slot, chart, shifted, swap, n_self, n_arm = \
        _point_context(model, l, pt.index, model.mult)
    vanish_one = SLOT1 in model.occupancy(l)
    out: dict[tuple[str, int, int], int] = {}

    def put(kind, xe, ye, val):
        if val == 0:
            return
        if not bool(_window_mask(kind, np.int64(xe), np.int64(ye),
                                 n_self, n_arm)):
            return
        if not swap:
            key = (kind, xe, ye)
        else:
            key = (KIND_DY if kind == KIND_DX else KIND_DX, ye, xe)
        out[key] = out.get(key, 0) + val
        if out[key] == 0:
            del out[key]

    for coef, xa, xb, xc, e, yoff, kind in _terms(col.family, vanish_one,
                                                  nu, chart):
        xe = xa * col.a + xb * col.b + xc
        ye = col.b + yoff
        if xe < 0:
            raise PlumbingError(f"negative exponent {xe} in chart {chart}: "
                                f"descriptor (a={col.a}, b={col.b}) is "
                                f"outside the {col.family} family range")
        if shifted:
            for k in range(e, xe + e + 1):
                put(kind, k, ye, coef * math.comb(xe, k - e))
        elif e == 0:
            put(kind, xe, ye, coef)
        else:
            put(kind, xe + 1, ye, coef)
            put(kind, xe, ye, -coef)
    return out


def estimate_assembly(model: PlumbingModel) -> dict:
    """Exact entry count and a memory estimate without materializing the
    entry arrays (no additive cancellation occurs, so the count is the
    assembled nnz)."""
    w = model.mult
    caps = model.mult
    batches = _candidate_columns(model, caps)
    nnz = 0
    for batch in batches:
        l = batch.vertex
        nu = model.nu[l]
        a_all, b_all = batch.a, batch.b
        if a_all.size == 0:
            continue
        for ei in model.incident[l]:
            pt, slot, chart, shifted, swap, n_self, n_arm = \
                _point_context(model, l, ei, w)
            for coef, xa, xb, xc, e, yoff, kind in \
                    _terms(batch.family, batch.vanish_one, nu, chart):
                xe = xa * a_all + xb * b_all + xc
                ye = b_all + yoff
                if shifted:
                    ylo = 1 if kind == KIND_DY else 0
                    klo = max(e, 1 if kind == KIND_DX else 0)
                    ymask = (ye >= ylo) & (ye < n_self) & (xe >= 0)
                    khi = np.minimum(xe + e, n_arm - 1)
                    nnz += int((np.maximum(khi - klo + 1, 0) * ymask).sum())
                else:
                    if e == 0:
                        nnz += int(_window_mask(kind, xe, ye, n_self,
                                                n_arm).sum())
                    else:
                        nnz += int(_window_mask(kind, xe + 1, ye, n_self,
                                                n_arm).sum())
                        nnz += int(_window_mask(kind, xe, ye, n_self,
                                                n_arm).sum())
    ncand = (batches[-1].col_start + batches[-1].a.size) if batches else 0
    _, nrows = _point_layout(model, w)
    return {
        "rows": nrows,
        "candidate_columns": ncand,
        "points": len(model.points),
        "nnz": nnz,
        "entry_bytes": nnz * 32,
        "assembly_peak_bytes": nnz * 96,
    }


def export_matrix(matrix: SparseIntMatrix, path: str) -> None:
    from .sparse import write_matrix_text
    write_matrix_text(matrix, path)


def import_matrix(path: str) -> SparseIntMatrix:
    from .sparse import read_matrix_text
    return read_matrix_text(path)
