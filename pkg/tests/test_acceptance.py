"""Acceptance suite: one test per shipping criterion, exact tolerances.

Run `pytest -v tests/test_acceptance.py` for one pass/fail line per
criterion.  The largest workload (the E8 model, long-running and
memory-bound) is marked `e8` and deselected by default; run it with
`pytest -m e8`.
"""

import random
from itertools import combinations, permutations, product
from math import gcd

import numpy as np
import pytest

from tautcheck.cli import analyze
from tautcheck.cycles import (anti_ample_cycle, choose_j, fundamental_cycle,
                              make_coprime_to_all,
                              significant_multiplicity_to_all)
from tautcheck.graph import (DualGraph, is_negative_definite, parse_graph,
                             preset_graph)
from tautcheck.linalg import modular_rank_survey, rank_mod_p
from tautcheck.plumbing import assemble_matrix, build_model
from tautcheck.sparse import SparseIntMatrix

BIG_PRIME = 2147483629          # largest prime below 2**31

# reference values: preset -> (rows, ranks at p=2,3,5,7, h1 at p=2,3,5,7)
FAST_TIER = {
    "D4": (660, (659, 660, 660, 660), (1, 0, 0, 0)),
    "D5": (2736, (2735, 2736, 2736, 2736), (1, 0, 0, 0)),
    "D6": (9300, (9298, 9300, 9300, 9300), (2, 0, 0, 0)),
    "E6": (18060, (18059, 18059, 18060, 18060), (1, 1, 0, 0)),
}
SLOW_TIER = {
    "D7": (21672, (21670, 21672, 21672, 21672), (2, 0, 0, 0)),
    "E7": (126072, (126069, 126071, 126072, 126072), (3, 1, 0, 0)),
}
E8_ROW = (1024380, (1024376, 1024378, 1024379, 1024380), (4, 2, 1, 0))

TABLE_J = {"D4": 11, "D5": 19, "D6": 31, "E6": 43, "D7": 43, "E7": 103,
           "E8": 271}


def _check_table_row(preset, rows, ranks, h1):
    r = analyze(preset=preset)
    res = r["results"]
    assert r["status"] == "ok"
    assert r["model"]["rows"] == rows
    got_ranks = tuple(res[f"p{p}"]["rank"] for p in (2, 3, 5, 7))
    got_h1 = tuple(res[f"p{p}"]["h1"] for p in (2, 3, 5, 7))
    assert got_ranks == ranks, preset
    assert got_h1 == h1, preset
    assert r["bad_primes"] == [p for p, h in zip((2, 3, 5, 7), h1) if h > 0]
    return r


def test_criterion_01_reference_table_fast_tier():
    for preset, (rows, ranks, h1) in FAST_TIER.items():
        _check_table_row(preset, rows, ranks, h1)


def test_criterion_02_reference_table_slow_tier():
    for preset, (rows, ranks, h1) in SLOW_TIER.items():
        _check_table_row(preset, rows, ranks, h1)


@pytest.mark.e8
def test_criterion_02_reference_table_e8_long_running():
    rows, ranks, h1 = E8_ROW
    r = _check_table_row("E8", rows, ranks, h1)
    assert r["results"]["q"]["rank"] == 1024380
    assert r["results"]["q"]["h1"] == 0


def test_criterion_03_row_count_formula():
    cases = [(preset, TABLE_J[preset]) for preset in TABLE_J]
    cases += [(f"A{n}", 11) for n in range(1, 7)]
    cases += [("D4", 13), ("E6", 11), ("A3", 5)]
    for preset, j in cases:
        g, _ = preset_graph(preset)
        model = build_model(g, j, [2, 3])
        pt = len(model.points)
        assert model.row_count == 2 * pt * (j * j - j), (preset, j)
    mixed = parse_graph("vertex a genus=0 selfint=-2\n"
                        "vertex b genus=0 selfint=-3\n"
                        "edge a b\n")
    model = build_model(mixed, 5, [2, 3])
    assert model.row_count == 2 * 1 * (5 * 5 - 5)


def test_criterion_04_rank_monotonicity_and_chain_tautness():
    # chains of rational -2 curves are taut: h1 = 0 in every characteristic,
    # so the modular ranks all reach the rational rank
    for n in range(1, 7):
        r, model, matrix = analyze(preset=f"A{n}", j=11,
                                   return_objects=True)
        assert r["status"] == "ok"
        rows = r["model"]["rows"]
        assert rows == 2 * (n - 1) * 110
        for key, res in r["results"].items():
            assert res["h1"] == 0, (n, key)
            assert res["rank"] == rows
        # independent monotonicity check on the assembled matrix
        rq = modular_rank_survey(matrix, 3)[0]
        for p in (2, 3, 5, 7):
            assert rank_mod_p(matrix, p) <= rq
    # monotonicity on rank-deficient models as well
    for preset in ("D4", "E6"):
        _, _, matrix = analyze(preset=preset, return_objects=True)
        rq = modular_rank_survey(matrix, 3)[0]
        for p in (2, 3, 5, 7):
            assert rank_mod_p(matrix, p) <= rq


def _oracle_rank_dense(dense, p):
    """Textbook elimination over the prime field, vectorized."""
    a = np.array(dense, dtype=np.int64) % p
    if a.size == 0:
        return 0
    rows, cols = a.shape
    rank = 0
    for c in range(cols):
        pivots = np.nonzero(a[rank:, c])[0]
        if pivots.size == 0:
            continue
        pr = rank + int(pivots[0])
        if pr != rank:
            a[[rank, pr]] = a[[pr, rank]]
        inv = pow(int(a[rank, c]), p - 2, p)
        a[rank] = a[rank] * inv % p
        other = np.nonzero(a[:, c])[0]
        other = other[other != rank]
        if other.size:
            a[other] = (a[other] - np.outer(a[other, c], a[rank])) % p
        rank += 1
        if rank == rows:
            break
    return rank


def test_criterion_05_rank_oracle_on_random_sparse_matrices():
    rng = random.Random(20260816)
    for trial in range(200):
        m = rng.randint(1, 60)
        n = rng.randint(1, 60)
        density = rng.choice([0.05, 0.1, 0.25, 0.5])
        triples = []
        for r in range(m):
            for c in range(n):
                if rng.random() < density:
                    v = 0
                    while v == 0:
                        v = rng.randint(-20, 20)
                    triples.append((r, c, v))
        mat = SparseIntMatrix.from_coo(m, n, triples)
        dense = mat.to_dense()
        for p in (2, 3, 5, 7, 101):
            assert rank_mod_p(mat, p) == _oracle_rank_dense(dense, p), \
                (trial, m, n, p)


def _star_graph(order):
    """The 4-vertex star with its vertices declared in the given order;
    `order` lists the three leaves, optionally with the center anywhere."""
    g = DualGraph()
    for vid in order:
        g.add_vertex(vid, 0, -2)
    for leaf in "xyz":
        g.add_edge("c", leaf)
    return g


def test_criterion_06_relabeling_and_slot_invariance():
    # vertex relabeling: every declaration order of the star's leaves
    expected_ranks = (659, 660, 660, 660)
    for leaves in permutations("xyz"):
        for order in (("c",) + leaves, leaves + ("c",)):
            r = analyze(graph=_star_graph(order), j=11)
            got = tuple(r["results"][f"p{p}"]["rank"] for p in (2, 3, 5, 7))
            assert got == expected_ranks, order
            assert r["results"]["q"]["rank"] == 660

    # slot assignments: all choices at every vertex, star and chain
    def rank_profile(g, assignment):
        model = build_model(g, 11, [2, 3, 5, 7], slot_assignment=assignment)
        mat = assemble_matrix(model)
        return tuple(rank_mod_p(mat, p) for p in (2, 3, 5, 7, BIG_PRIME))

    star, _ = preset_graph("D4")
    center = star.index("d3")
    leaves = [i for i in range(4) if i != center]
    base_star = rank_profile(star, None)
    assert base_star == (659, 660, 660, 660, 660)
    count = 0
    for center_slots in permutations(["0", "inf", "1"]):
        for leaf_slots in product(["0", "inf", "1"], repeat=3):
            assignment = {center: list(center_slots)}
            for v, s in zip(leaves, leaf_slots):
                assignment[v] = [s]
            assert rank_profile(star, assignment) == base_star
            count += 1
    assert count == 6 * 27

    chain, _ = preset_graph("A3")
    base_chain = rank_profile(chain, None)
    assert base_chain == (440, 440, 440, 440, 440)
    count = 0
    for mid_slots in permutations(["0", "inf", "1"], 2):
        for end_slots in product(["0", "inf", "1"], repeat=2):
            assignment = {1: list(mid_slots), 0: [end_slots[0]],
                          2: [end_slots[1]]}
            assert rank_profile(chain, assignment) == base_chain
            count += 1
    assert count == 6 * 9


def test_criterion_07_fundamental_cycle_brute_force():
    """Exhaustive check on every connected negative-definite graph with
    up to 4 vertices, self-intersections in [-4,-1] and up to double
    edges: the computed fundamental cycle is the coefficientwise minimum
    of all full-support cycles with no positive intersection, searched
    over the box [1,6]^n.  Anti-ample and coprimality postconditions are
    asserted on every graph."""
    box = {n: np.array(list(product(range(1, 7), repeat=n)), dtype=np.int64)
           for n in (1, 2, 3, 4)}
    total = verified = outside_box = 0
    for n in (1, 2, 3, 4):
        pairs = list(combinations(range(n), 2))
        for mults in product((0, 1, 2), repeat=len(pairs)):
            seen = {0}
            grew = True
            while grew:
                grew = False
                for (a, b), m in zip(pairs, mults):
                    if m and ((a in seen) != (b in seen)):
                        seen |= {a, b}
                        grew = True
            if len(seen) != n:
                continue
            for selfs in product((-1, -2, -3, -4), repeat=n):
                m = [[0] * n for _ in range(n)]
                for i in range(n):
                    m[i][i] = selfs[i]
                for (a, b), mm in zip(pairs, mults):
                    m[a][b] = m[b][a] = mm
                if not is_negative_definite(m):
                    continue
                total += 1
                g = DualGraph()
                for i in range(n):
                    g.add_vertex(f"v{i}", 0, selfs[i])
                for (a, b), mm in zip(pairs, mults):
                    for _ in range(mm):
                        g.add_edge(f"v{a}", f"v{b}")
                z = fundamental_cycle(g)
                mm_np = np.array(m, dtype=np.int64)
                scores = box[n] @ mm_np.T
                valid = box[n][(scores <= 0).all(axis=1)]
                if valid.size == 0:
                    assert max(z) > 6, (m, z)
                    outside_box += 1
                else:
                    zmin = valid.min(axis=0)
                    assert (mm_np @ zmin <= 0).all(), (m, tuple(zmin))
                    assert tuple(int(v) for v in zmin) == z, (m, z)
                    verified += 1
                aa = anti_ample_cycle(g)
                assert all(int(v) < 0 for v in mm_np @ np.array(aa)), (m, aa)
                cz = make_coprime_to_all(g, aa, [2, 3, 5, 7])
                assert all(int(v) < 0 for v in mm_np @ np.array(cz)), (m, cz)
                assert all(gcd(c, 2 * 3 * 5 * 7) == 1 for c in cz), (m, cz)
    # catalog size is deterministic; pin it so silent shrinkage is caught
    assert (total, verified, outside_box) == (18603, 18315, 288)


def test_criterion_08_truncation_soundness():
    """Doubling the exponent window (rows) while extending the generator
    catalog to the same cap (columns) must not change h1: the rank grows
    by exactly the number of added rows.  Checked densely with an
    independent elimination at j = 5 on the two-vertex chains."""
    uniform, _ = preset_graph("A2")
    mixed = parse_graph("vertex a genus=0 selfint=-2\n"
                        "vertex b genus=0 selfint=-3\n"
                        "edge a b\n")
    # the model is characteristic-free (integer entries); the candidate
    # list only validates j, so ranks may be taken at any prime afterwards
    for g in (uniform, mixed):
        model = build_model(g, 5, [2, 3])
        small = assemble_matrix(model)
        large = assemble_matrix(model, window=10, b_cap=10)
        assert small.nrows == 40 and large.nrows == 180
        extra_rows = large.nrows - small.nrows
        dense_small = small.to_dense()
        dense_large = large.to_dense()
        for p in (2, 3, 5, 7, BIG_PRIME):
            r_small = _oracle_rank_dense(dense_small, p)
            r_large = _oracle_rank_dense(dense_large, p)
            assert rank_mod_p(small, p) == r_small
            assert rank_mod_p(large, p) == r_large
            assert r_large - r_small == extra_rows, p

    # same invariance on a model with a genuine rank drop at p = 2
    star, _ = preset_graph("D4")
    model = build_model(star, 11, [2, 3, 5, 7])
    small = assemble_matrix(model)
    large = assemble_matrix(model, window=22, b_cap=22)
    extra_rows = large.nrows - small.nrows
    for p in (2, 3, 5, 7, BIG_PRIME):
        drop = small.nrows - rank_mod_p(small, p)
        assert rank_mod_p(large, p) == large.nrows - drop
        assert (p == 2) == (drop == 1)
    assert extra_rows == large.nrows - small.nrows


def test_criterion_09_plan_reproduction():
    primes = [2, 3, 5, 7]
    for preset, expected_j in TABLE_J.items():
        g, cycle = preset_graph(preset)
        assert cycle is not None, preset
        plan = significant_multiplicity_to_all(g, cycle, primes, "paper")
        assert plan.lambda_bound == 0, preset
        assert plan.tau == 1, preset
        assert plan.nu == 2, preset
        assert choose_j(plan.nu, max(cycle), primes) == expected_j, preset
