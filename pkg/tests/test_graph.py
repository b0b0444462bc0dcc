"""Graph parsing, presets, and the exact combinatorial checks."""

import itertools

import pytest

from tautcheck.graph import (
    DualGraph,
    GraphError,
    intersection_matrix,
    is_connected,
    is_negative_definite,
    is_potentially_taut,
    leading_principal_minors,
    parse_graph,
    potential_tautness_violations,
    preset_graph,
    serialize_graph,
)


# ---------------------------------------------------------------------------
# parsing


def test_parse_single_vertex():
    g = parse_graph("vertex a genus=0 selfint=-2\n")
    assert g.ids == ["a"]
    assert g.data["a"].genus == 0
    assert g.data["a"].selfint == -2
    assert g.data["a"].mult is None
    assert g.edges == []


def test_parse_star_with_comments_and_mult():
    text = """
    # a four-vertex star
    vertex c genus=0 selfint=-2 mult=2
    vertex l1 genus=0 selfint=-2
    vertex l2 genus=0 selfint=-2
    vertex l3 genus=0 selfint=-2
    edge l1 c   # leaves attach to the center
    edge l2 c
    edge l3 c
    """
    g = parse_graph(text)
    assert g.n == 4
    assert g.data["c"].mult == 2
    assert g.valence("c") == 3
    assert g.valence("l1") == 1


def test_parse_parallel_edges_counted():
    g = parse_graph("vertex a genus=0 selfint=-3\n"
                    "vertex b genus=0 selfint=-3\n"
                    "edge a b\nedge a b\n")
    assert g.valence("a") == 2
    assert intersection_matrix(g) == [[-3, 2], [2, -3]]


@pytest.mark.parametrize("bad, fragment", [
    ("vertex a genus=0 selfint=-2\nedge a a\n", "loop"),
    ("vertex a genus=0 selfint=-2\nvertex a genus=0 selfint=-2\n", "duplicate"),
    ("vertex a genus=0 selfint=-2\nedge a b\n", "unknown vertex"),
    ("vertex a genus=-1 selfint=-2\n", "genus"),
    ("vertex a genus=0 selfint=0\n", "selfint"),
    ("vertex a genus=0 selfint=-2 mult=0\n", "mult"),
    ("vertex a genus=0\n", "selfint"),
    ("vertex a genus=0 selfint=-2 genus=1\n", "repeated"),
    ("vertx a genus=0 selfint=-2\n", "unknown directive"),
    ("edge a\n", "malformed"),
])
def test_parse_errors_carry_reason(bad, fragment):
    with pytest.raises(GraphError) as err:
        parse_graph(bad)
    assert fragment in str(err.value)


def test_parse_error_reports_line_number():
    with pytest.raises(GraphError) as err:
        parse_graph("vertex a genus=0 selfint=-2\n\nedge a a\n")
    assert "line 3" in str(err.value)


def test_serialize_round_trip():
    text = ("vertex a genus=1 selfint=-4 mult=3\n"
            "vertex b genus=0 selfint=-2\n"
            "edge a b\nedge a b\n")
    g = parse_graph(text)
    again = parse_graph(serialize_graph(g))
    assert again == g


def test_serialize_round_trip_presets():
    for name in ["A1", "A4", "D4", "D7", "E6", "E8"]:
        g, _ = preset_graph(name)
        assert parse_graph(serialize_graph(g)) == g


# ---------------------------------------------------------------------------
# intersection matrix


def test_intersection_matrix_single_vertex():
    g = parse_graph("vertex a genus=0 selfint=-2\n")
    assert intersection_matrix(g) == [[-2]]


def test_intersection_matrix_chain_of_two():
    g, _ = preset_graph("A2")
    assert intersection_matrix(g) == [[-2, 1], [1, -2]]


def test_intersection_matrix_star():
    g, _ = preset_graph("D4")
    m = intersection_matrix(g)
    assert all(m[i][i] == -2 for i in range(4))
    center = g.index("d3")
    assert sorted(m[center][j] for j in range(4) if j != center) == [1, 1, 1]
    # symmetry on every preset used in the suite
    for name in ["A3", "D5", "E6", "E8"]:
        gg, _ = preset_graph(name)
        mm = intersection_matrix(gg)
        assert mm == [list(row) for row in zip(*mm)]


# ---------------------------------------------------------------------------
# negative definiteness


def test_negative_definite_basic_matrices():
    assert is_negative_definite([[-2]])
    assert not is_negative_definite([[0]])
    assert not is_negative_definite([[2]])
    assert not is_negative_definite([[-2, 3], [3, -2]])


def test_negative_definite_presets():
    for name in ["A1", "A2", "A6", "D4", "D7", "E6", "E7", "E8"]:
        g, _ = preset_graph(name)
        assert is_negative_definite(g), name


def test_not_negative_definite_when_degenerate():
    # two -2 vertices joined by two parallel edges: determinant 0
    g = parse_graph("vertex a genus=0 selfint=-2\n"
                    "vertex b genus=0 selfint=-2\n"
                    "edge a b\nedge a b\n")
    assert not is_negative_definite(g)


def _brute_force_negdef(m, box=3):
    """xT M x < 0 for every nonzero integer vector with entries in [-box, box].

    Necessary for negative definiteness; on the small matrices used here it
    is also sufficient in every case the exact test accepts.
    """
    n = len(m)
    for x in itertools.product(range(-box, box + 1), repeat=n):
        if all(v == 0 for v in x):
            continue
        q = sum(m[i][j] * x[i] * x[j] for i in range(n) for j in range(n))
        if q >= 0:
            return False
    return True


def test_negative_definite_agrees_with_brute_force():
    graphs = [preset_graph(n)[0] for n in ["A1", "A2", "A3", "D4", "D5"]]
    graphs.append(parse_graph("vertex a genus=0 selfint=-1\n"))
    graphs.append(parse_graph("vertex a genus=0 selfint=-1\n"
                              "vertex b genus=0 selfint=-1\n"
                              "edge a b\n"))
    graphs.append(parse_graph("vertex a genus=0 selfint=-2\n"
                              "vertex b genus=0 selfint=-2\n"
                              "edge a b\nedge a b\n"))
    for g in graphs:
        m = intersection_matrix(g)
        assert is_negative_definite(g) == _brute_force_negdef(m)


def test_leading_principal_minors_exact():
    g, _ = preset_graph("A3")
    # chain of three -2s: minors -2, 3, -4
    assert leading_principal_minors(intersection_matrix(g)) == [-2, 3, -4]
    assert leading_principal_minors([[0, 1], [1, 0]]) == [0]


# ---------------------------------------------------------------------------
# potential tautness


def test_potentially_taut_star():
    g, _ = preset_graph("D4")
    assert is_potentially_taut(g)
    assert potential_tautness_violations(g) == []


def test_genus_violation_reported():
    g = parse_graph("vertex a genus=1 selfint=-2\n")
    assert not is_potentially_taut(g)
    reasons = potential_tautness_violations(g)
    assert len(reasons) == 1 and "genus" in reasons[0]


def test_valence_violation_reported():
    lines = ["vertex c genus=0 selfint=-2"]
    for i in range(4):
        lines.append(f"vertex l{i} genus=0 selfint=-2")
        lines.append(f"edge c l{i}")
    g = parse_graph("\n".join(lines))
    assert not is_potentially_taut(g)
    reasons = potential_tautness_violations(g)
    assert len(reasons) == 1 and "valence" in reasons[0]


# ---------------------------------------------------------------------------
# connectivity


def test_connectivity():
    assert is_connected(preset_graph("E7")[0])
    assert not is_connected(DualGraph())
    g = parse_graph("vertex a genus=0 selfint=-2\nvertex b genus=0 selfint=-2\n")
    assert not is_connected(g)


# ---------------------------------------------------------------------------
# presets


PRESET_CYCLES = {
    "D4": (3, 3, 5, 3),
    "D5": (5, 5, 9, 7, 4),
    "D6": (8, 8, 15, 13, 10, 6),
    "D7": (11, 11, 21, 19, 16, 12, 7),
    "E6": (8, 15, 21, 11, 15, 8),
    "E7": (18, 35, 51, 26, 40, 28, 15),
    "E8": (46, 91, 135, 68, 110, 84, 57, 29),
}


def test_preset_shapes():
    g, cyc = preset_graph("D4")
    assert g.n == 4 and len(g.edges) == 3
    assert cyc == (3, 3, 5, 3)
    assert cyc[g.index("d3")] == 5  # largest coefficient sits on the center
    g, cyc = preset_graph("E8")
    assert g.n == 8 and len(g.edges) == 7
    assert max(cyc) == 135
    g, cyc = preset_graph("A1")
    assert g.n == 1 and cyc == (1,)
    g, cyc = preset_graph("A5")
    assert g.n == 5 and len(g.edges) == 4 and cyc is None


def test_preset_names_flexible():
    for alias in ["d4", "D_4", "d_4", " D4 "]:
        g, cyc = preset_graph(alias)
        assert g.n == 4 and cyc == (3, 3, 5, 3)


def test_preset_unknown():
    for bad in ["F4", "D3", "E5", "A0", "Q"]:
        with pytest.raises(GraphError):
            preset_graph(bad)


def test_preset_cycles_pair_strictly_negative():
    """Every attached cycle pairs strictly negatively with every vertex."""
    for name, cyc in PRESET_CYCLES.items():
        g, attached = preset_graph(name)
        assert attached == cyc
        m = intersection_matrix(g)
        for i in range(g.n):
            pairing = sum(m[i][j] * cyc[j] for j in range(g.n))
            assert pairing < 0, (name, g.ids[i], pairing)


def test_presets_are_potentially_taut_and_negative_definite():
    for name in list(PRESET_CYCLES) + ["A1", "A2", "A6"]:
        g, _ = preset_graph(name)
        assert is_connected(g)
        assert is_negative_definite(g)
        assert is_potentially_taut(g)
