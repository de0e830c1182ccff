import random
from itertools import permutations

import pytest
from hypothesis import given, settings, strategies as st

from nmslink.errors import GluingError, Infeasible, NoSaddle, NotInClassS
from nmslink.link import PieceCounts
from nmslink.lyagraph import (GeneralizedGraph, betti, block_edges, blocks, build_piece_graph,
                              glue_graphs, in_class_S, order_blocks, order_respects_edges, orient,
                              orientation_problems, to_dot)
from nmslink.manifold import make_manifold
from nmslink.seifert import SeifertPiece, Slope

from generators import brute_force_orientations, feasible_counts


def graph(edges, orientation=()):
    g = GeneralizedGraph()
    for eid, a, b in edges:
        g.vertices.update((a, b))
        g.add_edge(eid, a, b)
    for eid, t, h in orientation:
        g.orientation[eid] = (t, h)
    return g


def tripod(kinds=("source", "sink", "sink")):
    g = graph([("e1", "v", "a"), ("e2", "v", "b"), ("e3", "v", "c")])
    for e, leaf, k in zip(("e1", "e2", "e3"), "abc", kinds):
        g.orientation[e] = (leaf, "v") if k == "source" else ("v", leaf)
    return g


def piece(g, b, m):
    return SeifertPiece("P", g, b, tuple(Slope(1, p) for p in (3, 4, 5, 7, 8, 9)[:m]))


def test_betti_examples():
    g = GeneralizedGraph(vertices={"v"}, ends={"x", "y", "z"})
    for e, end in (("1", "x"), ("2", "y"), ("3", "z")):
        g.add_edge(e, "v", end)
    assert betti(g) == 0
    g = GeneralizedGraph(vertices={"u", "v"}, ends={"x", "y"})
    g.add_edge("1", "u", "v")
    g.add_edge("2", "u", "v")
    g.add_edge("3", "u", "x")
    g.add_edge("4", "v", "y")
    assert betti(g) == 1


def test_betti_disconnected_needs_flag():
    g = graph([("1", "a", "b"), ("2", "c", "d")])
    with pytest.raises(ValueError):
        betti(g)
    assert betti(g, per_component=True) == [0, 0]


def test_closed_genus_zero_shape():
    pg = build_piece_graph(piece(0, 0, 4), PieceCounts(2, 4, 4), [])
    g = pg.graph
    assert len(g.saddles()) == 2 and len(g.leaves()) == 4 and pg.y == 2
    assert betti(g) == 0


def test_one_boundary_shape():
    pg = build_piece_graph(piece(0, 1, 2), PieceCounts(2, 3, 2), ["a"])
    assert pg.y == 1 and len(pg.graph.ends) == 1 and betti(pg.graph) == 0


def test_genus_two_shape():
    pg = build_piece_graph(piece(2, 0, 3), PieceCounts(6, 4, 3), [])
    assert betti(pg.graph) == 2 and len(pg.graph.saddles()) == 6 and pg.y == 0


@pytest.mark.parametrize("g,b,m,cnt,name", [
    (2, 0, 3, PieceCounts(6, 3, 3), "z+b = x-2g+2"),
    (0, 0, 3, PieceCounts(1, 3, 3), "x >= 2"),
    (0, 0, 2, PieceCounts(2, 4, 2), "m >= 4"),
    (0, 1, 1, PieceCounts(2, 3, 1), "m >= 2"),
    (0, 2, 3, PieceCounts(1, 1, 3), "m <= z"),
    (0, 2, 0, PieceCounts(0, 0, 0), "x >= 1"),
])
def test_infeasible_counts_name_the_inequality(g, b, m, cnt, name):
    with pytest.raises(Infeasible) as exc:
        build_piece_graph(piece(g, b, m), cnt, [f"t{i}" for i in range(b)])
    assert exc.value.inequality == name


def test_glue_single_piece_is_identity():
    pg = build_piece_graph(piece(0, 0, 4), PieceCounts(2, 4, 4), [])
    L, proj = glue_graphs([pg], make_manifold([("P", 0, [(1, 3), (1, 4), (1, 5), (1, 7)])]))
    assert L.edges == pg.graph.edges and proj.edges == {}


def test_glue_two_pieces_and_loop():
    w = make_manifold([("A", 0, [(1, 3), (1, 4)]), ("B", 0, [(1, 3), (1, 4)])], [("a", "A", "B")])
    pa = build_piece_graph(SeifertPiece("A", 0, 1, (Slope(1, 3), Slope(1, 4))), PieceCounts(1, 2, 2), ["a"])
    pb = build_piece_graph(SeifertPiece("B", 0, 1, (Slope(1, 3), Slope(1, 4))), PieceCounts(1, 2, 2), ["a"])
    L, proj = glue_graphs([pa, pb], w)
    assert not L.ends and proj.preimage("a") == ["T:a"] and betti(L) == 0
    wl = make_manifold([("A", 0, [(1, 3)])], [("a", "A", "A")])
    pl = build_piece_graph(wl.piece("A"), PieceCounts(2, 2, 1), ["a", "a"], ports=(0, 1))
    before = betti(pl.graph)
    L, _ = glue_graphs([pl], wl)
    assert betti(L) == before + 1


def test_glue_label_mismatch():
    w = make_manifold([("A", 0, [(1, 3), (1, 4)]), ("B", 0, [(1, 3), (1, 4)])], [("a", "A", "B")])
    pa = build_piece_graph(w.piece("A"), PieceCounts(1, 2, 2), ["b"])
    pb = build_piece_graph(w.piece("B"), PieceCounts(1, 2, 2), ["a"])
    with pytest.raises(GluingError):
        glue_graphs([pa, pb], w)


def test_class_s_examples():
    assert in_class_S(tripod()) == (True, None)
    ok, witness = in_class_S(tripod(("sink", "sink", "sink")))
    assert not ok and witness[0] == "leaves"
    # a leafless bubble hangs off a bridge
    g = graph([("b1", "u1", "u2"), ("b2", "u1", "u2"), ("b3", "u1", "u3"), ("b4", "u2", "u3"),
               ("br", "u3", "v"), ("s", "v", "p"), ("t", "v", "q")],
              [("s", "p", "v"), ("t", "v", "q")])
    ok, witness = in_class_S(g)
    assert not ok and witness in (("vertex", "u3"), ("vertex", "v"), ("edge", "br"))


def test_orient_forced_tripod():
    L = orient(tripod())
    assert orientation_problems(L) == []
    assert L.orientation == tripod().orientation


def test_orient_cycle_both_ways_accepted():
    g = graph([("s", "p", "u"), ("c1", "u", "v"), ("c2", "u", "v"), ("t", "v", "q")],
              [("s", "p", "u"), ("t", "v", "q")])
    # extend to degree 3 at u and v: the two parallel edges form the cycle
    L = orient(g)
    assert orientation_problems(L) == []
    valid = brute_force_orientations(g)
    assert L.orientation in valid


def test_orient_rejects_non_class_s():
    with pytest.raises(NotInClassS):
        orient(tripod(("source", "source", "source")))


def _chain():
    g = graph([("a", "l1", "v1"), ("b", "l2", "v1"), ("c", "v1", "v2"), ("d", "l3", "v2"),
               ("e", "v2", "v3"), ("f", "v3", "l4"), ("h", "v3", "l5")],
              [("a", "l1", "v1"), ("b", "l2", "v1"), ("c", "v1", "v2"), ("d", "l3", "v2"),
               ("e", "v2", "v3"), ("f", "v3", "l4"), ("h", "v3", "l5")])
    return g


def test_blocks_and_chain_order():
    g = _chain()
    assert [b.id for b in blocks(g)] == ["v1", "v2", "v3"]
    v2 = blocks(g)[1]
    assert sorted(v2.ends) == [("c", "in"), ("e", "out")]
    assert [b.id for b in order_blocks(g)] == ["v1", "v2", "v3"]
    assert blocks(tripod())[0].n_boundary == 0


def test_two_saddles_one_cut_each():
    g = graph([("a", "l1", "u"), ("b", "l2", "u"), ("c", "u", "v"), ("d", "v", "l3"), ("e", "v", "l4")],
              [("a", "l1", "u"), ("b", "l2", "u"), ("c", "u", "v"), ("d", "v", "l3"), ("e", "v", "l4")])
    assert [b.n_boundary for b in blocks(g)] == [1, 1]


def test_no_saddle():
    g = graph([("e", "a", "b")], [("e", "a", "b")])
    with pytest.raises(NoSaddle):
        blocks(g)


def test_antichain_orders_both_accepted():
    # v0 feeds two incomparable saddles
    g = graph([("s", "p", "v0"), ("x", "v0", "v1"), ("y", "v0", "v2"),
               ("a", "v1", "q1"), ("b", "q0", "v1"), ("c", "v2", "q2"), ("d", "v2", "q3")],
              [("s", "p", "v0"), ("x", "v0", "v1"), ("y", "v0", "v2"),
               ("a", "v1", "q1"), ("b", "q0", "v1"), ("c", "v2", "q2"), ("d", "v2", "q3")])
    assert order_respects_edges(g, ["v0", "v1", "v2"])
    assert order_respects_edges(g, ["v0", "v2", "v1"])
    assert not order_respects_edges(g, ["v1", "v0", "v2"])


def test_dot_is_stable_and_shaped():
    g = _chain()
    text = to_dot(g)
    assert text == to_dot(g.copy())
    assert '"v1" [shape=circle' in text and '"l1" [shape=square' in text
    ends = GeneralizedGraph(vertices={"v"}, ends={"x"})
    ends.add_edge("e", "v", "x")
    assert "shape=diamond" in to_dot(ends) and "dir=none" in to_dot(ends)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9))
def test_piece_graph_invariants(s):
    rng = random.Random(s)
    g, b, m, x, z = feasible_counts(rng)
    p = SeifertPiece("P", g, b, tuple(Slope(1, 3) for _ in range(m)))
    pg = build_piece_graph(p, PieceCounts(x, z, m), [f"t{i}" for i in range(b)])
    gr = pg.graph
    deg = gr.degrees()
    assert betti(gr) == g
    assert len(gr.saddles()) == x and len(gr.leaves()) == z and len(gr.ends) == b
    assert all(deg[v] in (1, 3) for v in gr.vertices)
    assert 2 * pg.y <= m


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_order_blocks_is_topological(s):
    # random class-S graph from a realization; every permutation is checked
    from generators import random_ordinary_manifold, sample_links
    from nmslink.decide import realize
    rng = random.Random(s)
    w = random_ordinary_manifold(rng, max_pieces=2, max_genus=1)
    links = sample_links(w, rng, 1, pool=20, slack=0)
    if not links:
        return
    L = realize(w, links[0]).lyapunov
    order = [b.id for b in order_blocks(L)]
    assert order_respects_edges(L, order)
    if len(order) <= 6:
        edges = block_edges(L)
        good = [list(p) for p in permutations(order)
                if all(p.index(t) < p.index(h) for _, t, h in edges)]
        assert order in good
