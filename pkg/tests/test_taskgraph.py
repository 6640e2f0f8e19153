"""Task-graph parsing, levelization, BUF insertion, reference evaluation."""

import random

import pytest

from helpers import add_graph, input_vector, random_dag
from vcgra.sobel import build_sobel_graph
from vcgra.taskgraph import (
    Edge,
    GraphError,
    KIND_BUF,
    Node,
    evaluate,
    graph_width,
    levelize,
    parse_graph,
    strip_levels,
)


def doc(nodes, edges):
    return {"nodes": nodes, "edges": edges}


def n(nid, kind="op", op="add"):
    if kind == "op":
        return {"id": nid, "kind": kind, "op": op}
    return {"id": nid, "kind": kind}


def e(src, dst, port=0):
    return {"src": src, "dst": dst, "port": port}


def test_parse_add_graph_shape():
    g = add_graph()
    assert [node.kind for node in g.nodes] == ["input", "input", "op", "output"]
    assert g.node_map()["sum"].op == "add"
    assert len(g.edges) == 3


def test_parse_rejects_duplicate_id():
    with pytest.raises(GraphError, match="duplicate node id"):
        parse_graph(doc([n("a", "input"), n("a", "input")], []))


def test_parse_rejects_unknown_kind():
    with pytest.raises(GraphError, match="unknown kind"):
        parse_graph(doc([{"id": "a", "kind": "alu"}], []))


def test_parse_rejects_bad_op_field():
    with pytest.raises(GraphError, match="op must be one of"):
        parse_graph(doc([{"id": "a", "kind": "op", "op": "xor"}], []))
    with pytest.raises(GraphError, match="only op nodes"):
        parse_graph(doc([{"id": "a", "kind": "input", "op": "add"}], []))


def test_parse_rejects_bad_edges():
    nodes = [n("a", "input"), n("b", "input"), n("x"), n("o", "output")]
    with pytest.raises(GraphError, match="unknown src"):
        parse_graph(doc(nodes, [e("ghost", "x")]))
    with pytest.raises(GraphError, match="unknown dst"):
        parse_graph(doc(nodes, [e("a", "ghost")]))
    with pytest.raises(GraphError, match="port must be 0 or 1"):
        parse_graph(doc(nodes, [e("a", "x", 2)]))
    with pytest.raises(GraphError, match="no in-edges"):
        parse_graph(doc(nodes, [e("a", "b")]))
    with pytest.raises(GraphError, match="no out-edges"):
        parse_graph(doc(nodes, [e("o", "x")]))
    with pytest.raises(GraphError, match="driven twice"):
        parse_graph(doc(nodes, [e("a", "x", 0), e("b", "x", 0)]))
    with pytest.raises(GraphError, match="port 0 only"):
        parse_graph(doc(nodes, [e("a", "o", 1)]))


def test_parse_rejects_incomplete_ports():
    with pytest.raises(GraphError, match="needs ports 0 and 1"):
        parse_graph(doc([n("a", "input"), n("x")], [e("a", "x", 0)]))
    with pytest.raises(GraphError, match="exactly one in-edge"):
        parse_graph(doc([n("o", "output")], []))


def test_parse_rejects_cycles():
    nodes = [n("a", "input"), n("x"), n("y")]
    edges = [
        e("a", "x", 0),
        e("y", "x", 1),
        e("x", "y", 0),
        e("a", "y", 1),
    ]
    with pytest.raises(GraphError, match="cycle"):
        parse_graph(doc(nodes, edges))


def test_parse_reports_json_location():
    with pytest.raises(GraphError, match="line 1 column"):
        parse_graph('{"nodes": [}')


def test_levelize_simple_add_inserts_nothing():
    lg = levelize(add_graph())
    assert lg.levels == {"sum": 1}
    assert not [node for node in lg.nodes if node.kind == KIND_BUF]
    assert lg.level_count() == 1
    assert graph_width(lg) == [1]


def test_levelize_buffers_long_edges():
    # in0 is consumed at level 3, so it rides BUFs at levels 1 and 2.
    g = parse_graph(
        doc(
            [n("in0", "input"), n("in1", "input"), n("a"), n("b"), n("c"), n("o", "output")],
            [
                e("in0", "a", 0),
                e("in1", "a", 1),
                e("a", "b", 0),
                e("a", "b", 1),
                e("b", "c", 0),
                e("in0", "c", 1),
                e("c", "o", 0),
            ],
        )
    )
    lg = levelize(g)
    bufs = sorted(node.id for node in lg.nodes if node.kind == KIND_BUF)
    assert bufs == ["in0@1", "in0@2"]
    assert lg.levels["in0@1"] == 1 and lg.levels["in0@2"] == 2
    assert Edge("in0", "in0@1", 0) in lg.edges
    assert Edge("in0@1", "in0@2", 0) in lg.edges
    assert Edge("in0@2", "c", 1) in lg.edges
    assert Edge("in0", "c", 1) not in lg.edges


def test_levelize_shares_buf_chains():
    # One producer consumed at levels 3 and 4 gets one shared chain, not two.
    g = parse_graph(
        doc(
            [
                n("p", "input"),
                n("q", "input"),
                n("x"),
                n("a"),
                n("b"),
                n("u"),
                n("v"),
                n("o", "output"),
            ],
            [
                e("p", "x", 0),
                e("q", "x", 1),
                e("p", "a", 0),
                e("q", "a", 1),
                e("a", "b", 0),
                e("a", "b", 1),
                e("b", "u", 0),
                e("x", "u", 1),  # x@1 used at level 3
                e("u", "v", 0),
                e("x", "v", 1),  # x@1 used at level 4
                e("v", "o", 0),
            ],
        )
    )
    lg = levelize(g)
    bufs = sorted(node.id for node in lg.nodes if node.kind == KIND_BUF)
    assert bufs == ["x@2", "x@3"]
    assert Edge("x@2", "u", 1) in lg.edges
    assert Edge("x@3", "v", 1) in lg.edges


def test_levelize_avoids_id_collisions():
    # A node that already uses the generated BUF name forces a suffix.
    g = parse_graph(
        doc(
            [n("x", "input"), n("y", "input"), n("x@1"), n("top"), n("o", "output")],
            [
                e("x", "x@1", 0),
                e("y", "x@1", 1),
                e("x@1", "top", 0),
                e("x", "top", 1),
                e("top", "o", 0),
            ],
        )
    )
    lg = levelize(g)
    bufs = [node.id for node in lg.nodes if node.kind == KIND_BUF]
    assert bufs == ["x@1+"]
    assert lg.levels["x@1+"] == 1
    assert Edge("x@1+", "top", 1) in lg.edges


def test_levelize_buffers_path_to_output():
    # The output sits one past the deepest op, so a shallow branch feeding
    # it is carried down by BUFs.
    g = parse_graph(
        doc(
            [
                n("p", "input"),
                n("q", "input"),
                n("a1"),
                n("a2"),
                n("a3"),
                n("b"),
                n("o", "output"),
            ],
            [
                e("p", "a1", 0),
                e("q", "a1", 1),
                e("a1", "a2", 0),
                e("a1", "a2", 1),
                e("a2", "a3", 0),
                e("a2", "a3", 1),
                e("p", "b", 0),
                e("q", "b", 1),
                e("b", "o", 0),
            ],
        )
    )
    lg = levelize(g)
    bufs = sorted(node.id for node in lg.nodes if node.kind == KIND_BUF)
    assert bufs == ["b@2", "b@3"]
    assert Edge("b@3", "o", 0) in lg.edges
    # the output's feeder now sits at the deepest level
    feeder = [edge.src for edge in lg.edges if edge.dst == "o"]
    assert lg.levels[feeder[0]] == lg.level_count() == 3


def test_levelize_opless_graph():
    g = parse_graph(
        doc([n("a", "input"), n("o", "output")], [e("a", "o", 0)])
    )
    lg = levelize(g)
    assert lg.levels == {}
    assert lg.level_count() == 0
    assert graph_width(lg) == []
    assert lg.edges == g.edges


def test_sobel_graph_levels_frozen():
    lg = levelize(build_sobel_graph())
    assert lg.level_count() == 5
    assert graph_width(lg) == [9, 5, 3, 2, 1]
    bufs = sorted(node.id for node in lg.nodes if node.kind == KIND_BUF)
    assert bufs == ["m8@2", "m8@3", "m8@4"]
    assert [lg.levels[b] for b in bufs] == [2, 3, 4]
    assert Edge("m8@4", "v0", 1) in lg.edges


def test_levelize_deterministic():
    rng = random.Random(7)
    for _ in range(10):
        g = random_dag(rng)
        a, b = levelize(g), levelize(g)
        assert a.nodes == b.nodes
        assert a.edges == b.edges
        assert a.levels == b.levels


def test_strip_levels_inverts_levelize():
    rng = random.Random(21)
    for _ in range(40):
        g = random_dag(rng)
        assert strip_levels(levelize(g)) == g
    assert strip_levels(levelize(build_sobel_graph())) == build_sobel_graph()


def test_evaluate_wraps_two_complement():
    g = add_graph()
    # 200 reads as -56 in 8 bits: -56 + 100 = 44
    assert evaluate(g, {"in0": 200, "in1": 100}, 8) == {"out": 44}
    assert evaluate(g, {"in0": 127, "in1": 1}, 8) == {"out": -128}
    assert evaluate(g, {"in0": 3, "in1": 4}, 8) == {"out": 7}


def test_evaluate_division_truncates_toward_zero():
    g = parse_graph(
        doc(
            [n("a", "input"), n("b", "input"), n("q", op="div"), n("o", "output")],
            [e("a", "q", 0), e("b", "q", 1), e("q", "o", 0)],
        )
    )
    assert evaluate(g, {"a": 7, "b": 2}, 8) == {"o": 3}
    assert evaluate(g, {"a": -7, "b": 2}, 8) == {"o": -3}
    assert evaluate(g, {"a": 7, "b": -2}, 8) == {"o": -3}
    assert evaluate(g, {"a": -7, "b": -2}, 8) == {"o": 3}
    assert evaluate(g, {"a": 19, "b": 0}, 8) == {"o": 0}


def test_evaluate_comparisons_signed():
    for op, table in (
        ("gt", {(-1, 0): 0, (1, 0): 1, (3, 3): 0}),
        ("eq", {(-1, 0): 0, (3, 3): 1, (-128, 128): 1}),  # 128 wraps to -128
    ):
        g = parse_graph(
            doc(
                [n("a", "input"), n("b", "input"), n("x", op=op), n("o", "output")],
                [e("a", "x", 0), e("b", "x", 1), e("x", "o", 0)],
            )
        )
        for (a, b), want in table.items():
            assert evaluate(g, {"a": a, "b": b}, 8) == {"o": want}


def test_evaluate_requires_all_inputs():
    with pytest.raises(GraphError, match="no value supplied"):
        evaluate(add_graph(), {"in0": 1}, 8)


def test_levelize_preserves_evaluation():
    rng = random.Random(1234)
    for _ in range(30):
        g = random_dag(rng)
        lg = levelize(g)
        for _ in range(5):
            vec = input_vector(rng, g, 16)
            assert evaluate(lg, vec, 16) == evaluate(g, vec, 16)
