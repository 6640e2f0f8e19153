"""Dataflow task-graph IR.

A task graph is a DAG of INPUT, OP and OUTPUT nodes. OPs take exactly two
operands (ports 0 and 1). Levelization assigns each OP its earliest level
(1 + deepest predecessor) and makes the graph mappable onto a strictly
feed-forward grid: any value crossing more than one level gets a chain of
BUF nodes, one per intermediate level, shared between all consumers of
the same value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

KIND_INPUT = "input"
KIND_OUTPUT = "output"
KIND_OP = "op"
KIND_BUF = "buf"

OP_NAMES = ("add", "sub", "mul", "div", "gt", "eq")


class GraphError(Exception):
    """Malformed or semantically invalid task graph."""


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    op: Optional[str] = None


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    port: int


@dataclass(frozen=True)
class TaskGraph:
    nodes: Tuple[Node, ...]
    edges: Tuple[Edge, ...]

    def node_map(self) -> Dict[str, Node]:
        return {n.id: n for n in self.nodes}


@dataclass(frozen=True)
class LeveledGraph:
    """TaskGraph plus BUF nodes and a level per OP/BUF node (1-based)."""

    nodes: Tuple[Node, ...]
    edges: Tuple[Edge, ...]
    levels: Dict[str, int] = field(compare=False)

    def node_map(self) -> Dict[str, Node]:
        return {n.id: n for n in self.nodes}

    def level_count(self) -> int:
        return max(self.levels.values()) if self.levels else 0


def _in_edges(edges) -> Dict[str, List[Edge]]:
    by_dst: Dict[str, List[Edge]] = {}
    for e in edges:
        by_dst.setdefault(e.dst, []).append(e)
    return by_dst


def parse_graph(document) -> TaskGraph:
    """Build a validated TaskGraph from a JSON document (text or dict).

    Checks ids, node kinds, op names, port discipline (each OP gets ports
    0 and 1 exactly once, each OUTPUT one port-0 edge) and acyclicity.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise GraphError(
                "graph document is not valid JSON (line %d column %d)"
                % (e.lineno, e.colno)
            ) from e
    if not isinstance(document, dict):
        raise GraphError("graph document must be a JSON object")
    raw_nodes = document.get("nodes")
    raw_edges = document.get("edges")
    if not isinstance(raw_nodes, list):
        raise GraphError("graph: 'nodes' must be an array")
    if not isinstance(raw_edges, list):
        raise GraphError("graph: 'edges' must be an array")

    nodes: List[Node] = []
    seen: Dict[str, Node] = {}
    for i, entry in enumerate(raw_nodes):
        if not isinstance(entry, dict):
            raise GraphError("nodes[%d]: expected an object" % i)
        nid = entry.get("id")
        kind = entry.get("kind")
        if not isinstance(nid, str) or not nid:
            raise GraphError("nodes[%d]: 'id' must be a nonempty string" % i)
        if nid in seen:
            raise GraphError("duplicate node id '%s'" % nid)
        if kind not in (KIND_INPUT, KIND_OUTPUT, KIND_OP):
            raise GraphError("node '%s': unknown kind %r" % (nid, kind))
        op = entry.get("op")
        if kind == KIND_OP:
            if op not in OP_NAMES:
                raise GraphError("node '%s': op must be one of %s" % (nid, ", ".join(OP_NAMES)))
        elif op is not None:
            raise GraphError("node '%s': only op nodes carry an 'op' field" % nid)
        node = Node(nid, kind, op)
        seen[nid] = node
        nodes.append(node)

    edges: List[Edge] = []
    filled: Dict[Tuple[str, int], str] = {}
    for i, entry in enumerate(raw_edges):
        if not isinstance(entry, dict):
            raise GraphError("edges[%d]: expected an object" % i)
        src, dst, port = entry.get("src"), entry.get("dst"), entry.get("port")
        if src not in seen:
            raise GraphError("edges[%d]: unknown src %r" % (i, src))
        if dst not in seen:
            raise GraphError("edges[%d]: unknown dst %r" % (i, dst))
        if not isinstance(port, int) or port not in (0, 1):
            raise GraphError("edges[%d]: port must be 0 or 1" % i)
        if seen[src].kind == KIND_OUTPUT:
            raise GraphError("edge %s->%s: output nodes have no out-edges" % (src, dst))
        if seen[dst].kind == KIND_INPUT:
            raise GraphError("edge %s->%s: input nodes have no in-edges" % (src, dst))
        if seen[dst].kind == KIND_OUTPUT and port != 0:
            raise GraphError("edge %s->%s: output nodes take port 0 only" % (src, dst))
        if (dst, port) in filled:
            raise GraphError("node '%s': port %d driven twice" % (dst, port))
        filled[(dst, port)] = src
        edges.append(Edge(src, dst, port))

    for n in nodes:
        have = sorted(p for (d, p) in filled if d == n.id)
        if n.kind == KIND_OP and have != [0, 1]:
            raise GraphError("op node '%s': needs ports 0 and 1, got %s" % (n.id, have))
        if n.kind == KIND_OUTPUT and have != [0]:
            raise GraphError("output node '%s': needs exactly one in-edge" % n.id)

    _check_acyclic(nodes, edges)
    return TaskGraph(tuple(nodes), tuple(edges))


def _check_acyclic(nodes, edges) -> None:
    indeg = {n.id: 0 for n in nodes}
    out: Dict[str, List[str]] = {n.id: [] for n in nodes}
    for e in edges:
        indeg[e.dst] += 1
        out[e.src].append(e.dst)
    queue = [nid for nid, d in indeg.items() if d == 0]
    visited = 0
    while queue:
        nid = queue.pop()
        visited += 1
        for succ in out[nid]:
            indeg[succ] -= 1
            if indeg[succ] == 0:
                queue.append(succ)
    if visited != len(nodes):
        stuck = sorted(nid for nid, d in indeg.items() if d > 0)
        raise GraphError("graph has a cycle involving node '%s'" % stuck[0])


def _op_levels(g: TaskGraph) -> Dict[str, int]:
    """Earliest level per OP node; INPUT counts as level 0."""
    nmap = g.node_map()
    ins = _in_edges(g.edges)
    levels: Dict[str, int] = {}

    def level_of(nid: str) -> int:
        node = nmap[nid]
        if node.kind == KIND_INPUT:
            return 0
        if nid in levels:
            return levels[nid]
        lvl = 1 + max(level_of(e.src) for e in ins[nid])
        levels[nid] = lvl
        return lvl

    # Iterative worklist would also do; graphs are shallow by construction.
    order = _topo_order(g)
    for nid in order:
        if nmap[nid].kind == KIND_OP:
            level_of(nid)
    return levels


def _topo_order(g: TaskGraph) -> List[str]:
    indeg = {n.id: 0 for n in g.nodes}
    out: Dict[str, List[str]] = {n.id: [] for n in g.nodes}
    for e in g.edges:
        indeg[e.dst] += 1
        out[e.src].append(e.dst)
    queue = sorted(nid for nid, d in indeg.items() if d == 0)
    order = []
    while queue:
        nid = queue.pop(0)
        order.append(nid)
        for succ in out[nid]:
            indeg[succ] -= 1
            if indeg[succ] == 0:
                queue.append(succ)
    return order


def levelize(g: TaskGraph) -> LeveledGraph:
    """Assign levels and insert BUF chains so every edge spans one level.

    INPUT nodes sit conceptually at level 0 and OUTPUT nodes one past the
    deepest OP, so a value consumed k levels below its producer is carried
    by k-1 BUF nodes. Chains are shared: one BUF per (source, level).
    """
    levels = dict(_op_levels(g))
    nmap = g.node_map()
    last = max(levels.values()) if levels else 0

    used_ids = set(nmap)
    new_nodes: List[Node] = list(g.nodes)
    new_edges: List[Edge] = []
    buf_at: Dict[Tuple[str, int], str] = {}

    def src_level(nid: str) -> int:
        return 0 if nmap[nid].kind == KIND_INPUT else levels[nid]

    def buffered(src: str, upto: int) -> str:
        """Return the id carrying `src` at level `upto`, creating BUFs as needed."""
        cur = src
        for lvl in range(src_level(src) + 1, upto + 1):
            key = (src, lvl)
            if key in buf_at:
                cur = buf_at[key]
                continue
            bid = "%s@%d" % (src, lvl)
            while bid in used_ids:
                bid += "+"
            used_ids.add(bid)
            buf_at[key] = bid
            new_nodes.append(Node(bid, KIND_BUF))
            levels[bid] = lvl
            new_edges.append(Edge(cur, bid, 0))
            cur = bid
        return cur

    for e in g.edges:
        dst_node = nmap[e.dst]
        target = last + 1 if dst_node.kind == KIND_OUTPUT else levels[e.dst]
        carrier = buffered(e.src, target - 1)
        new_edges.append(Edge(carrier, e.dst, e.port))

    return LeveledGraph(tuple(new_nodes), tuple(new_edges), levels)


def strip_levels(g: LeveledGraph) -> TaskGraph:
    """Inverse of levelize: drop BUF nodes and reconnect original edges."""
    nmap = g.node_map()
    ins = _in_edges(g.edges)

    def resolve(nid: str) -> str:
        while nmap[nid].kind == KIND_BUF:
            nid = ins[nid][0].src
        return nid

    nodes = tuple(n for n in g.nodes if n.kind != KIND_BUF)
    edges = tuple(
        Edge(resolve(e.src), e.dst, e.port)
        for e in g.edges
        if nmap[e.dst].kind != KIND_BUF
    )
    return TaskGraph(nodes, edges)


def graph_width(g: LeveledGraph) -> List[int]:
    """Nodes (OP + BUF) per level, index 0 = level 1. Empty for opless graphs."""
    count = g.level_count()
    widths = [0] * count
    for nid, lvl in g.levels.items():
        widths[lvl - 1] += 1
    return widths


# ----------------------------------------------------------- reference eval

def _truncate(value: int, bits: int) -> int:
    m = value & ((1 << bits) - 1)
    return m - (1 << bits) if m >= 1 << (bits - 1) else m


def _apply(op: str, a: int, b: int) -> int:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if b == 0:
            return 0
        q = abs(a) // abs(b)
        return -q if (a < 0) != (b < 0) else q
    if op == "gt":
        return 1 if a > b else 0
    if op == "eq":
        return 1 if a == b else 0
    raise GraphError("unknown op %r" % op)


def evaluate(g, inputs: Dict[str, int], bits: int) -> Dict[str, int]:
    """Evaluate a (leveled or plain) graph as a dataflow program.

    Every OP result is truncated to `bits` two's-complement; BUF copies
    its operand; division truncates toward zero and yields 0 on a zero
    divisor. Returns {output node id: value}.
    """
    nmap = g.node_map()
    ins = _in_edges(g.edges)
    memo: Dict[str, int] = {}

    def value(nid: str) -> int:
        if nid in memo:
            return memo[nid]
        node = nmap[nid]
        if node.kind == KIND_INPUT:
            if nid not in inputs:
                raise GraphError("no value supplied for input '%s'" % nid)
            v = _truncate(inputs[nid], bits)
        elif node.kind == KIND_BUF:
            v = value(ins[nid][0].src)
        elif node.kind == KIND_OP:
            by_port = {e.port: e.src for e in ins[nid]}
            v = _truncate(_apply(node.op, value(by_port[0]), value(by_port[1])), bits)
        else:
            raise GraphError("cannot evaluate node kind %r" % node.kind)
        memo[nid] = v
        return v

    return {
        n.id: value(ins[n.id][0].src) for n in g.nodes if n.kind == KIND_OUTPUT
    }
