"""Shared builders for the test suite."""

from __future__ import annotations

import random

from vcgra.grid import GridSpec, LevelSpec, derive_channels
from vcgra.mapping import ChannelConfig, GridConfig, Opcode, PeConfig
from vcgra.pgm import Image
from vcgra.simulator import SimGrid
from vcgra.taskgraph import TaskGraph, graph_width, parse_graph

OPS = ("add", "sub", "mul", "div", "gt", "eq")


def add_graph() -> TaskGraph:
    """Two inputs, one ADD, one output."""
    return parse_graph(
        {
            "nodes": [
                {"id": "in0", "kind": "input"},
                {"id": "in1", "kind": "input"},
                {"id": "sum", "kind": "op", "op": "add"},
                {"id": "out", "kind": "output"},
            ],
            "edges": [
                {"src": "in0", "dst": "sum", "port": 0},
                {"src": "in1", "dst": "sum", "port": 1},
                {"src": "sum", "dst": "out", "port": 0},
            ],
        }
    )


def random_dag(rng: random.Random, max_levels: int = 6, max_width: int = 8,
               ops=OPS) -> TaskGraph:
    """Random single-output DAG with a known level structure.

    Each op anchors one operand in the level directly above, which pins
    its earliest level; the other operand may come from any earlier
    level or an input, so long-range edges (and therefore BUF chains)
    appear regularly.
    """
    n_levels = rng.randint(1, max_levels)
    n_inputs = rng.randint(2, 6)
    inputs = ["i%d" % k for k in range(n_inputs)]
    nodes = [{"id": nid, "kind": "input"} for nid in inputs]
    edges = []
    by_level = {0: list(inputs)}
    for lvl in range(1, n_levels + 1):
        ids = []
        pool_below = by_level[lvl - 1]
        pool_any = [nid for g in range(lvl) for nid in by_level[g]]
        for k in range(rng.randint(1, max_width)):
            nid = "n%d_%d" % (lvl, k)
            anchor = rng.choice(pool_below)
            other = rng.choice(pool_any)
            first = rng.random() < 0.5
            nodes.append({"id": nid, "kind": "op", "op": rng.choice(ops)})
            edges.append({"src": anchor if first else other, "dst": nid, "port": 0})
            edges.append({"src": other if first else anchor, "dst": nid, "port": 1})
            ids.append(nid)
        by_level[lvl] = ids
    nodes.append({"id": "result", "kind": "output"})
    edges.append({"src": by_level[n_levels][0], "dst": "result", "port": 0})
    return parse_graph({"nodes": nodes, "edges": edges})


def grid_for(leveled, bits: int) -> GridSpec:
    """Smallest grid the leveled graph fits: exact per-level widths."""
    widths = graph_width(leveled)
    n_inputs = sum(1 for n in leveled.nodes if n.kind == "input")
    if not widths:
        widths = [1]
    return GridSpec(
        max(n_inputs, 1),
        bits,
        tuple(LevelSpec(w, bits, bits) for w in widths),
    )


def input_vector(rng: random.Random, graph: TaskGraph, bits: int) -> dict:
    half = 1 << (bits - 1)
    return {
        n.id: rng.randrange(-half, half)
        for n in graph.nodes
        if n.kind == "input"
    }


def frame_of(vector: dict) -> list:
    return [vector[nid] for nid in sorted(vector)]


def chain_graph(depth: int) -> TaskGraph:
    """A straight chain of adders: n0 = in0 + in1, nk = 2 * n(k-1)."""
    nodes = [{"id": "in0", "kind": "input"}, {"id": "in1", "kind": "input"}]
    edges = []
    prev = ("in0", "in1")
    for k in range(depth):
        nid = "n%d" % k
        nodes.append({"id": nid, "kind": "op", "op": "add"})
        edges.append({"src": prev[0], "dst": nid, "port": 0})
        edges.append({"src": prev[1], "dst": nid, "port": 1})
        prev = (nid, nid)
    nodes.append({"id": "out", "kind": "output"})
    edges.append({"src": prev[0], "dst": "out", "port": 0})
    return parse_graph({"nodes": nodes, "edges": edges})


def pulse_cycles(spec, config, frames, horizon):
    """Step a configured grid, presenting one frame every 3 cycles.

    Returns [(cycle, value)] for every output-register valid pulse seen
    before the horizon.
    """
    grid = SimGrid(spec, config)
    pulses = []
    next_frame = 0
    while grid.cycle < horizon:
        if next_frame < len(frames) and grid.cycle == 3 * next_frame:
            grid.set_inputs(frames[next_frame])
            grid.start = True
            next_frame += 1
        else:
            grid.start = False
        grid.step()
        value, ok = grid.output_reg()
        if ok:
            pulses.append((grid.cycle, value))
    return pulses


def random_image(rng: random.Random, width: int, height: int) -> Image:
    return Image(width, height, bytes(rng.randrange(256) for _ in range(width * height)))


def random_spec(rng: random.Random) -> GridSpec:
    levels = tuple(
        LevelSpec(rng.randint(1, 6), rng.randint(1, 64), rng.randint(1, 64))
        for _ in range(rng.randint(1, 4))
    )
    return GridSpec(rng.randint(1, 20), rng.randint(1, 64), levels)


def random_config(rng: random.Random, spec: GridSpec) -> GridConfig:
    """Uniformly random but shape-valid configuration for a grid."""
    chans = derive_channels(spec)
    n_slots = sum(lvl.pe_count for lvl in spec.levels)
    pes = tuple(PeConfig(Opcode(rng.randint(0, 7))) for _ in range(n_slots))

    def cc(ch):
        return ChannelConfig(
            tuple(rng.randrange(ch.predecessor_count) for _ in range(ch.output_count))
        )

    return GridConfig(pes, cc(chans[0]), tuple(cc(c) for c in chans[1:-1]), cc(chans[-1]))
