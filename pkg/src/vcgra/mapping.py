"""Mapping of leveled task graphs onto grids.

Placement is feasibility-only: nodes are sorted by id within each level
and assigned slots left to right. Routing then fills in the crossbar
selects of every channel. The result is a complete GridConfig: one opcode
per PE slot plus one select per channel output, with 0 as the documented
don't-care value for unused resources.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, List, Tuple

from .grid import GridSpec, derive_channels, require_valid
from .taskgraph import (
    KIND_BUF,
    KIND_INPUT,
    KIND_OP,
    KIND_OUTPUT,
    Edge,
    LeveledGraph,
    Node,
    TaskGraph,
    levelize,
)


class MappingError(Exception):
    """Mapping cannot proceed with the given graph/grid pair."""


class InfeasibleError(MappingError):
    """The graph does not fit the grid (slots, levels or interface ports)."""


class ConfigError(Exception):
    """A GridConfig does not match the shape the grid requires."""


class Opcode(IntEnum):
    """PE opcodes with their fixed 4-bit encodings."""

    NONE = 0
    ADD = 1
    SUB = 2
    MUL = 3
    DIV = 4
    GT = 5
    EQ = 6
    BUF = 7


OPCODE_BY_NAME = {op.name.lower(): op for op in Opcode}


@dataclass(frozen=True)
class PeConfig:
    opcode: Opcode


@dataclass(frozen=True)
class ChannelConfig:
    selects: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "selects", tuple(self.selects))


@dataclass(frozen=True)
class GridConfig:
    """Complete configuration of a grid: opcodes plus every crossbar select."""

    pe_configs: Tuple[PeConfig, ...]          # level-major, left to right
    input_distribution: ChannelConfig         # memory-interface channel
    channel_configs: Tuple[ChannelConfig, ...]  # one per intermediate channel
    output_selection: ChannelConfig           # output-interface channel


@dataclass(frozen=True)
class Placement:
    """Node id -> (level, slot); levels 1-based, slots 0-based."""

    assignments: Dict[str, Tuple[int, int]]


def extend_to_depth(g: LeveledGraph, depth: int) -> LeveledGraph:
    """Carry every OUTPUT-feeding value through extra grid levels with BUFs.

    A grid deeper than the graph still forbids level bypassing, so the
    value a graph produces at its own last level must be buffered once
    per remaining level before it reaches the output interface.
    """
    if g.level_count() >= depth:
        return g
    nmap = g.node_map()
    levels = dict(g.levels)
    used = set(nmap)
    nodes: List[Node] = list(g.nodes)
    edges: List[Edge] = []
    buf_at: Dict[Tuple[str, int], str] = {}

    def carry(src: str, upto: int) -> str:
        cur = src
        base = 0 if nmap[src].kind == KIND_INPUT else levels[src]
        for lvl in range(base + 1, upto + 1):
            key = (src, lvl)
            if key in buf_at:
                cur = buf_at[key]
                continue
            bid = "%s@%d" % (src, lvl)
            while bid in used:
                bid += "+"
            used.add(bid)
            buf_at[key] = bid
            nodes.append(Node(bid, KIND_BUF))
            levels[bid] = lvl
            edges.append(Edge(cur, bid, 0))
            cur = bid
        return cur

    for e in g.edges:
        if nmap[e.dst].kind == KIND_OUTPUT:
            edges.append(Edge(carry(e.src, depth), e.dst, e.port))
        else:
            edges.append(e)
    return LeveledGraph(tuple(nodes), tuple(edges), levels)


def place(g: LeveledGraph, spec: GridSpec) -> Placement:
    """Assign each OP/BUF node a distinct slot in its level.

    Deterministic: within a level, nodes take slots in lexicographic id
    order. Raises InfeasibleError when a level overflows or the graph is
    deeper than the grid.
    """
    require_valid(spec)
    depth = g.level_count()
    if depth > len(spec.levels):
        raise InfeasibleError(
            "graph needs %d levels, grid has %d" % (depth, len(spec.levels))
        )
    per_level: Dict[int, List[str]] = {}
    for nid, lvl in g.levels.items():
        per_level.setdefault(lvl, []).append(nid)
    assignments: Dict[str, Tuple[int, int]] = {}
    for lvl, ids in sorted(per_level.items()):
        capacity = spec.levels[lvl - 1].pe_count
        if len(ids) > capacity:
            raise InfeasibleError(
                "level %d needs %d slots but the grid provides %d (short %d)"
                % (lvl, len(ids), capacity, len(ids) - capacity)
            )
        for slot, nid in enumerate(sorted(ids)):
            assignments[nid] = (lvl, slot)
    return Placement(assignments)


def route(g: LeveledGraph, placement: Placement, spec: GridSpec) -> GridConfig:
    """Derive a complete GridConfig from a placement.

    Every placed node's input ports get selects on the channel above its
    level; BUF nodes mirror their single source to both ports. All
    unused selects and slots stay at the don't-care value (NONE / 0).
    """
    require_valid(spec)
    nmap = g.node_map()
    assign = placement.assignments
    n_levels = len(spec.levels)

    level_base = []
    base = 0
    for lvl in spec.levels:
        level_base.append(base)
        base += lvl.pe_count
    opcodes = [Opcode.NONE] * base

    inputs = sorted(n.id for n in g.nodes if n.kind == KIND_INPUT)
    if len(inputs) > spec.memory_input_count:
        raise InfeasibleError(
            "graph has %d inputs but the memory interface provides %d words"
            % (len(inputs), spec.memory_input_count)
        )
    mem_index = {nid: i for i, nid in enumerate(inputs)}

    mem_selects = [0] * (2 * spec.levels[0].pe_count)
    mid_selects = [
        [0] * (2 * spec.levels[i + 1].pe_count) for i in range(n_levels - 1)
    ]
    out_selects = [0]

    by_dst: Dict[str, Dict[int, str]] = {}
    for e in g.edges:
        by_dst.setdefault(e.dst, {})[e.port] = e.src

    def source_select(u: str, lvl: int) -> int:
        if nmap[u].kind == KIND_INPUT:
            if lvl != 1:
                raise MappingError(
                    "input '%s' feeds level %d; the graph is not leveled" % (u, lvl)
                )
            return mem_index[u]
        u_lvl, u_slot = assign[u]
        if u_lvl != lvl - 1:
            raise MappingError(
                "edge %s -> level %d crosses %d levels; the graph is not leveled"
                % (u, lvl, lvl - u_lvl)
            )
        return u_slot

    for nid, (lvl, slot) in assign.items():
        node = nmap[nid]
        opcodes[level_base[lvl - 1] + slot] = (
            Opcode.BUF if node.kind == KIND_BUF else OPCODE_BY_NAME[node.op]
        )
        ports = by_dst.get(nid, {})
        if node.kind == KIND_BUF:
            sel = source_select(ports[0], lvl)
            pair = (sel, sel)
        else:
            pair = (source_select(ports[0], lvl), source_select(ports[1], lvl))
        target = mem_selects if lvl == 1 else mid_selects[lvl - 2]
        target[2 * slot] = pair[0]
        target[2 * slot + 1] = pair[1]

    outputs = sorted(n.id for n in g.nodes if n.kind == KIND_OUTPUT)
    if len(outputs) > 1:
        raise InfeasibleError(
            "graph has %d outputs but the output interface provides 1 word"
            % len(outputs)
        )
    for oid in outputs:
        src = by_dst[oid][0]
        if nmap[src].kind == KIND_INPUT:
            raise MappingError(
                "output '%s' is fed directly by an input; the graph is not "
                "leveled to the grid depth" % oid
            )
        src_lvl, src_slot = assign[src]
        if src_lvl != n_levels:
            raise MappingError(
                "output '%s' is fed from level %d of a %d-level grid; "
                "extend the graph first" % (oid, src_lvl, n_levels)
            )
        out_selects[0] = src_slot

    return GridConfig(
        tuple(PeConfig(op) for op in opcodes),
        ChannelConfig(tuple(mem_selects)),
        tuple(ChannelConfig(tuple(s)) for s in mid_selects),
        ChannelConfig(tuple(out_selects)),
    )


def map_graph(g: TaskGraph, spec: GridSpec) -> GridConfig:
    """Levelize, fit to the grid depth, place and route. Deterministic."""
    leveled = extend_to_depth(levelize(g), len(spec.levels))
    return route(leveled, place(leveled, spec), spec)


def check_config(cfg: GridConfig, spec: GridSpec) -> None:
    """Raise ConfigError unless cfg matches the shapes derived from spec."""
    channels = derive_channels(spec)
    total_slots = sum(lvl.pe_count for lvl in spec.levels)
    if len(cfg.pe_configs) != total_slots:
        raise ConfigError(
            "expected %d PE configs, got %d" % (total_slots, len(cfg.pe_configs))
        )
    for i, pc in enumerate(cfg.pe_configs):
        if not isinstance(pc.opcode, Opcode):
            raise ConfigError("PE %d: opcode %r is not a valid opcode" % (i, pc.opcode))
    channel_cfgs = [cfg.input_distribution, *cfg.channel_configs, cfg.output_selection]
    if len(channel_cfgs) != len(channels):
        raise ConfigError(
            "expected %d channel configs, got %d" % (len(channels) - 2, len(cfg.channel_configs))
        )
    for ch, cc in zip(channels, channel_cfgs):
        if len(cc.selects) != ch.output_count:
            raise ConfigError(
                "channel at position %d: expected %d selects, got %d"
                % (ch.position, ch.output_count, len(cc.selects))
            )
        for k, sel in enumerate(cc.selects):
            if not isinstance(sel, int) or not 0 <= sel < ch.predecessor_count:
                raise ConfigError(
                    "channel at position %d: select %d = %r out of range [0, %d)"
                    % (ch.position, k, sel, ch.predecessor_count)
                )


# ------------------------------------------------------------------ JSON form

def config_to_doc(cfg: GridConfig) -> dict:
    return {
        "pe_configs": [pc.opcode.name.lower() for pc in cfg.pe_configs],
        "input_distribution": {"selects": list(cfg.input_distribution.selects)},
        "channel_configs": [
            {"selects": list(cc.selects)} for cc in cfg.channel_configs
        ],
        "output_selection": {"selects": list(cfg.output_selection.selects)},
    }


def config_to_json(cfg: GridConfig) -> str:
    return json.dumps(config_to_doc(cfg), indent=2) + "\n"


def parse_config(document) -> GridConfig:
    """Read a GridConfig from JSON. Shape against a grid is checked separately."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise ConfigError(
                "config document is not valid JSON (line %d column %d)"
                % (e.lineno, e.colno)
            ) from e
    if not isinstance(document, dict):
        raise ConfigError("config document must be a JSON object")

    def selects_of(entry, where: str) -> Tuple[int, ...]:
        if not isinstance(entry, dict) or not isinstance(entry.get("selects"), list):
            raise ConfigError("%s: expected an object with a 'selects' array" % where)
        sels = entry["selects"]
        for s in sels:
            if not isinstance(s, int) or isinstance(s, bool) or s < 0:
                raise ConfigError("%s: selects must be nonnegative integers" % where)
        return tuple(sels)

    raw_pes = document.get("pe_configs")
    if not isinstance(raw_pes, list):
        raise ConfigError("config: 'pe_configs' must be an array")
    pes = []
    for i, name in enumerate(raw_pes):
        if name not in OPCODE_BY_NAME:
            raise ConfigError("pe_configs[%d]: unknown opcode %r" % (i, name))
        pes.append(PeConfig(OPCODE_BY_NAME[name]))

    raw_mid = document.get("channel_configs")
    if not isinstance(raw_mid, list):
        raise ConfigError("config: 'channel_configs' must be an array")

    return GridConfig(
        tuple(pes),
        ChannelConfig(selects_of(document.get("input_distribution"), "input_distribution")),
        tuple(
            ChannelConfig(selects_of(entry, "channel_configs[%d]" % i))
            for i, entry in enumerate(raw_mid)
        ),
        ChannelConfig(selects_of(document.get("output_selection"), "output_selection")),
    )
