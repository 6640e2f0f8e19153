"""Structural model of a virtual CGRA grid.

A grid is a stack of processing-element (PE) levels. Data flows strictly
top to bottom: a memory-interface channel feeds the first level, one
virtual channel sits between each pair of adjacent levels, and an
output-interface channel collects the result below the last level.
Every channel is a full crossbar of registered inputs and outputs; its
parameters are derived from the grid shape, never stored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

MIN_BITWIDTH = 1
MAX_BITWIDTH = 64

# Channel placement within the grid.
KIND_MEMORY = "memory"
KIND_INTERMEDIATE = "intermediate"
KIND_OUTPUT = "output"


class GridError(Exception):
    """Invalid grid description or a structurally malformed grid document."""


@dataclass(frozen=True)
class LevelSpec:
    """One PE level. Both PE input ports share pe_input_bitwidth by construction."""

    pe_count: int
    pe_input_bitwidth: int
    pe_output_bitwidth: int


@dataclass(frozen=True)
class GridSpec:
    """Shape of a grid: memory interface plus an ordered stack of levels."""

    memory_input_count: int
    memory_input_bitwidth: int
    levels: Tuple[LevelSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))


@dataclass(frozen=True)
class ChannelSpec:
    """Derived parameters of one virtual channel.

    internal_bitwidth: max over predecessor output bitwidths
    valid_vector_width: one valid flag per predecessor
    select_word_width: bits per output multiplexer select
    """

    kind: str
    position: int  # 0 = memory interface, k = below level k, levels+... = output
    predecessor_count: int
    output_count: int
    internal_bitwidth: int
    valid_vector_width: int
    select_word_width: int


def channel_params(predecessor_bitwidths: Sequence[int]) -> Tuple[int, int, int]:
    """Return (internal_bitwidth, valid_vector_width, select_word_width).

    The select word keeps a 1-bit floor so a single-predecessor channel
    still carries an addressable select field.
    """
    if not predecessor_bitwidths:
        raise GridError("channel needs at least one predecessor")
    n = max(predecessor_bitwidths)
    m = len(predecessor_bitwidths)
    bw = max(1, math.ceil(math.log2(m))) if m > 1 else 1
    return n, m, bw


def validate_grid(spec: GridSpec) -> List[str]:
    """Check a GridSpec, returning a list of violations (empty means valid)."""
    problems: List[str] = []
    if not isinstance(spec.memory_input_count, int) or spec.memory_input_count < 1:
        problems.append("memory_input_count must be a positive integer")
    if (
        not isinstance(spec.memory_input_bitwidth, int)
        or not MIN_BITWIDTH <= spec.memory_input_bitwidth <= MAX_BITWIDTH
    ):
        problems.append(
            "memory_input_bitwidth must be in [%d, %d]" % (MIN_BITWIDTH, MAX_BITWIDTH)
        )
    if len(spec.levels) < 1:
        problems.append("grid needs at least one level")
    for i, lvl in enumerate(spec.levels, start=1):
        if not isinstance(lvl.pe_count, int) or lvl.pe_count < 1:
            problems.append("level %d: pe_count must be a positive integer" % i)
        for field in ("pe_input_bitwidth", "pe_output_bitwidth"):
            v = getattr(lvl, field)
            if not isinstance(v, int) or not MIN_BITWIDTH <= v <= MAX_BITWIDTH:
                problems.append(
                    "level %d: %s must be in [%d, %d]"
                    % (i, field, MIN_BITWIDTH, MAX_BITWIDTH)
                )
    return problems


def require_valid(spec: GridSpec) -> None:
    problems = validate_grid(spec)
    if problems:
        raise GridError("invalid grid: " + "; ".join(problems))


def derive_channels(spec: GridSpec) -> List[ChannelSpec]:
    """Derive every channel of the grid, top to bottom.

    Returns [memory interface, one channel per adjacent level pair,
    output interface]. The output interface exposes a single registered
    output word; its predecessors are the last level's PEs.
    """
    require_valid(spec)
    channels: List[ChannelSpec] = []

    widths = [spec.memory_input_bitwidth] * spec.memory_input_count
    n, m, bw = channel_params(widths)
    channels.append(
        ChannelSpec(KIND_MEMORY, 0, m, 2 * spec.levels[0].pe_count, n, m, bw)
    )

    for i in range(len(spec.levels) - 1):
        above, below = spec.levels[i], spec.levels[i + 1]
        n, m, bw = channel_params([above.pe_output_bitwidth] * above.pe_count)
        channels.append(
            ChannelSpec(KIND_INTERMEDIATE, i + 1, m, 2 * below.pe_count, n, m, bw)
        )

    last = spec.levels[-1]
    n, m, bw = channel_params([last.pe_output_bitwidth] * last.pe_count)
    channels.append(ChannelSpec(KIND_OUTPUT, len(spec.levels), m, 1, n, m, bw))
    return channels


def grid_stats(spec: GridSpec) -> dict:
    """Aggregate counts: PE slots, intermediate channels, configuration bits."""
    channels = derive_channels(spec)
    total_slots = sum(lvl.pe_count for lvl in spec.levels)
    config_bits = 4 * total_slots + sum(
        ch.output_count * ch.select_word_width for ch in channels
    )
    return {
        "total_pe_slots": total_slots,
        "intermediate_channel_count": len(channels) - 2,
        "total_config_bits": config_bits,
    }


def generate_rectangular(width: int, levels: int, bitwidth: int) -> GridSpec:
    """Uniform grid: `levels` identical rows of `width` PEs at one bitwidth.

    The memory interface gets one input word per first-level PE port
    (2 * width words).
    """
    if width < 1 or levels < 1:
        raise GridError("width and levels must be positive")
    if not MIN_BITWIDTH <= bitwidth <= MAX_BITWIDTH:
        raise GridError(
            "bitwidth must be in [%d, %d]" % (MIN_BITWIDTH, MAX_BITWIDTH)
        )
    row = LevelSpec(width, bitwidth, bitwidth)
    return GridSpec(2 * width, bitwidth, tuple([row] * levels))


# ------------------------------------------------------------------ JSON forms

def grid_to_doc(spec: GridSpec) -> dict:
    return {
        "memory_input_count": spec.memory_input_count,
        "memory_input_bitwidth": spec.memory_input_bitwidth,
        "levels": [
            {
                "pe_count": lvl.pe_count,
                "pe_input_bitwidth": lvl.pe_input_bitwidth,
                "pe_output_bitwidth": lvl.pe_output_bitwidth,
            }
            for lvl in spec.levels
        ],
    }


def grid_to_json(spec: GridSpec) -> str:
    return json.dumps(grid_to_doc(spec), indent=2) + "\n"


def canonical_grid_bytes(spec: GridSpec) -> bytes:
    """Compact, key-order-fixed encoding used for bitstream digests."""
    return json.dumps(grid_to_doc(spec), separators=(",", ":")).encode("utf-8")


def _require_key(doc: dict, key: str, where: str):
    if key not in doc:
        raise GridError("%s: missing field '%s'" % (where, key))
    return doc[key]


def _require_int(value, where: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise GridError("%s: expected an integer, got %r" % (where, value))
    return value


def parse_grid(document) -> GridSpec:
    """Read a GridSpec from a JSON string/bytes or an already-decoded dict."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise GridError(
                "grid document is not valid JSON (line %d column %d)"
                % (e.lineno, e.colno)
            ) from e
    if not isinstance(document, dict):
        raise GridError("grid document must be a JSON object")
    count = _require_int(
        _require_key(document, "memory_input_count", "grid"), "memory_input_count"
    )
    width = _require_int(
        _require_key(document, "memory_input_bitwidth", "grid"),
        "memory_input_bitwidth",
    )
    raw_levels = _require_key(document, "levels", "grid")
    if not isinstance(raw_levels, list):
        raise GridError("grid: 'levels' must be an array")
    levels = []
    for i, entry in enumerate(raw_levels, start=1):
        if not isinstance(entry, dict):
            raise GridError("levels[%d]: expected an object" % i)
        where = "levels[%d]" % i
        levels.append(
            LevelSpec(
                _require_int(_require_key(entry, "pe_count", where), where + ".pe_count"),
                _require_int(
                    _require_key(entry, "pe_input_bitwidth", where),
                    where + ".pe_input_bitwidth",
                ),
                _require_int(
                    _require_key(entry, "pe_output_bitwidth", where),
                    where + ".pe_output_bitwidth",
                ),
            )
        )
    spec = GridSpec(count, width, tuple(levels))
    require_valid(spec)
    return spec


# -------------------------------------------------------------------- netlist

def channel_name(ch: ChannelSpec) -> str:
    if ch.kind == KIND_MEMORY:
        return "vc_mem"
    if ch.kind == KIND_OUTPUT:
        return "vc_out"
    return "vc_%d" % ch.position


def pe_name(level: int, slot: int) -> str:
    return "pe_l%d_s%d" % (level, slot)


def export_netlist(spec: GridSpec) -> str:
    """Flatten the grid into a structural JSON netlist.

    Every PE instance, every channel with its derived parameters, and
    every port-to-port connection appears explicitly. Output is
    deterministic: the same spec always yields identical bytes.
    """
    channels = derive_channels(spec)
    pes = []
    for li, lvl in enumerate(spec.levels, start=1):
        for s in range(lvl.pe_count):
            pes.append(
                {
                    "name": pe_name(li, s),
                    "level": li,
                    "slot": s,
                    "input_bitwidth": lvl.pe_input_bitwidth,
                    "output_bitwidth": lvl.pe_output_bitwidth,
                }
            )

    channel_docs = []
    for ch in channels:
        channel_docs.append(
            {
                "name": channel_name(ch),
                "kind": ch.kind,
                "position": ch.position,
                "predecessor_count": ch.predecessor_count,
                "output_count": ch.output_count,
                "internal_bitwidth": ch.internal_bitwidth,
                "valid_vector_width": ch.valid_vector_width,
                "select_word_width": ch.select_word_width,
            }
        )

    connections = []
    mem = channels[0]
    for i in range(mem.predecessor_count):
        connections.append({"from": "ext.in[%d]" % i, "to": "vc_mem.in[%d]" % i})
    for k in range(mem.output_count):
        connections.append(
            {
                "from": "vc_mem.out[%d]" % k,
                "to": "%s.in[%d]" % (pe_name(1, k // 2), k % 2),
            }
        )
    for li in range(1, len(spec.levels) + 1):
        below = channels[li]
        name = channel_name(below)
        for s in range(spec.levels[li - 1].pe_count):
            connections.append(
                {"from": "%s.out" % pe_name(li, s), "to": "%s.in[%d]" % (name, s)}
            )
        if below.kind == KIND_OUTPUT:
            connections.append({"from": "%s.out[0]" % name, "to": "ext.out[0]"})
        else:
            for k in range(below.output_count):
                connections.append(
                    {
                        "from": "%s.out[%d]" % (name, k),
                        "to": "%s.in[%d]" % (pe_name(li + 1, k // 2), k % 2),
                    }
                )

    doc = {"pes": pes, "channels": channel_docs, "connections": connections}
    return json.dumps(doc, indent=2) + "\n"
