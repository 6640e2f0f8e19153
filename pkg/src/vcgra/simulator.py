"""Deterministic cycle-level grid simulator.

All registers update simultaneously each cycle: every channel latches the
previous cycle's PE outputs (or the external input words gated by the
start flag) and routes them through its configured selects into its
output registers, while every PE acts on the previous cycle's channel
output registers. A PE runs a three-state handshake per datum:

    AWAIT_DATA    latch inputs, set an enable per port when its routed
                  valid is high; both enables -> PROCESS_DATA
    PROCESS_DATA  compute through the ALU into the output buffer
    VALID_DATA    assert valid for exactly one cycle, clear enables

so a PE accepts one datum every 3 cycles, and a frame entering an
L-level grid reaches the output-interface register after
1 + 3L + (L-1) + 1 cycles. NONE slots never latch and never assert.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import List, Optional, Sequence, Tuple

from .grid import GridSpec, channel_name, derive_channels, require_valid
from .mapping import GridConfig, Opcode, check_config


class SimulationError(Exception):
    """Frame mismatch, or a run whose expected outputs never appear."""


class PeFsm(IntEnum):
    AWAIT_DATA = 0
    PROCESS_DATA = 1
    VALID_DATA = 2


@dataclass(frozen=True)
class PeState:
    fsm: PeFsm
    in_buf: Tuple[int, int]
    enabled: Tuple[bool, bool]
    out_buf: int
    valid: bool


@dataclass(frozen=True)
class ChannelState:
    data_regs: Tuple[int, ...]
    valid_regs: Tuple[bool, ...]
    out_regs: Tuple[Tuple[int, bool], ...]


@dataclass(frozen=True)
class RunResult:
    outputs: List[int]
    cycles: int
    div_by_zero: bool
    trace: Optional[List[list]] = None


def latency(levels: int) -> int:
    """Cycles from frame presentation to the first valid output word."""
    return 1 + 3 * levels + (levels - 1) + 1


def _truncate(value: int, bits: int) -> int:
    m = value & ((1 << bits) - 1)
    return m - (1 << bits) if m >= 1 << (bits - 1) else m


def pe_alu(opcode: Opcode, a: int, b: int, out_bits: int) -> int:
    """Two's-complement ALU. Division truncates toward zero; 0 divisor
    yields 0 (the caller records the sticky flag). Comparisons are signed."""
    if opcode == Opcode.ADD:
        r = a + b
    elif opcode == Opcode.SUB:
        r = a - b
    elif opcode == Opcode.MUL:
        r = a * b
    elif opcode == Opcode.DIV:
        if b == 0:
            r = 0
        else:
            q = abs(a) // abs(b)
            r = -q if (a < 0) != (b < 0) else q
    elif opcode == Opcode.GT:
        r = 1 if a > b else 0
    elif opcode == Opcode.EQ:
        r = 1 if a == b else 0
    elif opcode == Opcode.BUF:
        r = a
    else:
        raise ValueError("opcode %r does not compute" % (opcode,))
    return _truncate(r, out_bits)


class SimGrid:
    """Cycle-level state of one configured grid."""

    def __init__(self, spec: GridSpec, config: GridConfig, record_trace: bool = False):
        require_valid(spec)
        check_config(config, spec)
        self.spec = spec
        self.config = config
        self.cycle = 0
        self.start = False
        self.div_by_zero = False

        channels = derive_channels(spec)
        self._channels = channels

        # Global PE slot numbering, level-major.
        bases = []
        base = 0
        for lvl in spec.levels:
            bases.append(base)
            base += lvl.pe_count
        n_slots = base

        self._fsm = [0] * n_slots
        self._in0 = [0] * n_slots
        self._in1 = [0] * n_slots
        self._en0 = [False] * n_slots
        self._en1 = [False] * n_slots
        self._out = [0] * n_slots
        self._valid = [False] * n_slots
        self._opcode = [int(pc.opcode) for pc in config.pe_configs]

        # Channel k feeds level k+1 (the last one feeds the outside world).
        all_selects = [
            config.input_distribution.selects,
            *[cc.selects for cc in config.channel_configs],
            config.output_selection.selects,
        ]
        self._ch_sel: List[Tuple[int, ...]] = [tuple(s) for s in all_selects]
        self._ch_preds: List[Optional[List[int]]] = []
        for i, ch in enumerate(channels):
            if i == 0:
                self._ch_preds.append(None)  # external input words
            else:
                lvl_base = bases[i - 1]
                self._ch_preds.append(
                    [lvl_base + s for s in range(spec.levels[i - 1].pe_count)]
                )
        self._ch_data: List[List[int]] = [[0] * ch.predecessor_count for ch in channels]
        self._ch_dvalid: List[List[bool]] = [
            [False] * ch.predecessor_count for ch in channels
        ]
        self._ch_out: List[List[int]] = [[0] * ch.output_count for ch in channels]
        self._ch_ok: List[List[bool]] = [[False] * ch.output_count for ch in channels]

        self._ext = [0] * spec.memory_input_count

        # Active PEs: (slot, opcode, channel above, out reg indices, widths).
        self._active = []
        for li, lvl in enumerate(spec.levels):
            ch_above = channels[li]
            for s in range(lvl.pe_count):
                slot = bases[li] + s
                op = self._opcode[slot]
                if op == int(Opcode.NONE):
                    continue
                narrow = lvl.pe_input_bitwidth < ch_above.internal_bitwidth
                self._active.append(
                    (
                        slot,
                        op,
                        li,
                        2 * s,
                        2 * s + 1,
                        lvl.pe_input_bitwidth if narrow else 0,
                        lvl.pe_output_bitwidth,
                    )
                )

        self._record_trace = record_trace
        self._trace_rows: List[list] = []

    # ------------------------------------------------------------- stepping

    def set_inputs(self, words: Sequence[int]) -> None:
        """Present one frame at the memory interface.

        Words may use either the signed or the unsigned bit pattern of
        the memory input bitwidth; they are stored sign-interpreted.
        """
        bits = self.spec.memory_input_bitwidth
        if len(words) != self.spec.memory_input_count:
            raise SimulationError(
                "frame has %d words, memory interface has %d"
                % (len(words), self.spec.memory_input_count)
            )
        lo, hi = -(1 << bits - 1), (1 << bits) - 1
        ext = []
        for w in words:
            if not isinstance(w, int) or isinstance(w, bool) or not lo <= w <= hi:
                raise SimulationError(
                    "frame word %r does not fit in %d bits" % (w, bits)
                )
            ext.append(_truncate(w, bits))
        self._ext = ext

    def step(self) -> None:
        """Advance one clock edge (simultaneous register update)."""
        channels = self._channels
        pe_out = self._out
        pe_valid = self._valid

        # Next channel state from the current PE outputs / external words.
        new_data: List[List[int]] = []
        new_dvalid: List[List[bool]] = []
        new_out: List[List[int]] = []
        new_ok: List[List[bool]] = []
        for i in range(len(channels)):
            preds = self._ch_preds[i]
            if preds is None:
                data = list(self._ext)
                dvalid = [self.start] * len(data)
            else:
                data = [pe_out[p] for p in preds]
                dvalid = [pe_valid[p] for p in preds]
            sel = self._ch_sel[i]
            new_data.append(data)
            new_dvalid.append(dvalid)
            new_out.append([data[s] for s in sel])
            new_ok.append([dvalid[s] for s in sel])

        # PEs act on the channel output registers of the previous cycle.
        fsm = self._fsm
        in0, in1 = self._in0, self._in1
        en0, en1 = self._en0, self._en1
        ch_out, ch_ok = self._ch_out, self._ch_ok
        for slot, op, ch, r0, r1, in_bits, out_bits in self._active:
            state = fsm[slot]
            if state == 0:  # AWAIT_DATA
                pe_valid[slot] = False
                if not en0[slot]:
                    v = ch_out[ch][r0]
                    in0[slot] = _truncate(v, in_bits) if in_bits else v
                    en0[slot] = ch_ok[ch][r0]
                if not en1[slot]:
                    v = ch_out[ch][r1]
                    in1[slot] = _truncate(v, in_bits) if in_bits else v
                    en1[slot] = ch_ok[ch][r1]
                if en0[slot] and en1[slot]:
                    fsm[slot] = 1
            elif state == 1:  # PROCESS_DATA
                a, b = in0[slot], in1[slot]
                if op == 4 and b == 0:
                    self.div_by_zero = True
                pe_out[slot] = pe_alu(Opcode(op), a, b, out_bits)
                fsm[slot] = 2
            else:  # VALID_DATA
                pe_valid[slot] = True
                en0[slot] = False
                en1[slot] = False
                fsm[slot] = 0

        self._ch_data = new_data
        self._ch_dvalid = new_dvalid
        self._ch_out = new_out
        self._ch_ok = new_ok
        self.cycle += 1
        if self._record_trace:
            self._trace_rows.append(self._snapshot_row())

    def output_reg(self) -> Tuple[int, bool]:
        """Value and valid of the output-interface register."""
        return self._ch_out[-1][0], self._ch_ok[-1][0]

    # ---------------------------------------------------------- observation

    def pe_states(self) -> List[PeState]:
        return [
            PeState(
                PeFsm(self._fsm[i]),
                (self._in0[i], self._in1[i]),
                (self._en0[i], self._en1[i]),
                self._out[i],
                self._valid[i],
            )
            for i in range(len(self._fsm))
        ]

    def channel_states(self) -> List[ChannelState]:
        return [
            ChannelState(
                tuple(self._ch_data[i]),
                tuple(self._ch_dvalid[i]),
                tuple(zip(self._ch_out[i], self._ch_ok[i])),
            )
            for i in range(len(self._channels))
        ]

    def trace_columns(self) -> List[str]:
        return trace_columns(self.spec)

    def _snapshot_row(self) -> list:
        row = [self.cycle]
        for i in range(len(self._fsm)):
            row += [PeFsm(self._fsm[i]).name.lower(), int(self._valid[i]), self._out[i]]
        for i in range(len(self._channels)):
            vals, oks = self._ch_out[i], self._ch_ok[i]
            for k in range(len(vals)):
                row += [vals[k], int(oks[k])]
        return row

    def trace(self) -> List[list]:
        """One recorded row per stepped cycle (when tracing is enabled)."""
        return self._trace_rows


def trace_columns(spec: GridSpec) -> List[str]:
    """Fixed column order of the CSV trace for a grid shape."""
    cols = ["cycle"]
    for li, lvl in enumerate(spec.levels, start=1):
        for s in range(lvl.pe_count):
            stem = "pe_l%d_s%d" % (li, s)
            cols += [stem + "_fsm", stem + "_valid", stem + "_out"]
    for ch in derive_channels(spec):
        name = channel_name(ch)
        for k in range(ch.output_count):
            cols += ["%s_out%d_value" % (name, k), "%s_out%d_valid" % (name, k)]
    return cols


def rows_to_csv(spec: GridSpec, rows: List[list]) -> str:
    lines = [",".join(trace_columns(spec))]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def trace_to_csv(grid: SimGrid) -> str:
    return rows_to_csv(grid.spec, grid.trace())


def run(
    spec: GridSpec,
    config: GridConfig,
    frames: Sequence[Sequence[int]],
    record_trace: bool = False,
) -> RunResult:
    """Stream frames through a configured grid at the steady-state rate.

    One frame is presented every 3 cycles with the start flag asserted
    for exactly one cycle; each output word is collected when the
    output-interface register pulses valid. Returns as many outputs as
    frames, the final cycle count, and the sticky division flag.
    """
    grid = SimGrid(spec, config, record_trace=record_trace)
    total = len(frames)
    if total == 0:
        return RunResult([], 0, False, grid.trace() if record_trace else None)

    outputs: List[int] = []
    next_frame = 0
    deadline = latency(len(spec.levels)) + 3 * total + 8
    while len(outputs) < total:
        if grid.cycle >= deadline:
            raise SimulationError(
                "no output after %d cycles; the configuration does not "
                "produce %d words" % (grid.cycle, total)
            )
        if next_frame < total and grid.cycle == 3 * next_frame:
            grid.set_inputs(frames[next_frame])
            grid.start = True
            next_frame += 1
        else:
            grid.start = False
        grid.step()
        value, ok = grid.output_reg()
        if ok:
            outputs.append(value)

    return RunResult(
        outputs,
        grid.cycle,
        grid.div_by_zero,
        grid.trace() if record_trace else None,
    )
