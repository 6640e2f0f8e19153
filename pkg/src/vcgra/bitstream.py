"""Configuration bitstream codec.

A bitstream file is a 16-byte header followed by the packed configuration
payload. Header: magic "PIXV", u16 format version, u16 reserved (zero),
u64 FNV-1a digest of the canonical grid JSON, all little-endian. The
payload packs, LSB-first: the memory-interface selects, then per level
(top to bottom) the 4-bit PE opcodes left to right followed by the
selects of the channel below that level. Total payload bit count equals
the grid's total_config_bits, zero-padded up to a byte boundary.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import List

from .grid import GridSpec, canonical_grid_bytes, derive_channels, grid_stats
from .mapping import (
    ChannelConfig,
    GridConfig,
    Opcode,
    PeConfig,
    check_config,
)

MAGIC = b"PIXV"
FORMAT_VERSION = 1
HEADER_LEN = 16

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


class BitstreamError(Exception):
    """Base class for bitstream encode/decode failures."""


class FramingError(BitstreamError):
    """Bad magic, header, version or payload length."""


class WrongGridError(BitstreamError):
    """The bitstream was produced for a different grid."""


class InvalidOpcodeError(BitstreamError):
    """An opcode field decodes to a value outside the opcode table."""


class InvalidSelectError(BitstreamError):
    """A select field addresses a predecessor the channel does not have."""


@dataclass(frozen=True)
class VirtualBitstream:
    format_version: int
    grid_digest: int
    payload: bytes


def grid_digest(spec: GridSpec) -> int:
    """64-bit FNV-1a over the canonical grid JSON."""
    h = _FNV_OFFSET
    for byte in canonical_grid_bytes(spec):
        h = ((h ^ byte) * _FNV_PRIME) & _U64
    return h


class _BitWriter:
    def __init__(self):
        self.bits: List[int] = []

    def put(self, value: int, width: int) -> None:
        for i in range(width):
            self.bits.append((value >> i) & 1)

    def to_bytes(self) -> bytes:
        out = bytearray((len(self.bits) + 7) // 8)
        for i, b in enumerate(self.bits):
            out[i // 8] |= b << (i % 8)
        return bytes(out)


class _BitReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, width: int) -> int:
        v = 0
        for i in range(width):
            byte = self.data[self.pos // 8]
            v |= ((byte >> (self.pos % 8)) & 1) << i
            self.pos += 1
        return v


def encode(cfg: GridConfig, spec: GridSpec) -> VirtualBitstream:
    """Pack a GridConfig into a bitstream for the given grid."""
    check_config(cfg, spec)
    channels = derive_channels(spec)
    writer = _BitWriter()

    mem = channels[0]
    for sel in cfg.input_distribution.selects:
        writer.put(sel, mem.select_word_width)

    base = 0
    below = [*cfg.channel_configs, cfg.output_selection]
    for i, lvl in enumerate(spec.levels):
        for s in range(lvl.pe_count):
            writer.put(int(cfg.pe_configs[base + s].opcode), 4)
        base += lvl.pe_count
        ch = channels[i + 1]
        for sel in below[i].selects:
            writer.put(sel, ch.select_word_width)

    expected = grid_stats(spec)["total_config_bits"]
    assert len(writer.bits) == expected, "payload bit count drifted from the stats formula"
    return VirtualBitstream(FORMAT_VERSION, grid_digest(spec), writer.to_bytes())


def decode(bs: VirtualBitstream, spec: GridSpec) -> GridConfig:
    """Unpack a bitstream against the grid it claims to configure."""
    if bs.format_version != FORMAT_VERSION:
        raise FramingError("unsupported format version %d" % bs.format_version)
    if bs.grid_digest != grid_digest(spec):
        raise WrongGridError("bitstream digest does not match this grid")
    total_bits = grid_stats(spec)["total_config_bits"]
    if len(bs.payload) != (total_bits + 7) // 8:
        raise FramingError(
            "payload is %d bytes, grid needs %d"
            % (len(bs.payload), (total_bits + 7) // 8)
        )
    channels = derive_channels(spec)
    reader = _BitReader(bs.payload)

    def read_selects(ch) -> ChannelConfig:
        sels = []
        for k in range(ch.output_count):
            sel = reader.take(ch.select_word_width)
            if sel >= ch.predecessor_count:
                raise InvalidSelectError(
                    "channel at position %d: select %d = %d exceeds %d predecessors"
                    % (ch.position, k, sel, ch.predecessor_count)
                )
            sels.append(sel)
        return ChannelConfig(tuple(sels))

    input_distribution = read_selects(channels[0])
    pes: List[PeConfig] = []
    mids: List[ChannelConfig] = []
    out_selection = None
    for i, lvl in enumerate(spec.levels):
        for s in range(lvl.pe_count):
            raw = reader.take(4)
            if raw > int(Opcode.BUF):
                raise InvalidOpcodeError(
                    "PE at level %d slot %d: opcode field %d has no meaning"
                    % (i + 1, s, raw)
                )
            pes.append(PeConfig(Opcode(raw)))
        cc = read_selects(channels[i + 1])
        if i == len(spec.levels) - 1:
            out_selection = cc
        else:
            mids.append(cc)

    return GridConfig(tuple(pes), input_distribution, tuple(mids), out_selection)


def bitstream_to_bytes(bs: VirtualBitstream) -> bytes:
    header = MAGIC + struct.pack("<HHQ", bs.format_version, 0, bs.grid_digest)
    return header + bs.payload


def parse_bitstream(data: bytes) -> VirtualBitstream:
    """Split a bitstream file into header fields and payload."""
    if len(data) < HEADER_LEN:
        raise FramingError("file is %d bytes, header alone needs %d" % (len(data), HEADER_LEN))
    if data[:4] != MAGIC:
        raise FramingError("bad magic %r" % data[:4])
    version, _reserved, digest = struct.unpack("<HHQ", data[4:HEADER_LEN])
    if version != FORMAT_VERSION:
        raise FramingError("unsupported format version %d" % version)
    return VirtualBitstream(version, digest, data[HEADER_LEN:])
