"""Command-line interface.

Exit codes: 0 success, 1 usage, 2 validation/infeasibility, 3 file I/O.
Result data goes to the named output files or stdout; progress and
timing lines go to stderr so golden outputs stay stable.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import bitstream as bs
from . import grid as gridmod
from . import mapping, pgm, simulator, sobel
from .taskgraph import GraphError, parse_graph

_DOMAIN_ERRORS = (
    gridmod.GridError,
    GraphError,
    mapping.MappingError,
    mapping.ConfigError,
    bs.BitstreamError,
    simulator.SimulationError,
    pgm.PgmError,
    ValueError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def _read_bytes(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def _write_bytes(path: str, data: bytes) -> None:
    with open(path, "wb") as f:
        f.write(data)


def _load_grid(path: str) -> gridmod.GridSpec:
    return gridmod.parse_grid(_read_text(path))


# ---------------------------------------------------------------- subcommands

def _cmd_grid_gen(args) -> int:
    spec = gridmod.generate_rectangular(args.width, args.levels, args.bits)
    if args.memory_inputs is not None or args.memory_bits is not None:
        spec = gridmod.GridSpec(
            args.memory_inputs if args.memory_inputs is not None else spec.memory_input_count,
            args.memory_bits if args.memory_bits is not None else spec.memory_input_bitwidth,
            spec.levels,
        )
        gridmod.require_valid(spec)
    _write_text(args.output, gridmod.grid_to_json(spec))
    return 0


def _cmd_grid_stats(args) -> int:
    stats = gridmod.grid_stats(_load_grid(args.grid))
    print("%d PE slots" % stats["total_pe_slots"])
    print("%d intermediate channels" % stats["intermediate_channel_count"])
    print("%d config bits" % stats["total_config_bits"])
    return 0


def _cmd_grid_netlist(args) -> int:
    _write_text(args.output, gridmod.export_netlist(_load_grid(args.grid)))
    return 0


def _cmd_compile(args) -> int:
    spec = _load_grid(args.grid)
    graph = parse_graph(_read_text(args.graph))
    started = time.perf_counter()
    config = mapping.map_graph(graph, spec)
    elapsed = time.perf_counter() - started
    print("mapping took %.3f ms" % (elapsed * 1e3), file=sys.stderr)
    if args.config:
        _write_text(args.config, mapping.config_to_json(config))
    if args.bitstream:
        _write_bytes(
            args.bitstream, bs.bitstream_to_bytes(bs.encode(config, spec))
        )
    return 0


def _cmd_bitstream_encode(args) -> int:
    spec = _load_grid(args.grid)
    config = mapping.parse_config(_read_text(args.config))
    mapping.check_config(config, spec)
    _write_bytes(args.output, bs.bitstream_to_bytes(bs.encode(config, spec)))
    return 0


def _cmd_bitstream_decode(args) -> int:
    spec = _load_grid(args.grid)
    stream = bs.parse_bitstream(_read_bytes(args.bitstream))
    config = bs.decode(stream, spec)
    _write_text(args.output, mapping.config_to_json(config))
    return 0


def _parse_frames(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SimFramesError(
            "frames file is not valid JSON (line %d column %d)" % (e.lineno, e.colno)
        ) from e
    if not isinstance(doc, list) or not all(isinstance(f, list) for f in doc):
        raise SimFramesError("frames file must be a JSON array of arrays")
    return doc


class SimFramesError(ValueError):
    pass


def _cmd_sim(args) -> int:
    spec = _load_grid(args.grid)
    config = bs.decode(bs.parse_bitstream(_read_bytes(args.bitstream)), spec)
    frames = _parse_frames(_read_text(args.frames))
    started = time.perf_counter()
    result = simulator.run(spec, config, frames, record_trace=bool(args.trace))
    elapsed = time.perf_counter() - started
    _write_text(args.output, json.dumps(result.outputs) + "\n")
    if args.trace:
        _write_text(args.trace, simulator.rows_to_csv(spec, result.trace))
    print(
        "simulated %d frames in %d cycles (%.3f ms), div_by_zero=%s"
        % (len(frames), result.cycles, elapsed * 1e3, str(result.div_by_zero).lower()),
        file=sys.stderr,
    )
    return 0


def _named_kernel(name: str):
    if name == "gx":
        return sobel.SOBEL_GX
    if name == "gy":
        return sobel.SOBEL_GY
    doc = json.loads(_read_text(name))
    if not isinstance(doc, list):
        raise ValueError("kernel file must be a JSON array of 9 integers")
    return doc


def _cmd_sobel(args) -> int:
    img = pgm.load_pgm(_read_bytes(args.image))
    spec = gridmod.generate_rectangular(args.width, args.levels, args.bits)
    started = time.perf_counter()
    if args.kernel == "both":
        gx = sobel.run_sobel_on_grid(img, sobel.SOBEL_GX, spec)
        gy = sobel.run_sobel_on_grid(img, sobel.SOBEL_GY, spec)
        combined = bytes(
            min(255, a + b) for a, b in zip(gx.pixels, gy.pixels)
        )
        out = pgm.Image(img.width, img.height, combined)
    else:
        kernel = _named_kernel(args.kernel)
        out = sobel.run_sobel_on_grid(img, kernel, spec)
    elapsed = time.perf_counter() - started
    print("grid run took %.3f ms" % (elapsed * 1e3), file=sys.stderr)
    if args.compare_reference:
        if args.kernel == "both":
            rx = sobel.sobel_reference(img, sobel.SOBEL_GX)
            ry = sobel.sobel_reference(img, sobel.SOBEL_GY)
            ref = bytes(min(255, a + b) for a, b in zip(rx.pixels, ry.pixels))
        else:
            ref = sobel.sobel_reference(img, _named_kernel(args.kernel)).pixels
        if ref != out.pixels:
            print("grid result differs from the reference", file=sys.stderr)
            return 2
        print("grid result matches the reference", file=sys.stderr)
    _write_bytes(args.output, pgm.save_pgm(out))
    return 0


# -------------------------------------------------------------------- parser

def build_parser() -> _Parser:
    parser = _Parser(prog="vcgra", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_grid = sub.add_parser("grid", help="grid generation and inspection")
    grid_sub = p_grid.add_subparsers(dest="grid_command", required=True)

    p = grid_sub.add_parser("gen", help="generate a rectangular grid spec")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--memory-inputs", type=int, default=None)
    p.add_argument("--memory-bits", type=int, default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_grid_gen)

    p = grid_sub.add_parser("stats", help="print grid statistics")
    p.add_argument("grid")
    p.set_defaults(func=_cmd_grid_stats)

    p = grid_sub.add_parser("netlist", help="export the structural netlist")
    p.add_argument("grid")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_grid_netlist)

    p = sub.add_parser("compile", help="map a task graph onto a grid")
    p.add_argument("--graph", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--bitstream", default=None)
    p.set_defaults(func=_cmd_compile)

    p_bs = sub.add_parser("bitstream", help="configuration bitstream codec")
    bs_sub = p_bs.add_subparsers(dest="bitstream_command", required=True)

    p = bs_sub.add_parser("encode", help="pack a config JSON into a bitstream")
    p.add_argument("--grid", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_bitstream_encode)

    p = bs_sub.add_parser("decode", help="unpack a bitstream into config JSON")
    p.add_argument("--grid", required=True)
    p.add_argument("--bitstream", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_bitstream_decode)

    p = sub.add_parser("sim", help="simulate frames through a configured grid")
    p.add_argument("--grid", required=True)
    p.add_argument("--bitstream", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--trace", default=None, help="write a per-cycle CSV trace")
    p.set_defaults(func=_cmd_sim)

    p = sub.add_parser("sobel", help="run edge detection on a PGM image")
    p.add_argument("--image", required=True)
    p.add_argument("--kernel", default="gx", help="gx, gy, both, or a JSON file")
    p.add_argument("--width", type=int, default=9)
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--bits", type=int, default=16)
    p.add_argument("--compare-reference", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_sobel)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print("usage error: %s" % e, file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except _DOMAIN_ERRORS as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    except OSError as e:
        print("i/o error: %s" % e, file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main(sys.argv[1:]))
