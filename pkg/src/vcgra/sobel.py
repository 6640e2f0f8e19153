"""Sobel edge detection, both as a reference loop and on the grid.

The demo streams one frame per interior pixel: 9 kernel coefficients and
the 9 neighborhood pixels enter through the memory interface, a level of
multipliers forms the weighted pixels, and an adder tree accumulates
them. The ninth product rides BUF stages down to the final addition.
Border pixels are left at 0 and the output is clamp(|sum|, 0, 255),
matching sobel_reference exactly.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

from .grid import GridSpec, generate_rectangular
from .mapping import map_graph
from .pgm import Image
from .simulator import run
from .taskgraph import TaskGraph, parse_graph

Kernel3x3 = Tuple[int, int, int, int, int, int, int, int, int]

SOBEL_GX: Kernel3x3 = (-1, 0, 1, -2, 0, 2, -1, 0, 1)
SOBEL_GY: Kernel3x3 = (-1, -2, -1, 0, 0, 0, 1, 2, 1)

# Neighborhood convention: coefficient k (row-major, offsets j, i in -1..1)
# multiplies image[pos_r - j][pos_c - i].
_OFFSETS = [(k // 3 - 1, k % 3 - 1) for k in range(9)]


def build_sobel_graph() -> TaskGraph:
    """3x3 weighted-sum task graph: 9 multipliers feeding an adder tree.

    Inputs c0..c8 carry the kernel coefficients and p0..p8 the
    neighborhood pixels, so the canonical (id-sorted) memory order is
    all coefficients, then all pixels.
    """
    nodes = []
    edges = []
    for k in range(9):
        nodes.append({"id": "c%d" % k, "kind": "input"})
        nodes.append({"id": "p%d" % k, "kind": "input"})
    for k in range(9):
        nodes.append({"id": "m%d" % k, "kind": "op", "op": "mul"})
        edges.append({"src": "p%d" % k, "dst": "m%d" % k, "port": 0})
        edges.append({"src": "c%d" % k, "dst": "m%d" % k, "port": 1})

    def add(name: str, a: str, b: str):
        nodes.append({"id": name, "kind": "op", "op": "add"})
        edges.append({"src": a, "dst": name, "port": 0})
        edges.append({"src": b, "dst": name, "port": 1})

    add("s0", "m0", "m1")
    add("s1", "m2", "m3")
    add("s2", "m4", "m5")
    add("s3", "m6", "m7")
    add("t0", "s0", "s1")
    add("t1", "s2", "s3")
    add("u0", "t0", "t1")
    add("v0", "u0", "m8")  # m8 arrives through BUF stages
    nodes.append({"id": "out", "kind": "output"})
    edges.append({"src": "v0", "dst": "out", "port": 0})
    return parse_graph({"nodes": nodes, "edges": edges})


def _check_image(img: Image) -> None:
    if img.width < 3 or img.height < 3:
        raise ValueError("image must be at least 3x3 for a 3x3 kernel")


def _check_kernel(kernel: Sequence[int]) -> Kernel3x3:
    if len(kernel) != 9 or not all(
        isinstance(c, int) and not isinstance(c, bool) for c in kernel
    ):
        raise ValueError("kernel must be 9 integers")
    return tuple(kernel)


def sobel_reference(img: Image, kernel: Sequence[int]) -> Image:
    """Direct nested-loop weighted sum over every interior pixel."""
    _check_image(img)
    kernel = _check_kernel(kernel)
    w, h = img.width, img.height
    out = bytearray(w * h)
    for r in range(1, h - 1):
        for c in range(1, w - 1):
            s = 0
            for k in range(9):
                j, i = _OFFSETS[k]
                s += kernel[k] * img.pixels[(r - j) * w + (c - i)]
            out[r * w + c] = min(abs(s), 255)
    return Image(w, h, bytes(out))


def run_sobel_on_grid(
    img: Image, kernel: Sequence[int], spec: Optional[GridSpec] = None
) -> Image:
    """Map the weighted-sum graph once, then stream every interior pixel.

    The default grid is 9 PEs wide, 5 levels deep, 16 bits wide, which
    the 18 input words and the 5-level graph fill exactly. Coefficients
    must keep every intermediate sum inside the PE output bitwidth or
    the grid's wrapped arithmetic will diverge from the reference.
    """
    _check_image(img)
    kernel = _check_kernel(kernel)
    if spec is None:
        spec = generate_rectangular(9, 5, 16)
    if spec.memory_input_count < 18:
        raise ValueError(
            "grid exposes %d memory inputs, the kernel needs 18"
            % spec.memory_input_count
        )
    half = 1 << (spec.memory_input_bitwidth - 1)
    if any(not -half <= c < half for c in kernel):
        raise ValueError(
            "kernel coefficients must fit %d-bit signed words"
            % spec.memory_input_bitwidth
        )
    if 255 >= half:
        raise ValueError(
            "memory input bitwidth %d cannot carry pixel values up to 255"
            % spec.memory_input_bitwidth
        )

    config = map_graph(build_sobel_graph(), spec)

    w, h = img.width, img.height
    px = img.pixels
    frames: List[List[int]] = []
    coeffs = list(kernel)
    pad = [0] * (spec.memory_input_count - 18)  # unused memory words
    for r in range(1, h - 1):
        for c in range(1, w - 1):
            frames.append(
                coeffs + [px[(r - j) * w + (c - i)] for j, i in _OFFSETS] + pad
            )

    result = run(spec, config, frames)
    out = bytearray(w * h)
    words = iter(result.outputs)
    for r in range(1, h - 1):
        for c in range(1, w - 1):
            out[r * w + c] = min(abs(next(words)), 255)
    return Image(w, h, bytes(out))
