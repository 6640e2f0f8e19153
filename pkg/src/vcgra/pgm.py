"""8-bit grayscale images and PGM (P2/P5) reading and writing."""

from __future__ import annotations

from dataclasses import dataclass


class PgmError(Exception):
    """Malformed PGM data or an image the format cannot carry."""


@dataclass(frozen=True)
class Image:
    width: int
    height: int
    pixels: bytes  # row-major, one byte per pixel

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise PgmError("image dimensions must be positive")
        if len(self.pixels) != self.width * self.height:
            raise PgmError(
                "pixel buffer holds %d bytes, expected %d"
                % (len(self.pixels), self.width * self.height)
            )

    def at(self, row: int, col: int) -> int:
        return self.pixels[row * self.width + col]


def _tokens(data: bytes):
    """Yield whitespace-separated header/raster tokens, skipping # comments."""
    i, n = 0, len(data)
    while i < n:
        c = data[i]
        if c in b" \t\r\n":
            i += 1
        elif c == ord("#"):
            while i < n and data[i] != ord("\n"):
                i += 1
        else:
            j = i
            while j < n and data[j] not in b" \t\r\n":
                j += 1
            yield i, data[i:j]
            i = j


def load_pgm(data: bytes) -> Image:
    """Parse binary (P5) or ASCII (P2) PGM bytes into an Image."""
    if not isinstance(data, (bytes, bytearray)):
        raise PgmError("expected bytes")
    data = bytes(data)
    toks = _tokens(data)

    def next_token(what: str):
        try:
            return next(toks)
        except StopIteration:
            raise PgmError("truncated PGM header: missing %s" % what) from None

    _, magic = next_token("magic")
    if magic not in (b"P2", b"P5"):
        raise PgmError("not a PGM file (magic %r)" % magic)

    def next_int(what: str) -> "tuple[int, int]":
        pos, tok = next_token(what)
        try:
            return pos, int(tok)
        except ValueError:
            raise PgmError("bad %s: %r" % (what, tok)) from None

    _, width = next_int("width")
    _, height = next_int("height")
    end, tok = next_token("maxval")
    try:
        maxval = int(tok)
    except ValueError:
        raise PgmError("bad maxval: %r" % tok) from None
    if width < 1 or height < 1:
        raise PgmError("bad dimensions %dx%d" % (width, height))
    if not 1 <= maxval <= 255:
        raise PgmError("maxval %d unsupported (need 1..255)" % maxval)

    count = width * height
    if magic == b"P5":
        raster = end + len(tok) + 1  # single whitespace byte after maxval
        pixels = data[raster : raster + count]
        if len(pixels) != count:
            raise PgmError("raster holds %d bytes, expected %d" % (len(pixels), count))
    else:
        values = []
        for _, t in toks:
            try:
                values.append(int(t))
            except ValueError:
                raise PgmError("bad pixel value %r" % t) from None
        if len(values) != count:
            raise PgmError("raster holds %d values, expected %d" % (len(values), count))
        if any(v < 0 or v > maxval for v in values):
            raise PgmError("pixel value out of range 0..%d" % maxval)
        pixels = bytes(values)
    if magic == b"P5" and maxval < 255 and any(p > maxval for p in pixels):
        raise PgmError("pixel value out of range 0..%d" % maxval)
    return Image(width, height, pixels)


def save_pgm(img: Image) -> bytes:
    """Serialize to canonical binary PGM (P5, maxval 255)."""
    header = ("P5\n%d %d\n255\n" % (img.width, img.height)).encode("ascii")
    return header + img.pixels
