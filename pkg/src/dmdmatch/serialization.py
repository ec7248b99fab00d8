"""The ``.dmt`` template file format.

Layout, little-endian throughout::

    magic        4s   b"DMDT"
    version      u16  1
    flavor       u8   0 = float32, 1 = packed binary
    channels     u8
    grid         u8   8
    reserved     u8   0
    record_count u32
    tag_length   u16
    source_tag   tag_length bytes of UTF-8

followed by ``record_count`` records of ``x, y, theta`` (f32, theta in
radians) then the descriptor payload (float: C*64 f32, channel/row/column
order; binary: C*8 bytes, one byte per row, MSB = column 0) then the mask
payload (float: 64 f32; binary: 8 bytes).
"""

from __future__ import annotations

import io
import math
import struct

import numpy as np

from .core import GRID, Flavor, Template, TemplateError
from .binarize import unpack_grid

MAGIC = b"DMDT"
VERSION = 1
_HEADER = struct.Struct("<4sHBBBBIH")


class TemplateFormatError(TemplateError):
    pass


class BadMagicError(TemplateFormatError):
    pass


class UnsupportedVersionError(TemplateFormatError):
    pass


class TruncatedError(TemplateFormatError):
    pass


class GridSizeError(TemplateFormatError):
    pass


def header_size(source_tag: str = "") -> int:
    return _HEADER.size + len(source_tag.encode("utf-8"))


def record_size(flavor: Flavor, channels: int) -> int:
    if flavor is Flavor.FLOAT32:
        return 12 + 4 * channels * GRID * GRID + 4 * GRID * GRID
    return 12 + channels * GRID + GRID


def _record_dtype(flavor: Flavor, channels: int) -> np.dtype:
    if flavor is Flavor.FLOAT32:
        return np.dtype([("mnt", "<f4", 3),
                         ("desc", "<f4", (channels, GRID, GRID)),
                         ("mask", "<f4", (GRID, GRID))])
    return np.dtype([("mnt", "<f4", 3),
                     ("desc", "u1", (channels, GRID)),
                     ("mask", "u1", GRID)])


def to_bytes(t: Template) -> bytes:
    tag = t.source_tag.encode("utf-8")
    if len(tag) > 0xFFFF:
        raise TemplateFormatError("source tag longer than 65535 bytes")
    header = _HEADER.pack(MAGIC, VERSION, int(t.flavor), t.channels, GRID, 0, len(t), len(tag))
    recs = np.zeros(len(t), dtype=_record_dtype(t.flavor, t.channels))
    recs["mnt"] = t.minutiae
    recs["desc"] = t.descriptors
    recs["mask"] = t.masks
    return header + tag + recs.tobytes()


def from_bytes(data: bytes) -> Template:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError("bad magic: not a DMDT template")
    if len(data) < _HEADER.size:
        raise TruncatedError("truncated header")
    magic, version, flavor, channels, grid, _, count, tag_len = _HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")
    if grid != GRID:
        raise GridSizeError(f"grid size {grid} != {GRID}")
    try:
        flavor = Flavor(flavor)
    except ValueError:
        raise TemplateFormatError(f"unknown flavor code {flavor}") from None
    if channels == 0:
        raise TemplateFormatError("zero channels")
    offset = _HEADER.size
    if len(data) < offset + tag_len:
        raise TruncatedError("truncated source tag")
    tag = data[offset:offset + tag_len].decode("utf-8")
    offset += tag_len
    dtype = _record_dtype(flavor, channels)
    expected = offset + count * dtype.itemsize
    if len(data) < expected:
        raise TruncatedError(f"truncated records: need {expected} bytes, have {len(data)}")
    if len(data) > expected:
        raise TemplateFormatError(f"{len(data) - expected} trailing bytes")
    recs = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    return Template(recs["mnt"].astype(np.float64), recs["desc"], recs["mask"],
                    flavor, channels, tag)


def write_template(t: Template, sink) -> int:
    """Write ``t`` to a binary stream; returns the number of bytes written."""
    data = to_bytes(t)
    sink.write(data)
    return len(data)


def read_template(source) -> Template:
    return from_bytes(source.read())


def save(t: Template, path) -> int:
    with open(path, "wb") as fh:
        return write_template(t, fh)


def load(path) -> Template:
    with open(path, "rb") as fh:
        return read_template(fh)


def dump_template(t: Template) -> str:
    """Human-readable listing of a template."""
    out = io.StringIO()
    out.write(f"flavor: {t.flavor.name}\n")
    out.write(f"channels: {t.channels}\n")
    out.write(f"grid: {GRID}\n")
    out.write(f"records: {len(t)}\n")
    out.write(f"source_tag: {t.source_tag!r}\n")
    binary = t.flavor is Flavor.PACKED_BINARY
    for k in range(len(t)):
        x, y, theta = t.minutiae[k]
        if binary:
            occupancy = unpack_grid(t.masks[k]).mean()
            stats = f"popcount={int(np.bitwise_count(t.descriptors[k]).sum())}"
        else:
            occupancy = float((t.masks[k] > 0.5).mean())
            d = t.descriptors[k].astype(np.float64)
            stats = f"min={d.min():.6g} max={d.max():.6g} mean={d.mean():.9g}"
        out.write(f"[{k}] x={x:.2f} y={y:.2f} theta={math.degrees(theta):.2f}deg "
                  f"mask={occupancy:.3f} {stats}\n")
    return out.getvalue()
