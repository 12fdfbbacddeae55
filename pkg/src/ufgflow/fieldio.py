"""Field files: a little-endian binary layout and a line-oriented text twin.

Binary layout (all little-endian)::

    offset  size      content
    0       4         magic b"UFGF"
    4       1         format version (1)
    5       1         dim d (1..3)
    6       1         storage order: 0 = row-major, last axis fastest
    7       1         reserved (0)
    8       8 d       interval counts, uint64
    8+8d    16 d      bounds (lo, hi) per axis, float64
    8+24d   16 N      values, (re, im) float64 pairs, N = prod(counts + 1)

The text form starts with ``# ufgflow field 1`` and carries the same header
as ``key value...`` lines, then one ``re im`` line per node in the same
order, printed with 17 significant digits so that reading it back is exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import Field, Grid

MAGIC = b"UFGF"
VERSION = 1
TEXT_TAG = "# ufgflow field"
ROW_MAJOR = 0


class FieldFormatError(ValueError):
    pass


def to_bytes(f: Field) -> bytes:
    g = f.grid
    head = MAGIC + struct.pack("<BBBB", VERSION, g.dim, ROW_MAJOR, 0)
    head += struct.pack(f"<{g.dim}Q", *g.counts)
    head += struct.pack(f"<{2 * g.dim}d", *[v for b in g.bounds for v in b])
    vals = np.ascontiguousarray(f.values, dtype="<c16")
    return head + vals.tobytes(order="C")


def from_bytes(data: bytes) -> Field:
    if len(data) < 8 or data[:4] != MAGIC:
        raise FieldFormatError("not a binary field file (bad magic)")
    version, dim, order, _ = struct.unpack_from("<BBBB", data, 4)
    if version != VERSION:
        raise FieldFormatError(f"unsupported field file version {version}")
    if not 1 <= dim <= 3:
        raise FieldFormatError(f"bad dimension {dim}")
    if order != ROW_MAJOR:
        raise FieldFormatError(f"unknown storage order {order}")
    off = 8
    counts = struct.unpack_from(f"<{dim}Q", data, off)
    off += 8 * dim
    flat = struct.unpack_from(f"<{2 * dim}d", data, off)
    off += 16 * dim
    bounds = tuple((flat[2 * i], flat[2 * i + 1]) for i in range(dim))
    g = Grid(bounds, tuple(int(c) for c in counts))
    need = off + 16 * g.size
    if len(data) != need:
        raise FieldFormatError(f"expected {need} bytes, found {len(data)}")
    vals = np.frombuffer(data, dtype="<c16", offset=off).reshape(g.shape)
    return Field(g, vals.astype(complex))


def to_text(f: Field) -> str:
    g = f.grid
    lines = [f"{TEXT_TAG} {VERSION}",
             f"dim {g.dim}",
             "counts " + " ".join(str(c) for c in g.counts),
             "bounds " + " ".join(f"{v:.17g}" for b in g.bounds for v in b),
             "order row-major"]
    flat = np.asarray(f.values, dtype=complex).reshape(-1)
    lines.extend(f"{z.real:.17g} {z.imag:.17g}" for z in flat)
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Field:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(TEXT_TAG):
        raise FieldFormatError("not a text field file")
    head = {}
    for k, line in enumerate(lines[1:5], start=2):
        key, _, rest = line.partition(" ")
        head[key] = rest.split()
        if not rest:
            raise FieldFormatError(f"line {k}: missing value for {key!r}")
    try:
        dim = int(head["dim"][0])
        counts = tuple(int(v) for v in head["counts"])
        b = [float(v) for v in head["bounds"]]
    except (KeyError, ValueError) as exc:
        raise FieldFormatError(f"bad text header: {exc}") from None
    if head.get("order") != ["row-major"]:
        raise FieldFormatError("unknown storage order")
    if len(counts) != dim or len(b) != 2 * dim:
        raise FieldFormatError("header sizes do not match dim")
    g = Grid(tuple((b[2 * i], b[2 * i + 1]) for i in range(dim)), counts)
    body = lines[5:]
    if len(body) != g.size:
        raise FieldFormatError(f"expected {g.size} value lines, found {len(body)}")
    arr = np.loadtxt(body, dtype=float, ndmin=2)
    vals = np.empty(g.size, dtype=complex)
    # assign parts separately; re + 1j * im would turn -0.0 into +0.0
    vals.real, vals.imag = arr[:, 0], arr[:, 1]
    return Field(g, vals.reshape(g.shape))


def write_field(path, f: Field, text: bool = False) -> Path:
    path = Path(path)
    if text:
        path.write_text(to_text(f), encoding="utf-8")
    else:
        path.write_bytes(to_bytes(f))
    return path


def read_field(path) -> Field:
    """Read either format, chosen by the leading bytes."""
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        return from_bytes(data)
    return from_text(data.decode("utf-8"))
