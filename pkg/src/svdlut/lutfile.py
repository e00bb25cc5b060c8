"""Text file format for 2D LUT plane sets and 3D LUTs.

Two self-describing variants share the layout (magic line, vertex
count, labeled value blocks):

  SVDLUT2D v1
  33
  plane r rg
  <33*33 values row-major, one table row per line>
  ... eight more planes: r rb, r gb, g rg, ... b gb ...
  weights
  <3 lines of w_rg w_rb w_gb bias, channel order r g b>

  SVDLUT3D v1
  33
  cube r
  <33^3 values, row-major over (r,g,b) vertex indices>
  cube g ... cube b ...

Values print with 9 significant digits, which round-trips float32
exactly, so parse -> print -> parse is value-identical. Parsing is
token-based: line breaks inside value blocks are cosmetic.
"""

import os

import numpy as np

from .core_types import Lut2DSet, Lut3D, LutWeights
from .errors import BadMagic, MalformedFile, TruncatedFile, UnsupportedVersion

__all__ = ["read_lut2d", "write_lut2d", "read_lut3d", "write_lut3d", "sniff"]

_CHANNELS = ("r", "g", "b")
_PAIRS = ("rg", "rb", "gb")


def _fmt(values) -> str:
    return " ".join(f"{v:.9g}" for v in values)


def _atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "w", encoding="ascii") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


class _Reader:
    """Token stream over the file body with 1-based line tracking."""

    def __init__(self, path):
        with open(path, "r", encoding="ascii") as fh:
            self.lines = fh.read().splitlines()
        self.pos = 0
        self.queue = []

    def header(self) -> str:
        if not self.lines:
            raise TruncatedFile("empty file")
        self.pos = 1
        return self.lines[0].strip()

    def _more(self):
        while not self.queue:
            if self.pos >= len(self.lines):
                raise TruncatedFile("file ended inside a value block")
            self.queue = self.lines[self.pos].split()
            self.pos += 1

    def word(self) -> str:
        self._more()
        return self.queue.pop(0)

    def floats(self, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.float32)
        for i in range(count):
            tok = self.word()
            try:
                out[i] = np.float32(float(tok))
            except ValueError:
                raise MalformedFile(f"expected a number, got {tok!r}") from None
        return out

    def expect(self, *words) -> None:
        got = tuple(self.word() for _ in words)
        if got != words:
            raise MalformedFile(f"expected {' '.join(words)!r}, got {' '.join(got)!r}")

    def int_line(self) -> int:
        tok = self.word()
        try:
            return int(tok)
        except ValueError:
            raise MalformedFile(f"expected an integer, got {tok!r}") from None

    def done(self) -> None:
        try:
            tok = self.word()
        except TruncatedFile:
            return
        raise MalformedFile(f"trailing data after payload: {tok!r}")


def _check_header(header: str, kind: str) -> None:
    parts = header.split()
    if len(parts) != 2 or parts[0] not in ("SVDLUT2D", "SVDLUT3D"):
        raise BadMagic(f"not a LUT file (header {header!r})")
    if parts[0] != kind:
        raise BadMagic(f"expected a {kind} file, got {parts[0]}")
    if parts[1] != "v1":
        raise UnsupportedVersion(f"unknown {kind} version {parts[1]!r}")


def write_lut2d(path, luts: Lut2DSet, weights: LutWeights) -> None:
    d = luts.d_t
    lines = ["SVDLUT2D v1", str(d)]
    for c in range(3):
        for p in range(3):
            lines.append(f"plane {_CHANNELS[c]} {_PAIRS[p]}")
            lines.extend(_fmt(row) for row in luts.planes[c, p])
    lines.append("weights")
    for c in range(3):
        lines.append(_fmt([*weights.w[c], weights.b[c]]))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_lut2d(path):
    """Parse a SVDLUT2D file into (Lut2DSet, LutWeights)."""
    r = _Reader(path)
    _check_header(r.header(), "SVDLUT2D")
    d = r.int_line()
    planes = np.empty((3, 3, d, d), dtype=np.float32)
    for c in range(3):
        for p in range(3):
            r.expect("plane", _CHANNELS[c], _PAIRS[p])
            planes[c, p] = r.floats(d * d).reshape(d, d)
    r.expect("weights")
    wb = r.floats(12).reshape(3, 4)
    r.done()
    return Lut2DSet(planes), LutWeights(wb[:, :3], wb[:, 3])


def write_lut3d(path, lut: Lut3D) -> None:
    d = lut.d_t
    lines = ["SVDLUT3D v1", str(d)]
    for c in range(3):
        lines.append(f"cube {_CHANNELS[c]}")
        lines.extend(_fmt(row) for row in lut.tables[c].reshape(d * d, d))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_lut3d(path) -> Lut3D:
    r = _Reader(path)
    _check_header(r.header(), "SVDLUT3D")
    d = r.int_line()
    tables = np.empty((3, d, d, d), dtype=np.float32)
    for c in range(3):
        r.expect("cube", _CHANNELS[c])
        tables[c] = r.floats(d * d * d).reshape(d, d, d)
    r.done()
    return Lut3D(tables)


def sniff(path) -> str:
    """'2d' or '3d' from the header line, without parsing the payload."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
    parts = header.split()
    if parts and parts[0] == "SVDLUT2D":
        return "2d"
    if parts and parts[0] == "SVDLUT3D":
        return "3d"
    raise BadMagic(f"not a LUT file (header {header!r})")
