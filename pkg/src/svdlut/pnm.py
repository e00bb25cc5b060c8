"""Binary PNM image I/O.

Supports P6 (RGB) at maxval 255 or 65535 and P5 (grayscale) at 65535,
the two containers the tools read and write. 16-bit samples are
big-endian per the format definition. Loading maps samples to [0,1]
float32 planar layout; saving clamps to [0,1] and quantizes with
round-half-up so golden files are stable. Writes go to a temp file in
the target directory and are renamed into place, so a failed save never
leaves a partial file behind.
"""

import os

import numpy as np

from .core_types import Image
from .errors import BadMagic, BadMaxval, ShapeMismatch, TruncatedFile

__all__ = ["load", "save", "read_pgm16", "write_pgm16"]

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _tokens(fh, count: int):
    """Next `count` header tokens, skipping whitespace and # comments."""
    out = []
    while len(out) < count:
        c = fh.read(1)
        if not c:
            raise TruncatedFile("header ended early")
        if c in _WHITESPACE:
            continue
        if c == b"#":
            while c and c not in b"\r\n":
                c = fh.read(1)
            continue
        tok = c
        while True:
            c = fh.read(1)
            if not c or c in _WHITESPACE:
                break
            if c == b"#":  # comment glued to a token still ends it
                while c and c not in b"\r\n":
                    c = fh.read(1)
                break
            tok += c
        out.append(tok)
    return out


def _read_header(fh):
    magic = fh.read(2)
    if magic not in (b"P5", b"P6"):
        raise BadMagic(f"not a binary PNM file (magic {magic!r})")
    w, h, maxval = (int(t) for t in _tokens(fh, 3))
    if maxval not in (255, 65535):
        raise BadMaxval(f"maxval must be 255 or 65535, got {maxval}")
    if w < 1 or h < 1:
        raise TruncatedFile(f"bad dimensions {w}x{h}")
    return magic, w, h, maxval


def _read_samples(fh, count: int, maxval: int) -> np.ndarray:
    # 16-bit PNM samples are big-endian
    dtype = np.dtype(">u2") if maxval == 65535 else np.dtype("u1")
    raw = fh.read(count * dtype.itemsize)
    if len(raw) < count * dtype.itemsize:
        raise TruncatedFile(f"expected {count} samples, file ends early")
    return np.frombuffer(raw, dtype=dtype)


def load(path) -> Image:
    """Read a P6 file into a float32 Image with samples in [0,1]."""
    with open(path, "rb") as fh:
        magic, w, h, maxval = _read_header(fh)
        if magic != b"P6":
            raise BadMagic("expected a P6 color file")
        flat = _read_samples(fh, w * h * 3, maxval)
    data = (flat.astype(np.float64) / maxval).astype(np.float32)
    return Image(w, h, data.reshape(h, w, 3).transpose(2, 0, 1))


def _quantize(data: np.ndarray, maxval: int) -> np.ndarray:
    x = np.clip(data.astype(np.float64), 0.0, 1.0)
    return np.floor(x * maxval + 0.5)


def _atomic_write(path, payload: bytes) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def save(path, img: Image, bits: int = 8) -> None:
    """Write a P6 file; bits is 8 (maxval 255) or 16 (maxval 65535)."""
    if bits not in (8, 16):
        raise BadMaxval(f"bits must be 8 or 16, got {bits}")
    maxval = 255 if bits == 8 else 65535
    q = _quantize(img.data.transpose(1, 2, 0), maxval)
    dtype = np.dtype("u1") if bits == 8 else np.dtype(">u2")
    header = f"P6\n{img.width} {img.height}\n{maxval}\n".encode("ascii")
    _atomic_write(path, header + q.astype(dtype).tobytes())


def read_pgm16(path) -> np.ndarray:
    """Read a 16-bit P5 file as a uint16 (height, width) array."""
    with open(path, "rb") as fh:
        magic, w, h, maxval = _read_header(fh)
        if magic != b"P5":
            raise BadMagic("expected a P5 grayscale file")
        if maxval != 65535:
            raise BadMaxval(f"expected 16-bit grayscale, maxval {maxval}")
        flat = _read_samples(fh, w * h, maxval)
    return flat.reshape(h, w).astype(np.uint16)


def write_pgm16(path, values: np.ndarray) -> None:
    """Write a uint16 (height, width) array as a 16-bit P5 file."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ShapeMismatch(f"grayscale image must be 2D, got shape {values.shape}")
    h, w = values.shape
    header = f"P5\n{w} {h}\n65535\n".encode("ascii")
    _atomic_write(path, header + values.astype(">u2").tobytes())
