"""Context backbone, parameter generator heads, and weight serialization.

The backbone bilinearly resizes any input to 3x256x256 and runs five
3x3 stride-2 convolutions (widths m, 2m, 4m, 8m, 8m), each followed by
LeakyReLU(0.2), with per-channel instance normalization after the first
four. An 8x8 -> 2x2 average pool and a flatten produce the 32m context
vector. Dropout is an inference no-op and is omitted.

Four independent heads map the context through two affine layers each
(a rank factorization, so no activation in between):

* grid head   -> k grids of three d_s*d_s planes
* grid-weight head -> per-grid (xy, xc, yc) weights and bias
* lut head    -> per plane U (d_t x n_s), S (n_s), V (d_t x n_s)
* lut-weight head  -> per-channel (rg, rb, gb) weights and bias

Weights serialize to a little-endian binary format, magic "SVDW".
"""

import os
import struct

import numpy as np

from . import svd
from .core_types import (
    GridSet,
    GridWeights,
    HyperParams,
    Image,
    LutWeights,
    ModelParams,
    SvdLut,
    expected_shapes,
)
from .errors import (
    BadMagic,
    ShapeMismatch,
    TruncatedFile,
    UnsupportedVersion,
)
from .transform import fused_enhance, naive_enhance

__all__ = [
    "param_count",
    "random_init",
    "backbone_forward",
    "head_forward",
    "grid_heads_forward",
    "lut_heads_forward",
    "generators_forward",
    "run_model",
    "save_weights",
    "load_weights",
]

_MAGIC = b"SVDW"
_VERSION = 1
_LEAKY_SLOPE = np.float32(0.2)
_IN_EPS = np.float32(1e-5)
_HYPER_FIELDS = ("m", "d_t", "d_s", "k", "n_s", "m_s", "m_t", "m_sw", "m_tw")


def param_count(hyper: HyperParams = HyperParams()) -> int:
    """Total scalar parameter count for one hyperparameter choice."""
    return sum(int(np.prod(s)) for s in expected_shapes(hyper).values())


def random_init(seed: int, hyper: HyperParams = HyperParams()) -> ModelParams:
    """Deterministic pseudo-random parameters, uniform in [-0.05, 0.05].

    The same seed produces bit-identical tensors on every platform;
    tensors are drawn in the canonical ``expected_shapes`` order.
    """
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in expected_shapes(hyper).items():
        tensors[name] = rng.uniform(-0.05, 0.05, shape).astype(np.float32)
    return ModelParams(hyper, tensors)


def _resize_bilinear(data: np.ndarray, oh: int, ow: int) -> np.ndarray:
    """Half-pixel-centered bilinear resize with edge clamping."""
    _, ih, iw = data.shape
    sy = (np.arange(oh, dtype=np.float64) + 0.5) * ih / oh - 0.5
    sx = (np.arange(ow, dtype=np.float64) + 0.5) * iw / ow - 0.5
    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    dy = (sy - y0).astype(np.float32)
    dx = (sx - x0).astype(np.float32)
    y0c = np.clip(y0, 0, ih - 1)[:, None]
    y1c = np.clip(y0 + 1, 0, ih - 1)[:, None]
    x0c = np.clip(x0, 0, iw - 1)[None, :]
    x1c = np.clip(x0 + 1, 0, iw - 1)[None, :]
    # gather only the four needed corners; a row-then-column two-step
    # would copy full-width intermediates on large sources
    top = data[:, y0c, x0c] * (1 - dx) + data[:, y0c, x1c] * dx
    bot = data[:, y1c, x0c] * (1 - dx) + data[:, y1c, x1c] * dx
    return top * (1 - dy[:, None]) + bot * dy[:, None]


def _conv3x3_s2(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 convolution, stride 2, zero padding 1, via im2col and one GEMM."""
    cin, ih, iw = x.shape
    cout = weight.shape[0]
    oh = (ih + 2 - 3) // 2 + 1
    ow = (iw + 2 - 3) // 2 + 1
    xp = np.zeros((cin, ih + 2, iw + 2), dtype=np.float32)
    xp[:, 1:-1, 1:-1] = x
    win = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(1, 2))
    cols = win[:, ::2, ::2]  # (cin, oh, ow, 3, 3)
    cols = cols.transpose(1, 2, 0, 3, 4).reshape(oh * ow, cin * 9)
    wmat = weight.reshape(cout, cin * 9)
    out = cols @ wmat.T + bias
    return np.ascontiguousarray(out.T.reshape(cout, oh, ow))


def _leaky(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, _LEAKY_SLOPE * x)


def _instance_norm(x: np.ndarray, scale: np.ndarray, shift: np.ndarray) -> np.ndarray:
    """Per-channel spatial standardization; constant channels map to shift."""
    mean = x.mean(axis=(1, 2), keepdims=True)
    var = x.var(axis=(1, 2), keepdims=True)
    inv = 1.0 / np.sqrt(var + _IN_EPS)
    return (x - mean) * inv * scale[:, None, None] + shift[:, None, None]


def backbone_forward(img: Image, params: ModelParams) -> np.ndarray:
    """Context vector of length 32m for one image."""
    t = params.tensors
    x = _resize_bilinear(img.data, 256, 256).astype(np.float32)
    for i in range(1, 6):
        x = _conv3x3_s2(x, t[f"backbone.conv{i}.weight"], t[f"backbone.conv{i}.bias"])
        x = _leaky(x)
        if i <= 4:
            x = _instance_norm(x, t[f"backbone.in{i}.scale"], t[f"backbone.in{i}.shift"])
    c, h, w = x.shape
    pooled = x.reshape(c, h // 4, 4, w // 4, 4).mean(axis=(2, 4))
    return np.ascontiguousarray(pooled.reshape(-1))


def head_forward(params: ModelParams, name: str, ctx: np.ndarray) -> np.ndarray:
    """Two stacked affine layers of one generator head."""
    t = params.tensors
    h = t[f"{name}.fc1.weight"] @ ctx + t[f"{name}.fc1.bias"]
    return t[f"{name}.fc2.weight"] @ h + t[f"{name}.fc2.bias"]


def grid_heads_forward(ctx: np.ndarray, params: ModelParams):
    """Grid planes and their mixing weights from the context vector."""
    hp = params.hyper
    planes = head_forward(params, "grid_gen", ctx).reshape(hp.k, 3, hp.d_s, hp.d_s)
    wb = head_forward(params, "gridw_gen", ctx).reshape(hp.k, 4)
    return GridSet(planes), GridWeights(wb[:, :3], wb[:, 3])


def lut_heads_forward(ctx: np.ndarray, params: ModelParams):
    """Factored LUT planes and their mixing weights from the context."""
    hp = params.hyper
    d, n = hp.d_t, hp.n_s
    flat = head_forward(params, "lut_gen", ctx).reshape(3, 3, 2 * d * n + n)
    u = flat[:, :, : d * n].reshape(3, 3, d, n)
    s = flat[:, :, d * n : d * n + n]
    v = flat[:, :, d * n + n :].reshape(3, 3, d, n)
    vt = np.ascontiguousarray(v.transpose(0, 1, 3, 2))
    wb = head_forward(params, "lutw_gen", ctx).reshape(3, 4)
    return SvdLut(u, s, vt), LutWeights(wb[:, :3], wb[:, 3])


def generators_forward(ctx: np.ndarray, params: ModelParams):
    """All four heads: (GridSet, GridWeights, SvdLut, LutWeights)."""
    grids, gw = grid_heads_forward(ctx, params)
    lut_factors, lw = lut_heads_forward(ctx, params)
    return grids, gw, lut_factors, lw


def run_model(img: Image, params: ModelParams, fused: bool = True, threads: int = 1) -> Image:
    """Full image-adaptive pipeline: context, generators, transform."""
    ctx = backbone_forward(img, params)
    grids, gw, lut_factors, lw = generators_forward(ctx, params)
    luts = svd.reconstruct_lut(lut_factors)
    if fused:
        return fused_enhance(img, luts, lw, grids, gw, threads=threads)
    return naive_enhance(img, luts, lw, grids, gw)


def save_weights(path, params: ModelParams) -> None:
    """Write the binary weight file (atomically: temp file then rename)."""
    hp = params.hyper
    tensors = params.tensors
    path = os.fspath(path)
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", _VERSION))
            fh.write(struct.pack("<9I", *(getattr(hp, f) for f in _HYPER_FIELDS)))
            fh.write(struct.pack("<I", len(tensors)))
            for name in expected_shapes(hp):
                t = tensors[name]
                raw = name.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)))
                fh.write(raw)
                fh.write(struct.pack("<I", t.ndim))
                fh.write(struct.pack(f"<{t.ndim}I", *t.shape))
                fh.write(np.ascontiguousarray(t, dtype="<f4").tobytes())
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise TruncatedFile(f"expected {n} more bytes, got {len(buf)}")
    return buf


def load_weights(path) -> ModelParams:
    """Read a weight file written by ``save_weights``."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise BadMagic(f"{path} is not a weight file")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != _VERSION:
            raise UnsupportedVersion(f"weight file version {version}, expected {_VERSION}")
        hvals = struct.unpack("<9I", _read_exact(fh, 36))
        hyper = HyperParams(**dict(zip(_HYPER_FIELDS, hvals)))
        want = expected_shapes(hyper)
        (count,) = struct.unpack("<I", _read_exact(fh, 4))
        if count != len(want):
            raise ShapeMismatch(f"file declares {count} tensors, expected {len(want)}")
        tensors = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", _read_exact(fh, 4))
            name = _read_exact(fh, name_len).decode("utf-8")
            if name not in want:
                raise ShapeMismatch(f"unknown tensor {name}")
            if name in tensors:
                raise ShapeMismatch(f"duplicate tensor {name}")
            (rank,) = struct.unpack("<I", _read_exact(fh, 4))
            shape = struct.unpack(f"<{rank}I", _read_exact(fh, 4 * rank))
            if shape != want[name]:
                raise ShapeMismatch(
                    f"tensor {name} has shape {shape}, expected {want[name]}"
                )
            n = int(np.prod(shape))
            data = np.frombuffer(_read_exact(fh, 4 * n), dtype="<f4")
            tensors[name] = data.reshape(shape).astype(np.float32)
        return ModelParams(hyper, tensors)
