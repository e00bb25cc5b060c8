"""Domain types shared across the package.

Conventions used everywhere:

* image samples, table entries and weights are 32-bit floats
* images are planar: ``data[channel][row][col]`` with channels (r, g, b)
* 2D LUT planes come in channel-major order with axis pairs (rg, rb, gb)
* grid planes use axis pairs (xy, xc, yc) where c is the guide intensity
* every type is immutable after construction; backing arrays are marked
  read-only so accidental mutation raises instead of corrupting state

``validate`` is called from every constructor, so a successfully built
object always satisfies its invariants.
"""

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import (
    BadHyperparameter,
    BadParams,
    BadVertexCount,
    DimensionMismatch,
    NonFiniteValue,
)

__all__ = [
    "Image",
    "Lut3D",
    "Lut2DSet",
    "LutWeights",
    "GridSet",
    "GridWeights",
    "SvdLut",
    "HyperParams",
    "ModelParams",
    "expected_shapes",
    "validate",
]

LUT_PAIRS = ("rg", "rb", "gb")
GRID_PAIRS = ("xy", "xc", "yc")
CHANNELS = ("r", "g", "b")


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float32)
    out.flags.writeable = False
    return out


def _check_finite(a: np.ndarray, what: str) -> None:
    # min/max propagate NaN and expose infinities without allocating a
    # full boolean mask next to a multi-megabyte raster.
    if a.size and not (np.isfinite(a.min()) and np.isfinite(a.max())):
        raise NonFiniteValue(f"{what} contains a NaN or infinite entry")


@dataclass(frozen=True)
class Image:
    """Planar float32 RGB raster with samples nominally in [0, 1].

    ``data`` may be passed as a flat vector of length ``3*width*height``
    or already shaped ``(3, height, width)``; it is stored in the shaped
    form either way.
    """

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float32)
        if not (isinstance(self.width, int) and isinstance(self.height, int)):
            raise DimensionMismatch("width and height must be integers")
        if self.width < 1 or self.height < 1:
            raise DimensionMismatch("width and height must be >= 1")
        want = 3 * self.width * self.height
        if d.size != want:
            raise DimensionMismatch(
                f"data has {d.size} samples, {self.width}x{self.height} needs {want}"
            )
        d = d.reshape(3, self.height, self.width)
        object.__setattr__(self, "data", _freeze(d))
        validate(self)

    @property
    def channels(self) -> int:
        return 3


@dataclass(frozen=True)
class Lut3D:
    """Three d*d*d lookup cubes, one per output channel.

    ``tables[c][i_r][i_g][i_b]`` is the value output channel ``c`` takes
    at the vertex with normalized input coordinates ``(i_r, i_g, i_b) / (d-1)``.
    """

    tables: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tables, dtype=np.float32)
        if t.ndim != 4 or t.shape[0] != 3 or not (t.shape[1] == t.shape[2] == t.shape[3]):
            raise DimensionMismatch(f"expected (3, d, d, d) tables, got {t.shape}")
        if t.shape[1] < 2:
            raise BadVertexCount("3D LUT needs at least 2 vertices per axis")
        object.__setattr__(self, "tables", _freeze(t))
        validate(self)

    @property
    def d_t(self) -> int:
        return self.tables.shape[1]


@dataclass(frozen=True)
class Lut2DSet:
    """Nine d*d planes: per output channel, one plane per input pair.

    ``planes[c][p]`` with pairs p ordered (rg, rb, gb); the first plane
    axis is the first named channel, e.g. ``planes[c][0][i_r][i_g]``.
    """

    planes: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.planes, dtype=np.float32)
        if p.ndim != 4 or p.shape[:2] != (3, 3) or p.shape[2] != p.shape[3]:
            raise DimensionMismatch(f"expected (3, 3, d, d) planes, got {p.shape}")
        if p.shape[2] < 2:
            raise BadVertexCount("2D LUT needs at least 2 vertices per axis")
        object.__setattr__(self, "planes", _freeze(p))
        validate(self)

    @property
    def d_t(self) -> int:
        return self.planes.shape[2]


@dataclass(frozen=True)
class LutWeights:
    """Mixing weights for the 2D LUT decomposition.

    ``w[c]`` holds the (rg, rb, gb) plane weights of output channel c and
    ``b[c]`` its scalar bias.
    """

    w: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float32)
        b = np.asarray(self.b, dtype=np.float32)
        if w.shape != (3, 3) or b.shape != (3,):
            raise DimensionMismatch(f"expected w (3,3) and b (3,), got {w.shape} {b.shape}")
        object.__setattr__(self, "w", _freeze(w))
        object.__setattr__(self, "b", _freeze(b))
        validate(self)


@dataclass(frozen=True)
class GridSet:
    """k bilateral grids, each stored as three d*d planes (xy, xc, yc).

    The xy plane is indexed ``[i_x][i_y]`` by normalized position, the xc
    and yc planes by one position axis and the guide intensity, which is
    the input channel ``grid_index % 3``.
    """

    planes: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.planes, dtype=np.float32)
        if p.ndim != 4 or p.shape[1] != 3 or p.shape[2] != p.shape[3]:
            raise DimensionMismatch(f"expected (k, 3, d, d) planes, got {p.shape}")
        if p.shape[0] < 1:
            raise DimensionMismatch("need at least one grid")
        if p.shape[2] < 2:
            raise BadVertexCount("grid needs at least 2 vertices per axis")
        object.__setattr__(self, "planes", _freeze(p))
        validate(self)

    @property
    def k(self) -> int:
        return self.planes.shape[0]

    @property
    def d_s(self) -> int:
        return self.planes.shape[2]


@dataclass(frozen=True)
class GridWeights:
    """Per-grid plane weights (xy, xc, yc) and scalar bias."""

    w: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float32)
        b = np.asarray(self.b, dtype=np.float32)
        if w.ndim != 2 or w.shape[1] != 3 or b.shape != (w.shape[0],):
            raise DimensionMismatch(f"expected w (k,3) and b (k,), got {w.shape} {b.shape}")
        object.__setattr__(self, "w", _freeze(w))
        object.__setattr__(self, "b", _freeze(b))
        validate(self)

    @property
    def k(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class SvdLut:
    """Factored form of a Lut2DSet: per plane U (d, n), S (n,), Vt (n, d).

    Singular values are only guaranteed nonnegative and sorted when the
    factors came out of a decomposition; a generator network may emit any
    finite values here.
    """

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float32)
        s = np.asarray(self.s, dtype=np.float32)
        vt = np.asarray(self.vt, dtype=np.float32)
        if u.ndim != 4 or u.shape[:2] != (3, 3):
            raise DimensionMismatch(f"expected u (3, 3, d, n), got {u.shape}")
        d, n = u.shape[2], u.shape[3]
        if s.shape != (3, 3, n) or vt.shape != (3, 3, n, d):
            raise DimensionMismatch(
                f"inconsistent factor shapes u={u.shape} s={s.shape} vt={vt.shape}"
            )
        if d < 2:
            raise BadVertexCount("factored LUT needs at least 2 vertices per axis")
        if n < 1 or n > d:
            raise DimensionMismatch(f"rank {n} outside 1..{d}")
        object.__setattr__(self, "u", _freeze(u))
        object.__setattr__(self, "s", _freeze(s))
        object.__setattr__(self, "vt", _freeze(vt))
        validate(self)

    @property
    def d_t(self) -> int:
        return self.u.shape[2]

    @property
    def n_s(self) -> int:
        return self.u.shape[3]


@dataclass(frozen=True)
class HyperParams:
    """Architecture constants for the parameter generator network.

    ``n_sw``/``n_sb`` and ``n_tw``/``n_tb`` count the per-grid and
    per-channel mixing weights and biases emitted by the weight heads;
    the decomposition structure fixes them at 3 and 1.
    """

    m: int = 8
    d_t: int = 33
    d_s: int = 17
    k: int = 6
    n_s: int = 8
    m_s: int = 8
    m_t: int = 8
    m_sw: int = 8
    m_tw: int = 8
    n_sw: int = 3
    n_sb: int = 1
    n_tw: int = 3
    n_tb: int = 1

    def __post_init__(self):
        validate(self)

    @property
    def ctx_dim(self) -> int:
        return 32 * self.m


@dataclass(frozen=True)
class ModelParams:
    """A full set of named weight tensors plus the hyperparameters.

    Tensor names and shapes must match ``expected_shapes(hyper)`` exactly.
    """

    hyper: HyperParams
    tensors: Mapping[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        frozen = {k: _freeze(v) for k, v in self.tensors.items()}
        object.__setattr__(self, "tensors", MappingProxyType(frozen))
        validate(self)


def expected_shapes(hyper: HyperParams) -> "dict[str, tuple[int, ...]]":
    """Canonical tensor name -> shape map for one hyperparameter choice.

    Iteration order of the result is the storage and initialization order.
    """
    m = hyper.m
    widths = (3, m, 2 * m, 4 * m, 8 * m, 8 * m)
    shapes: dict[str, tuple[int, ...]] = {}
    for i in range(1, 6):
        cin, cout = widths[i - 1], widths[i]
        shapes[f"backbone.conv{i}.weight"] = (cout, cin, 3, 3)
        shapes[f"backbone.conv{i}.bias"] = (cout,)
        if i <= 4:
            shapes[f"backbone.in{i}.scale"] = (cout,)
            shapes[f"backbone.in{i}.shift"] = (cout,)
    ctx = hyper.ctx_dim
    heads = (
        ("grid_gen", hyper.m_s, hyper.k * 3 * hyper.d_s * hyper.d_s),
        ("gridw_gen", hyper.m_sw, hyper.k * (hyper.n_sw + hyper.n_sb)),
        ("lut_gen", hyper.m_t, 9 * (2 * hyper.d_t * hyper.n_s + hyper.n_s)),
        ("lutw_gen", hyper.m_tw, 3 * (hyper.n_tw + hyper.n_tb)),
    )
    for name, hidden, out in heads:
        shapes[f"{name}.fc1.weight"] = (hidden, ctx)
        shapes[f"{name}.fc1.bias"] = (hidden,)
        shapes[f"{name}.fc2.weight"] = (out, hidden)
        shapes[f"{name}.fc2.bias"] = (out,)
    return shapes


def _validate_hyper(h: HyperParams) -> None:
    if h.m < 1:
        raise BadHyperparameter("m must be >= 1")
    if h.d_t < 2 or h.d_s < 2:
        raise BadHyperparameter("d_t and d_s must be >= 2")
    if h.k < 3 or h.k % 3 != 0:
        raise BadHyperparameter("k must be a positive multiple of 3")
    if not 1 <= h.n_s <= h.d_t:
        raise BadHyperparameter(f"n_s must be in 1..{h.d_t}")
    for name in ("m_s", "m_t", "m_sw", "m_tw"):
        if getattr(h, name) < 1:
            raise BadHyperparameter(f"{name} must be >= 1")
    if (h.n_sw, h.n_sb, h.n_tw, h.n_tb) != (3, 1, 3, 1):
        # three pair weights plus one bias is what the mixing stage consumes
        raise BadHyperparameter("weight heads must emit 3 weights and 1 bias")


def _validate_params(p: ModelParams) -> None:
    want = expected_shapes(p.hyper)
    have = p.tensors
    for name, shape in want.items():
        if name not in have:
            raise BadParams(f"missing tensor {name}")
        if have[name].shape != shape:
            raise BadParams(
                f"tensor {name} has shape {have[name].shape}, expected {shape}"
            )
    for name in have:
        if name not in want:
            raise BadParams(f"unexpected tensor {name}")
    for name, t in have.items():
        _check_finite(t, f"tensor {name}")


def validate(obj) -> None:
    """Raise the first violated invariant of ``obj``; return None if valid.

    Accepts any type defined in this module.
    """
    if isinstance(obj, Image):
        _check_finite(obj.data, "image data")
    elif isinstance(obj, Lut3D):
        _check_finite(obj.tables, "3D LUT tables")
    elif isinstance(obj, Lut2DSet):
        _check_finite(obj.planes, "2D LUT planes")
    elif isinstance(obj, LutWeights):
        _check_finite(obj.w, "LUT weights")
        _check_finite(obj.b, "LUT biases")
    elif isinstance(obj, GridSet):
        _check_finite(obj.planes, "grid planes")
    elif isinstance(obj, GridWeights):
        _check_finite(obj.w, "grid weights")
        _check_finite(obj.b, "grid biases")
    elif isinstance(obj, SvdLut):
        _check_finite(obj.u, "U factors")
        _check_finite(obj.s, "singular values")
        _check_finite(obj.vt, "Vt factors")
    elif isinstance(obj, HyperParams):
        _validate_hyper(obj)
    elif isinstance(obj, ModelParams):
        _validate_params(obj)
    else:
        raise TypeError(f"validate() does not know {type(obj).__name__}")
