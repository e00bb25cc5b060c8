"""Diagnostics: vertex coverage, occurrence statistics, PSNR and CIELAB error.

Coverage treats a lookup as touching every corner of its bracketing cell
(8 corners for a 3D cube, 4 per plane in 2D, 2 per axis in 1D) whether
or not an interpolation weight is zero; this matches what the memory
system sees. Utilization is the percentage of distinct table vertices
touched; occurrence counts how often each cube vertex is touched, with
the three axis-pair projections that expose where image colors live.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core_types import Image
from .errors import BadVertexCount, DimensionMismatch
from .interp import bracket_array

__all__ = [
    "OccurrenceMap",
    "utilization_rate",
    "occurrence_stats",
    "merge_occurrence",
    "psnr",
    "delta_e_ab",
    "heatmap_u16",
]

_MODES = ("1d", "2d", "3d")


@dataclass(frozen=True)
class OccurrenceMap:
    """Per-vertex touch counts for a d-vertex cube plus 2D projections.

    ``proj_rg[i][j]`` sums the cube over the b axis, ``proj_rb`` over g,
    ``proj_gb`` over r. Maps with equal d merge by addition.
    """

    d: int
    cube: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.cube, dtype=np.int64)
        if c.shape != (self.d, self.d, self.d):
            raise DimensionMismatch(f"cube shape {c.shape} does not match d={self.d}")
        if (c < 0).any():
            raise DimensionMismatch("occurrence counts must be nonnegative")
        c.flags.writeable = False
        object.__setattr__(self, "cube", c)

    @property
    def proj_rg(self) -> np.ndarray:
        return self.cube.sum(axis=2)

    @property
    def proj_rb(self) -> np.ndarray:
        return self.cube.sum(axis=1)

    @property
    def proj_gb(self) -> np.ndarray:
        return self.cube.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.cube.sum())


def _left_indices(img: Image, d: int):
    return [bracket_array(img.data[c], d)[0].astype(np.int64) for c in range(3)]


def utilization_rate(img: Image, d: int, mode: str = "3d") -> float:
    """Percentage of table vertices touched at least once by the image.

    mode selects the table family: "3d" (one d^3 cube), "2d" (three d^2
    pair planes) or "1d" (three d-entry curves).
    """
    if d < 2:
        raise BadVertexCount(f"need at least 2 vertices, got {d}")
    mode = mode.lower()
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    ir, ig, ib = _left_indices(img, d)
    if mode == "3d":
        flags = np.zeros(d * d * d, dtype=bool)
        base = (ir * d + ig) * d + ib
        for dr in (0, 1):
            for dg in (0, 1):
                for db in (0, 1):
                    flags[base + (dr * d + dg) * d + db] = True
        return 100.0 * int(flags.sum()) / (d ** 3)
    if mode == "2d":
        flags = np.zeros(3 * d * d, dtype=bool)
        for pair, (ia, ib2) in enumerate(((ir, ig), (ir, ib), (ig, ib))):
            base = pair * d * d + ia * d + ib2
            for da in (0, 1):
                for db in (0, 1):
                    flags[base + da * d + db] = True
        return 100.0 * int(flags.sum()) / (3 * d * d)
    flags = np.zeros(3 * d, dtype=bool)
    for axis, ia in enumerate((ir, ig, ib)):
        flags[axis * d + ia] = True
        flags[axis * d + ia + 1] = True
    return 100.0 * int(flags.sum()) / (3 * d)


def occurrence_stats(images, d: int) -> OccurrenceMap:
    """Count bracketing-cell corner touches over one or more images."""
    if d < 2:
        raise BadVertexCount(f"need at least 2 vertices, got {d}")
    cube = np.zeros((d, d, d), dtype=np.int64)
    flat = cube.ravel()
    for img in images:
        ir, ig, ib = _left_indices(img, d)
        base = ((ir * d + ig) * d + ib).ravel()
        for dr in (0, 1):
            for dg in (0, 1):
                for db in (0, 1):
                    np.add.at(flat, base + (dr * d + dg) * d + db, 1)
    return OccurrenceMap(d, cube)


def merge_occurrence(a: OccurrenceMap, b: OccurrenceMap) -> OccurrenceMap:
    """Combine two count maps; counts add."""
    if a.d != b.d:
        raise DimensionMismatch(f"cannot merge maps with d={a.d} and d={b.d}")
    return OccurrenceMap(a.d, a.cube + b.cube)


def psnr(a: Image, b: Image) -> float:
    """10*log10(1/MSE) with peak signal 1.0; equal images give math.inf.

    The MSE is accumulated in float64. Symmetric in its arguments.
    """
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatch("images must have equal dimensions")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
# reference white is the matrix image of RGB (1,1,1): D65
_WHITE = _SRGB_TO_XYZ.sum(axis=1)


def _srgb_to_lab(data: np.ndarray) -> np.ndarray:
    rgb = np.clip(data.astype(np.float64), 0.0, 1.0)
    linear = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = np.tensordot(_SRGB_TO_XYZ, linear, axes=([1], [0]))
    t = xyz / _WHITE[:, None, None]
    delta = 6.0 / 29.0
    f = np.where(t > delta ** 3, np.cbrt(t), t / (3.0 * delta * delta) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[0] = 116.0 * f[1] - 16.0
    lab[1] = 500.0 * (f[0] - f[1])
    lab[2] = 200.0 * (f[1] - f[2])
    return lab


def delta_e_ab(a: Image, b: Image) -> float:
    """Mean per-pixel Euclidean distance in CIELAB (D65).

    Samples are clamped to [0, 1] before the sRGB decoding curve.
    Symmetric in its arguments; white vs black comes out at 100.
    """
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatch("images must have equal dimensions")
    la = _srgb_to_lab(a.data)
    lb = _srgb_to_lab(b.data)
    return float(np.mean(np.sqrt(np.sum((la - lb) ** 2, axis=0))))


def heatmap_u16(counts: np.ndarray) -> np.ndarray:
    """Rescale a count plane to the full 16-bit range for PGM export."""
    c = np.asarray(counts, dtype=np.float64)
    peak = c.max()
    if peak <= 0:
        return np.zeros(c.shape, dtype=np.uint16)
    return np.floor(c / peak * 65535.0 + 0.5).astype(np.uint16)
