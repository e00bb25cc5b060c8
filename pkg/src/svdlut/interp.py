"""Vertex bracketing and bilinear/trilinear sampling primitives.

All table lookups in the package funnel through the rules defined here:

* queries are clamped to [0, 1] before bracketing
* a query p against d vertices selects left index floor(p*(d-1)),
  capped at d-2 so the right vertex always exists; p = 1 therefore
  brackets as (d-2, delta=1)
* interpolation blends the bracketing cell corners by (1-delta, delta)
  products per axis

The scalar entry points are the contract surface. ``_bracket``,
``_bilinear`` and ``_trilinear`` are their numba-compiled cores, shared
with the fused transform kernel; ``bracket_array`` is the vectorized
twin used by the stage-at-a-time numpy transforms.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import BadVertexCount, NonFiniteValue

__all__ = ["Bracket", "bracket", "bilinear_sample", "trilinear_sample", "bracket_array"]


@dataclass(frozen=True)
class Bracket:
    left_index: int
    delta: float


@njit(cache=True)
def _bracket(p, d):
    if p < 0.0:
        p = 0.0
    elif p > 1.0:
        p = 1.0
    t = p * (d - 1)
    i = int(t)
    if i > d - 2:
        i = d - 2
    return i, t - i


@njit(cache=True)
def _bilinear(plane, pa, pb):
    d = plane.shape[0]
    ia, da = _bracket(pa, d)
    ib, db = _bracket(pb, d)
    return (
        plane[ia, ib] * (1.0 - da) * (1.0 - db)
        + plane[ia + 1, ib] * da * (1.0 - db)
        + plane[ia, ib + 1] * (1.0 - da) * db
        + plane[ia + 1, ib + 1] * da * db
    )


@njit(cache=True)
def _trilinear(cube, pr, pg, pb):
    d = cube.shape[0]
    ir, dr = _bracket(pr, d)
    ig, dg = _bracket(pg, d)
    ib, db = _bracket(pb, d)
    c00 = cube[ir, ig, ib] * (1.0 - dr) + cube[ir + 1, ig, ib] * dr
    c10 = cube[ir, ig + 1, ib] * (1.0 - dr) + cube[ir + 1, ig + 1, ib] * dr
    c01 = cube[ir, ig, ib + 1] * (1.0 - dr) + cube[ir + 1, ig, ib + 1] * dr
    c11 = cube[ir, ig + 1, ib + 1] * (1.0 - dr) + cube[ir + 1, ig + 1, ib + 1] * dr
    c0 = c00 * (1.0 - dg) + c10 * dg
    c1 = c01 * (1.0 - dg) + c11 * dg
    return c0 * (1.0 - db) + c1 * db


def _check_query(p):
    if not math.isfinite(p):
        raise NonFiniteValue(f"query coordinate {p!r} is not finite")


def bracket(p: float, d: int) -> Bracket:
    """Bracketing cell for query p on an axis with d vertices."""
    if d < 2:
        raise BadVertexCount(f"need at least 2 vertices, got {d}")
    _check_query(p)
    i, delta = _bracket(float(p), d)
    return Bracket(int(i), float(delta))


def bilinear_sample(plane, pa: float, pb: float) -> float:
    """Sample a square plane at (pa, pb); the first plane axis is pa."""
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise BadVertexCount(f"plane must be square 2D, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise BadVertexCount("plane needs at least 2 vertices per axis")
    _check_query(pa)
    _check_query(pb)
    return float(_bilinear(arr, float(pa), float(pb)))


def trilinear_sample(cube, pr: float, pg: float, pb: float) -> float:
    """Sample a cubic table at (pr, pg, pb); axes in index order."""
    arr = np.asarray(cube, dtype=np.float64)
    if arr.ndim != 3 or not (arr.shape[0] == arr.shape[1] == arr.shape[2]):
        raise BadVertexCount(f"cube must be cubic 3D, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise BadVertexCount("cube needs at least 2 vertices per axis")
    for p in (pr, pg, pb):
        _check_query(p)
    return float(_trilinear(arr, float(pr), float(pg), float(pb)))


def bracket_array(p: np.ndarray, d: int):
    """Vectorized bracketing: (int32 left indices, float32 deltas).

    Callers guarantee finite input; images are validated at construction.
    """
    if d < 2:
        raise BadVertexCount(f"need at least 2 vertices, got {d}")
    t = np.clip(p, 0.0, 1.0).astype(np.float32, copy=False) * np.float32(d - 1)
    i = np.minimum(np.floor(t), d - 2).astype(np.int32)
    return i, t - i
