import numpy as np
import pytest

from svdlut.core_types import (
    GridSet,
    GridWeights,
    Image,
    Lut2DSet,
    Lut3D,
    LutWeights,
)


def make_image(width, height, seed=0, low=0.0, high=1.0):
    rng = np.random.default_rng(seed)
    data = rng.uniform(low, high, (3, height, width)).astype(np.float32)
    return Image(width, height, data)


def make_lut2d(d=9, seed=1, scale=1.0):
    rng = np.random.default_rng(seed)
    planes = (rng.random((3, 3, d, d)) * scale).astype(np.float32)
    return Lut2DSet(planes)


def make_lut_weights(seed=2):
    rng = np.random.default_rng(seed)
    return LutWeights(
        rng.uniform(-1, 1, (3, 3)).astype(np.float32),
        rng.uniform(-0.5, 0.5, 3).astype(np.float32),
    )


def make_grids(k=6, d=5, seed=3, scale=1.0):
    rng = np.random.default_rng(seed)
    planes = (rng.uniform(-1, 1, (k, 3, d, d)) * scale).astype(np.float32)
    return GridSet(planes)


def make_grid_weights(k=6, seed=4):
    rng = np.random.default_rng(seed)
    return GridWeights(
        rng.uniform(-1, 1, (k, 3)).astype(np.float32),
        rng.uniform(-0.5, 0.5, k).astype(np.float32),
    )


def identity_lut3d(d=17):
    ramp = np.arange(d, dtype=np.float32) / np.float32(d - 1)
    tables = np.zeros((3, d, d, d), dtype=np.float32)
    tables[0] = ramp[:, None, None]
    tables[1] = ramp[None, :, None]
    tables[2] = ramp[None, None, :]
    return Lut3D(tables)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
