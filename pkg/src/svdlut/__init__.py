"""Image-adaptive color enhancement with SVD-compressed 2D LUTs.

A tiny CNN summarizes the image, four generator heads emit factored 2D
lookup tables and bilateral grids, and a fused per-pixel kernel applies
the LUT transform and grid slicing in a single pass.
"""

from . import analysis, bench, core_types, interp, lutfile, network, pnm, svd, transform
from .core_types import (
    GridSet,
    GridWeights,
    HyperParams,
    Image,
    Lut2DSet,
    Lut3D,
    LutWeights,
    ModelParams,
    SvdLut,
    validate,
)
from .errors import SvdLutError

__version__ = "0.1.0"

__all__ = [
    "analysis",
    "bench",
    "core_types",
    "interp",
    "lutfile",
    "network",
    "pnm",
    "svd",
    "transform",
    "GridSet",
    "GridWeights",
    "HyperParams",
    "Image",
    "Lut2DSet",
    "Lut3D",
    "LutWeights",
    "ModelParams",
    "SvdLut",
    "SvdLutError",
    "validate",
]
