"""Stage-wise latency benchmarks for the naive and fused pipelines.

Each rep runs the full pipeline on a held synthetic image, timing every
stage with the monotonic performance counter; a rep's total is the sum
of its stage times. Reports carry median, p10 and p90 per stage. Image
synthesis and I/O are never inside a timed section.

The naive pipeline times slicing, LUT transform and the combine step
separately because it materializes each intermediate; the fused pipeline
has a single per-pixel stage. ``threads`` only affects the fused kernel
(the stage ops are single-threaded), so naive rows always report 1.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import network, svd, transform
from .core_types import Image, ModelParams
from .errors import BadResolution

__all__ = ["StageTiming", "BenchReport", "parse_resolution", "synth_image", "run_suite"]

_ALIASES = {
    "480p": (854, 480),
    "720p": (1280, 720),
    "1080p": (1920, 1080),
    "4k": (3840, 2160),
}

DEFAULT_RESOLUTIONS = ("854x480", "3840x2160")


@dataclass(frozen=True)
class StageTiming:
    pipeline: str
    resolution: str
    stage: str
    median_ms: float
    p10_ms: float
    p90_ms: float
    reps: int
    threads: int


@dataclass(frozen=True)
class BenchReport:
    rows: "tuple[StageTiming, ...]"

    def to_csv(self) -> str:
        lines = ["pipeline,resolution,stage,median_ms,p10_ms,p90_ms,reps,threads"]
        for r in self.rows:
            lines.append(
                f"{r.pipeline},{r.resolution},{r.stage},"
                f"{r.median_ms:.4f},{r.p10_ms:.4f},{r.p90_ms:.4f},{r.reps},{r.threads}"
            )
        return "\n".join(lines) + "\n"

    def stage_median(self, pipeline: str, resolution: str, stage: str) -> float:
        for r in self.rows:
            if (r.pipeline, r.resolution, r.stage) == (pipeline, resolution, stage):
                return r.median_ms
        raise KeyError(f"no row for {pipeline}/{resolution}/{stage}")


def parse_resolution(label: str):
    """(width, height) from a WxH label or a named alias like 480p/4k."""
    key = label.strip().lower()
    if key in _ALIASES:
        return _ALIASES[key]
    parts = key.split("x")
    if len(parts) == 2:
        try:
            w, h = int(parts[0]), int(parts[1])
        except ValueError:
            raise BadResolution(f"cannot parse resolution {label!r}") from None
        if w >= 2 and h >= 2:
            return w, h
    raise BadResolution(f"cannot parse resolution {label!r}")


def synth_image(width: int, height: int, seed: int = 0) -> Image:
    """Seeded uniform-noise test image."""
    rng = np.random.default_rng(seed)
    return Image(width, height, rng.random((3, height, width), dtype=np.float32))


def _time_stages_naive(img, params):
    t = {}
    clock = time.perf_counter
    t0 = clock()
    ctx = network.backbone_forward(img, params)
    t["backbone"] = clock() - t0
    t0 = clock()
    grids, gw = network.grid_heads_forward(ctx, params)
    t["grid_weight_gen"] = clock() - t0
    t0 = clock()
    factors, lw = network.lut_heads_forward(ctx, params)
    luts = svd.reconstruct_lut(factors)
    t["lut_weight_gen"] = clock() - t0
    t0 = clock()
    fs = transform.slice_grid2d(img, grids, gw)
    t["slicing"] = clock() - t0
    t0 = clock()
    base = transform.apply_lut2d(img, luts, lw)
    t["lut_transform"] = clock() - t0
    t0 = clock()
    out = transform.combine_slices(base, fs)
    t["fusion"] = clock() - t0
    t["total"] = sum(t.values())
    return t, out


def _time_stages_fused(img, params, threads):
    t = {}
    clock = time.perf_counter
    t0 = clock()
    ctx = network.backbone_forward(img, params)
    t["backbone"] = clock() - t0
    t0 = clock()
    grids, gw = network.grid_heads_forward(ctx, params)
    t["grid_weight_gen"] = clock() - t0
    t0 = clock()
    factors, lw = network.lut_heads_forward(ctx, params)
    luts = svd.reconstruct_lut(factors)
    t["lut_weight_gen"] = clock() - t0
    t0 = clock()
    out = transform.fused_enhance(img, luts, lw, grids, gw, threads=threads)
    t["fused_transform"] = clock() - t0
    t["total"] = sum(t.values())
    return t, out


_NAIVE_STAGES = ("backbone", "grid_weight_gen", "lut_weight_gen", "slicing", "lut_transform", "fusion", "total")
_FUSED_STAGES = ("backbone", "grid_weight_gen", "lut_weight_gen", "fused_transform", "total")


def run_suite(
    params: ModelParams,
    resolutions=DEFAULT_RESOLUTIONS,
    reps: int = 5,
    pipeline: str = "both",
    threads: int = 1,
    seed: int = 0,
) -> BenchReport:
    """Median/p10/p90 stage timings per resolution and pipeline.

    Runs max(1, reps // 10) untimed warmup reps first (also paying any
    one-time kernel compilation). When both pipelines run, their outputs
    are checked against each other once per resolution (<= 1e-5).
    """
    if reps < 3:
        raise ValueError(f"reps must be >= 3, got {reps}")
    if pipeline not in ("naive", "fused", "both"):
        raise ValueError(f"pipeline must be naive, fused or both, got {pipeline!r}")
    rows = []
    warmup = max(1, reps // 10)
    for idx, label in enumerate(resolutions):
        w, h = parse_resolution(label)
        img = synth_image(w, h, seed + idx)
        runs = {}
        outputs = {}
        for name in ("naive", "fused"):
            if pipeline not in (name, "both"):
                continue
            timer = (
                (lambda: _time_stages_naive(img, params))
                if name == "naive"
                else (lambda: _time_stages_fused(img, params, threads))
            )
            for _ in range(warmup):
                timer()
            samples = []
            for _ in range(reps):
                stage_times, out = timer()
                samples.append(stage_times)
            runs[name] = samples
            outputs[name] = out
        if pipeline == "both":
            gap = float(np.abs(outputs["naive"].data - outputs["fused"].data).max())
            if gap > 1e-5:
                raise AssertionError(f"pipelines disagree by {gap} at {label}")
        for name, samples in runs.items():
            stages = _NAIVE_STAGES if name == "naive" else _FUSED_STAGES
            for stage in stages:
                vals = np.array([s[stage] for s in samples]) * 1e3
                rows.append(
                    StageTiming(
                        pipeline=name,
                        resolution=label,
                        stage=stage,
                        median_ms=float(np.median(vals)),
                        p10_ms=float(np.percentile(vals, 10)),
                        p90_ms=float(np.percentile(vals, 90)),
                        reps=reps,
                        threads=threads if name == "fused" else 1,
                    )
                )
    return BenchReport(tuple(rows))
