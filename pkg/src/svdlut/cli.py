"""Command-line tool: enhance images, compress LUTs, analyze usage, benchmark.

Exit codes: 0 success, 1 runtime failure (I/O, parse, validation),
2 usage error. Every output file is written atomically.
"""

import argparse
import sys
import time

import numpy as np

from . import analysis, bench, lutfile, network, pnm, svd, transform
from .errors import SvdLutError
from .pnm import _atomic_write

__all__ = ["main", "build_parser"]

_VERIFY_TOL = 1e-5


def _print_timing(stages: "dict[str, float]") -> None:
    print("stage timings:")
    for name, seconds in stages.items():
        print(f"  {name:<16s} {seconds * 1e3:9.2f} ms")


def _enhance_with_model(args, img):
    if args.weights is not None:
        params = network.load_weights(args.weights)
    else:
        params = network.random_init(args.seed)
    if args.verify:
        t_naive, out_naive = bench._time_stages_naive(img, params)
        t_fused, out_fused = bench._time_stages_fused(img, params, args.threads)
        gap = float(np.abs(out_naive.data - out_fused.data).max())
        print(f"verify: max |fused - naive| = {gap:.3e}")
        if gap > _VERIFY_TOL:
            raise SvdLutError(f"fused/naive disagreement {gap:.3e} exceeds {_VERIFY_TOL}")
        return (t_naive, out_naive) if args.naive else (t_fused, out_fused)
    if args.naive:
        return bench._time_stages_naive(img, params)
    return bench._time_stages_fused(img, params, args.threads)


def _enhance_with_lut(args, img):
    kind = lutfile.sniff(args.lut)
    t0 = time.perf_counter()
    if kind == "2d":
        planes, weights = lutfile.read_lut2d(args.lut)
        parse = time.perf_counter() - t0
        t0 = time.perf_counter()
        out = transform.apply_lut2d(img, planes, weights)
        stage = "lut2d_transform"
    else:
        lut = lutfile.read_lut3d(args.lut)
        parse = time.perf_counter() - t0
        t0 = time.perf_counter()
        out = transform.apply_lut3d(img, lut)
        stage = "lut3d_transform"
    apply_t = time.perf_counter() - t0
    return {"lut_parse": parse, stage: apply_t, "total": parse + apply_t}, out


def cmd_enhance(args, parser) -> int:
    if args.verify and args.lut is not None:
        parser.error("--verify needs a model source (--weights or --seed)")
    img = pnm.load(args.input)
    if args.lut is not None:
        stages, out = _enhance_with_lut(args, img)
    else:
        stages, out = _enhance_with_model(args, img)
    pnm.save(args.output, out, bits=args.bits)
    _print_timing(stages)
    print(f"wrote {args.output}")
    return 0


def cmd_svd(args, parser) -> int:
    planes, weights = lutfile.read_lut2d(args.input)
    factors, errors = svd.decompose_lut(planes, args.rank)
    recon = svd.reconstruct_lut(factors)
    lutfile.write_lut2d(args.output, recon, weights)
    lines = ["channel,pair,frobenius_error"]
    for c, ch in enumerate("rgb"):
        for p, pair in enumerate(("rg", "rb", "gb")):
            lines.append(f"{ch},{pair},{errors[c, p]:.6g}")
    csv_path = args.errors if args.errors else f"{args.output}.errors.csv"
    _atomic_write(csv_path, ("\n".join(lines) + "\n").encode("ascii"))
    print(f"rank {args.rank}: wrote {args.output} and {csv_path}")
    print(f"max plane error {errors.max():.6g}")
    return 0


def cmd_analyze(args, parser) -> int:
    d = args.vertices
    lines = ["image,vertices,mode,rate_percent"]
    occ = None
    for path in args.images:
        img = pnm.load(path)
        for mode in ("1d", "2d", "3d"):
            rate = analysis.utilization_rate(img, d, mode)
            lines.append(f"{path},{d},{mode},{rate:.6g}")
        stats = analysis.occurrence_stats([img], d)
        occ = stats if occ is None else analysis.merge_occurrence(occ, stats)
    csv_path = f"{args.outdir}/utilization.csv"
    _atomic_write(csv_path, ("\n".join(lines) + "\n").encode("ascii"))
    written = [csv_path]
    for name, proj in (("rg", occ.proj_rg), ("rb", occ.proj_rb), ("gb", occ.proj_gb)):
        path = f"{args.outdir}/occurrence_{name}.pgm"
        pnm.write_pgm16(path, analysis.heatmap_u16(proj))
        written.append(path)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_bench(args, parser) -> int:
    if args.reps < 3:
        parser.error(f"--reps must be at least 3, got {args.reps}")
    if args.weights is not None:
        params = network.load_weights(args.weights)
    else:
        params = network.random_init(args.seed)
    report = bench.run_suite(
        params,
        resolutions=args.resolutions,
        reps=args.reps,
        pipeline=args.pipeline,
        threads=args.threads,
        seed=args.seed,
    )
    csv = report.to_csv()
    sys.stdout.write(csv)
    _atomic_write(args.output, csv.encode("ascii"))
    print(f"wrote {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svdlut",
        description="Image enhancement with SVD-compressed 2D LUTs and bilateral grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="transform an image with a model or a LUT file")
    p.add_argument("input", help="input image (P6, 8 or 16 bit)")
    p.add_argument("output", help="output image path")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--weights", help="model weight file")
    src.add_argument("--lut", help="static LUT file (2D set or 3D cube)")
    src.add_argument("--seed", type=int, help="random model weights from this seed")
    pipe = p.add_mutually_exclusive_group()
    pipe.add_argument("--fused", action="store_true", help="single-pass kernel (default)")
    pipe.add_argument("--naive", action="store_true", help="materializing multi-stage pipeline")
    p.add_argument("--verify", action="store_true", help="run both pipelines and compare")
    p.add_argument("--bits", type=int, choices=(8, 16), default=8, help="output bit depth")
    p.add_argument("--threads", type=int, default=1, help="threads for the fused kernel")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("svd", help="low-rank compress a 2D LUT file")
    p.add_argument("input", help="2D LUT file")
    p.add_argument("output", help="reconstructed 2D LUT file")
    p.add_argument("--rank", type=int, default=8, help="retained singular values")
    p.add_argument("--errors", help="per-plane error CSV path (default OUTPUT.errors.csv)")
    p.set_defaults(func=cmd_svd)

    p = sub.add_parser("analyze", help="vertex utilization and occurrence heatmaps")
    p.add_argument("images", nargs="+", help="input images")
    p.add_argument("--vertices", type=int, default=33, help="table vertices per axis")
    p.add_argument("--outdir", default=".", help="directory for CSV and heatmaps")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bench", help="stage-timing benchmark")
    p.add_argument("--resolutions", nargs="+", default=list(bench.DEFAULT_RESOLUTIONS))
    p.add_argument("--reps", type=int, default=5, help="timed repetitions (>= 3)")
    p.add_argument("--pipeline", choices=("naive", "fused", "both"), default="both")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--weights", help="model weight file")
    src.add_argument("--seed", type=int, default=0, help="random model weights")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", default="bench.csv", help="CSV output path")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (SvdLutError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
