"""End-to-end tests of the command-line interface (in-process)."""

import numpy as np
import pytest

from svdlut import cli, lutfile, network, pnm
from svdlut.core_types import Lut2DSet, LutWeights

from conftest import identity_lut3d, make_image, make_lut2d, make_lut_weights


def write_ppm(path, width=12, height=10, seed=0, bits=8):
    img = make_image(width, height, seed=seed)
    pnm.save(path, img, bits=bits)
    return path


def separable_lut2d(d=9):
    # exact rank-one planes: power-of-two row factors keep every product
    # representable, so rank-1 compression is lossless
    sigma = (0.5 ** np.arange(d)).astype(np.float32)
    tau = np.linspace(0.25, 1.0, d, dtype=np.float32)
    planes = np.empty((3, 3, d, d), dtype=np.float32)
    for c in range(3):
        for p in range(3):
            planes[c, p] = np.outer(sigma, tau) * 2.0 ** (-(c + p))
    return Lut2DSet(planes)


def test_enhance_identity_lut_within_one_level(tmp_path):
    src = write_ppm(tmp_path / "in.ppm", seed=9)
    lut_path = tmp_path / "id.lut"
    lutfile.write_lut3d(lut_path, identity_lut3d(d=17))
    out = tmp_path / "out.ppm"
    rc = cli.main([
        "enhance", str(src), str(out), "--lut", str(lut_path),
    ])
    assert rc == 0
    a = pnm.load(src)
    b = pnm.load(out)
    assert np.max(np.abs(a.data - b.data)) <= np.float32(1.0 / 255) + 1e-7


def test_enhance_seed_deterministic(tmp_path, capsys):
    src = write_ppm(tmp_path / "in.ppm", seed=1)
    out1 = tmp_path / "a.ppm"
    out2 = tmp_path / "b.ppm"
    assert cli.main(["enhance", str(src), str(out1), "--seed", "5"]) == 0
    assert cli.main(["enhance", str(src), str(out2), "--seed", "5"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    printed = capsys.readouterr().out
    assert "stage timings:" in printed
    assert f"wrote {out1}" in printed


def test_enhance_fused_and_naive_agree(tmp_path):
    src = write_ppm(tmp_path / "in.ppm", seed=2)
    fused = tmp_path / "f.ppm"
    naive = tmp_path / "n.ppm"
    assert cli.main(["enhance", str(src), str(fused), "--seed", "3", "--fused"]) == 0
    assert cli.main(["enhance", str(src), str(naive), "--seed", "3", "--naive"]) == 0
    a = pnm.load(fused)
    b = pnm.load(naive)
    assert np.max(np.abs(a.data - b.data)) <= np.float32(1.0 / 255) + 1e-7


def test_enhance_verify_reports_gap(tmp_path, capsys):
    src = write_ppm(tmp_path / "in.ppm", seed=3)
    out = tmp_path / "out.ppm"
    rc = cli.main(["enhance", str(src), str(out), "--seed", "7", "--verify"])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "verify: max |fused - naive| = " in printed
    gap = float(printed.split("verify: max |fused - naive| = ")[1].split()[0])
    assert gap <= 1e-5


def test_enhance_verify_with_static_lut_is_usage_error(tmp_path):
    src = write_ppm(tmp_path / "in.ppm")
    lut_path = tmp_path / "id.lut"
    lutfile.write_lut3d(lut_path, identity_lut3d(d=5))
    with pytest.raises(SystemExit) as err:
        cli.main(["enhance", str(src), str(tmp_path / "o.ppm"), "--lut", str(lut_path), "--verify"])
    assert err.value.code == 2


def test_enhance_weight_file_source(tmp_path):
    src = write_ppm(tmp_path / "in.ppm", seed=4)
    wpath = tmp_path / "model.svdw"
    network.save_weights(wpath, network.random_init(11))
    out = tmp_path / "out.ppm"
    assert cli.main(["enhance", str(src), str(out), "--weights", str(wpath)]) == 0
    ref = tmp_path / "ref.ppm"
    assert cli.main(["enhance", str(src), str(ref), "--seed", "11"]) == 0
    assert out.read_bytes() == ref.read_bytes()


def test_enhance_sixteen_bit_output(tmp_path):
    src = write_ppm(tmp_path / "in.ppm", seed=5)
    out = tmp_path / "deep.ppm"
    assert cli.main(["enhance", str(src), str(out), "--seed", "1", "--bits", "16"]) == 0
    assert out.read_bytes().startswith(b"P6\n12 10\n65535\n")


def test_enhance_2d_lut_file_source(tmp_path):
    src = write_ppm(tmp_path / "in.ppm", seed=6)
    lut_path = tmp_path / "planes.lut"
    lutfile.write_lut2d(lut_path, make_lut2d(d=5, seed=8), make_lut_weights(seed=9))
    out = tmp_path / "out.ppm"
    assert cli.main(["enhance", str(src), str(out), "--lut", str(lut_path)]) == 0
    assert out.exists()


def test_enhance_missing_input_fails_cleanly(tmp_path, capsys):
    rc = cli.main(["enhance", str(tmp_path / "nope.ppm"), str(tmp_path / "o.ppm"), "--seed", "0"])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_enhance_requires_model_source(tmp_path):
    src = write_ppm(tmp_path / "in.ppm")
    with pytest.raises(SystemExit) as err:
        cli.main(["enhance", str(src), str(tmp_path / "o.ppm")])
    assert err.value.code == 2


def test_svd_full_rank_round_trip(tmp_path, capsys):
    d = 9
    in_path = tmp_path / "in.lut"
    out_path = tmp_path / "out.lut"
    luts = make_lut2d(d=d, seed=10)
    weights = make_lut_weights(seed=11)
    lutfile.write_lut2d(in_path, luts, weights)
    rc = cli.main(["svd", str(in_path), str(out_path), "--rank", str(d)])
    assert rc == 0
    back, back_w = lutfile.read_lut2d(out_path)
    assert np.max(np.abs(back.planes - luts.planes)) <= 1e-5
    assert np.array_equal(back_w.w, weights.w)
    printed = capsys.readouterr().out
    assert f"rank {d}: wrote {out_path} and {out_path}.errors.csv" in printed
    csv = (tmp_path / "out.lut.errors.csv").read_text().strip().split("\n")
    assert csv[0] == "channel,pair,frobenius_error"
    assert len(csv) == 10
    assert all(float(line.split(",")[2]) <= 1e-5 for line in csv[1:])


def test_svd_rank_one_exact_on_separable_planes(tmp_path):
    in_path = tmp_path / "sep.lut"
    out_path = tmp_path / "rank1.lut"
    luts = separable_lut2d(d=9)
    lutfile.write_lut2d(in_path, luts, make_lut_weights(seed=12))
    assert cli.main(["svd", str(in_path), str(out_path), "--rank", "1"]) == 0
    back, _ = lutfile.read_lut2d(out_path)
    assert np.max(np.abs(back.planes - luts.planes)) <= 1e-5


def test_svd_errors_csv_custom_path(tmp_path):
    in_path = tmp_path / "in.lut"
    lutfile.write_lut2d(in_path, make_lut2d(d=5, seed=13), make_lut_weights())
    csv_path = tmp_path / "errs.csv"
    rc = cli.main([
        "svd", str(in_path), str(tmp_path / "o.lut"), "--rank", "2",
        "--errors", str(csv_path),
    ])
    assert rc == 0
    assert csv_path.read_text().startswith("channel,pair,frobenius_error\n")


def test_svd_bad_rank_fails_cleanly(tmp_path, capsys):
    in_path = tmp_path / "in.lut"
    lutfile.write_lut2d(in_path, make_lut2d(d=5), make_lut_weights())
    for rank in ("0", "99"):
        rc = cli.main(["svd", str(in_path), str(tmp_path / "o.lut"), "--rank", rank])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


def test_svd_rejects_non_lut_input(tmp_path, capsys):
    junk = tmp_path / "junk.lut"
    junk.write_text("hello\nworld\n")
    rc = cli.main(["svd", str(junk), str(tmp_path / "o.lut")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_analyze_writes_csv_and_heatmaps(tmp_path, capsys):
    imgs = [
        str(write_ppm(tmp_path / "a.ppm", seed=20)),
        str(write_ppm(tmp_path / "b.ppm", seed=21)),
    ]
    outdir = tmp_path / "report"
    outdir.mkdir()
    rc = cli.main(["analyze", *imgs, "--vertices", "9", "--outdir", str(outdir)])
    assert rc == 0
    csv = (outdir / "utilization.csv").read_text().strip().split("\n")
    assert csv[0] == "image,vertices,mode,rate_percent"
    assert len(csv) == 1 + 2 * 3
    for name in ("rg", "rb", "gb"):
        counts = pnm.read_pgm16(outdir / f"occurrence_{name}.pgm")
        assert counts.shape == (9, 9)
        assert counts.max() == 65535
    printed = capsys.readouterr().out
    assert printed.count("wrote ") == 4


def test_analyze_constant_image_rate(tmp_path):
    data = np.full((3, 4, 4), 0.3, dtype=np.float32)
    from svdlut.core_types import Image

    pnm.save(tmp_path / "c.ppm", Image(4, 4, data))
    outdir = tmp_path
    rc = cli.main(["analyze", str(tmp_path / "c.ppm"), "--outdir", str(outdir)])
    assert rc == 0
    rows = (outdir / "utilization.csv").read_text().strip().split("\n")[1:]
    rate_3d = float(rows[2].split(",")[3])
    assert rate_3d == pytest.approx(8 / 33**3 * 100.0, rel=1e-4)


def test_analyze_without_images_is_usage_error():
    with pytest.raises(SystemExit) as err:
        cli.main(["analyze"])
    assert err.value.code == 2


def test_bench_writes_csv(tmp_path, capsys):
    out = tmp_path / "timings.csv"
    rc = cli.main([
        "bench", "--resolutions", "16x12", "--reps", "3",
        "--pipeline", "fused", "--output", str(out),
    ])
    assert rc == 0
    printed = capsys.readouterr().out
    assert printed.startswith("pipeline,resolution,stage,")
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 1 + 5  # fused pipeline: 4 stages plus total
    assert f"wrote {out}" in printed


def test_bench_low_reps_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as err:
        cli.main(["bench", "--reps", "0", "--output", str(tmp_path / "x.csv")])
    assert err.value.code == 2


def test_bench_bad_resolution_fails_cleanly(tmp_path, capsys):
    rc = cli.main([
        "bench", "--resolutions", "banana", "--reps", "3",
        "--output", str(tmp_path / "x.csv"),
    ])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as err:
        cli.main([])
    assert err.value.code == 2
