"""Tests for the one-sided Jacobi SVD and LUT factorization helpers."""

import numpy as np
import pytest

from svdlut import svd
from svdlut.core_types import Image, Lut2DSet, LutWeights
from svdlut.errors import BadRank, DimensionMismatch, NoConvergence

from reference import ref_apply_lut2d, ref_psnr


def frob(a):
    return float(np.sqrt(np.sum(np.asarray(a, dtype=np.float64) ** 2)))


def check_factors(f, n):
    assert f.u.shape == (n, n)
    assert f.vt.shape == (n, n)
    assert f.s.shape == (n,)
    assert f.u.dtype == np.float64
    eye = np.eye(n)
    assert np.max(np.abs(f.u.T @ f.u - eye)) <= 1e-5
    assert np.max(np.abs(f.vt @ f.vt.T - eye)) <= 1e-5
    assert np.all(f.s >= 0.0)
    assert np.all(np.diff(f.s) <= 0.0)


def test_identity_matrix_has_unit_singular_values():
    f = svd.jacobi_svd(np.eye(33))
    assert np.allclose(f.s, 1.0, atol=1e-12)
    check_factors(f, 33)


def test_rank_one_outer_product():
    rng = np.random.default_rng(11)
    u = rng.standard_normal(17)
    v = rng.standard_normal(17)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    f = svd.jacobi_svd(np.outer(u, v))
    assert abs(f.s[0] - 1.0) <= 1e-6
    assert np.max(np.abs(f.s[1:])) <= 1e-6
    check_factors(f, 17)


def test_singular_values_match_eigenvalue_route():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((17, 17))
    f = svd.jacobi_svd(a)
    # independent route: s_i = sqrt(eig(a^T a)), descending
    lam = np.linalg.eigvalsh(a.T @ a)
    s_ref = np.sqrt(np.clip(lam, 0.0, None))[::-1]
    assert np.max(np.abs(f.s - s_ref)) <= 1e-4
    recon = f.u @ np.diag(f.s) @ f.vt
    assert np.max(np.abs(recon - a)) <= 1e-5


def test_reconstruction_round_trip_various_sizes():
    rng = np.random.default_rng(7)
    for n in (2, 3, 5, 9, 16, 33):
        a = rng.standard_normal((n, n))
        f = svd.jacobi_svd(a)
        check_factors(f, n)
        assert np.max(np.abs(f.u @ np.diag(f.s) @ f.vt - a)) <= 1e-5


def test_zero_matrix():
    f = svd.jacobi_svd(np.zeros((9, 9)))
    assert np.all(f.s == 0.0)
    check_factors(f, 9)


def test_rank_deficient_factors_stay_orthonormal():
    # columns 4..32 of the input are exact linear combinations of the
    # first four; the factors must still be orthonormal to 1e-5
    rng = np.random.default_rng(29)
    basis = rng.standard_normal((33, 4))
    mix = rng.standard_normal((4, 33))
    a = basis @ mix
    f = svd.jacobi_svd(a)
    check_factors(f, 33)
    assert np.max(np.abs(f.u @ np.diag(f.s) @ f.vt - a)) <= 1e-5
    assert np.sum(f.s > 1e-8 * f.s[0]) == 4


def test_non_square_rejected():
    with pytest.raises(DimensionMismatch):
        svd.jacobi_svd(np.zeros((4, 5)))
    with pytest.raises(DimensionMismatch):
        svd.jacobi_svd(np.zeros(4))


def test_nonfinite_rejected():
    a = np.eye(5)
    a[2, 3] = np.nan
    with pytest.raises(Exception):
        svd.jacobi_svd(a)


def test_sweep_cap_raises(monkeypatch):
    monkeypatch.setattr(svd, "_SWEEP_CAP", 0)
    rng = np.random.default_rng(0)
    with pytest.raises(NoConvergence):
        svd.jacobi_svd(rng.standard_normal((5, 5)))


def test_truncate_full_rank_is_identity():
    rng = np.random.default_rng(13)
    a = rng.standard_normal((12, 12))
    f = svd.jacobi_svd(a)
    g = svd.truncate(f, 12)
    assert np.array_equal(g.u, f.u)
    assert np.array_equal(g.s, f.s)
    assert np.array_equal(g.vt, f.vt)


def test_truncate_rank_one_exact():
    u = np.zeros(6)
    v = np.zeros(6)
    u[1] = 1.0
    v[4] = 1.0
    a = 3.0 * np.outer(u, v)
    f = svd.jacobi_svd(a)
    g = svd.truncate(f, 1)
    assert g.s.shape == (1,)
    assert np.max(np.abs(svd.reconstruct(g) - a)) <= 1e-12


def test_truncate_bad_rank():
    f = svd.jacobi_svd(np.eye(4))
    for rank in (0, -1, 5):
        with pytest.raises(BadRank):
            svd.truncate(f, rank)


def test_truncation_error_non_increasing_and_eckart_young():
    rng = np.random.default_rng(17)
    a = rng.standard_normal((33, 33))
    f = svd.jacobi_svd(a)
    errs = []
    for n in range(1, 34):
        g = svd.truncate(f, n)
        err = frob(svd.reconstruct(g) - a)
        errs.append(err)
        # optimal-truncation identity: error equals the L2 norm of the
        # dropped singular values
        pred = float(np.sqrt(np.sum(f.s[n:] ** 2)))
        assert abs(err - pred) <= 1e-4
    for lo, hi in zip(errs[1:], errs[:-1]):
        assert lo <= hi + 1e-12


def test_reconstruct_linear_in_singular_values():
    rng = np.random.default_rng(23)
    a = rng.standard_normal((9, 9))
    f = svd.jacobi_svd(a)
    doubled = svd.SvdFactors(u=f.u, s=2.0 * f.s, vt=f.vt)
    assert np.max(np.abs(svd.reconstruct(doubled) - 2.0 * svd.reconstruct(f))) <= 1e-6


def test_reconstruct_zero_s_gives_zero():
    f = svd.jacobi_svd(np.eye(7))
    z = svd.SvdFactors(u=f.u, s=np.zeros(7), vt=f.vt)
    assert np.all(svd.reconstruct(z) == 0.0)


def test_factors_validation():
    eye = np.eye(4)
    s = np.array([2.0, 1.0, 0.5, 0.0])
    svd.SvdFactors(u=eye, s=s, vt=eye)
    with pytest.raises(Exception):
        svd.SvdFactors(u=2.0 * eye, s=s, vt=eye)
    with pytest.raises(Exception):
        svd.SvdFactors(u=eye, s=s[::-1].copy(), vt=eye)
    with pytest.raises(Exception):
        svd.SvdFactors(u=eye, s=-s, vt=eye)


def make_lut2d_random(rng, d=33):
    planes = rng.random((3, 3, d, d)).astype(np.float32)
    return Lut2DSet(planes)


def test_decompose_lut_shapes_and_errors():
    rng = np.random.default_rng(31)
    luts = make_lut2d_random(rng)
    factors, errors = svd.decompose_lut(luts, 8)
    assert factors.n_s == 8
    assert factors.d_t == 33
    assert factors.u.shape == (3, 3, 33, 8)
    assert factors.s.shape == (3, 3, 8)
    assert factors.vt.shape == (3, 3, 8, 33)
    assert errors.shape == (3, 3)
    assert np.all(errors >= 0.0)


def test_decompose_lut_full_rank_round_trip():
    rng = np.random.default_rng(37)
    luts = make_lut2d_random(rng)
    factors, errors = svd.decompose_lut(luts, 33)
    assert np.max(errors) <= 1e-5
    back = svd.reconstruct_lut(factors)
    assert back.d_t == 33
    assert np.max(np.abs(back.planes.astype(np.float64) - luts.planes)) <= 1e-5


def test_decompose_lut_error_matches_dropped_mass():
    rng = np.random.default_rng(41)
    luts = make_lut2d_random(rng, d=17)
    factors, errors = svd.decompose_lut(luts, 5)
    for c in range(3):
        for p in range(3):
            full = svd.jacobi_svd(luts.planes[c, p].astype(np.float64))
            pred = float(np.sqrt(np.sum(full.s[5:] ** 2)))
            assert abs(float(errors[c, p]) - pred) <= 1e-3


def test_decompose_lut_bad_rank():
    rng = np.random.default_rng(43)
    luts = make_lut2d_random(rng, d=9)
    for rank in (0, 10):
        with pytest.raises(BadRank):
            svd.decompose_lut(luts, rank)


def test_storage_ratio_below_threshold():
    # factored 2D tables at rank 8 versus a dense 33^3 cube
    d, rank = 33, 8
    factored = 3 * (2 * d * rank + rank)
    assert factored / d**3 < 0.12


def identity_weights():
    w = np.zeros((3, 3), dtype=np.float32)
    b = np.zeros(3, dtype=np.float32)
    return LutWeights(w=w, b=b)


def test_rank_sweep_full_rank_row_is_inf():
    rng = np.random.default_rng(47)
    luts = make_lut2d_random(rng, d=17)
    img = Image(10, 8, rng.random((3, 8, 10)).astype(np.float32))
    rows = svd.rank_sweep(luts, [img], ranks=(1, 4, 17))
    assert len(rows) == 3
    ranks = [r[0] for r in rows]
    assert ranks == [1, 4, 17]
    assert rows[-1][1] == float("inf")
    for rank, _, params in rows:
        assert params == 2 * 17 * rank + rank


def test_rank_sweep_separable_planes_exact_at_rank_one():
    # power-of-two row factors keep the outer products exactly rank one
    # in float32, so rank 1 already reproduces the full-rank output and
    # the psnr marker saturates
    d = 17
    sigma = (0.5 ** np.arange(d)).astype(np.float32)
    tau = np.linspace(0.25, 1.0, d, dtype=np.float32)
    planes = np.empty((3, 3, d, d), dtype=np.float32)
    for c in range(3):
        for p in range(3):
            planes[c, p] = np.outer(sigma, tau) * 2.0 ** (-(c + p))
    luts = Lut2DSet(planes)
    img = Image(6, 5, np.random.default_rng(1).random((3, 5, 6)).astype(np.float32))
    rows = svd.rank_sweep(luts, [img], ranks=(1, 2, d))
    assert all(np.isinf(psnr) for _, psnr, _ in rows)


def test_rank_sweep_matches_straight_loop_recomputation():
    rng = np.random.default_rng(53)
    d = 9
    luts = make_lut2d_random(rng, d=d)
    weights = identity_weights()
    data = rng.random((3, 12, 10)).astype(np.float32)
    img = Image(10, 12, data)
    rows = svd.rank_sweep(luts, [img], ranks=(1, 3, 6, 9), weights=weights)

    # rebuild the truncated planes through the same factor route the
    # sweep uses, then score them with the straight-loop transform and
    # psnr instead of the production ones
    factors = [[svd.jacobi_svd(luts.planes[c, p]) for p in range(3)] for c in range(3)]

    def rebuilt_planes(rank):
        planes = np.zeros((3, 3, d, d), dtype=np.float32)
        for c in range(3):
            for p in range(3):
                cut = svd.truncate(factors[c][p], rank)
                planes[c, p] = svd.reconstruct(cut).astype(np.float32)
        return planes

    base = ref_apply_lut2d(data, rebuilt_planes(d), weights.w, weights.b)
    for rank, psnr, params in rows:
        out = ref_apply_lut2d(data, rebuilt_planes(rank), weights.w, weights.b)
        want = ref_psnr(out, base)
        assert params == 2 * d * rank + rank
        if np.isinf(want):
            assert np.isinf(psnr)
        else:
            assert abs(psnr - want) <= 1e-3


def test_rank_sweep_errors():
    rng = np.random.default_rng(59)
    luts = make_lut2d_random(rng, d=9)
    img = Image(4, 4, rng.random((3, 4, 4)).astype(np.float32))
    with pytest.raises(BadRank):
        svd.rank_sweep(luts, [img], ranks=(0, 3))
    with pytest.raises(BadRank):
        svd.rank_sweep(luts, [img], ranks=(3, 10))
