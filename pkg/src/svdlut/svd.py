"""Singular value decomposition and low-rank compression of LUT planes.

The decomposition is a self-contained one-sided Jacobi: cyclic sweeps of
plane rotations orthogonalize the working columns of A, after which the
column norms are the singular values, the normalized columns form U, and
the accumulated rotations form V. A pair is rotated while its normalized
coherence |wp.wq|/(|wp||wq|) exceeds 1e-12, which is what keeps U
orthonormal even for rank-deficient input; columns whose norm falls to
1e-12 of the matrix norm are numerically zero, excluded from rotations,
and replaced by an orthonormal completion at the end. More than 60
sweeps raises NoConvergence. Factors are kept in float64 so
orthogonality and reconstruction residuals stay far below the
advertised 1e-5.

Truncating the sorted factors to the leading n terms gives the best
rank-n approximation; the Frobenius error equals the norm of the dropped
singular values.
"""

import math
from dataclasses import dataclass

import numpy as np

from .analysis import psnr
from .core_types import Image, Lut2DSet, LutWeights, SvdLut
from .errors import BadRank, DimensionMismatch, NoConvergence, NonFiniteValue
from .transform import apply_lut2d

__all__ = [
    "SvdFactors",
    "jacobi_svd",
    "truncate",
    "reconstruct",
    "decompose_lut",
    "reconstruct_lut",
    "rank_sweep",
]

_SWEEP_CAP = 60
_OFFDIAG_RTOL = 1e-12
_ORTHO_TOL = 1e-5


@dataclass(frozen=True)
class SvdFactors:
    """U (n, r), S (r,), Vt (r, n) with orthonormal U columns and V rows,
    singular values nonnegative and non-increasing."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    def __post_init__(self):
        u = np.ascontiguousarray(self.u, dtype=np.float64)
        s = np.ascontiguousarray(self.s, dtype=np.float64)
        vt = np.ascontiguousarray(self.vt, dtype=np.float64)
        r = s.shape[0] if s.ndim == 1 else -1
        if u.ndim != 2 or vt.ndim != 2 or r < 1 or u.shape[1] != r or vt.shape[0] != r:
            raise DimensionMismatch(
                f"inconsistent factor shapes u={u.shape} s={s.shape} vt={vt.shape}"
            )
        if not (np.isfinite(u).all() and np.isfinite(s).all() and np.isfinite(vt).all()):
            raise NonFiniteValue("factors contain non-finite entries")
        if (s < 0).any() or (np.diff(s) > 0).any():
            raise DimensionMismatch("singular values must be nonnegative, non-increasing")
        for mat, name in ((u, "U"), (vt.T, "V")):
            gram = mat.T @ mat
            if np.abs(gram - np.eye(gram.shape[0])).max() > _ORTHO_TOL:
                raise DimensionMismatch(f"{name} columns are not orthonormal")
        for arr in (u, s, vt):
            arr.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "vt", vt)

    @property
    def rank(self) -> int:
        return self.s.shape[0]


def _orthonormal_fill(u, cols):
    """Replace the listed zero columns with vectors orthonormal to the rest."""
    n = u.shape[0]
    have = [i for i in range(u.shape[1]) if i not in cols]
    basis = [u[:, i] for i in have]
    for i in cols:
        for j in range(n):
            cand = np.zeros(n)
            cand[j] = 1.0
            for q in basis:
                cand -= (q @ cand) * q
            norm = np.linalg.norm(cand)
            if norm > 0.5:
                cand /= norm
                u[:, i] = cand
                basis.append(cand)
                break


def jacobi_svd(a) -> SvdFactors:
    """Full SVD of a square matrix by one-sided Jacobi rotations."""
    w = np.array(a, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {w.shape}")
    if not np.isfinite(w).all():
        raise NonFiniteValue("matrix contains non-finite entries")
    n = w.shape[1]
    v = np.eye(n)
    # columns at or below this norm are numerically zero
    dead = _OFFDIAG_RTOL * math.sqrt(float(np.sum(w * w)))
    dead2 = dead * dead
    rtol2 = _OFFDIAG_RTOL * _OFFDIAG_RTOL
    for _ in range(_SWEEP_CAP):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                wp = w[:, p]
                wq = w[:, q]
                app = float(wp @ wp)
                aqq = float(wq @ wq)
                if app <= dead2 or aqq <= dead2:
                    continue
                c = float(wp @ wq)
                # relative coherence test; an absolute one would leave
                # small columns mutually skewed after normalization
                if c * c <= rtol2 * app * aqq:
                    continue
                rotated = True
                zeta = (aqq - app) / (2.0 * c)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                cs = 1.0 / math.hypot(1.0, t)
                sn = t * cs
                new_p = cs * wp - sn * wq
                new_q = sn * wp + cs * wq
                w[:, p] = new_p
                w[:, q] = new_q
                vp = v[:, p].copy()
                v[:, p] = cs * vp - sn * v[:, q]
                v[:, q] = sn * vp + cs * v[:, q]
        if not rotated:
            break
    else:
        raise NoConvergence(f"no convergence in {_SWEEP_CAP} sweeps")
    s = np.linalg.norm(w, axis=0)
    s[s <= dead] = 0.0
    order = np.argsort(-s, kind="stable")
    s = s[order]
    w = w[:, order]
    v = v[:, order]
    u = np.zeros_like(w)
    zeros = []
    for i in range(n):
        if s[i] > 0.0:
            u[:, i] = w[:, i] / s[i]
        else:
            zeros.append(i)
    if zeros:
        _orthonormal_fill(u, set(zeros))
    # sign convention: the largest-magnitude entry of each U column is
    # made nonnegative so the factorization is unique and reproducible
    for i in range(n):
        j = int(np.argmax(np.abs(u[:, i])))
        if u[j, i] < 0.0:
            u[:, i] = -u[:, i]
            v[:, i] = -v[:, i]
    return SvdFactors(u, s, v.T)


def truncate(factors: SvdFactors, n_s: int) -> SvdFactors:
    """Keep the leading n_s singular triples."""
    if not 1 <= n_s <= factors.rank:
        raise BadRank(f"rank {n_s} outside 1..{factors.rank}")
    return SvdFactors(
        factors.u[:, :n_s].copy(),
        factors.s[:n_s].copy(),
        factors.vt[:n_s].copy(),
    )


def reconstruct(factors: SvdFactors) -> np.ndarray:
    """U * diag(S) * Vt as a float64 matrix."""
    return (factors.u * factors.s) @ factors.vt


def decompose_lut(luts: Lut2DSet, n_s: int):
    """Factor all nine planes and truncate to rank n_s.

    Returns the factored set and a (3, 3) array of per-plane Frobenius
    reconstruction errors at that rank.
    """
    d = luts.d_t
    if not 1 <= n_s <= d:
        raise BadRank(f"rank {n_s} outside 1..{d}")
    u = np.zeros((3, 3, d, n_s), dtype=np.float32)
    s = np.zeros((3, 3, n_s), dtype=np.float32)
    vt = np.zeros((3, 3, n_s, d), dtype=np.float32)
    errors = np.zeros((3, 3))
    for c in range(3):
        for p in range(3):
            full = jacobi_svd(luts.planes[c, p])
            cut = truncate(full, n_s)
            u[c, p] = cut.u
            s[c, p] = cut.s
            vt[c, p] = cut.vt
            errors[c, p] = math.sqrt(float(np.sum(full.s[n_s:] ** 2)))
    return SvdLut(u, s, vt), errors


def reconstruct_lut(svdlut: SvdLut) -> Lut2DSet:
    """Multiply the factored planes back into a dense Lut2DSet."""
    d = svdlut.d_t
    planes = np.zeros((3, 3, d, d), dtype=np.float32)
    for c in range(3):
        for p in range(3):
            u = svdlut.u[c, p].astype(np.float64)
            s = svdlut.s[c, p].astype(np.float64)
            vt = svdlut.vt[c, p].astype(np.float64)
            planes[c, p] = ((u * s) @ vt).astype(np.float32)
    return Lut2DSet(planes)


def rank_sweep(luts: Lut2DSet, images, ranks, weights: LutWeights = None):
    """PSNR and storage cost of applying rank-truncated planes.

    The baseline is the full-rank reconstruction's output, so the top
    rank is exactly lossless and reports the infinite marker. PSNR is
    averaged over the supplied images. Per-plane storage is
    2*d_t*rank + rank floats. Returns (rank, psnr_db, params) rows.
    """
    if weights is None:
        weights = LutWeights(np.ones((3, 3), np.float32), np.zeros(3, np.float32))
    d = luts.d_t
    factors = [[jacobi_svd(luts.planes[c, p]) for p in range(3)] for c in range(3)]

    def rebuild(rank):
        planes = np.zeros((3, 3, d, d), dtype=np.float32)
        for c in range(3):
            for p in range(3):
                planes[c, p] = reconstruct(truncate(factors[c][p], rank)).astype(np.float32)
        return Lut2DSet(planes)

    base_lut = rebuild(d)
    baselines = [apply_lut2d(img, base_lut, weights) for img in images]
    rows = []
    for rank in ranks:
        if not 1 <= rank <= d:
            raise BadRank(f"rank {rank} outside 1..{d}")
        cut_lut = rebuild(rank)
        vals = []
        for img, base in zip(images, baselines):
            out = apply_lut2d(img, cut_lut, weights)
            vals.append(psnr(out, base))
        rows.append((int(rank), float(np.mean(vals)), 2 * d * int(rank) + int(rank)))
    return rows
