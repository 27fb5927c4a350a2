"""Orthonormal fast Slepian-like bases and baselines.

The central object is the orthonormal basis Q = [F, Fbar @ V]: the in-band
DFT columns F augmented with R extra directions inside the out-of-band DFT
span.  Analysis and synthesis run through one FFT plus a skinny matrix
product, O(N log N + N R).  Also here: the widened-DFT baseline (Sub-DFT),
a Hermitian low-rank-corrected band projector used as a non-orthogonal
comparison point, and a binary serialization for built bases.
"""

from __future__ import annotations

import json
import struct
import time
import zlib
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .prolate import (
    DftBandSplit,
    ProlateOperator,
    build_band_split,
    build_prolate,
    log_width_constant,
    prolate_apply,
)

__all__ = [
    "RoastBasis",
    "SubDftBasis",
    "FstAnalog",
    "build_roast",
    "build_roast_randomized",
    "apply_analysis",
    "apply_synthesis",
    "project",
    "build_subdft",
    "build_fst_analog",
    "serialize_basis",
    "deserialize_basis",
    "BasisFormatError",
    "dft_columns",
    "cross_operator_dense",
    "rank_for_capture",
    "rank_for_capture_angle",
    "rank_for_average",
    "rank_for_pointwise",
    "sketch_for_capture",
    "sketch_for_capture_angle",
    "sketch_for_average",
    "sketch_for_pointwise",
    "fst_rank_bound",
]

_METHODS = ("svd_fb", "svd_fbf", "randomized")

# Columns of a rank-deficient sketch whose triangular-factor diagonal falls
# below this fraction of the leading diagonal are dropped.
_RANK_TOL = 1e-12

# Above this size the skinny factor comes from a Lanczos solver on the dense
# cross operator instead of a full SVD; both return the same leading
# singular subspace, the full SVD is just O(N^3) against O(N^2 R).
_DENSE_SVD_LIMIT = 1200


def dft_columns(n: int, wrapped_indices: np.ndarray) -> np.ndarray:
    """Normalized DFT columns exp(j*2*pi*k*m/N)/sqrt(N) for wrapped indices k."""
    m = np.arange(n)[:, None]
    k = np.asarray(wrapped_indices)[None, :]
    return np.exp(2j * np.pi * m * k / n) / np.sqrt(n)


def cross_operator_dense(op: ProlateOperator, split: DftBandSplit,
                         chunk: int = 512) -> np.ndarray:
    """Dense out-of-band cross operator Fbar^* B, formed column-block-wise.

    Each block of B columns is read off the Toeplitz structure, pushed
    through the FFT, and restricted to the out-of-band rows.  Memory stays at
    O(N * chunk) on top of the (n_high x N) result.
    """
    n = op.n
    fr = op.first_row
    out = np.empty((split.n_high, n), dtype=complex)
    i = np.arange(n)[:, None]
    for j0 in range(0, n, chunk):
        j1 = min(j0 + chunk, n)
        cols = fr[np.abs(i - np.arange(j0, j1)[None, :])]
        out[:, j0:j1] = np.fft.fft(cols, axis=0)[split.high_indices] / np.sqrt(n)
    return out


def _phase_normalize(v: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant entry is real positive."""
    v = np.array(v, dtype=complex, copy=True)
    for j in range(v.shape[1]):
        col = v[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))
        if nz.size:
            pivot = col[nz[0]]
            v[:, j] = col * (np.conj(pivot) / abs(pivot))
    return v


@dataclass(frozen=True)
class RoastBasis:
    """Orthonormal basis [F, Fbar @ V] with FFT-fast analysis and synthesis.

    ``v`` has shape (n_high, r) with orthonormal columns; the implied full
    basis has 2*floor(NW)+1+R columns.  ``method`` records how V was built
    ("svd_fb", "svd_fbf", or "randomized"), ``seed`` the sketch seed when
    randomized.  Immutable; the apply paths allocate per call.
    """

    split: DftBandSplit
    r: int
    v: np.ndarray = field(repr=False)
    method: str
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.split.n

    @property
    def w(self) -> float:
        return self.split.w

    @property
    def dimension(self) -> int:
        return self.split.n_low + self.r

    def analyze(self, x: np.ndarray) -> np.ndarray:
        return apply_analysis(self, x)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return apply_synthesis(self, coeffs)

    def project(self, x: np.ndarray) -> np.ndarray:
        return project(self, x)

    def dense_basis(self) -> np.ndarray:
        """Explicit N x (n_low + R) matrix; the oracle for the fast paths."""
        n = self.n
        f_low = dft_columns(n, self.split.low_indices)
        f_high = dft_columns(n, self.split.high_indices)
        return np.hstack([f_low, f_high @ self.v])


def _top_left_singular_vectors(a: np.ndarray, r: int) -> np.ndarray:
    if r == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    if min(a.shape) <= _DENSE_SVD_LIMIT or r > min(a.shape) // 3:
        u, _, _ = np.linalg.svd(a, full_matrices=False)
        return u[:, :r]
    v0 = np.ones(min(a.shape))
    u, s, _ = spla.svds(a, k=r, v0=v0)
    return u[:, np.argsort(-s)]


def build_roast(n: int, w: float, r: int, method: str = "svd_fb") -> RoastBasis:
    """Build the deterministic basis with R extra out-of-band directions.

    ``method`` selects the skinny factor: "svd_fb" takes the dominant left
    singular vectors of the cross operator Fbar^* B; "svd_fbf" takes the
    principal eigenvectors of the compressed operator Fbar^* B Fbar, which
    minimizes the integrated in-band representation error at fixed R.
    """
    if method not in ("svd_fb", "svd_fbf"):
        raise ValueError(f"method must be 'svd_fb' or 'svd_fbf', got {method!r}")
    split = build_band_split(n, w)
    if not 0 <= r <= split.n_high:
        raise ValueError(
            f"r must satisfy 0 <= r <= {split.n_high} for n={n}, w={w}, got {r}")
    op = build_prolate(n, w)
    cross = cross_operator_dense(op, split)
    if method == "svd_fb":
        v = _top_left_singular_vectors(cross, r)
    else:
        f_high = dft_columns(n, split.high_indices)
        compressed = cross @ f_high
        compressed = (compressed + compressed.conj().T) / 2.0
        if r == 0:
            v = np.zeros((split.n_high, 0), dtype=complex)
        else:
            _, vecs = np.linalg.eigh(compressed)
            v = vecs[:, ::-1][:, :r]
    return RoastBasis(split=split, r=int(v.shape[1]), v=_phase_normalize(v),
                      method=method)


def build_roast_randomized(n: int, w: float, p: int, seed: int) -> RoastBasis:
    """Build the basis from a Gaussian range sketch of the cross operator.

    Draws a real N x P standard Gaussian, pushes it through the fast prolate
    matvec and the FFT (O(P N log N) total), and orthonormalizes the result
    by pivoted QR.  Columns whose triangular-factor diagonal falls below
    1e-12 of the leading one are dropped, so the retained R may be < P for
    rank-deficient sketches; the actual R is recorded on the result.
    """
    split = build_band_split(n, w)
    if not 1 <= p <= split.n_high:
        raise ValueError(
            f"sketch width must satisfy 1 <= p <= {split.n_high}, got {p}")
    op = build_prolate(n, w)
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((n, p))
    sketch = np.fft.fft(prolate_apply(op, omega), axis=0)[split.high_indices]
    sketch /= np.sqrt(n)
    q, rmat, _ = sla.qr(sketch, mode="economic", pivoting=True)
    diag = np.abs(np.diag(rmat))
    keep = int(np.sum(diag > _RANK_TOL * diag[0])) if diag.size else 0
    return RoastBasis(split=split, r=keep, v=np.ascontiguousarray(q[:, :keep]),
                      method="randomized", seed=int(seed))


def apply_analysis(basis: RoastBasis, x: np.ndarray) -> np.ndarray:
    """Coefficients Q^* x in O(N log N + N R); accepts a vector or columns."""
    x = np.asarray(x)
    n = basis.n
    if x.shape[0] != n:
        raise ValueError(f"expected leading dimension {n}, got {x.shape[0]}")
    spectrum = np.fft.fft(x, axis=0) / np.sqrt(n)
    low = spectrum[basis.split.low_indices]
    high = basis.v.conj().T @ spectrum[basis.split.high_indices]
    return np.concatenate([low, high], axis=0)


def apply_synthesis(basis: RoastBasis, coeffs: np.ndarray) -> np.ndarray:
    """Reconstruct Q @ coeffs; exact inverse of analysis on coefficient space."""
    coeffs = np.asarray(coeffs)
    n_low, n = basis.split.n_low, basis.n
    if coeffs.shape[0] != n_low + basis.r:
        raise ValueError(
            f"expected {n_low + basis.r} coefficients, got {coeffs.shape[0]}")
    shape = (n,) + coeffs.shape[1:]
    spectrum = np.zeros(shape, dtype=complex)
    spectrum[basis.split.low_indices] = coeffs[:n_low]
    spectrum[basis.split.high_indices] = basis.v @ coeffs[n_low:]
    return np.fft.ifft(spectrum, axis=0) * np.sqrt(n)


def project(basis: RoastBasis, x: np.ndarray) -> np.ndarray:
    """Orthogonal projection Q Q^* x via analysis then synthesis."""
    return apply_synthesis(basis, apply_analysis(basis, x))


@dataclass(frozen=True)
class SubDftBasis:
    """Widened partial DFT: the band columns plus R nearest out-of-band ones.

    The extra columns go ceil(R/2) to the positive-frequency side and
    floor(R/2) to the negative side, so the dimension is exactly
    2*floor(NW)+1+R and matches the other bases at equal R.
    """

    n: int
    w: float
    r: int
    indices: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.indices)

    def dense_basis(self) -> np.ndarray:
        return dft_columns(self.n, self.indices)

    def analyze(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        return np.fft.fft(x, axis=0)[self.indices] / np.sqrt(self.n)

    def project(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        spectrum = np.fft.fft(x, axis=0)
        masked = np.zeros_like(spectrum)
        masked[self.indices] = spectrum[self.indices]
        return np.fft.ifft(masked, axis=0)


def build_subdft(n: int, w: float, r: int) -> SubDftBasis:
    """Baseline projector onto the 2*floor(NW)+1+R lowest-frequency columns."""
    split = build_band_split(n, w)
    half = (split.n_low - 1) // 2
    if split.n_low + r > n:
        raise ValueError(
            f"band overflow: {split.n_low}+{r} columns exceed n={n}")
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    signed = np.arange(-(half + r // 2), half + (r + 1) // 2 + 1)
    return SubDftBasis(n=int(n), w=float(w), r=int(r),
                       indices=np.mod(signed, n))


@dataclass(frozen=True)
class FstAnalog:
    """Hermitian approximation F F^* + L_r to the prolate operator.

    L_r is the spectrally-truncated rank-r part of B - F F^*, kept as an
    eigenpair factorization (signed eigenvalues, so the operator stays
    Hermitian).  Applying it costs O(N log N + N r).  This is the
    non-orthogonal fast-factorization baseline: the asymmetric split
    ``factor_pair`` reproduces the operator as T1 @ T2^*.
    """

    split: DftBandSplit
    rank_r: int
    vectors: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.split.n

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        spectrum = np.fft.fft(x, axis=0)
        masked = np.zeros_like(spectrum)
        masked[self.split.low_indices] = spectrum[self.split.low_indices]
        band = np.fft.ifft(masked, axis=0)
        if self.rank_r == 0:
            return band
        coeff = self.vectors.conj().T @ x
        scaled = coeff * (self.values[:, None] if coeff.ndim == 2 else self.values)
        return band + self.vectors @ scaled

    def factor_pair(self) -> tuple[np.ndarray, np.ndarray]:
        """Non-orthogonal factors (T1, T2) with T1 @ T2^* equal to apply()."""
        f_low = dft_columns(self.n, self.split.low_indices)
        t1 = np.hstack([f_low, self.vectors * self.values[None, :]])
        t2 = np.hstack([f_low, self.vectors])
        return t1, t2


def build_fst_analog(n: int, w: float, rank_r: int) -> FstAnalog:
    """Best Hermitian rank-r correction of the band projector toward B.

    The correction comes from a dense eigendecomposition of B - F F^* with
    the r largest-magnitude eigenpairs retained, so the spectral error is
    exactly the (r+1)-th magnitude.
    """
    if rank_r < 0:
        raise ValueError(f"rank must be nonnegative, got {rank_r}")
    split = build_band_split(n, w)
    if rank_r > n:
        raise ValueError(f"rank {rank_r} exceeds n={n}")
    op = build_prolate(n, w)
    f_low = dft_columns(n, split.low_indices)
    diff = op.dense() - (f_low @ f_low.conj().T).real
    diff = (diff + diff.T) / 2.0
    vals, vecs = np.linalg.eigh(diff)
    order = np.argsort(-np.abs(vals))[:rank_r]
    return FstAnalog(split=split, rank_r=int(rank_r),
                     vectors=vecs[:, order].astype(complex),
                     values=vals[order])


# ---------------------------------------------------------------------------
# subspace sizing rules
#
# All use the transition-width constant C_N and natural logarithms; they map
# a target accuracy to the number of extra directions (or sketch width).

def rank_for_capture(n: int, eps: float) -> int:
    """R so that the leading-DPSS capture error stays below eps."""
    return int(np.ceil(log_width_constant(n) * np.log(15.0 / eps)))


def rank_for_capture_angle(n: int, eps: float) -> int:
    """Enlarged R for the subspace-angle guarantee cos >= sqrt(1-eps)."""
    return int(np.ceil(log_width_constant(n) * np.log(15.0 * n / eps)))


def rank_for_average(n: int, eps: float) -> int:
    """R so the band-averaged normalized residual stays below eps."""
    c = log_width_constant(n)
    return max(int(np.ceil(c * np.log(15.0 * c / (n * eps)))) + 1, 0)


def rank_for_pointwise(n: int, w: float, eps: float) -> int:
    """R so every in-band sinusoid has normalized residual below eps."""
    c = log_width_constant(n)
    r1 = int(np.ceil(c * np.log(60.0 * np.pi * c / eps**2))) + 1
    r2 = int(np.ceil(c * np.log(15.0 * c / (n * w * eps)))) + 1
    return max(r1, r2)


def sketch_for_capture(n: int, eps: float) -> int:
    """Sketch width P for the randomized builder, capture-error target eps."""
    c = log_width_constant(n)
    return int(np.ceil(2.0 * c * np.log((30.0 + 15.0 * np.e) / eps))) + 3


def sketch_for_capture_angle(n: int, eps: float) -> int:
    c = log_width_constant(n)
    return int(np.ceil(2.0 * c * np.log((30.0 + 15.0 * np.e) * n / eps))) + 3


def sketch_for_average(n: int, eps: float) -> int:
    c = log_width_constant(n)
    return int(np.ceil(4.0 / 3.0 * c * np.log(15.0 * np.sqrt(2.0 * c) / eps)
                       + 7.0 / 3.0))


def sketch_for_pointwise(n: int, w: float, eps: float) -> int:
    c = log_width_constant(n)
    p1 = int(np.ceil(4.0 / 3.0 * c * np.log(60.0 * np.pi * n * np.sqrt(2.0 * c)
                                            / eps**2) + 7.0 / 3.0))
    p2 = int(np.ceil(4.0 / 3.0 * c * np.log(15.0 * np.pi * np.sqrt(2.0 * c)
                                            / (w * eps)) + 7.0 / 3.0))
    return max(p1, p2)


def fst_rank_bound(n: int, delta: float) -> int:
    """Skinny-factor width the non-orthogonal factorization needs at accuracy delta."""
    return int(np.ceil(3.0 * log_width_constant(n) * np.log(15.0 / delta)))


# ---------------------------------------------------------------------------
# serialization
#
# Layout: magic "ROAST\0", format version u16 LE, u32 LE header length, UTF-8
# JSON header {n, w, r, method, seed?, created_unix_seconds}, V as
# column-major complex128 (interleaved re/im, little-endian), CRC32 (u32 LE)
# of every preceding byte.

_MAGIC = b"ROAST\x00"
_FORMAT_VERSION = 1


class BasisFormatError(ValueError):
    """Raised for corrupt, truncated, or incompatible basis streams."""


def serialize_basis(basis: RoastBasis) -> bytes:
    """Encode a built basis; the round trip restores V bit-exactly."""
    header = {
        "n": basis.n,
        "w": basis.w,
        "r": basis.r,
        "method": basis.method,
        "created_unix_seconds": int(time.time()),
    }
    if basis.seed is not None:
        header["seed"] = basis.seed
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    v_bytes = np.asfortranarray(basis.v.astype("<c16", copy=False)).tobytes(order="F")
    payload = (_MAGIC + struct.pack("<H", _FORMAT_VERSION)
               + struct.pack("<I", len(header_bytes)) + header_bytes + v_bytes)
    return payload + struct.pack("<I", zlib.crc32(payload))


def deserialize_basis(data: bytes) -> RoastBasis:
    """Decode a serialized basis, validating structure, checksum, and shape."""
    fixed = len(_MAGIC) + 2 + 4
    if len(data) < fixed + 4:
        raise BasisFormatError("truncated stream: shorter than the fixed header")
    if data[:len(_MAGIC)] != _MAGIC:
        raise BasisFormatError("bad magic bytes: not a basis stream")
    (version,) = struct.unpack_from("<H", data, len(_MAGIC))
    if version != _FORMAT_VERSION:
        raise BasisFormatError(
            f"unsupported format version {version}, expected {_FORMAT_VERSION}")
    (header_len,) = struct.unpack_from("<I", data, len(_MAGIC) + 2)
    header_end = fixed + header_len
    if len(data) < header_end + 4:
        raise BasisFormatError("truncated stream: header extends past the end")
    try:
        header = json.loads(data[fixed:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BasisFormatError(f"unreadable header: {exc}") from exc

    (stored_crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(data[:-4]) != stored_crc:
        raise BasisFormatError("checksum failure: payload does not match CRC32")

    for key in ("n", "w", "r", "method"):
        if key not in header:
            raise BasisFormatError(f"header missing required field {key!r}")
    n, w, r, method = header["n"], header["w"], header["r"], header["method"]
    if not isinstance(n, int) or n < 2:
        raise BasisFormatError(f"invalid signal length in header: {n!r}")
    if not (isinstance(w, float) and 0.0 < w < 0.5):
        raise BasisFormatError(f"invalid half-bandwidth in header: {w!r}")
    if method not in _METHODS:
        raise BasisFormatError(f"unknown construction method {method!r}")
    split = build_band_split(n, w)
    if not isinstance(r, int) or not 0 <= r <= split.n_high:
        raise BasisFormatError(f"inconsistent column count r={r!r} for n={n}, w={w}")

    v_bytes = data[header_end:-4]
    expected = split.n_high * r * 16
    if len(v_bytes) != expected:
        raise BasisFormatError(
            f"dimension inconsistency: payload holds {len(v_bytes)} bytes, "
            f"header implies {expected}")
    v = np.frombuffer(v_bytes, dtype="<c16").reshape((split.n_high, r), order="F")
    return RoastBasis(split=split, r=r, v=v.copy(), method=method,
                      seed=header.get("seed"))
