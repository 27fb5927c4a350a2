"""Prolate (sinc-kernel) operator, DPSS basis, DFT band split, and test signals.

Everything downstream builds on the objects here: the implicit symmetric
Toeplitz operator with an FFT-fast matvec, the leading Slepian vectors
obtained from the commuting tridiagonal eigenproblem, the split of the DFT
into in-band and out-of-band columns, and deterministic signal generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

__all__ = [
    "ProlateOperator",
    "DpssBasis",
    "DftBandSplit",
    "SignalEnsemble",
    "build_prolate",
    "prolate_apply",
    "prolate_dense",
    "build_dpss",
    "build_band_split",
    "sampled_sinusoid",
    "random_bandlimited",
    "log_width_constant",
]

# Eigenvalues of the prolate operator are mathematically in (0, 1); computed
# Rayleigh quotients can land epsilon outside and are clamped back in.
_EIG_CLAMP = 2.0 ** -53


def log_width_constant(n: int) -> float:
    """Spectral transition-width constant (4/pi^2) * ln(8N) + 6."""
    return (4.0 / math.pi**2) * math.log(8.0 * n) + 6.0


def _validate_nw(n: int, w: float) -> None:
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"signal length must be an integer >= 2, got {n!r}")
    if not (0.0 < w < 0.5):
        raise ValueError(f"half-bandwidth must lie in the open interval (0, 1/2), got {w!r}")


def _embed_size(n: int) -> int:
    """Next power of two >= 2N-1, the circulant embedding length."""
    m = 1
    while m < 2 * n - 1:
        m *= 2
    return m


@dataclass(frozen=True)
class ProlateOperator:
    """Implicit N x N symmetric Toeplitz matrix sin(2*pi*W*(m-n)) / (pi*(m-n)).

    The diagonal value is the sinc limit 2W.  Matrix-vector products run
    through a circulant embedding of power-of-two length, so a single apply
    costs O(N log N).  Immutable and safe to share across threads.
    """

    n: int
    w: float
    first_row: np.ndarray
    circulant_spectrum: np.ndarray = field(repr=False)

    @property
    def embed_size(self) -> int:
        return len(self.circulant_spectrum)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return prolate_apply(self, x)

    def dense(self) -> np.ndarray:
        return prolate_dense(self)

    def trace(self) -> float:
        return 2.0 * self.n * self.w


def build_prolate(n: int, w: float) -> ProlateOperator:
    """Construct the prolate operator for length ``n`` and half-bandwidth ``w``.

    Parameters
    ----------
    n : int
        Signal length, at least 2.
    w : float
        Half-bandwidth, strictly inside (0, 1/2).
    """
    _validate_nw(n, w)
    first_row = np.empty(n)
    first_row[0] = 2.0 * w
    m = np.arange(1, n)
    first_row[1:] = np.sin(2.0 * np.pi * w * m) / (np.pi * m)

    size = _embed_size(n)
    col = np.zeros(size)
    col[:n] = first_row
    col[size - n + 1:] = first_row[1:][::-1]
    spectrum = np.fft.fft(col)
    return ProlateOperator(n=int(n), w=float(w), first_row=first_row,
                           circulant_spectrum=spectrum)


def prolate_apply(op: ProlateOperator, x: np.ndarray) -> np.ndarray:
    """Compute B @ x via the circulant embedding.

    ``x`` may be a length-N vector or an N x b block of columns; the result
    matches the dense matvec to round-off.
    """
    x = np.asarray(x)
    if x.shape[0] != op.n:
        raise ValueError(f"operator size {op.n} does not match input length {x.shape[0]}")
    single = x.ndim == 1
    block = x[:, None] if single else x
    size = op.embed_size
    spec = op.circulant_spectrum[:, None]
    y = np.fft.ifft(spec * np.fft.fft(block, n=size, axis=0), axis=0)[:op.n]
    if np.isrealobj(x):
        y = y.real
    return y[:, 0] if single else y


def prolate_dense(op: ProlateOperator) -> np.ndarray:
    """Dense realization, used as the oracle for the fast apply path."""
    return sla.toeplitz(op.first_row)


@dataclass(frozen=True)
class DpssBasis:
    """Leading ``k`` Slepian vectors (columns) with concentration eigenvalues.

    Columns are orthonormal, ordered by eigenvalue descending, and follow the
    sign convention that the first entry of significant magnitude is positive.
    """

    n: int
    w: float
    k: int
    vectors: np.ndarray
    eigenvalues: np.ndarray

    def dense_basis(self) -> np.ndarray:
        return self.vectors

    def project(self, x: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto the span of the retained vectors."""
        return self.vectors @ (self.vectors.T @ np.asarray(x))

    def analyze(self, x: np.ndarray) -> np.ndarray:
        return self.vectors.T @ np.asarray(x)


def build_dpss(n: int, w: float, k: int) -> DpssBasis:
    """Compute the leading ``k`` DPSS vectors of bandwidth ``w``.

    The vectors are eigenvectors of the symmetric tridiagonal matrix that
    commutes with the prolate operator (diagonal ((N-1-2m)/2)^2 cos(2piW),
    off-diagonal m(N-m)/2).  Concentration eigenvalues come from Rayleigh
    quotients through the fast prolate matvec, which keeps the near-degenerate
    clusters at 0 and 1 in a deterministic order.
    """
    _validate_nw(n, w)
    if not 1 <= k <= n:
        raise ValueError(f"number of vectors must satisfy 1 <= k <= {n}, got {k}")

    m = np.arange(n)
    diag = ((n - 1.0 - 2.0 * m) / 2.0) ** 2 * np.cos(2.0 * np.pi * w)
    off = m[1:] * (n - m[1:]) / 2.0
    try:
        _, vecs = sla.eigh_tridiagonal(diag, off, select="i",
                                       select_range=(n - k, n - 1))
    except (sla.LinAlgError, ValueError) as exc:
        raise RuntimeError(
            f"tridiagonal eigensolver failed for n={n}, w={w}, k={k}: {exc}"
        ) from exc
    vecs = np.ascontiguousarray(vecs[:, ::-1])

    # sign convention: first entry with magnitude above 1e-12 is positive
    for j in range(vecs.shape[1]):
        nz = np.flatnonzero(np.abs(vecs[:, j]) > 1e-12)
        if nz.size and vecs[nz[0], j] < 0:
            vecs[:, j] *= -1.0

    op = build_prolate(n, w)
    lam = np.einsum("ij,ij->j", vecs, prolate_apply(op, vecs))
    lam = np.clip(lam, _EIG_CLAMP, 1.0 - _EIG_CLAMP)
    order = np.argsort(-lam, kind="stable")
    return DpssBasis(n=int(n), w=float(w), k=int(k),
                     vectors=vecs[:, order], eigenvalues=lam[order])


@dataclass(frozen=True)
class DftBandSplit:
    """Partition of the N DFT columns into the 2*floor(NW)+1 lowest
    frequencies and their complement.

    ``low_indices`` holds the wrapped indices of frequencies -floor(NW)/N ..
    +floor(NW)/N in ascending signed order; ``high_indices`` holds the rest,
    also ascending by signed frequency (index k maps to k/N for k <= N/2 and
    (k-N)/N otherwise).
    """

    n: int
    w: float
    low_indices: np.ndarray
    high_indices: np.ndarray

    @property
    def n_low(self) -> int:
        return len(self.low_indices)

    @property
    def n_high(self) -> int:
        return len(self.high_indices)

    def signed_frequencies(self, indices: np.ndarray) -> np.ndarray:
        """Signed integer frequencies for wrapped DFT indices."""
        idx = np.asarray(indices)
        return np.where(idx <= self.n // 2, idx, idx - self.n)


def build_band_split(n: int, w: float) -> DftBandSplit:
    """Split the normalized DFT into in-band and out-of-band column sets."""
    _validate_nw(n, w)
    half = int(np.floor(n * w))
    if 2 * half + 1 > n:
        raise ValueError(
            f"band too wide: 2*floor(n*w)+1 = {2 * half + 1} exceeds n = {n}")
    idx = np.arange(n)
    signed = np.where(idx <= n // 2, idx, idx - n)
    order = np.argsort(signed, kind="stable")
    in_band = np.abs(signed[order]) <= half
    return DftBandSplit(n=int(n), w=float(w),
                        low_indices=order[in_band],
                        high_indices=order[~in_band])


@dataclass(frozen=True)
class SignalEnsemble:
    """A length-N test signal plus the recipe that produced it."""

    n: int
    kind: str
    samples: np.ndarray
    params: dict


def sampled_sinusoid(n: int, f: float) -> SignalEnsemble:
    """Complex exponential exp(j*2*pi*f*m), m = 0..N-1, squared norm N."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"signal length must be a positive integer, got {n!r}")
    if not -0.5 <= f <= 0.5:
        raise ValueError(f"frequency must lie in [-1/2, 1/2], got {f!r}")
    samples = np.exp(2j * np.pi * f * np.arange(n))
    return SignalEnsemble(n=int(n), kind="pure_sinusoid", samples=samples,
                          params={"f": float(f)})


def random_bandlimited(n: int, w: float, num_tones: int, seed: int) -> SignalEnsemble:
    """Superpose ``num_tones`` unit-amplitude random-phase sinusoids with
    frequencies drawn uniformly from [-w, w].  Fully reproducible from seed.
    """
    _validate_nw(n, w)
    if num_tones < 1:
        raise ValueError(f"need at least one tone, got {num_tones}")
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(-w, w, num_tones)
    coeffs = np.exp(2j * np.pi * rng.uniform(0.0, 1.0, num_tones))
    samples = np.zeros(n, dtype=complex)
    m = np.arange(n)[:, None]
    chunk = max(1, min(num_tones, 4 * 1024 * 1024 // max(n, 1)))
    for j0 in range(0, num_tones, chunk):
        j1 = min(j0 + chunk, num_tones)
        samples += np.exp(2j * np.pi * m * freqs[j0:j1][None, :]) @ coeffs[j0:j1]
    return SignalEnsemble(n=int(n), kind="random_bandlimited", samples=samples,
                          params={"w": float(w), "num_tones": int(num_tones),
                                  "seed": int(seed)})
