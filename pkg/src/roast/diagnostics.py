"""Computable diagnostics for the approximation guarantees.

Every inequality the construction is supposed to satisfy becomes a number
here: singular-value decay of the cross operator, eigenvalue concentration
counts, integrated and pointwise in-band residuals (with two independent
computation paths that must agree), subspace angles, and capture errors for
the leading Slepian vectors.  Results land in a small ledger structure that
serializes to JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import cross_operator_dense, dft_columns
from .prolate import ProlateOperator, build_band_split, build_dpss, build_prolate, log_width_constant

__all__ = [
    "SpectrumReport",
    "AngleReport",
    "LedgerEntry",
    "BoundLedger",
    "residual_snr",
    "SNR_CSV_CAP",
    "integrated_residual",
    "integrated_residual_quadrature",
    "residual_paths_agree",
    "subspace_angle",
    "largest_angle_cos_direct",
    "singular_decay_report",
    "eigenvalue_concentration_report",
    "sinusoid_derivative_check",
    "dpss_capture_report",
    "deflated_spectrum",
]

# Ledger inequalities get this much additive slack against round-off.
_LEDGER_SLACK = 1e-12

# Residuals below this fraction of the signal norm count as exact capture.
_SNR_EXACT = 1e-15

# +inf sentinel value used when SNR is written to CSV.
SNR_CSV_CAP = 320.0


def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class LedgerEntry:
    """One verified inequality: lhs <= rhs (within slack)."""

    check_id: str
    lhs_value: float
    rhs_bound: float
    satisfied: bool
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lhs_value = float(self.lhs_value)
        self.rhs_bound = float(self.rhs_bound)
        self.satisfied = bool(self.satisfied)
        self.params = {k: _jsonable(v) for k, v in self.params.items()}

    def to_dict(self) -> dict:
        return {"check_id": self.check_id, "lhs_value": self.lhs_value,
                "rhs_bound": self.rhs_bound, "satisfied": self.satisfied,
                "params": self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "LedgerEntry":
        return cls(check_id=d["check_id"], lhs_value=d["lhs_value"],
                   rhs_bound=d["rhs_bound"], satisfied=d["satisfied"],
                   params=dict(d.get("params", {})))


@dataclass
class BoundLedger:
    """Collection of inequality checks; satisfied iff every entry is."""

    entries: list = field(default_factory=list)

    def add(self, check_id: str, lhs: float, rhs: float, **params) -> LedgerEntry:
        entry = LedgerEntry(check_id=check_id, lhs_value=float(lhs),
                            rhs_bound=float(rhs),
                            satisfied=bool(lhs <= rhs + _LEDGER_SLACK),
                            params=params)
        self.entries.append(entry)
        return entry

    def extend(self, other: "BoundLedger") -> None:
        self.entries.extend(other.entries)

    @property
    def all_satisfied(self) -> bool:
        return all(e.satisfied for e in self.entries)

    def to_json(self, **meta) -> str:
        doc = {"meta": meta, "all_satisfied": self.all_satisfied,
               "entries": [e.to_dict() for e in self.entries]}
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BoundLedger":
        doc = json.loads(text)
        ledger = cls(entries=[LedgerEntry.from_dict(d) for d in doc["entries"]])
        return ledger


@dataclass(frozen=True)
class SpectrumReport:
    """Singular values of the cross operator against the decay envelope."""

    n: int
    w: float
    singular_values: np.ndarray
    c_n: float
    bound_curve: np.ndarray
    violations: list

    def tail_sum(self, r: int) -> float:
        return float(np.sum(self.singular_values[r:]))

    def tail_bound_entry(self, r: int) -> LedgerEntry:
        """Geometric-series envelope on the tail sum past index r."""
        rhs = 15.0 * math.exp(-(r - 1) / self.c_n) * self.c_n
        lhs = self.tail_sum(r)
        return LedgerEntry(check_id="singular_tail_geometric", lhs_value=lhs,
                           rhs_bound=rhs,
                           satisfied=lhs <= rhs + _LEDGER_SLACK,
                           params={"n": self.n, "w": self.w, "r": r})


@dataclass(frozen=True)
class AngleReport:
    """Principal cosines between two subspaces, descending."""

    principal_cosines: np.ndarray

    @property
    def largest_angle_cos(self) -> float:
        return float(self.principal_cosines[-1])


def _as_projector(projector):
    if hasattr(projector, "project"):
        return projector.project
    if isinstance(projector, np.ndarray):
        q = projector
        return lambda x: q @ (q.conj().T @ x)
    if callable(projector):
        return projector
    raise TypeError(f"cannot interpret {type(projector).__name__} as a projector")


def residual_snr(projector, x: np.ndarray) -> float:
    """SNR = 20 log10(||x|| / ||x - xhat||) in dB for the projection xhat.

    Residuals below 1e-15 of the signal norm report +inf (capped at
    ``SNR_CSV_CAP`` when written to CSV).  A zero signal is rejected.
    """
    x = np.asarray(x)
    xnorm = np.linalg.norm(x)
    if xnorm == 0.0:
        raise ValueError("SNR is undefined for the zero signal")
    resid = np.linalg.norm(x - _as_projector(projector)(x))
    if resid < _SNR_EXACT * xnorm:
        return math.inf
    return float(20.0 * np.log10(xnorm / resid))


def _dense_columns(q_like) -> np.ndarray:
    if hasattr(q_like, "dense_basis"):
        return q_like.dense_basis()
    q = np.asarray(q_like)
    if q.ndim != 2:
        raise ValueError("expected a matrix of basis columns")
    return q


def _ensure_orthonormal(q: np.ndarray, tol: float = 1e-8, what: str = "basis") -> None:
    gram = q.conj().T @ q
    err = np.max(np.abs(gram - np.eye(q.shape[1])))
    if err > tol:
        raise ValueError(f"{what} is not orthonormal: Gram deviation {err:.3e} > {tol:.0e}")


def integrated_residual(op: ProlateOperator, q_like) -> float:
    """Band-integrated squared residual of in-band sinusoids under Q Q^*.

    Computed without quadrature as trace(B) - sum_i q_i^* B q_i through the
    fast prolate matvec.  For residuals below round-off the trace difference
    can land epsilon-negative; it is floored at zero.
    """
    q = _dense_columns(q_like)
    if q.shape[0] != op.n:
        raise ValueError(f"basis rows {q.shape[0]} do not match operator size {op.n}")
    _ensure_orthonormal(q)
    captured = np.einsum("ij,ij->", q.conj(), op.apply(q)).real
    return max(op.trace() - float(captured), 0.0)


def integrated_residual_quadrature(op: ProlateOperator, q_like,
                                   nodes: int = 4096) -> float:
    """Same quantity by composite trapezoid over the band, residual vectors
    evaluated pointwise.  Cross-validates the trace path."""
    q = _dense_columns(q_like)
    _ensure_orthonormal(q)
    n, w = op.n, op.w
    grid = np.linspace(-w, w, nodes)
    vals = np.empty(nodes)
    m = np.arange(n)[:, None]
    chunk = max(1, 2 * 1024 * 1024 // max(n, 1))
    for i0 in range(0, nodes, chunk):
        i1 = min(i0 + chunk, nodes)
        block = np.exp(2j * np.pi * m * grid[i0:i1][None, :])
        resid = block - q @ (q.conj().T @ block)
        vals[i0:i1] = np.einsum("ij,ij->j", resid.conj(), resid).real
    return float(np.trapezoid(vals, grid))


def residual_paths_agree(trace_value: float, quad_value: float,
                         rel: float = 1e-4, abs_floor: float = 1e-9) -> bool:
    """Agreement test for the two residual paths.

    Relative to the larger value, with an absolute floor for residuals that
    sit at the float64 noise level where relative comparison is meaningless.
    """
    return abs(trace_value - quad_value) <= rel * max(abs(trace_value),
                                                      abs(quad_value)) + abs_floor


def subspace_angle(a_like, b_like) -> AngleReport:
    """Principal angles between two orthonormal column spans.

    The cosines are the singular values of A^* B; the report's
    ``largest_angle_cos`` (the smallest cosine) measures how far the narrower
    subspace sticks out of the wider one.
    """
    a = _dense_columns(a_like)
    b = _dense_columns(b_like)
    _ensure_orthonormal(a, what="first basis")
    _ensure_orthonormal(b, what="second basis")
    if a.shape[1] > b.shape[1]:
        a, b = b, a
    cosines = np.linalg.svd(b.conj().T @ a, compute_uv=False)
    return AngleReport(principal_cosines=np.sort(cosines)[::-1])


def largest_angle_cos_direct(a_like, b_like) -> float:
    """Largest-angle cosine via the wider basis's explicit projector.

    Independent computational path (dense N x N projector) for
    cross-checking ``subspace_angle``: the infimum of ||P_wide a|| over unit
    vectors a in the narrower span equals the smallest singular value of
    P_wide @ A_narrow.
    """
    a = _dense_columns(a_like)
    b = _dense_columns(b_like)
    if a.shape[1] > b.shape[1]:
        a, b = b, a
    proj = b @ b.conj().T
    sigma = np.linalg.svd(proj @ a, compute_uv=False)
    return float(sigma[-1])


def _spectral_norm(mat: np.ndarray, tol: float = 1e-10, max_iter: int = 5000) -> float:
    if min(mat.shape) <= 2048:
        return float(np.linalg.svd(mat, compute_uv=False)[0])
    rng = np.random.default_rng(0)
    v = rng.standard_normal(mat.shape[1])
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        u = mat @ v
        v = mat.conj().T @ u
        norm = np.linalg.norm(v)
        if norm == 0.0:
            return 0.0
        v /= norm
        est = math.sqrt(norm)
        if abs(est - prev) <= tol * est:
            return est
        prev = est
    return prev


def singular_decay_report(n: int, w: float) -> SpectrumReport:
    """Full singular spectrum of the cross operator with envelope comparison."""
    op = build_prolate(n, w)
    split = build_band_split(n, w)
    cross = cross_operator_dense(op, split)
    sigma = np.linalg.svd(cross, compute_uv=False)
    c_n = log_width_constant(n)
    bound = 15.0 * np.exp(-np.arange(len(sigma)) / c_n)
    violations = np.flatnonzero(sigma > bound + _LEDGER_SLACK).tolist()
    return SpectrumReport(n=int(n), w=float(w), singular_values=sigma,
                          c_n=c_n, bound_curve=bound, violations=violations)


def eigenvalue_concentration_report(n: int, w: float, eps: float,
                                    eigenvalues: np.ndarray | None = None) -> LedgerEntry:
    """Count of eigenvalues inside [eps, 1-eps] against 2 C_N log(15/eps)."""
    if not 0.0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps!r}")
    if eigenvalues is None:
        eigenvalues = build_dpss(n, w, n).eigenvalues
    count = int(np.sum((eigenvalues >= eps) & (eigenvalues <= 1.0 - eps)))
    bound = 2.0 * log_width_constant(n) * math.log(15.0 / eps)
    return LedgerEntry(check_id="eigenvalue_concentration", lhs_value=float(count),
                       rhs_bound=bound, satisfied=count <= bound + _LEDGER_SLACK,
                       params={"n": n, "w": w, "eps": eps})


def sinusoid_derivative_check(op: ProlateOperator, q_like, grid_size: int = 4096,
                              fd_step: float = 1e-5) -> BoundLedger:
    """Scan the in-band residual function and verify its smoothness envelope.

    At each grid frequency the squared residual of the sampled sinusoid is
    differenced centrally with step ``fd_step``; the absolute derivative must
    stay below 2 pi N^2, and the pointwise residual ratio must respect the
    bound implied by the band-integrated residual.
    """
    n, w = op.n, op.w
    if w < 1.0 / (4.0 * np.pi * n):
        raise ValueError(f"half-bandwidth {w} below 1/(4 pi N) for n={n}")
    if fd_step > 1e-3:
        raise ValueError(f"difference step {fd_step} too coarse to resolve (> 1e-3)")
    q = _dense_columns(q_like)
    _ensure_orthonormal(q)

    grid = np.linspace(-w, w, grid_size)
    m = np.arange(n)[:, None]

    def residual_sq(freqs: np.ndarray) -> np.ndarray:
        out = np.empty(len(freqs))
        chunk = max(1, 2 * 1024 * 1024 // max(n, 1))
        for i0 in range(0, len(freqs), chunk):
            i1 = min(i0 + chunk, len(freqs))
            block = np.exp(2j * np.pi * m * freqs[i0:i1][None, :])
            resid = block - q @ (q.conj().T @ block)
            out[i0:i1] = np.einsum("ij,ij->j", resid.conj(), resid).real
        return out

    center = residual_sq(grid)
    upper = residual_sq(grid + fd_step)
    lower = residual_sq(grid - fd_step)
    deriv = (upper - lower) / (2.0 * fd_step)

    ledger = BoundLedger()
    ledger.add("residual_derivative_bound", np.max(np.abs(deriv)),
               2.0 * np.pi * n**2, n=n, w=w, grid_size=grid_size,
               fd_step=fd_step)

    integral = integrated_residual(op, q)
    pointwise_bound = max(2.0 * math.sqrt(np.pi) * math.sqrt(integral),
                          integral / (n * w))
    ledger.add("pointwise_residual_from_average", float(np.max(center)) / n,
               pointwise_bound, n=n, w=w, integral=integral)
    return ledger


def deflated_spectrum(op: ProlateOperator, basis) -> np.ndarray:
    """Singular values of the cross operator after removing the V directions."""
    split = basis.split
    cross = cross_operator_dense(op, split)
    deflated = cross - basis.v @ (basis.v.conj().T @ cross)
    return np.linalg.svd(deflated, compute_uv=False)


def dpss_capture_report(n: int, w: float, eps: float, basis,
                        dpss=None, cross: np.ndarray | None = None) -> BoundLedger:
    """Check how well the basis captures the leading Slepian subspace.

    K is the number of eigenvalues >= eps.  The deflation residual
    eta = ||(I - V V^*) Fbar^* B|| / eps controls three quantities: the
    squared spectral capture error of the K-dimensional Slepian projector,
    the per-vector squared residuals, and the subspace-angle cosine (via
    sqrt(1 - N eta)).
    """
    if not 0.0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps!r}")
    op = build_prolate(n, w)
    if dpss is None:
        dpss = build_dpss(n, w, n)
    k = int(np.sum(dpss.eigenvalues >= eps))
    if k == 0:
        raise ValueError(f"no eigenvalues reach eps={eps}; nothing to capture")
    s_k = dpss.vectors[:, :k]

    if cross is None:
        cross = cross_operator_dense(op, basis.split)
    deflated = cross - basis.v @ (basis.v.conj().T @ cross)
    eta = _spectral_norm(deflated) / eps

    q = basis.dense_basis()
    resid_cols = s_k - q @ (q.conj().T @ s_k)

    ledger = BoundLedger()
    params = {"n": n, "w": w, "eps": eps, "k": k, "r": basis.r,
              "method": basis.method, "eta": eta}
    capture_sq = _spectral_norm(resid_cols) ** 2
    ledger.add("dpss_capture_spectral_sq", capture_sq, eta, **params)
    per_vector = float(np.max(np.einsum("ij,ij->j", resid_cols.conj(),
                                        resid_cols).real))
    ledger.add("dpss_capture_per_vector", per_vector, eta, **params)
    cos_theta = subspace_angle(s_k, q).largest_angle_cos
    angle_floor = math.sqrt(max(1.0 - n * eta, 0.0))
    # angle inequality runs the other way: cos >= floor
    ledger.add("dpss_capture_angle", angle_floor, cos_theta, **params)
    return ledger
