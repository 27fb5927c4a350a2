"""Least-squares signal recovery through a subspace via conjugate gradient.

Demonstrates the conditioning payoff of an orthonormal transform: solving
min ||y - Phi Q a|| by CG on the normal equations converges quickly when Q
is orthonormal and crawls when Q is replaced by an ill-conditioned fast
factorization of the same dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import build_roast, build_roast_randomized, build_subdft
from .prolate import build_dpss, random_bandlimited

__all__ = [
    "CgResult",
    "RecoveryProblem",
    "RecoveryReport",
    "cgd_solve",
    "build_recovery_problem",
    "recovery_experiment",
    "condition_estimate",
]


@dataclass
class CgResult:
    solution: np.ndarray
    iterations: int
    residual_history: list
    converged: bool


def cgd_solve(apply_normal_op, rhs: np.ndarray, tol: float = 1e-8,
              max_iter: int | None = None, callback=None) -> CgResult:
    """Conjugate gradient on a Hermitian positive semidefinite action.

    Terminates when the residual 2-norm falls below ``tol`` relative to the
    right-hand side, or after ``max_iter`` steps (default 4x the dimension).
    Non-convergence is reported through ``converged`` and the recorded
    residual history, never silently.  ``callback`` receives each iterate.
    """
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol!r}")
    rhs = np.asarray(rhs)
    if max_iter is None:
        max_iter = 4 * len(rhs)
    x = np.zeros_like(rhs)
    r = rhs - apply_normal_op(x)
    p = r.copy()
    rs = float(np.vdot(r, r).real)
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return CgResult(solution=x, iterations=0, residual_history=[0.0],
                        converged=True)
    history = [float(np.sqrt(rs))]
    iterations = 0
    while np.sqrt(rs) > tol * rhs_norm and iterations < max_iter:
        ap = apply_normal_op(p)
        denom = float(np.vdot(p, ap).real)
        if denom <= 0.0:
            break  # lost positive definiteness to round-off; stop honestly
        alpha = rs / denom
        x = x + alpha * p
        r = r - alpha * ap
        rs_next = float(np.vdot(r, r).real)
        p = r + (rs_next / rs) * p
        rs = rs_next
        history.append(float(np.sqrt(rs)))
        iterations += 1
        if callback is not None:
            callback(x)
    return CgResult(solution=x, iterations=iterations, residual_history=history,
                    converged=bool(np.sqrt(rs) <= tol * rhs_norm))


@dataclass(frozen=True)
class RecoveryProblem:
    """Observed y = Phi @ truth with a seeded dense Gaussian sensing matrix."""

    n: int
    m: int
    w: float
    phi: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    truth: np.ndarray = field(repr=False)


def build_recovery_problem(n: int, w: float, m: int, seed: int,
                           num_tones: int = 1000,
                           identity_sensing: bool = False) -> RecoveryProblem:
    """Random bandlimited truth observed through an M x N sensing matrix."""
    if not 2 * int(np.floor(n * w)) <= m <= n:
        raise ValueError(
            f"measurement count must satisfy 2*floor(NW) <= m <= n, got m={m}")
    truth = random_bandlimited(n, w, num_tones, seed).samples
    if identity_sensing:
        if m != n:
            raise ValueError("identity sensing requires m == n")
        phi = np.eye(n, dtype=complex)
    else:
        rng = np.random.default_rng(seed + 0x5EED)
        phi = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))
        phi /= np.sqrt(2.0 * m)
    return RecoveryProblem(n=int(n), m=int(m), w=float(w), phi=phi,
                           y=phi @ truth, truth=truth)


def condition_estimate(apply_normal_op, dim: int, iterations: int = 200,
                       seed: int = 0) -> float:
    """Rough condition number of a Hermitian PSD action by power iteration.

    The largest eigenvalue comes from plain power iteration, the smallest
    from power iteration on (sigma I - A) with sigma the largest estimate.
    Order-of-magnitude accuracy is all the comparisons here need.
    """
    rng = np.random.default_rng(seed)

    def power(apply_op):
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        value = 0.0
        for _ in range(iterations):
            u = apply_op(v)
            value = float(np.vdot(v, u).real)
            norm = np.linalg.norm(u)
            if norm == 0.0:
                return 0.0
            v = u / norm
        return value

    largest = power(apply_normal_op)
    if largest <= 0.0:
        return np.inf
    shift = 1.01 * largest
    smallest = shift - power(lambda v: shift * v - apply_normal_op(v))
    if smallest <= 0.0:
        return np.inf
    return largest / smallest


@dataclass
class RecoveryReport:
    basis_choice: str
    relative_error: float
    iterations: int
    condition_estimate: float
    converged: bool
    params: dict = field(default_factory=dict)


_BASIS_CHOICES = ("dpss", "roast", "roast_randomized", "subdft")


def recovery_experiment(n: int, w: float, m: int, basis_choice: str, seed: int,
                        r: int | None = None, tol: float = 1e-8,
                        num_tones: int = 1000,
                        identity_sensing: bool = False) -> RecoveryReport:
    """Recover a bandlimited signal from y = Phi x through the chosen subspace.

    Solves the normal equations Q^* Phi^* Phi Q a = Q^* Phi^* y by CG and
    reconstructs xhat = Q a, which lies in the subspace by construction.
    All four basis choices are dimension-matched at 2*floor(NW)+1+R.
    """
    if basis_choice not in _BASIS_CHOICES:
        raise ValueError(f"basis_choice must be one of {_BASIS_CHOICES}, got {basis_choice!r}")
    if r is None:
        r = int(np.floor(3.0 * np.log(n)))
    problem = build_recovery_problem(n, w, m, seed, num_tones=num_tones,
                                     identity_sensing=identity_sensing)
    n_low = 2 * int(np.floor(n * w)) + 1
    if basis_choice == "roast":
        basis = build_roast(n, w, r)
        synth, analyze = basis.synthesize, basis.analyze
        dim = basis.dimension
    elif basis_choice == "roast_randomized":
        basis = build_roast_randomized(n, w, r, seed)
        synth, analyze = basis.synthesize, basis.analyze
        dim = basis.dimension
    elif basis_choice == "subdft":
        basis = build_subdft(n, w, r)
        q = basis.dense_basis()
        synth, analyze = (lambda c: q @ c), (lambda x: q.conj().T @ x)
        dim = basis.dimension
    else:
        basis = build_dpss(n, w, n_low + r)
        q = basis.vectors
        synth, analyze = (lambda c: q @ c), (lambda x: q.T @ x)
        dim = n_low + r

    phi = problem.phi

    def normal_op(a):
        return analyze(phi.conj().T @ (phi @ synth(a)))

    rhs = analyze(phi.conj().T @ problem.y)
    result = cgd_solve(normal_op, rhs, tol=tol, max_iter=4 * dim)
    xhat = synth(result.solution)
    rel_err = float(np.linalg.norm(xhat - problem.truth)
                    / np.linalg.norm(problem.truth))
    cond = condition_estimate(normal_op, dim, seed=seed)
    return RecoveryReport(basis_choice=basis_choice, relative_error=rel_err,
                          iterations=result.iterations,
                          condition_estimate=cond, converged=result.converged,
                          params={"n": n, "w": w, "m": m, "r": r, "seed": seed,
                                  "tol": tol, "dimension": dim,
                                  "identity_sensing": identity_sensing})
