"""Small dense linear-algebra kernels used by the bound calculators.

Everything here works on tiny matrices (state dimension at most a handful),
so clarity is preferred over asymptotic efficiency.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize

from .exceptions import DimensionTooLarge, Infeasible, NotHurwitz, NotSymmetric

MAX_CUBE_COLUMNS = 24
_CHUNK_BITS = 14


def _as_matrix(M) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    return M


def _is_symmetric(S: np.ndarray, tol: float) -> bool:
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    return bool(np.max(np.abs(S - S.T), initial=0.0) <= tol * scale)


def solve_lyapunov(M, Q) -> np.ndarray:
    """Solve ``P M + M^T P = -Q`` for symmetric ``P``.

    The equation is linearized into an ``n^2 x n^2`` system, which is fine
    for the small state dimensions this package deals with.

    Raises
    ------
    NotHurwitz
        If the linear system is singular or the solution is not positive
        definite, which happens exactly when ``M`` has an eigenvalue with
        nonnegative real part.
    """
    M = _as_matrix(M)
    Q = _as_matrix(Q)
    n = M.shape[0]
    if M.shape != (n, n) or Q.shape != (n, n):
        raise ValueError(f"M and Q must be square of equal size, got {M.shape} and {Q.shape}")
    if not _is_symmetric(Q, 1e-12):
        raise NotSymmetric("Q must be symmetric")
    if np.linalg.eigvalsh(Q)[0] <= 0.0:
        raise ValueError("Q must be positive definite")

    eye = np.eye(n)
    # row-major vec: vec(P M) = (I kron M^T) vec(P), vec(M^T P) = (M^T kron I) vec(P)
    L = np.kron(eye, M.T) + np.kron(M.T, eye)
    if np.linalg.cond(L) > 1e13:
        raise NotHurwitz("Lyapunov operator is singular; M has eigenvalues summing to zero")
    P = np.linalg.solve(L, -Q.ravel()).reshape(n, n)
    P = 0.5 * (P + P.T)
    if np.linalg.eigvalsh(P)[0] <= 0.0:
        raise NotHurwitz("Lyapunov solution is not positive definite; M is not Hurwitz")
    return P


def sym_eig(S, vectors: bool = False):
    """Eigenvalues (ascending) of a symmetric matrix, optionally with eigenvectors."""
    S = _as_matrix(S)
    if S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got {S.shape}")
    if not _is_symmetric(S, 1e-10):
        raise NotSymmetric("matrix is not symmetric within 1e-10")
    S = 0.5 * (S + S.T)
    if vectors:
        return np.linalg.eigh(S)
    return np.linalg.eigvalsh(S)


def spectral_norm(M) -> float:
    M = _as_matrix(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def _hypercube_vertices(n: int):
    """Yield blocks of 0/1 vertex coordinates covering all ``2**n`` vertices."""
    total = 1 << n
    step = 1 << min(n, _CHUNK_BITS)
    bits = np.arange(n)
    for start in range(0, total, step):
        idx = np.arange(start, min(start + step, total))
        yield ((idx[:, None] >> bits) & 1).astype(float)


def box_norm(M, lower, upper) -> float:
    """Maximum of ``||M s||`` over the box ``lower <= s <= upper``.

    The Euclidean norm is convex, so the maximum sits on a vertex and
    exhaustive enumeration is exact.
    """
    M = _as_matrix(M)
    n = M.shape[1]
    if n > MAX_CUBE_COLUMNS:
        raise DimensionTooLarge(f"{n} columns exceed the enumeration budget of {MAX_CUBE_COLUMNS}")
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (n,))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (n,))
    if np.any(lower > upper):
        raise ValueError("box lower corner exceeds upper corner")
    best = 0.0
    width = upper - lower
    for block in _hypercube_vertices(n):
        pts = lower + block * width
        best = max(best, float(np.max(np.linalg.norm(pts @ M.T, axis=1))))
    return best


def cube_norm(B) -> float:
    """``sup ||B s||`` over the unit hypercube ``s in [0, 1]^N``."""
    return box_norm(B, 0.0, 1.0)


def nnls(A, b) -> np.ndarray:
    """Nonnegative solution of ``A q = b``.

    Raises
    ------
    Infeasible
        If ``b`` is not (numerically) in the conic hull of the columns of ``A``.
    """
    A = _as_matrix(A)
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if b.shape != (A.shape[0],):
        raise ValueError(f"b has shape {b.shape}, expected ({A.shape[0]},)")
    q, rnorm = optimize.nnls(A, b)
    tol = 1e-9 * max(1.0, float(np.linalg.norm(b)))
    if rnorm > tol:
        raise Infeasible(f"nonnegative residual {rnorm:.3e} exceeds {tol:.1e}")
    return q
