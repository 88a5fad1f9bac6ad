"""Small dense real linear algebra: spectral norm, symmetric eigenvalues,
Kronecker product and inversion.

Matrices and vectors are plain ``numpy`` float arrays. The helpers
``as_matrix`` / ``as_vector`` enforce the shape and finiteness invariants
every other module relies on.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError, SingularMatrixError

# Default tolerances. Every routine accepts overrides as keyword arguments.
POWER_TOL = 1e-12
POWER_MAX_ITER = 10_000
POWER_RESTART_PERTURBATION = 1e-9
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-12
PIVOT_TOL = 1e-14


def as_matrix(A) -> np.ndarray:
    M = np.array(A, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.size == 0:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def as_vector(v) -> np.ndarray:
    x = np.array(v, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("expected a nonempty vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return x


def _sigma1_2x2(a, b, c, d):
    # Largest root of s^2 - tr(A^T A) s + det(A)^2 = 0; works elementwise.
    # Entries are scaled by their max magnitude to avoid under/overflow.
    m = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.maximum(np.abs(c), np.abs(d)))
    safe = np.where(m > 0, m, 1.0)
    a, b, c, d = a / safe, b / safe, c / safe, d / safe
    t = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = np.maximum(t * t - 4.0 * det * det, 0.0)
    return m * np.sqrt((t + np.sqrt(disc)) / 2.0)


def spectral_norm(A, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Largest singular value of ``A``.

    1x1 and 2x2 inputs use closed forms. Larger matrices run power iteration
    on ``A^T A`` from the all-ones vector. If the converged estimate falls
    below the trivial lower bound ``max_j ||A e_j||^2`` the start vector was
    orthogonal to the top singular direction; the iteration is restarted
    from the all-ones vector with ``+1e-9`` added to the first coordinate
    and is not allowed to stop until it clears that bound. The estimate is
    then accepted once the eigen-residual ``||Gv - mu v||`` is below
    ``tol * mu``, refining by repeated squaring when it is not.
    """
    M = as_matrix(A)
    r, c = M.shape
    if r == 1 and c == 1:
        return abs(float(M[0, 0]))
    if r == 2 and c == 2:
        return float(_sigma1_2x2(M[0, 0], M[0, 1], M[1, 0], M[1, 1]))
    scale = float(np.max(np.abs(M)))
    if scale == 0.0:
        return 0.0
    M = M / scale
    G = M.T @ M
    lower = float(np.max(np.diag(G)))

    start = np.ones(c)
    mu, v, ok = _power_iterate(G, start, tol, max_iter, floor=None)
    if not (ok and mu >= lower * (1.0 - 1e-9)):
        start = np.ones(c)
        start[0] += POWER_RESTART_PERTURBATION
        mu, v, ok = _power_iterate(G, start, tol, max_iter, floor=lower * (1.0 - 1e-9))
    mu, v, residual = _refine_by_squaring(G, v, tol)
    if residual > tol * mu and not ok:
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} iterations",
            last_iterate=v,
            residual=residual,
        )
    return scale * math.sqrt(mu)


def _rayleigh(G, v):
    w = G @ v
    mu = float(v @ w)
    return mu, float(np.linalg.norm(w - mu * v))


def _refine_by_squaring(G, v, tol, max_squarings=64):
    """Sharpen a stalled power-iteration estimate.

    Clustered top eigenvalues make plain power iteration stop early. Each
    squaring of ``G`` squares the eigenvalue ratios, so ``G^(2^s) v`` is
    pulled onto the top eigenspace quickly. Rayleigh quotients never exceed
    the top eigenvalue, so the largest one seen is kept.
    """
    best, residual = _rayleigh(G, v)
    if residual <= tol * best:
        return best, v, residual
    P = G.copy()
    for _ in range(max_squarings):
        P = P @ P
        m = float(np.max(np.abs(P)))
        if m == 0.0:
            break
        P /= m
        w = P @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            break
        w /= nw
        mu_w, res_w = _rayleigh(G, w)
        best = max(best, mu_w)
        if res_w < residual:
            v, residual = w, res_w
        if residual <= tol * best:
            break
    return best, v, residual


def _power_iterate(G, v, tol, max_iter, floor):
    v = v / np.linalg.norm(v)
    mu = 0.0
    for _ in range(max_iter):
        w = G @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, v, False
        mu_new = float(v @ w)
        v = w / nw
        if abs(mu_new - mu) <= tol * abs(mu_new) and (floor is None or mu_new >= floor):
            return mu_new, v, True
        mu = mu_new
    return mu, v, False


def spectral_norm_2x2_batch(A: np.ndarray) -> np.ndarray:
    """Closed-form sigma_1 for a stack of 2x2 matrices, shape (..., 2, 2)."""
    return _sigma1_2x2(A[..., 0, 0], A[..., 0, 1], A[..., 1, 0], A[..., 1, 1])


def symmetric_eigenvalues(
    S, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS
) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix in ascending order (cyclic Jacobi)."""
    S = as_matrix(S)
    n, m = S.shape
    if n != m:
        raise ValueError("symmetric_eigenvalues needs a square matrix")
    if np.max(np.abs(S - S.T)) > SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric")
    scale = float(np.max(np.abs(S)))
    if n == 1 or scale == 0.0:
        return np.sort(np.diag(S).copy())
    S = 0.5 * (S + S.T) / scale
    fro = np.linalg.norm(S)

    def off_norm():
        off = S - np.diag(np.diag(S))
        return float(np.linalg.norm(off))

    for _ in range(max_sweeps):
        if off_norm() < tol * fro:
            return scale * np.sort(np.diag(S).copy())
        for p in range(n - 1):
            for q in range(p + 1, n):
                spq = S[p, q]
                if spq == 0.0:
                    continue
                theta = (S[q, q] - S[p, p]) / (2.0 * spq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = S[:, p].copy()
                col_q = S[:, q].copy()
                S[:, p] = c * col_p - s * col_q
                S[:, q] = s * col_p + c * col_q
                row_p = S[p, :].copy()
                row_q = S[q, :].copy()
                S[p, :] = c * row_p - s * row_q
                S[q, :] = s * row_p + c * row_q
                S[p, q] = S[q, p] = 0.0
    if off_norm() < tol * fro:
        return scale * np.sort(np.diag(S).copy())
    raise ConvergenceError(
        f"Jacobi eigenvalue iteration did not converge in {max_sweeps} sweeps",
        last_iterate=S,
        residual=off_norm(),
    )


def kron(A, B) -> np.ndarray:
    return np.kron(as_matrix(A), as_matrix(B))


def inverse(Q, return_condition: bool = False, pivot_tol: float = PIVOT_TOL):
    """Inverse by Gauss-Jordan elimination with partial pivoting.

    With ``return_condition=True`` also returns the ratio of the largest to
    the smallest pivot magnitude, a cheap condition estimate.
    """
    Q = as_matrix(Q)
    n, m = Q.shape
    if n != m:
        raise ValueError("inverse needs a square matrix")
    scale = float(np.max(np.abs(Q)))
    if scale == 0.0:
        raise SingularMatrixError("zero matrix is singular")
    aug = np.hstack([Q, np.eye(n)])
    pivots = []
    for col in range(n):
        row = col + int(np.argmax(np.abs(aug[col:, col])))
        piv = aug[row, col]
        if abs(piv) < pivot_tol * scale:
            raise SingularMatrixError(
                f"pivot {abs(piv):.3e} in column {col} below {pivot_tol:g} x max entry"
            )
        if row != col:
            aug[[col, row]] = aug[[row, col]]
        pivots.append(abs(piv))
        aug[col] /= piv
        others = np.arange(n) != col
        aug[others] -= np.outer(aug[others, col], aug[col])
    inv = aug[:, n:]
    if return_condition:
        return inv, max(pivots) / min(pivots)
    return inv
