"""Dense complex linear algebra used by the detectors.

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
The routines are small and explicit on purpose: the power iteration follows
the deflation scheme used by the JASS detector step by step, and the Jacobi
eigensolver doubles as an independent reference for it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Norm below which a power-iteration product is treated as annihilated.
ZERO_NORM = 1e-300
# Relative off-diagonal mass at which Jacobi sweeps stop.
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
# Relative Hermitian defect accepted on input.
HERMITIAN_TOL = 1e-9
# Gram eigenvalues below PINV_CUTOFF * largest are treated as zero.
PINV_CUTOFF = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    """Orthonormal eigendecomposition ``X = Q diag(eigenvalues) Q^H``.

    Eigenvalues are real and sorted in descending order; column ``i`` of
    ``eigenvectors`` belongs to ``eigenvalues[i]``.
    """

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray

    def top(self, n: int) -> np.ndarray:
        return self.eigenvectors[:, :n]


def norm_sq(v) -> float:
    v = np.asarray(v)
    return float(np.sum(v.real**2 + v.imag**2))


def frob_norm_sq(M) -> float:
    return norm_sq(M)


def _check_square(X: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")


def _check_hermitian(X: np.ndarray) -> None:
    defect = np.linalg.norm(X - X.conj().T)
    if defect > HERMITIAN_TOL * max(np.linalg.norm(X), 1.0):
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Draw CN(0, 1) entries: independent N(0, 1/2) real and imaginary parts."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


def principal_subspace(
    X,
    num_vecs: int,
    t_max: int,
    rng: np.random.Generator | None = None,
    *,
    starts=None,
) -> np.ndarray:
    """Approximate the ``num_vecs`` dominant eigenvectors of a PSD matrix.

    Power iteration with deflation: each column starts from a CN(0, I) draw,
    is multiplied and renormalized ``t_max`` times by the deflated matrix, and
    its Rayleigh quotient is then used to deflate the matrix for the next
    column. The columns are not re-orthogonalized against each other.

    Parameters
    ----------
    X : (B, B) complex array
        Hermitian positive semidefinite matrix.
    num_vecs : int
        Number of columns to extract, ``1 <= num_vecs < B``.
    t_max : int
        Multiply-and-normalize steps per column.
    rng : numpy.random.Generator, optional
        Source of the random starting vectors.
    starts : (num_vecs, B) complex array, optional
        Explicit starting vectors; overrides ``rng``.

    Returns
    -------
    (B, num_vecs) complex array with unit-norm columns.
    """
    X = np.asarray(X, dtype=np.complex128)
    _check_square(X)
    B = X.shape[0]
    if not 1 <= num_vecs < B:
        raise ValueError(f"need 1 <= num_vecs < B, got num_vecs={num_vecs}, B={B}")
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    _check_hermitian(X)
    if starts is None:
        if rng is None:
            raise ValueError("either rng or starts is required")
        starts = complex_normal(rng, (num_vecs, B))
    starts = np.asarray(starts, dtype=np.complex128)
    if starts.shape != (num_vecs, B):
        raise ValueError(f"starts must have shape {(num_vecs, B)}, got {starts.shape}")

    Xbar = X.copy()
    Q = np.empty((B, num_vecs), dtype=np.complex128)
    for i in range(num_vecs):
        q = starts[i].copy()
        for _ in range(t_max):
            v = Xbar @ q
            nrm = np.sqrt(norm_sq(v))
            if nrm < ZERO_NORM:
                q = q / np.sqrt(norm_sq(q))
                break
            q = v / nrm
        lam = float(np.real(np.vdot(q, Xbar @ q)))
        Xbar -= lam * np.outer(q, q.conj())
        Q[:, i] = q
    return Q


def _jacobi_rotate(A: np.ndarray, V: np.ndarray, p: int, q: int) -> None:
    apq = A[p, q]
    r = abs(apq)
    phase = apq / r
    theta = (A[q, q].real - A[p, p].real) / (2.0 * r)
    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(1.0 + theta * theta))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    # Unitary U acting on coordinates (p, q):
    #   U = [[c, s], [-s*conj(phase), c*conj(phase)]]
    u_qp = -s * np.conj(phase)
    u_qq = c * np.conj(phase)
    col_p = A[:, p].copy()
    col_q = A[:, q]
    A[:, p] = c * col_p + u_qp * col_q
    A[:, q] = s * col_p + u_qq * col_q
    row_p = A[p, :].copy()
    row_q = A[q, :]
    A[p, :] = c * row_p + np.conj(u_qp) * row_q
    A[q, :] = s * row_p + np.conj(u_qq) * row_q
    A[p, q] = 0.0
    A[q, p] = 0.0
    A[p, p] = A[p, p].real
    A[q, q] = A[q, q].real
    vp = V[:, p].copy()
    vq = V[:, q]
    V[:, p] = c * vp + u_qp * vq
    V[:, q] = s * vp + u_qq * vq


def exact_hermitian_evd(X) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations."""
    A = np.array(X, dtype=np.complex128)
    _check_square(A)
    _check_hermitian(A)
    A = 0.5 * (A + A.conj().T)
    n = A.shape[0]
    V = np.eye(n, dtype=np.complex128)
    scale = np.sqrt(frob_norm_sq(A))
    if n > 1 and scale > 0:
        iu = np.triu_indices(n, 1)
        for _ in range(JACOBI_MAX_SWEEPS):
            off = np.sqrt(2.0 * norm_sq(A[iu]))
            if off <= JACOBI_TOL * scale:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    if abs(A[p, q]) > 0.0:
                        _jacobi_rotate(A, V, p, q)
    w = A.diagonal().real.copy()
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(eigenvectors=V[:, order], eigenvalues=w[order])


def pseudoinverse_tall(A) -> np.ndarray:
    """Moore-Penrose inverse of a tall ``B x n`` matrix via its ``n x n`` Gram matrix.

    Gram eigenvalues at or below ``PINV_CUTOFF`` times the largest one are
    dropped, so rank-deficient inputs get the minimum-norm inverse.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    B, n = A.shape
    if not B >= n >= 1:
        raise ValueError(f"need B >= n >= 1, got shape {A.shape}")
    evd = exact_hermitian_evd(A.conj().T @ A)
    lam = evd.eigenvalues
    lam_max = lam[0]
    inv = np.zeros_like(lam)
    if lam_max > 0:
        keep = lam > PINV_CUTOFF * lam_max
        inv[keep] = 1.0 / lam[keep]
    V = evd.eigenvectors
    gram_pinv = (V * inv) @ V.conj().T
    return gram_pinv @ A.conj().T


def residual_project(A, A_pinv, V) -> np.ndarray:
    """Apply ``I - A A^+`` to ``V`` without forming the ``B x B`` projector."""
    A = np.asarray(A)
    A_pinv = np.asarray(A_pinv)
    V = np.asarray(V)
    if A_pinv.shape != (A.shape[1], A.shape[0]):
        raise ValueError(f"A_pinv shape {A_pinv.shape} does not match A shape {A.shape}")
    if V.shape[0] != A.shape[0]:
        raise ValueError(f"V has {V.shape[0]} rows, expected {A.shape[0]}")
    return V - A @ (A_pinv @ V)
