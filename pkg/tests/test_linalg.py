import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jass import linalg
from jass.linalg import (
    exact_hermitian_evd,
    frob_norm_sq,
    norm_sq,
    principal_subspace,
    pseudoinverse_tall,
    residual_project,
)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_psd(rng, B, rank=None):
    Z = crandn(rng, B, rank or B)
    return Z @ Z.conj().T


def subspace_residual(basis, vectors):
    """Norm of the part of ``vectors`` outside ``span(basis)``."""
    Q, _ = np.linalg.qr(basis)
    return np.linalg.norm(vectors - Q @ (Q.conj().T @ vectors))


# -- norms -------------------------------------------------------------------


def test_norm_sq_pythagorean():
    assert norm_sq([3, 4j]) == 25.0


def test_frob_norm_sq_identity():
    assert frob_norm_sq(np.eye(4)) == 4.0


def test_frob_norm_sq_matches_eigenvalue_sum():
    rng = np.random.default_rng(0)
    M = crandn(rng, 5, 7)
    lam = np.linalg.eigvalsh(M @ M.conj().T)
    assert frob_norm_sq(M) == pytest.approx(lam.sum(), rel=1e-9)


# -- exact EVD ---------------------------------------------------------------


def test_evd_identity():
    e = exact_hermitian_evd(np.eye(3))
    np.testing.assert_allclose(e.eigenvalues, [1, 1, 1])
    np.testing.assert_allclose(e.eigenvectors.conj().T @ e.eigenvectors, np.eye(3), atol=1e-12)


def test_evd_two_by_two_hand_computed():
    e = exact_hermitian_evd([[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(e.eigenvalues, [3.0, 1.0], atol=1e-12)
    v1, v2 = e.eigenvectors[:, 0], e.eigenvectors[:, 1]
    assert abs(np.vdot(v1, [1, 1])) / np.sqrt(2) == pytest.approx(1.0, abs=1e-12)
    assert abs(np.vdot(v2, [1, -1])) / np.sqrt(2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("B", [1, 2, 5, 8, 16])
def test_evd_random_hermitian(B):
    rng = np.random.default_rng(B)
    Z = crandn(rng, B, B)
    X = Z + Z.conj().T
    e = exact_hermitian_evd(X)
    Q, lam = e.eigenvectors, e.eigenvalues
    assert np.linalg.norm(Q.conj().T @ Q - np.eye(B)) <= 1e-10 * B
    assert np.all(np.diff(lam) <= 0)
    assert np.linalg.norm(Q @ np.diag(lam) @ Q.conj().T - X) <= 1e-8 * np.linalg.norm(X)
    np.testing.assert_allclose(lam, np.linalg.eigvalsh(X)[::-1], atol=1e-10 * np.linalg.norm(X))


def test_evd_psd_eigenvalues_nonnegative():
    rng = np.random.default_rng(3)
    X = random_psd(rng, 12, rank=3)
    lam = exact_hermitian_evd(X).eigenvalues
    assert lam.min() >= -1e-10 * lam[0]


def test_evd_rejects_non_hermitian():
    with pytest.raises(ValueError):
        exact_hermitian_evd([[1.0, 2.0], [0.0, 1.0]])


# -- pseudoinverse / projection ---------------------------------------------


def test_pinv_orthonormal_columns():
    A = np.eye(5)[:, :2].astype(complex)
    np.testing.assert_allclose(pseudoinverse_tall(A), A.T, atol=1e-12)


def test_pinv_rank_one_closed_form():
    np.testing.assert_allclose(pseudoinverse_tall(np.array([[2.0], [0.0]])), [[0.5, 0.0]], atol=1e-15)


def test_pinv_duplicate_columns_gives_rank_one_projector():
    rng = np.random.default_rng(1)
    a = crandn(rng, 6)
    A = np.stack([a, a], axis=1)
    P = A @ pseudoinverse_tall(A)
    # SVD oracle
    U, s, _ = np.linalg.svd(A)
    u = U[:, :1]
    np.testing.assert_allclose(P, u @ u.conj().T, atol=1e-10)
    np.testing.assert_allclose(P, A @ np.linalg.pinv(A), atol=1e-10)


@pytest.mark.parametrize("shape", [(8, 1), (8, 3), (16, 4), (4, 4)])
def test_pinv_moore_penrose(shape):
    rng = np.random.default_rng(sum(shape))
    A = crandn(rng, *shape)
    Ap = pseudoinverse_tall(A)
    assert np.linalg.norm(A @ Ap @ A - A) <= 1e-8 * np.linalg.norm(A)
    assert np.linalg.norm(Ap @ A @ Ap - Ap) <= 1e-8 * np.linalg.norm(Ap)
    H = A @ Ap
    assert np.linalg.norm(H - H.conj().T) <= 1e-8


def test_pinv_of_exact_orthonormal_is_conjugate_transpose():
    rng = np.random.default_rng(5)
    Q, _ = np.linalg.qr(crandn(rng, 10, 4))
    assert np.linalg.norm(pseudoinverse_tall(Q) - Q.conj().T) <= 1e-10


def test_residual_project_simple_cases():
    e1 = np.eye(4)[:, :1].astype(complex)
    e2 = np.eye(4)[:, 1:2].astype(complex)
    np.testing.assert_allclose(residual_project(e1, e1.T, e1), 0)
    np.testing.assert_allclose(residual_project(e1, e1.T, e2), e2)


def test_residual_project_matches_dense_projector():
    rng = np.random.default_rng(7)
    A, _ = np.linalg.qr(crandn(rng, 9, 3))
    V = crandn(rng, 9, 5)
    dense = (np.eye(9) - A @ A.conj().T) @ V
    assert np.abs(residual_project(A, A.conj().T, V) - dense).max() <= 1e-10


def test_residual_project_idempotent():
    rng = np.random.default_rng(8)
    A = crandn(rng, 10, 4)
    Ap = pseudoinverse_tall(A)
    V = crandn(rng, 10, 6)
    once = residual_project(A, Ap, V)
    twice = residual_project(A, Ap, once)
    assert np.linalg.norm(twice - once) <= 1e-9 * np.linalg.norm(once)


def test_residual_project_dimension_mismatch():
    with pytest.raises(ValueError):
        residual_project(np.ones((4, 2)), np.ones((2, 4)), np.ones((3, 1)))


# -- power iteration ---------------------------------------------------------


def test_power_iteration_dominant_axis():
    X = np.diag([4.0, 1.0, 0.0])
    Q = principal_subspace(X, 1, 20, np.random.default_rng(0))
    assert abs(Q[0, 0]) > 1 - 1e-6


def test_power_iteration_two_columns_span():
    X = np.diag([4.0, 1.0, 0.0])
    Q = principal_subspace(X, 2, 20, np.random.default_rng(1))
    top = exact_hermitian_evd(X).top(2)
    assert subspace_residual(Q, top) <= 1e-5


def test_power_iteration_zero_matrix_returns_unit_start():
    start = np.array([[3.0, 4.0, 0.0]], dtype=complex)
    Q = principal_subspace(np.zeros((3, 3)), 1, 5, starts=start)
    np.testing.assert_allclose(Q[:, 0], start[0] / 5.0)
    Q = principal_subspace(np.zeros((4, 4)), 2, 3, np.random.default_rng(2))
    assert np.all(np.isfinite(Q))
    np.testing.assert_allclose(np.linalg.norm(Q, axis=0), 1.0)


def test_power_iteration_errors():
    X = np.eye(3)
    with pytest.raises(ValueError):
        principal_subspace(X, 3, 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        principal_subspace(X, 1, 0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        principal_subspace(np.ones((3, 2)), 1, 1, np.random.default_rng(0))


def test_power_iteration_follows_deflation_recursion():
    # manual replay of the algorithm for two columns
    rng = np.random.default_rng(4)
    X = random_psd(rng, 5)
    starts = crandn(rng, 2, 5)
    Q = principal_subspace(X, 2, 3, starts=starts)
    Xbar = X.copy()
    for i in range(2):
        q = starts[i]
        for _ in range(3):
            q = Xbar @ q / np.linalg.norm(Xbar @ q)
        lam = np.real(q.conj() @ Xbar @ q)
        Xbar = Xbar - lam * np.outer(q, q.conj())
        np.testing.assert_allclose(Q[:, i], q, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), B=st.integers(3, 12))
def test_rayleigh_quotient_nondecreasing(seed, B):
    rng = np.random.default_rng(seed)
    X = random_psd(rng, B)
    start = crandn(rng, 1, B)
    lam1 = np.linalg.eigvalsh(X)[-1]
    previous = -np.inf
    for t in range(1, 15):
        q = principal_subspace(X, 1, t, starts=start)[:, 0]
        rq = np.real(q.conj() @ X @ q)
        assert rq >= previous - 1e-12 * lam1
        previous = rq


@pytest.mark.parametrize("seed", range(10))
def test_deflation_converges_to_top_eigenspace(seed):
    rng = np.random.default_rng(seed)
    B, m = 8, 3
    U, _ = np.linalg.qr(crandn(rng, B, B))
    lam = np.array([10.0, 7.0, 5.0, 1.0, 0.5, 0.2, 0.1, 0.0])
    X = (U * lam) @ U.conj().T
    Q = principal_subspace(X, m, 400, rng)
    assert np.linalg.norm(Q.conj().T @ Q - np.eye(m)) <= 1e-6
    assert subspace_residual(Q, exact_hermitian_evd(X).top(m)) <= 1e-6


def test_module_constants_exposed():
    assert linalg.ZERO_NORM == 1e-300
    assert linalg.JACOBI_TOL == 1e-12
    assert linalg.JACOBI_MAX_SWEEPS == 100
