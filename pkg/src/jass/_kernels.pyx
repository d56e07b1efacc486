# cython: language_level=3
"""Compiled metric-trace kernels.

Each ``trace_*`` function evaluates one window statistic for every window
start ``0 .. L`` of a ``(B, N)`` receive stream. The arithmetic mirrors
``jass._kernels_py`` one window at a time, with the GIL released.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

cdef double ZERO_NORM = 1e-300
cdef double JACOBI_TOL = 1e-12
cdef int JACOBI_MAX_SWEEPS = 100
cdef double PINV_CUTOFF = 1e-12


cdef inline double abs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef void jacobi(double complex* a, double complex* v, double* w, int* order, int n) noexcept nogil:
    """Cyclic Jacobi on the Hermitian n x n matrix ``a`` (destroyed).

    On return ``v`` holds eigenvectors in columns, ``w`` the eigenvalues and
    ``order`` the column indices sorted by descending eigenvalue.
    """
    cdef int p, q, k, sweep, i, j, tmp
    cdef double scale = 0.0, off, r, theta, t, c, s
    cdef double complex phase, u_qp, u_qq, xp, xq
    for i in range(n):
        for j in range(n):
            v[i * n + j] = 1.0 if i == j else 0.0
            scale += abs2(a[i * n + j])
    scale = sqrt(scale)
    if n > 1 and scale > 0.0:
        for sweep in range(JACOBI_MAX_SWEEPS):
            off = 0.0
            for p in range(n - 1):
                for q in range(p + 1, n):
                    off += abs2(a[p * n + q])
            if sqrt(2.0 * off) <= JACOBI_TOL * scale:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    r = sqrt(abs2(a[p * n + q]))
                    if r == 0.0:
                        continue
                    phase = a[p * n + q] / r
                    theta = (a[q * n + q].real - a[p * n + p].real) / (2.0 * r)
                    t = 1.0 / (fabs(theta) + sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    u_qp = -s * phase.conjugate()
                    u_qq = c * phase.conjugate()
                    for k in range(n):
                        xp = a[k * n + p]
                        xq = a[k * n + q]
                        a[k * n + p] = c * xp + u_qp * xq
                        a[k * n + q] = s * xp + u_qq * xq
                    for k in range(n):
                        xp = a[p * n + k]
                        xq = a[q * n + k]
                        a[p * n + k] = c * xp + u_qp.conjugate() * xq
                        a[q * n + k] = s * xp + u_qq.conjugate() * xq
                    a[p * n + q] = 0.0
                    a[q * n + p] = 0.0
                    a[p * n + p] = a[p * n + p].real
                    a[q * n + q] = a[q * n + q].real
                    for k in range(n):
                        xp = v[k * n + p]
                        xq = v[k * n + q]
                        v[k * n + p] = c * xp + u_qp * xq
                        v[k * n + q] = s * xp + u_qq * xq
    for i in range(n):
        w[i] = a[i * n + i].real
        order[i] = i
    # insertion sort, descending, stable
    for i in range(1, n):
        tmp = order[i]
        j = i - 1
        while j >= 0 and w[order[j]] < w[tmp]:
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = tmp


cdef void power_iteration(double complex* X, const double complex* starts, double complex* A,
                          double complex* v, int B, int num_vecs, int t_max) noexcept nogil:
    """Deflated power iteration; X is overwritten. A is (num_vecs, B), one row per vector."""
    cdef int i, t, a, b
    cdef double nrm, lam
    cdef double complex acc
    cdef double complex* q
    for i in range(num_vecs):
        q = A + i * B
        for b in range(B):
            q[b] = starts[i * B + b]
        for t in range(t_max):
            nrm = 0.0
            for a in range(B):
                acc = 0.0
                for b in range(B):
                    acc = acc + X[a * B + b] * q[b]
                v[a] = acc
                nrm += abs2(acc)
            nrm = sqrt(nrm)
            if nrm < ZERO_NORM:
                nrm = 0.0
                for b in range(B):
                    nrm += abs2(q[b])
                nrm = sqrt(nrm)
                for b in range(B):
                    q[b] = q[b] / nrm
                break
            for b in range(B):
                q[b] = v[b] / nrm
        lam = 0.0
        for a in range(B):
            acc = 0.0
            for b in range(B):
                acc = acc + X[a * B + b] * q[b]
            lam += (q[a].conjugate() * acc).real
        for a in range(B):
            for b in range(B):
                X[a * B + b] = X[a * B + b] - lam * q[a] * q[b].conjugate()


cdef void pinv_rows(const double complex* A, double complex* Ap, double complex* G, double complex* V,
                    double* w, int* order, int B, int m) noexcept nogil:
    """Ap (m, B) = pseudoinverse of the B x m matrix whose columns are the rows of A."""
    cdef int i, j, k, b
    cdef double lam_max, inv
    cdef double complex acc
    for i in range(m):
        for j in range(m):
            acc = 0.0
            for b in range(B):
                acc = acc + A[i * B + b].conjugate() * A[j * B + b]
            G[i * m + j] = acc
    jacobi(G, V, w, order, m)
    lam_max = w[order[0]]
    # G now holds the Gram pseudoinverse
    for i in range(m):
        for j in range(m):
            G[i * m + j] = 0.0
    if lam_max > 0.0:
        for k in range(m):
            if w[k] > PINV_CUTOFF * lam_max:
                inv = 1.0 / w[k]
                for i in range(m):
                    for j in range(m):
                        G[i * m + j] = G[i * m + j] + inv * V[i * m + k] * V[j * m + k].conjugate()
    for i in range(m):
        for b in range(B):
            acc = 0.0
            for j in range(m):
                acc = acc + G[i * m + j] * A[j * B + b].conjugate()
            Ap[i * B + b] = acc


cdef double projected_stat(const double complex* Y, const double complex* s, const double complex* A,
                           const double complex* Ap, double complex* Z, int B, int K, int m) noexcept nogil:
    """||P Y s*||^2 / ||P Y||_F^2 with P = I - A^T Ap (A, Ap stored as m x B rows); 0/0 -> 0."""
    cdef int i, b, k
    cdef double num = 0.0, den = 0.0
    cdef double complex acc, corr
    for i in range(m):
        for k in range(K):
            acc = 0.0
            for b in range(B):
                acc = acc + Ap[i * B + b] * Y[b * K + k]
            Z[i * K + k] = acc
    for b in range(B):
        corr = 0.0
        for k in range(K):
            acc = Y[b * K + k]
            for i in range(m):
                acc = acc - A[i * B + b] * Z[i * K + k]
            den += abs2(acc)
            corr = corr + acc * s[k].conjugate()
        num += abs2(corr)
    if den > 0.0:
        return num / den
    return 0.0


cdef void load_window(const double complex[:, ::1] y, int ell, double complex* Y, int B, int K) noexcept nogil:
    cdef int b, k
    for b in range(B):
        for k in range(K):
            Y[b * K + k] = y[b, ell + k]


cdef void jass_matrix(const double complex* Y, const double complex* s, double energy,
                      double complex* YT, double complex* X, int B, int K) noexcept nogil:
    """X = energy * (Y T)(Y T)^H with T = I - s* s^T / energy."""
    cdef int a, b, k
    cdef double complex c, acc
    for b in range(B):
        c = 0.0
        for k in range(K):
            c = c + Y[b * K + k] * s[k].conjugate()
        for k in range(K):
            YT[b * K + k] = Y[b * K + k] - c * s[k] / energy
    for a in range(B):
        for b in range(a, B):
            acc = 0.0
            for k in range(K):
                acc = acc + YT[a * K + k] * YT[b * K + k].conjugate()
            X[a * B + b] = energy * acc
            X[b * B + a] = energy * acc.conjugate()
        X[a * B + a] = X[a * B + a].real


cdef void gram_matrix(const double complex* Y, double complex* X, int B, int K) noexcept nogil:
    cdef int a, b, k
    cdef double complex acc
    for a in range(B):
        for b in range(a, B):
            acc = 0.0
            for k in range(K):
                acc = acc + Y[a * K + k] * Y[b * K + k].conjugate()
            X[a * B + b] = acc
            X[b * B + a] = acc.conjugate()
        X[a * B + a] = X[a * B + a].real


def _check(y, s, L):
    y = np.ascontiguousarray(y, dtype=np.complex128)
    s = np.ascontiguousarray(s, dtype=np.complex128)
    if y.ndim != 2 or s.ndim != 1:
        raise ValueError("y must be (B, N) and s must be a vector")
    if y.shape[1] < L + s.shape[0]:
        raise ValueError(f"stream has {y.shape[1]} samples, need {L + s.shape[0]}")
    return y, s


def _check_starts(starts, L, B):
    starts = np.ascontiguousarray(starts, dtype=np.complex128)
    if starts.ndim != 3 or starts.shape[0] < L + 1 or starts.shape[2] != B:
        raise ValueError(f"starts must have shape (>= {L + 1}, I_hat, {B}), got {starts.shape}")
    if not 1 <= starts.shape[1] < B:
        raise ValueError("need 1 <= I_hat < B")
    return starts


def trace_unnormalized(y, s, int L):
    y, s = _check(y, s, L)
    cdef const double complex[:, ::1] yv = y
    cdef const double complex[::1] sv = s
    cdef int B = y.shape[0], K = s.shape[0], ell, b, k
    cdef double complex acc
    cdef double tot
    out = np.empty(L + 1)
    cdef double[::1] ov = out
    with nogil:
        for ell in range(L + 1):
            tot = 0.0
            for b in range(B):
                acc = 0.0
                for k in range(K):
                    acc = acc + yv[b, ell + k] * sv[k].conjugate()
                tot += abs2(acc)
            ov[ell] = tot
    return out


def trace_unmitigated(y, s, int L):
    y, s = _check(y, s, L)
    cdef const double complex[:, ::1] yv = y
    cdef const double complex[::1] sv = s
    cdef int B = y.shape[0], K = s.shape[0], ell, b, k
    cdef double complex acc
    cdef double num, den
    out = np.empty(L + 1)
    cdef double[::1] ov = out
    with nogil:
        for ell in range(L + 1):
            num = 0.0
            den = 0.0
            for b in range(B):
                acc = 0.0
                for k in range(K):
                    acc = acc + yv[b, ell + k] * sv[k].conjugate()
                    den += abs2(yv[b, ell + k])
                num += abs2(acc)
            ov[ell] = num / den if den > 0.0 else 0.0
    return out


def _trace_subspace(y, s, int L, starts, int t_max, bint use_pinv, bint bajass):
    y, s = _check(y, s, L)
    cdef int B = y.shape[0], K = s.shape[0]
    starts = _check_starts(starts, L, B)
    cdef int m = starts.shape[1]
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    cdef const double complex[:, ::1] yv = y
    cdef const double complex[::1] sv = s
    cdef const double complex[:, :, ::1] st = starts
    cdef double energy = float(np.sum(s.real ** 2 + s.imag ** 2))
    cdef double complex[::1] Y = np.empty(B * K, dtype=np.complex128)
    cdef double complex[::1] YT = np.empty(B * K, dtype=np.complex128)
    cdef double complex[::1] X = np.empty(B * B, dtype=np.complex128)
    cdef double complex[::1] v = np.empty(B, dtype=np.complex128)
    cdef double complex[::1] A = np.empty(m * B, dtype=np.complex128)
    cdef double complex[::1] Ap = np.empty(m * B, dtype=np.complex128)
    cdef double complex[::1] G = np.empty(m * m, dtype=np.complex128)
    cdef double complex[::1] V = np.empty(m * m, dtype=np.complex128)
    cdef double complex[::1] Z = np.empty(m * K, dtype=np.complex128)
    cdef double[::1] w = np.empty(m)
    cdef int[::1] order = np.empty(m, dtype=np.intc)
    out = np.empty(L + 1)
    cdef double[::1] ov = out
    cdef int ell, i, b
    with nogil:
        for ell in range(L + 1):
            load_window(yv, ell, &Y[0], B, K)
            if bajass:
                gram_matrix(&Y[0], &X[0], B, K)
            else:
                jass_matrix(&Y[0], &sv[0], energy, &YT[0], &X[0], B, K)
            power_iteration(&X[0], &st[ell, 0, 0], &A[0], &v[0], B, m, t_max)
            if use_pinv:
                pinv_rows(&A[0], &Ap[0], &G[0], &V[0], &w[0], &order[0], B, m)
            else:
                for i in range(m * B):
                    Ap[i] = A[i].conjugate()
            ov[ell] = projected_stat(&Y[0], &sv[0], &A[0], &Ap[0], &Z[0], B, K, m)
    return out


def trace_jass(y, s, int L, starts, int t_max, bint use_pinv=True):
    return _trace_subspace(y, s, L, starts, t_max, use_pinv, False)


def trace_bajass(y, s, int L, starts, int t_max, bint use_pinv=True):
    return _trace_subspace(y, s, L, starts, t_max, use_pinv, True)


def trace_jass_evd(y, s, int L, int I_hat):
    y, s = _check(y, s, L)
    cdef int B = y.shape[0], K = s.shape[0], m = I_hat
    if not 1 <= m < B:
        raise ValueError("need 1 <= I_hat < B")
    cdef const double complex[:, ::1] yv = y
    cdef const double complex[::1] sv = s
    cdef double energy = float(np.sum(s.real ** 2 + s.imag ** 2))
    cdef double complex[::1] Y = np.empty(B * K, dtype=np.complex128)
    cdef double complex[::1] YT = np.empty(B * K, dtype=np.complex128)
    cdef double complex[::1] X = np.empty(B * B, dtype=np.complex128)
    cdef double complex[::1] Q = np.empty(B * B, dtype=np.complex128)
    cdef double complex[::1] A = np.empty(m * B, dtype=np.complex128)
    cdef double complex[::1] Ap = np.empty(m * B, dtype=np.complex128)
    cdef double complex[::1] Z = np.empty(m * K, dtype=np.complex128)
    cdef double[::1] w = np.empty(B)
    cdef int[::1] order = np.empty(B, dtype=np.intc)
    out = np.empty(L + 1)
    cdef double[::1] ov = out
    cdef int ell, i, b
    with nogil:
        for ell in range(L + 1):
            load_window(yv, ell, &Y[0], B, K)
            jass_matrix(&Y[0], &sv[0], energy, &YT[0], &X[0], B, K)
            jacobi(&X[0], &Q[0], &w[0], &order[0], B)
            for i in range(m):
                for b in range(B):
                    A[i * B + b] = Q[b * B + order[i]]
                    Ap[i * B + b] = Q[b * B + order[i]].conjugate()
            ov[ell] = projected_stat(&Y[0], &sv[0], &A[0], &Ap[0], &Z[0], B, K, m)
    return out
