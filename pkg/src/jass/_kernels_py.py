"""Pure-numpy metric-trace kernels, batched over windows.

Same interface and arithmetic as the compiled ``_kernels`` module. Windows
are processed in chunks so long streams do not blow up memory.
"""

import numpy as np

from .linalg import PINV_CUTOFF, ZERO_NORM

CHUNK = 512


def _windows(y, K, lo, hi):
    # (n, B, K) view of windows lo .. hi-1
    return np.lib.stride_tricks.sliding_window_view(y[:, lo : hi + K - 1], K, axis=1).transpose(1, 0, 2)


def _sqnorm(a, axes):
    return np.sum(a.real**2 + a.imag**2, axis=axes)


def _ratio(num, den):
    out = np.zeros_like(den)
    nz = den > 0
    out[nz] = num[nz] / den[nz]
    return out


def _power_iteration(X, starts, t_max):
    # X: (n, B, B) PSD, starts: (n, I_hat, B) -> A: (n, B, I_hat)
    Xbar = X.copy()
    n, num_vecs, B = starts.shape
    A = np.empty((n, B, num_vecs), dtype=np.complex128)
    for i in range(num_vecs):
        q = starts[:, i, :].copy()
        live = np.ones(n, dtype=bool)
        for _ in range(t_max):
            v = np.einsum("nab,nb->na", Xbar, q)
            nrm = np.sqrt(_sqnorm(v, 1))
            dead = live & (nrm < ZERO_NORM)
            if dead.any():
                q[dead] /= np.sqrt(_sqnorm(q[dead], 1))[:, None]
                live &= ~dead
            q[live] = v[live] / nrm[live, None]
        lam = np.einsum("na,nab,nb->n", q.conj(), Xbar, q).real
        Xbar -= lam[:, None, None] * q[:, :, None] * q[:, None, :].conj()
        A[:, :, i] = q
    return A


def _pinv(A):
    # Gram-matrix pseudoinverse of (n, B, m) tall matrices -> (n, m, B)
    G = np.einsum("nbi,nbj->nij", A.conj(), A)
    lam, V = np.linalg.eigh(G)
    lam_max = lam[:, -1:]
    keep = lam > PINV_CUTOFF * lam_max
    inv = np.where(keep, 1.0 / np.where(keep, lam, 1.0), 0.0)
    Gp = (V * inv[:, None, :]) @ V.conj().transpose(0, 2, 1)
    return Gp @ A.conj().transpose(0, 2, 1)


def _projected_stat(Yw, sc, A, use_pinv):
    Ap = _pinv(A) if use_pinv else A.conj().transpose(0, 2, 1)
    PY = Yw - A @ (Ap @ Yw)
    num = _sqnorm(PY @ sc, 1)
    den = _sqnorm(PY, (1, 2))
    return _ratio(num, den)


def _jass_matrix(Yw, s, energy):
    c = Yw @ s.conj()
    YT = Yw - c[:, :, None] * (s / energy)[None, None, :]
    return energy * (YT @ YT.conj().transpose(0, 2, 1))


def _chunks(L):
    for lo in range(0, L + 1, CHUNK):
        yield lo, min(lo + CHUNK, L + 1)


def trace_unnormalized(y, s, L):
    y = np.asarray(y, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    out = np.empty(L + 1)
    for lo, hi in _chunks(L):
        Yw = _windows(y, s.size, lo, hi)
        out[lo:hi] = _sqnorm(Yw @ s.conj(), 1)
    return out


def trace_unmitigated(y, s, L):
    y = np.asarray(y, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    out = np.empty(L + 1)
    for lo, hi in _chunks(L):
        Yw = _windows(y, s.size, lo, hi)
        out[lo:hi] = _ratio(_sqnorm(Yw @ s.conj(), 1), _sqnorm(Yw, (1, 2)))
    return out


def trace_jass(y, s, L, starts, t_max, use_pinv=True):
    y = np.asarray(y, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    energy = float(np.sum(s.real**2 + s.imag**2))
    out = np.empty(L + 1)
    for lo, hi in _chunks(L):
        Yw = _windows(y, s.size, lo, hi)
        M = _jass_matrix(Yw, s, energy)
        A = _power_iteration(M, starts[lo:hi], t_max)
        out[lo:hi] = _projected_stat(Yw, s.conj(), A, use_pinv)
    return out


def trace_jass_evd(y, s, L, I_hat):
    y = np.asarray(y, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    energy = float(np.sum(s.real**2 + s.imag**2))
    out = np.empty(L + 1)
    for lo, hi in _chunks(L):
        Yw = _windows(y, s.size, lo, hi)
        M = _jass_matrix(Yw, s, energy)
        _, V = np.linalg.eigh(M)
        A = V[:, :, ::-1][:, :, :I_hat]
        out[lo:hi] = _projected_stat(Yw, s.conj(), A, False)
    return out


def trace_bajass(y, s, L, starts, t_max, use_pinv=True):
    y = np.asarray(y, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    out = np.empty(L + 1)
    for lo, hi in _chunks(L):
        Yw = _windows(y, s.size, lo, hi)
        G = Yw @ Yw.conj().transpose(0, 2, 1)
        A = _power_iteration(G, starts[lo:hi], t_max)
        out[lo:hi] = _projected_stat(Yw, s.conj(), A, use_pinv)
    return out
