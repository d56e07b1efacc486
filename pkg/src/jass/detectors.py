"""Synchronization detectors: per-window statistics and sliding-window traces.

All normalized statistics take the form ``||P Y s*||^2 / ||P Y||_F^2`` for
some projector ``P`` (identity for the unmitigated detector) and therefore
lie in ``[0, ||s||^2]``. Thresholds are given as a fraction ``alpha`` of
the sequence energy ``||s||^2``.

The single-window functions here are straightforward reference code; the
traces in :func:`metric_trace` come from :mod:`jass.kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, rng as rngmod
from .linalg import (
    exact_hermitian_evd,
    frob_norm_sq,
    norm_sq,
    principal_subspace,
    pseudoinverse_tall,
    residual_project,
)

KINDS = ("jass", "jass_evd", "bajass", "unmitigated", "unnormalized")
NORMALIZED = ("jass", "jass_evd", "bajass", "unmitigated")

SUCCESS = "success"
FALSE_POSITIVE = "false_positive"
FALSE_NEGATIVE = "false_negative"


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def _seq_values(seq):
    return np.asarray(getattr(seq, "values", seq), dtype=np.complex128)


def statistic_unnormalized(Y, seq) -> float:
    """Raw correlation energy ``||Y s*||^2``."""
    s = _seq_values(seq)
    return norm_sq(np.asarray(Y) @ s.conj())


def statistic_unmitigated(Y, seq) -> float:
    s = _seq_values(seq)
    Y = np.asarray(Y, dtype=np.complex128)
    return _ratio(norm_sq(Y @ s.conj()), frob_norm_sq(Y))


def projected_statistic(Y, seq, A, A_pinv) -> float:
    """Normalized correlation after applying ``I - A A_pinv`` to the window."""
    s = _seq_values(seq)
    PY = residual_project(A, A_pinv, np.asarray(Y, dtype=np.complex128))
    return _ratio(norm_sq(PY @ s.conj()), frob_norm_sq(PY))


def jass_matrix(Y, seq, form: str = "psd") -> np.ndarray:
    """The PSD matrix whose dominant eigenvectors JASS nulls.

    ``form="psd"`` builds ``E (Y T)(Y T)^H`` with ``T = I - s* s^T / E``,
    ``form="difference"`` builds ``E Y Y^H - c c^H`` directly, and
    ``form="reinterpreted"`` drops the factor ``E``. All three share
    eigenvectors; only the first is PSD under rounding.
    """
    s = _seq_values(seq)
    Y = np.asarray(Y, dtype=np.complex128)
    energy = norm_sq(s)
    c = Y @ s.conj()
    if form == "difference":
        return energy * (Y @ Y.conj().T) - np.outer(c, c.conj())
    YT = Y - np.outer(c, s) / energy
    G = YT @ YT.conj().T
    if form == "reinterpreted":
        return G
    if form == "psd":
        return energy * G
    raise ValueError(f"unknown form {form!r}")


def _projector_inverse(A, use_pinv):
    return pseudoinverse_tall(A) if use_pinv else A.conj().T


def statistic_jass(Y, seq, I_hat: int, t_max: int, rng=None, *, starts=None, use_pinv: bool = True, form: str = "psd") -> float:
    """JASS window statistic with a power-iteration estimate of the jammer subspace."""
    X = jass_matrix(Y, seq, form)
    A = principal_subspace(X, I_hat, t_max, rng, starts=starts)
    return projected_statistic(Y, seq, A, _projector_inverse(A, use_pinv))


def statistic_jass_evd(Y, seq, I_hat: int) -> float:
    """JASS window statistic using the exact top eigenvectors."""
    X = jass_matrix(Y, seq)
    A = exact_hermitian_evd(X).top(I_hat)
    return projected_statistic(Y, seq, A, A.conj().T)


def statistic_bajass(Y, seq, I_hat: int, t_max: int, rng=None, *, starts=None, use_pinv: bool = True) -> float:
    """Baseline: null the strongest spatial directions of the raw window."""
    Y = np.asarray(Y, dtype=np.complex128)
    A = principal_subspace(Y @ Y.conj().T, I_hat, t_max, rng, starts=starts)
    return projected_statistic(Y, seq, A, _projector_inverse(A, use_pinv))


@dataclass(frozen=True)
class DetectorParams:
    I_hat: int = 4
    t_max: int = 4
    use_pinv: bool = True
    master_seed: int = 0
    trial_index: int = 0


def detector_starts(kind: str, B: int, n_windows: int, params: DetectorParams) -> np.ndarray:
    """Starting vectors for every window; row ``ell`` depends on (seed, trial, ell) only."""
    return rngmod.window_starts(params.master_seed, f"detector:{kind}", params.trial_index, n_windows, params.I_hat, B)


def metric_trace(stream, seq, kind: str, params: DetectorParams, *, L: int | None = None, starts=None) -> np.ndarray:
    """Window statistic for every start index ``0 .. L`` of a receive stream.

    ``stream`` is a :class:`~jass.signal.ReceiveStream` or a ``(B, N)`` array
    (then ``L`` is required).
    """
    y = getattr(stream, "y", stream)
    if L is None:
        L = stream.L
    s = _seq_values(seq)
    K = s.size
    B = y.shape[0]
    if y.shape[1] < L + K:
        raise ValueError(f"stream has {y.shape[1]} samples, need L + K = {L + K}")
    if kind == "unnormalized":
        return kernels.trace_unnormalized(y, s, L)
    if kind == "unmitigated":
        return kernels.trace_unmitigated(y, s, L)
    if kind == "jass_evd":
        return kernels.trace_jass_evd(y, s, L, params.I_hat)
    if kind in ("jass", "bajass"):
        if starts is None:
            starts = detector_starts(kind, B, L + 1, params)
        fn = kernels.trace_jass if kind == "jass" else kernels.trace_bajass
        return fn(y, s, L, starts, params.t_max, params.use_pinv)
    raise ValueError(f"unknown detector {kind!r}")


@dataclass(frozen=True)
class DetectionOutcome:
    detected_at: int | None
    classification: str


def classify(detected_at: int | None, L: int) -> str:
    if detected_at is None or detected_at > L:
        return FALSE_NEGATIVE
    return SUCCESS if detected_at == L else FALSE_POSITIVE


def detect(trace, tau: float, L: int | None = None) -> DetectionOutcome:
    """First index whose statistic reaches ``tau``.

    ``L`` defaults to ``len(trace) - 1``, the last window a trace covers.
    """
    trace = np.asarray(trace)
    if L is None:
        L = trace.size - 1
    hits = np.flatnonzero(trace >= tau)
    ell = int(hits[0]) if hits.size else None
    return DetectionOutcome(ell, classify(ell, L))


def detect_sequential(stream, seq, kind: str, alpha: float, params: DetectorParams) -> DetectionOutcome:
    """Slide a window over the stream and stop at the first crossing.

    Uses the single-window reference statistics, so it is independent of the
    trace kernels; the window at ``ell`` is updated by dropping its first
    column and appending ``y[ell + K]``.
    """
    s = _seq_values(seq)
    K = s.size
    y = stream.y
    L = stream.L
    tau = alpha * norm_sq(s)
    starts = None
    if kind in ("jass", "bajass"):
        starts = detector_starts(kind, y.shape[0], L + 1, params)
    Y = y[:, :K].copy()
    for ell in range(L + 1):
        if kind == "jass":
            v = statistic_jass(Y, s, params.I_hat, params.t_max, starts=starts[ell], use_pinv=params.use_pinv)
        elif kind == "bajass":
            v = statistic_bajass(Y, s, params.I_hat, params.t_max, starts=starts[ell], use_pinv=params.use_pinv)
        elif kind == "jass_evd":
            v = statistic_jass_evd(Y, s, params.I_hat)
        elif kind == "unmitigated":
            v = statistic_unmitigated(Y, s)
        elif kind == "unnormalized":
            v = statistic_unnormalized(Y, s)
        else:
            raise ValueError(f"unknown detector {kind!r}")
        if v >= tau:
            return DetectionOutcome(ell, classify(ell, L))
        if ell < L:
            Y = np.concatenate([Y[:, 1:], y[:, ell + K : ell + K + 1]], axis=1)
    return DetectionOutcome(None, FALSE_NEGATIVE)
