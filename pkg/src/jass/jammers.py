"""Adversary models behind a single causal stepping interface.

A jammer is stepped once per sample index ``k`` and is handed the UE
transmit signal ``s[0 .. k]``; it never sees later samples. Spoofing
jammers replay that history, the others emit Gaussian noise according to
their own schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import complex_normal, norm_sq

KINDS = (
    "none",
    "barrage",
    "reactive",
    "spoofing",
    "delayed_spoofing",
    "erratic",
    "antenna_switching",
)

ACTIVE = "active"
SILENT = "silent"


@dataclass(frozen=True)
class JammerSpec:
    kind: str
    I: int
    rho: float
    K: int = 16  # sequence length; burst and period lengths are uniform on [1, K]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown jammer kind {self.kind!r}")
        if self.kind != "none" and self.I < 1:
            raise ValueError("an active jammer needs at least one antenna")
        if self.rho < 0:
            raise ValueError("jammer power must be nonnegative")
        if self.K < 1:
            raise ValueError("K must be positive")


@dataclass
class JammerState:
    phase: str = ACTIVE
    remaining: float = math.inf
    antenna_mask: np.ndarray | None = None
    rng: np.random.Generator | None = field(default=None, repr=False)


def _period(spec: JammerSpec, rng: np.random.Generator) -> int:
    return int(rng.integers(1, spec.K, endpoint=True))


def _subset(spec: JammerSpec, rng: np.random.Generator) -> np.ndarray:
    # uniform over the 2**I - 1 nonempty subsets
    bits = int(rng.integers(1, 1 << spec.I))
    return np.array([(bits >> i) & 1 for i in range(spec.I)], dtype=bool)


def jammer_init(spec: JammerSpec, rng: np.random.Generator) -> JammerState:
    if spec.kind == "none":
        return JammerState(phase=SILENT, rng=rng)
    if spec.kind == "erratic":
        phase = ACTIVE if rng.random() < 0.5 else SILENT
        return JammerState(phase=phase, remaining=_period(spec, rng), rng=rng)
    if spec.kind == "antenna_switching":
        mask = _subset(spec, rng)
        return JammerState(phase=ACTIVE, remaining=_period(spec, rng), antenna_mask=mask, rng=rng)
    return JammerState(phase=ACTIVE, rng=rng)


def _gaussian(spec: JammerSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    return np.sqrt(spec.rho) * complex_normal(rng, n)


def jammer_step(spec: JammerSpec, state: JammerState, k: int, L: int, ue_history) -> tuple[np.ndarray, JammerState]:
    """Jammer transmit vector ``w[k]`` and the updated state.

    ``ue_history`` is ``s[0 .. k]`` and must have length ``k + 1``; passing
    more would let the jammer look ahead.
    """
    assert len(ue_history) == k + 1, "jammer may only see s[0..k]"
    I = spec.I
    w = np.zeros(I, dtype=np.complex128)
    kind = spec.kind
    rng = state.rng
    in_sequence = L <= k < L + spec.K

    if kind == "none":
        pass
    elif kind == "barrage":
        w = _gaussian(spec, rng, I)
    elif kind == "reactive":
        if in_sequence:
            w = _gaussian(spec, rng, I)
    elif kind == "spoofing":
        if in_sequence:
            w[:] = np.sqrt(spec.rho) * ue_history[k]
    elif kind == "delayed_spoofing":
        if L + 1 <= k <= L + spec.K:
            w[:] = np.sqrt(spec.rho) * ue_history[k - 1]
    elif kind == "erratic":
        if state.remaining == 0:
            state.phase = SILENT if state.phase == ACTIVE else ACTIVE
            state.remaining = _period(spec, rng)
        if state.phase == ACTIVE:
            w = _gaussian(spec, rng, I)
        state.remaining -= 1
    elif kind == "antenna_switching":
        if state.remaining == 0:
            state.antenna_mask = _subset(spec, rng)
            state.remaining = _period(spec, rng)
        mask = state.antenna_mask
        w[mask] = _gaussian(spec, rng, int(mask.sum()))
        state.remaining -= 1
    return w, state


def jammer_energy_trace(spec: JammerSpec, L: int, K: int, seed: int, horizon: int | None = None, seq=None) -> np.ndarray:
    """``||w[k]||^2`` for ``k = 0 .. horizon-1`` (default ``L + K``) from a fresh replay.

    ``seq`` is the synchronization sequence the spoofing kinds replay; a
    unit-modulus sequence is used when omitted.
    """
    if spec.K != K:
        spec = JammerSpec(spec.kind, spec.I, spec.rho, K=K)
    if horizon is None:
        horizon = L + K
    if seq is None:
        seq = np.ones(K, dtype=np.complex128)
    ue = np.zeros(max(horizon, L + K), dtype=np.complex128)
    ue[L : L + K] = seq
    state = jammer_init(spec, np.random.default_rng(seed))
    out = np.empty(horizon)
    for k in range(horizon):
        w, state = jammer_step(spec, state, k, L, ue[: k + 1])
        out[k] = norm_sq(w)
    return out
