"""Synchronization sequences, channels and the causal receive stream.

The receive model is flat-fading single-user MIMO with an additive jammer::

    y[k] = h s[k - L] + J w[k] + n[k],    n[k] ~ CN(0, N0 I_B)

where ``s`` is zero before the arrival index ``L`` and carries the
synchronization sequence on ``[L, L + K - 1]``. Only the ``L + K`` samples
needed to decide on ``L`` are generated.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import jammers as jam
from .linalg import complex_normal, frob_norm_sq, norm_sq
from .rng import complex_normal_fixed

MASK64 = (1 << 64) - 1
JAMMER_KINDS = jam.KINDS


# --------------------------------------------------------------------------
# Secrets and sequences


@dataclass(frozen=True)
class Secret:
    """128-bit pre-shared secret. ``state = (high << 64) | low``."""

    state: int

    def __post_init__(self):
        if not 0 < self.state < (1 << 128):
            raise ValueError("secret state must be a nonzero 128-bit value")

    @property
    def words(self) -> tuple[int, int]:
        return self.state & MASK64, self.state >> 64


def next_secret(s: Secret) -> Secret:
    """One xorshift128+ state transition (shift triple 23, 17, 26)."""
    if s.state == 0:
        raise ValueError("xorshift state must be nonzero")
    s1, s0 = s.words
    s1 ^= (s1 << 23) & MASK64
    high = s1 ^ s0 ^ (s1 >> 17) ^ (s0 >> 26)
    return Secret((high << 64) | s0)


@dataclass(frozen=True)
class SyncSequence:
    values: np.ndarray
    energy: float

    @classmethod
    def from_values(cls, values) -> "SyncSequence":
        values = np.asarray(values, dtype=np.complex128)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("a synchronization sequence needs at least two samples")
        return cls(values=values, energy=norm_sq(values))

    @property
    def K(self) -> int:
        return self.values.size


def derive_sync_sequence(s: Secret, K: int) -> SyncSequence:
    """Expand a secret into ``K`` i.i.d. CN(0, 1) samples.

    The secret is the 128-bit Philox key; samples are Box-Muller transforms
    of the keyed counter stream. No cryptographic strength is claimed.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    gen = np.random.Generator(np.random.Philox(key=s.state))
    return SyncSequence.from_values(complex_normal_fixed(gen, K))


def secret_chain(s: Secret, K: int):
    """Yield the sequences ``f(s_0), f(g(s_0)), f(g(g(s_0))), ...``."""
    while True:
        yield derive_sync_sequence(s, K)
        s = next_secret(s)


# --------------------------------------------------------------------------
# Arrival time and channels


def sample_arrival(p: float, rng: np.random.Generator) -> int:
    """Geometric arrival index with ``P(L = l) = p (1 - p)**l`` for ``l >= 0``."""
    if not 0.0 < p <= 1.0:
        raise ValueError("arrival probability must lie in (0, 1]")
    u = 1.0 - rng.random()  # (0, 1]
    if p == 1.0:
        return 0
    return int(math.floor(math.log(u) / math.log1p(-p)))


@dataclass
class ChannelRealization:
    h: np.ndarray  # (B,)
    J: np.ndarray  # (B, I)

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=np.complex128)
        self.J = np.asarray(self.J, dtype=np.complex128).reshape(self.h.size, -1)
        if not (np.all(np.isfinite(self.h)) and np.all(np.isfinite(self.J))):
            raise ValueError("channel entries must be finite")

    @property
    def B(self) -> int:
        return self.h.size

    @property
    def I(self) -> int:
        return self.J.shape[1]


def draw_rayleigh_channel(B: int, I: int, rng: np.random.Generator) -> ChannelRealization:
    if B < 1 or not 0 <= I < B:
        raise ValueError(f"need B >= 1 and 0 <= I < B, got B={B}, I={I}")
    h = complex_normal(rng, B)
    J = complex_normal(rng, (B, I))
    return ChannelRealization(h, J)


def _pairs(arr) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(arr).ravel()]


def _complex_array(obj, lineno: int, what: str) -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=np.float64)
        if a.ndim == 0 or a.shape[-1] != 2:
            raise ValueError
    except (TypeError, ValueError):
        raise ValueError(f"line {lineno}: field {what!r} must hold [re, im] pairs") from None
    return a[..., 0] + 1j * a[..., 1]


def write_channel_file(path, channels) -> None:
    """One JSON object per line: ``h`` as [re, im] pairs, ``J`` as a list of columns."""
    with open(path, "w") as fh:
        for ch in channels:
            rec = {"h": _pairs(ch.h), "J": [_pairs(ch.J[:, i]) for i in range(ch.I)]}
            fh.write(json.dumps(rec) + "\n")


def load_channel_file(path, normalize: bool = True) -> list[ChannelRealization]:
    """Read channels written by :func:`write_channel_file` (or an external generator).

    With ``normalize`` each record is rescaled to ``||h||^2 = B`` and
    ``||J||_F^2 = B I``.
    """
    out = []
    dims = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or "h" not in rec or "J" not in rec:
                raise ValueError(f"line {lineno}: record needs fields 'h' and 'J'")
            h = _complex_array(rec["h"], lineno, "h")
            if h.ndim != 1:
                raise ValueError(f"line {lineno}: 'h' must be a vector")
            cols = rec["J"]
            if len(cols) == 0:
                J = np.zeros((h.size, 0), dtype=np.complex128)
            else:
                J = _complex_array(cols, lineno, "J")
                if J.ndim != 2 or J.shape[1] != h.size:
                    raise ValueError(f"line {lineno}: every column of 'J' must have {h.size} entries")
                J = J.T
            if dims is None:
                dims = (h.size, J.shape[1])
            elif dims != (h.size, J.shape[1]):
                raise ValueError(f"line {lineno}: dimensions {(h.size, J.shape[1])} differ from first record {dims}")
            if normalize:
                B, I = dims
                nh = norm_sq(h)
                if nh > 0:
                    h = h * np.sqrt(B / nh)
                nj = frob_norm_sq(J)
                if nj > 0:
                    J = J * np.sqrt(B * I / nj)
            out.append(ChannelRealization(h, J))
    if not out:
        raise ValueError(f"{path}: no channel records")
    return out


# --------------------------------------------------------------------------
# Scenario


@dataclass
class ScenarioConfig:
    B: int = 16
    I: int = 4
    I_hat: int = 4
    K: int = 16
    t_max: int = 4
    snr_db: float = 0.0
    rho_db: float = 30.0
    jammer_kind: str = "barrage"
    arrival_p: float | None = None  # None means 1 / K**2
    channel_source: str = "rayleigh_iid"
    master_seed: int = 0
    use_pinv: bool = True

    def __post_init__(self):
        if self.arrival_p is None:
            self.arrival_p = 1.0 / self.K**2
        self.validate()

    def validate(self) -> None:
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if not 1 <= self.I_hat < self.B:
            raise ValueError("need 1 <= I_hat < B")
        if not 0 <= self.I < self.B:
            raise ValueError("need 0 <= I < B")
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")
        if not 0.0 < self.arrival_p <= 1.0:
            raise ValueError("arrival_p must lie in (0, 1]")
        if self.jammer_kind not in JAMMER_KINDS:
            raise ValueError(f"unknown jammer kind {self.jammer_kind!r}")

    @property
    def N0(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    @property
    def rho(self) -> float:
        return 10.0 ** (self.rho_db / 10.0)

    def jammer_spec(self) -> jam.JammerSpec:
        kind = self.jammer_kind if self.I > 0 else "none"
        return jam.JammerSpec(kind=kind, I=self.I, rho=self.rho, K=self.K)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**d)


# --------------------------------------------------------------------------
# Receive stream


@dataclass
class ReceiveStream:
    """Samples ``y[0 .. L+K-1]`` as a ``(B, L + K)`` array plus their parts."""

    y: np.ndarray
    L: int
    K: int
    ue: np.ndarray = field(repr=False)  # s[k], length L + K
    jamming: np.ndarray = field(repr=False)  # J w[k], (B, L + K)

    @property
    def horizon(self) -> int:
        return self.y.shape[1]


def synthesize_receive_stream(
    chan: ChannelRealization,
    seq: SyncSequence,
    L: int,
    jammer: jam.JammerSpec,
    N0: float,
    rng: np.random.Generator,
    jammer_rng: np.random.Generator | None = None,
) -> ReceiveStream:
    """Generate the receive samples one index at a time.

    The jammer is stepped sample by sample and only ever sees the UE signal
    up to the current index. ``rng`` drives the noise; the jammer uses
    ``jammer_rng`` (defaults to ``rng``).
    """
    if L < 0:
        raise ValueError("L must be nonnegative")
    if N0 < 0:
        raise ValueError("N0 must be nonnegative")
    if jammer.kind != "none" and jammer.I != chan.I:
        raise ValueError(f"jammer has {jammer.I} antennas but the channel has {chan.I}")
    K = seq.K
    n_samples = L + K
    B = chan.B
    ue = np.zeros(n_samples, dtype=np.complex128)
    ue[L:] = seq.values

    if N0 > 0:
        noise = np.sqrt(N0) * complex_normal(rng, (B, n_samples))
    else:
        noise = np.zeros((B, n_samples), dtype=np.complex128)

    state = jam.jammer_init(jammer, jammer_rng if jammer_rng is not None else rng)
    W = np.zeros((chan.I, n_samples), dtype=np.complex128)
    if jammer.kind != "none":
        for k in range(n_samples):
            w, state = jam.jammer_step(jammer, state, k, L, ue[: k + 1])
            W[:, k] = w
    jamming = chan.J @ W
    y = np.outer(chan.h, ue) + jamming + noise
    return ReceiveStream(y=y, L=L, K=K, ue=ue, jamming=jamming)
