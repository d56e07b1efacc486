"""Seed derivation for reproducible, order-independent Monte-Carlo trials.

Each random component of a trial (sequence secret, channel, arrival time,
noise, jammer, detector starting vectors) gets its own Philox stream keyed
by ``(master_seed, tag, trial_index)``. Philox is counter based, so a trial
can be regenerated in isolation and in any order.
"""

from __future__ import annotations

import numpy as np

TAGS = {
    "secret": 1,
    "channel": 2,
    "arrival": 3,
    "noise": 4,
    "jammer": 5,
    "detector:jass": 6,
    "detector:bajass": 7,
}


def stream(master_seed: int, tag: str, trial_index: int) -> np.random.Generator:
    """Independent generator for one (tag, trial) pair."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(TAGS[tag], int(trial_index)))
    return np.random.Generator(np.random.Philox(ss))


def complex_normal_fixed(gen: np.random.Generator, n: int) -> np.ndarray:
    """``n`` CN(0, 1) draws at fixed stream positions.

    Box-Muller on exactly two uniforms per draw, so draw ``j`` depends only
    on stream position ``2j`` and ``2j + 1`` and not on how many draws are
    requested in total.
    """
    u = gen.random(2 * n).reshape(n, 2)
    radius = np.sqrt(-np.log1p(-u[:, 0]))  # |z|^2 ~ Exp(1)
    return radius * np.exp(2j * np.pi * u[:, 1])


def window_starts(master_seed: int, tag: str, trial_index: int, n_windows: int, num_vecs: int, B: int) -> np.ndarray:
    """Power-iteration starting vectors for windows ``0 .. n_windows-1``.

    Returns an array of shape ``(n_windows, num_vecs, B)``. Row ``ell`` is a
    function of ``(master_seed, tag, trial_index, ell)`` only.
    """
    gen = stream(master_seed, tag, trial_index)
    z = complex_normal_fixed(gen, n_windows * num_vecs * B)
    return z.reshape(n_windows, num_vecs, B)
