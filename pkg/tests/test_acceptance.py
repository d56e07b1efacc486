"""Acceptance suite.

Each test checks one numbered criterion at its stated tolerance and prints a
single ``PASS``/``FAIL`` line. Run it on its own with::

    pytest tests/test_acceptance.py -v -s

or as a script (``python3 tests/test_acceptance.py``) for just the summary.
The Monte-Carlo criteria use 2000 trials per scenario (5000 per jammer for
the mismatch PMF); expect roughly ten to fifteen minutes on one core.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import replace

import numpy as np
import pytest

from jass import kernels
from jass.detectors import jass_matrix
from jass.harness import (
    ExperimentConfig,
    best_ter,
    mismatch_histogram,
    run_roc_experiment,
    run_trials,
    ter_at,
)
from jass.linalg import principal_subspace
from jass.signal import ScenarioConfig, SyncSequence

TRIALS = 2000
MISMATCH_TRIALS = 5000
SEED = 1
BASE = ScenarioConfig(
    B=16, I=4, I_hat=4, K=16, t_max=4, snr_db=0.0, rho_db=30.0, jammer_kind="barrage", master_seed=SEED
)
MAIN = ["jass", "unmitigated", "bajass"]
JAMMERS = ["barrage", "reactive", "spoofing", "delayed_spoofing", "erratic", "antenna_switching"]

pytestmark = pytest.mark.slow

_cache: dict = {}


def report(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    sys.__stdout__.write("\n" + line + "\n")
    sys.__stdout__.flush()


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def roc(scenario, detectors, out_dir, name="roc", threads="1"):
    old = os.environ.get("JASS_THREADS")
    os.environ["JASS_THREADS"] = threads
    try:
        cfg = ExperimentConfig(scenario=scenario, detectors=detectors, num_trials=TRIALS, output_path=str(out_dir))
        return run_roc_experiment(cfg, name=name)
    finally:
        if old is None:
            os.environ.pop("JASS_THREADS", None)
        else:
            os.environ["JASS_THREADS"] = old


@pytest.fixture(scope="module")
def outdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="module")
def barrage_run(outdir):
    if "barrage" not in _cache:
        _cache["barrage"] = roc(BASE, MAIN, outdir / "c1")
    return _cache["barrage"]


# -- 1 -----------------------------------------------------------------------


def test_criterion_1_barrage(barrage_run):
    p = barrage_run.points
    jass = ter_at(p["jass"], 0.375)
    unm = best_ter(p["unmitigated"])
    baj = best_ter(p["bajass"])
    ok = jass <= 0.03 and unm >= 0.9 and baj <= 0.15
    report(1, ok, f"JASS TER@0.375={jass:.4f} (<=0.03), unmitigated min TER={unm:.4f} (>=0.9), BAJASS best TER={baj:.4f} (<=0.15)")
    assert ok


# -- 2 -----------------------------------------------------------------------


def test_criterion_2_weak_jammer(outdir):
    p = roc(replace(BASE, rho_db=0.0), ["jass", "bajass"], outdir / "c2").points
    jass = ter_at(p["jass"], 0.375)
    baj = best_ter(p["bajass"])
    ok = jass <= 0.03 and baj >= 0.5
    report(2, ok, f"rho=0 dB: JASS TER@0.375={jass:.4f} (<=0.03), BAJASS min TER={baj:.4f} (>=0.5)")
    assert ok


# -- 3 -----------------------------------------------------------------------


def test_criterion_3_spoofing(outdir):
    p = roc(replace(BASE, jammer_kind="spoofing", snr_db=-10.0), MAIN, outdir / "c3").points
    jass, unm, baj = best_ter(p["jass"]), best_ter(p["unmitigated"]), best_ter(p["bajass"])
    ok = jass <= 0.02 and unm <= 0.02 and baj >= 0.9
    report(3, ok, f"spoofing: JASS best TER={jass:.4f}, unmitigated best TER={unm:.4f} (both <=0.02), BAJASS min TER={baj:.4f} (>=0.9)")
    assert ok


# -- 4 -----------------------------------------------------------------------


def test_criterion_4_delayed_spoofing(outdir):
    p = roc(replace(BASE, jammer_kind="delayed_spoofing"), MAIN, outdir / "c4").points
    jass = ter_at(p["jass"], 0.375)
    unm, baj = best_ter(p["unmitigated"]), best_ter(p["bajass"])
    ok = jass <= 0.05 and unm >= 0.5 and baj >= 0.5
    report(4, ok, f"delayed spoofing: JASS TER@0.375={jass:.4f} (<=0.05), unmitigated min TER={unm:.4f}, BAJASS min TER={baj:.4f} (both >=0.5)")
    assert ok


# -- 5 -----------------------------------------------------------------------


def test_criterion_5_antenna_mismatch(outdir):
    parts = []
    ok = True
    for I in (3, 1):
        t = ter_at(roc(replace(BASE, I=I), ["jass"], outdir / f"c5_{I}").points["jass"], 0.375)
        ok &= t <= 0.05
        parts.append(f"I={I}: JASS TER@0.375={t:.4f} (<=0.05)")
    p5 = roc(replace(BASE, I=5), MAIN + ["jass_evd"], outdir / "c5_5").points
    worst = min(best_ter(v) for v in p5.values())
    ok &= worst >= 0.9
    parts.append(f"I=5: min over detectors of min TER={worst:.4f} (>=0.9)")
    p0 = roc(replace(BASE, I=0, jammer_kind="none"), ["jass", "unmitigated"], outdir / "c5_0").points
    gap = abs(best_ter(p0["jass"]) - best_ter(p0["unmitigated"]))
    ok &= gap <= 0.05
    parts.append(
        f"I=0: JASS best TER={best_ter(p0['jass']):.4f} vs unmitigated best={best_ter(p0['unmitigated']):.4f}, |diff|={gap:.4f} (<=0.05)"
    )
    report(5, ok, "; ".join(parts))
    assert ok


# -- 6 -----------------------------------------------------------------------


def test_criterion_6_theorem():
    ok = True
    parts = []
    for rho_db in (0.0, 30.0):
        sc = replace(BASE, snr_db=math.inf, rho_db=rho_db)
        records = run_trials(sc, ["jass_evd"], 500)
        worst_attain = 0.0
        worst_margin = math.inf
        violations = 0
        for rec in records:
            tr = rec.traces["jass_evd"]
            E = rec.energy
            rel = abs(tr[rec.L] - E) / E
            worst_attain = max(worst_attain, rel)
            if rec.L > 0:
                below = tr[: rec.L].max()
                worst_margin = min(worst_margin, (E - below) / E)
                violations += not below < E
            violations += rel > 1e-6
        ok &= violations == 0
        parts.append(
            f"rho={rho_db:g} dB: max |trace[L]/E-1|={worst_attain:.1e}, min (E-max_{{l<L}})/E={worst_margin:.3f}, violations={violations}"
        )
    report(6, ok, "500 noiseless trials each; " + "; ".join(parts))
    assert ok


# -- 7 -----------------------------------------------------------------------


def _principal_angle(Q_hat, U):
    Q, _ = np.linalg.qr(Q_hat)
    sv = np.linalg.svd(U.conj().T @ Q, compute_uv=False)
    return float(np.arccos(np.clip(sv.min(), -1.0, 1.0)))


def _bound_windows(rng):
    """Yield (stream, seq) blocks; windows inside each block are the test windows."""
    B, K, L = 8, 8, 999
    for i in range(100):
        s = crandn(rng, K)
        kind = i % 5
        if kind == 0:  # white noise at an extreme scale
            y = 10.0 ** rng.uniform(-60, 60) * crandn(rng, B, L + K)
        elif kind == 1:  # exactly rank one, periodic in s: every K-th window is aligned
            y = np.outer(crandn(rng, B), np.tile(s, (L + K) // K + 1)[: L + K])
        elif kind == 2:  # rank one aligned with vanishing noise
            y = np.outer(crandn(rng, B), np.tile(s, (L + K) // K + 1)[: L + K]) + 1e-12 * crandn(rng, B, L + K)
        elif kind == 3:  # strong low-rank interference
            y = crandn(rng, B, L + K) + 1e3 * crandn(rng, B, 2) @ crandn(rng, 2, L + K)
        else:  # conjugated sequence, a near miss for the correlator
            y = np.outer(crandn(rng, B), np.tile(s.conj(), (L + K) // K + 1)[: L + K])
        yield y, s, L


def test_criterion_7_numerical_invariants():
    rng = np.random.default_rng(SEED)
    # PSD identity
    worst_psd = 0.0
    for _ in range(1000):
        B, K = int(rng.integers(2, 17)), int(rng.integers(2, 33))
        Y = crandn(rng, B, K) * 10.0 ** rng.uniform(-3, 3)
        seq = SyncSequence.from_values(crandn(rng, K))
        c = Y @ seq.values.conj()
        diff = seq.energy * (Y @ Y.conj().T) - np.outer(c, c.conj())
        err = np.linalg.norm(diff - jass_matrix(Y, seq)) / (seq.energy * np.linalg.norm(Y) ** 2)
        worst_psd = max(worst_psd, err)
    psd_ok = worst_psd <= 1e-9

    # statistic bound over 100 blocks of 1000 windows (1e5 windows per detector)
    worst_ratio = 0.0
    n_windows = 0
    for y, s, L in _bound_windows(rng):
        E = float(np.sum(np.abs(s) ** 2))
        starts = crandn(rng, L + 1, 2, y.shape[0])
        traces = [
            kernels.trace_unmitigated(y, s, L),
            kernels.trace_jass(y, s, L, starts, 4, True),
            kernels.trace_bajass(y, s, L, starts, 4, True),
            kernels.trace_jass_evd(y, s, L, 2),
        ]
        for tr in traces:
            if np.any(tr < 0) or not np.all(np.isfinite(tr)):
                worst_ratio = math.inf
            worst_ratio = max(worst_ratio, float(tr.max()) / E)
        n_windows += L + 1
    bound_ok = worst_ratio <= 1 + 1e-9

    # power iteration vs exact EVD at t_max = 50, on the matrices JASS factors
    angle_parts = []
    angle_ok = True
    for label, jam in (("jammed", 1000.0), ("noise-only", 0.0)):
        worst, eligible, over = 0.0, 0, 0
        for _ in range(500):
            B, K, m = 16, 16, 4
            Y = crandn(rng, B, K)
            if jam:
                Y = Y + np.sqrt(jam) * crandn(rng, B, m) @ crandn(rng, m, K)
            seq = SyncSequence.from_values(crandn(rng, K))
            M = jass_matrix(Y, seq)
            lam, U = np.linalg.eigh(M)
            lam, U = lam[::-1], U[:, ::-1]
            if lam[m - 1] - lam[m] <= 1e-3 * lam[0]:
                continue
            eligible += 1
            a = _principal_angle(principal_subspace(M, m, 50, rng), U[:, :m])
            worst = max(worst, a)
            over += a >= 1e-3
        angle_ok &= over == 0
        angle_parts.append(f"{label}: {over}/{eligible} eligible over 1e-3 rad (worst {worst:.1e})")

    ok = psd_ok and bound_ok and angle_ok
    report(
        7,
        ok,
        f"PSD identity worst rel err={worst_psd:.1e} (<=1e-9); max stat/E over {n_windows} windows x 4 detectors="
        f"{worst_ratio:.12f} (<=1+1e-9); t_max=50 angle: " + ", ".join(angle_parts),
    )
    assert ok


# -- 8 -----------------------------------------------------------------------


def test_criterion_8_evd_ablation(outdir):
    p = roc(replace(BASE, t_max=2), ["jass", "jass_evd"], outdir / "c8").points
    a, b = best_ter(p["jass"]), best_ter(p["jass_evd"])
    ok = abs(a - b) <= 0.02
    report(8, ok, f"best TER jass(t_max=2)={a:.4f}, jass_evd={b:.4f}, |diff|={abs(a - b):.4f} (<=0.02)")
    assert ok


# -- 9 -----------------------------------------------------------------------


def test_criterion_9_mismatch_pmf():
    sc = replace(BASE, snr_db=-10.0)
    L, K = 4 * sc.K, sc.K
    ok = True
    parts = []
    for kind in JAMMERS:
        records = run_trials(replace(sc, jammer_kind=kind), ["jass"], MISMATCH_TRIALS, fixed_L=L)
        counts, fp, fn = mismatch_histogram(records, "jass", 0.25, L)
        n = int(counts.sum())
        if n == 0:
            parts.append(f"{kind}: no non-FN trials")
            ok = False
            continue
        m1 = counts[1:K].sum() / n
        m2 = counts[K : L + 1].sum() / n
        sigma = math.sqrt(max(m1 + m2 - (m1 - m2) ** 2, 0.0) / n)
        good = m1 - m2 <= 3 * sigma
        ok &= good
        parts.append(f"{kind}: n={n} mass[1,K-1]={m1:.4f} mass[K,L]={m2:.4f} 3sigma={3 * sigma:.4f} FPR={fp / MISMATCH_TRIALS:.3f} FNR={fn / MISMATCH_TRIALS:.3f}")
    report(9, ok, f"{MISMATCH_TRIALS} trials per jammer at L=64, alpha=0.25; " + "; ".join(parts))
    assert ok


# -- 10 ----------------------------------------------------------------------


def test_criterion_10_determinism(barrage_run, outdir):
    first = barrage_run.csv_path.read_bytes()
    again = roc(BASE, MAIN, outdir / "c10_same").csv_path.read_bytes()
    threaded = roc(BASE, MAIN, outdir / "c10_threads", threads="4").csv_path.read_bytes()
    ok = first == again and first == threaded
    report(10, ok, f"rerun identical={first == again}, JASS_THREADS=1 vs 4 identical={first == threaded} ({len(first)} bytes)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
