"""Monte-Carlo experiments: trials, threshold sweeps and result files.

A trial draws an arrival index, a channel, a sequence and a receive
stream, then stores the full metric trace of every requested detector.
Because a detector never looks past window ``L``, the traces do not
depend on the threshold and one set of trials serves the whole alpha grid.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import detectors as det
from . import kernels
from .rng import stream
from .signal import (
    ScenarioConfig,
    Secret,
    derive_sync_sequence,
    draw_rayleigh_channel,
    load_channel_file,
    sample_arrival,
    synthesize_receive_stream,
)

log = logging.getLogger(__name__)

DEFAULT_ALPHA_GRID = tuple(round(0.025 * i, 10) for i in range(41))
DEFAULT_NUM_TRIALS = 2000
ABLATION_PARAMS = ("K", "B", "snr_db", "rho_db", "I", "I_hat", "t_max")


@dataclass
class TrialRecord:
    trial_index: int
    L: int
    energy: float
    traces: dict[str, np.ndarray]


@dataclass(frozen=True)
class RocPoint:
    alpha: float
    fpr: float
    fnr: float
    ter: float


@dataclass
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    detectors: list[str] = field(default_factory=lambda: ["jass", "unmitigated", "bajass"])
    alpha_grid: list[float] = field(default_factory=lambda: list(DEFAULT_ALPHA_GRID))
    num_trials: int = DEFAULT_NUM_TRIALS
    output_path: str = "results"
    fixed_L: int | None = None

    def __post_init__(self):
        if isinstance(self.scenario, dict):
            self.scenario = ScenarioConfig.from_dict(self.scenario)
        self.detectors = list(self.detectors)
        self.alpha_grid = [float(a) for a in self.alpha_grid]
        if self.num_trials < 1:
            raise ValueError("num_trials must be at least 1")
        for kind in self.detectors:
            if kind not in det.KINDS:
                raise ValueError(f"unknown detector {kind!r}")
        a = np.asarray(self.alpha_grid)
        if a.size == 0 or np.any(np.diff(a) < 0) or a[0] < 0 or a[-1] > 1:
            raise ValueError("alpha_grid must be sorted ascending within [0, 1]")
        if self.fixed_L is not None and self.fixed_L < 0:
            raise ValueError("fixed_L must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenario"] = self.scenario.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# --------------------------------------------------------------------------
# Trials


_channel_cache: dict[str, list] = {}


def _file_channels(path: str):
    if path not in _channel_cache:
        _channel_cache[path] = load_channel_file(path, normalize=True)
    return _channel_cache[path]


def trial_secret(master_seed: int, trial_index: int) -> Secret:
    gen = stream(master_seed, "secret", trial_index)
    lo, hi = (int(x) for x in gen.integers(0, 1 << 64, size=2, dtype=np.uint64))
    state = (hi << 64) | lo
    return Secret(state or 1)


def trial_stream(scenario: ScenarioConfig, trial_index: int, fixed_L: int | None = None):
    """The receive stream and sync sequence of one trial."""
    seed = scenario.master_seed
    seq = derive_sync_sequence(trial_secret(seed, trial_index), scenario.K)
    L = fixed_L if fixed_L is not None else sample_arrival(scenario.arrival_p, stream(seed, "arrival", trial_index))
    if scenario.channel_source == "rayleigh_iid":
        chan = draw_rayleigh_channel(scenario.B, scenario.I, stream(seed, "channel", trial_index))
    else:
        channels = _file_channels(scenario.channel_source)
        if trial_index >= len(channels):
            raise ValueError(
                f"channel file {scenario.channel_source} has {len(channels)} records, trial {trial_index} needs more"
            )
        chan = channels[trial_index]
        if (chan.B, chan.I) != (scenario.B, scenario.I):
            raise ValueError(f"channel file dimensions {(chan.B, chan.I)} do not match B={scenario.B}, I={scenario.I}")
    rx = synthesize_receive_stream(
        chan,
        seq,
        L,
        scenario.jammer_spec(),
        scenario.N0,
        stream(seed, "noise", trial_index),
        jammer_rng=stream(seed, "jammer", trial_index),
    )
    return rx, seq


def run_trial(scenario: ScenarioConfig, detectors, trial_index: int, fixed_L: int | None = None) -> TrialRecord:
    rx, seq = trial_stream(scenario, trial_index, fixed_L)
    params = det.DetectorParams(scenario.I_hat, scenario.t_max, scenario.use_pinv, scenario.master_seed, trial_index)
    traces = {kind: det.metric_trace(rx, seq, kind, params) for kind in detectors}
    return TrialRecord(trial_index, rx.L, seq.energy, traces)


def worker_count() -> int:
    env = os.environ.get("JASS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_trials(scenario: ScenarioConfig, detectors, num_trials: int, fixed_L: int | None = None) -> list[TrialRecord]:
    """Run trials ``0 .. num_trials-1``; the result is ordered by trial index."""
    workers = worker_count()
    detectors = list(detectors)
    if workers == 1:
        return [run_trial(scenario, detectors, t, fixed_L) for t in range(num_trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: run_trial(scenario, detectors, t, fixed_L), range(num_trials)))


# --------------------------------------------------------------------------
# Threshold sweeps


def first_crossings(trace, thresholds) -> np.ndarray:
    """Index of the first entry ``>= tau`` for each ``tau``; ``len(trace)`` when none."""
    running_max = np.maximum.accumulate(np.asarray(trace))
    return np.searchsorted(running_max, np.asarray(thresholds), side="left")


def classification_counts(records, kind: str, alpha_grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-alpha counts of (success, false positive, false negative)."""
    alpha = np.asarray(alpha_grid, dtype=float)
    succ = np.zeros(alpha.size, dtype=int)
    fp = np.zeros(alpha.size, dtype=int)
    fn = np.zeros(alpha.size, dtype=int)
    for rec in records:
        idx = first_crossings(rec.traces[kind], alpha * rec.energy)
        fp += idx < rec.L
        succ += idx == rec.L
        fn += idx > rec.L
    return succ, fp, fn


def sweep_thresholds(records, kind: str, alpha_grid=DEFAULT_ALPHA_GRID) -> list[RocPoint]:
    if not records:
        raise ValueError("no trial records")
    n = len(records)
    _, fp, fn = classification_counts(records, kind, alpha_grid)
    return [RocPoint(float(a), fp[i] / n, fn[i] / n, (fp[i] + fn[i]) / n) for i, a in enumerate(alpha_grid)]


def ter_at(points, alpha: float) -> float:
    for p in points:
        if abs(p.alpha - alpha) < 1e-12:
            return p.ter
    raise KeyError(f"alpha {alpha} not on the grid")


def best_ter(points) -> float:
    return min(p.ter for p in points)


# --------------------------------------------------------------------------
# Experiments and output files


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def write_roc_csv(path, results: dict[str, list[RocPoint]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["detector", "alpha", "fpr", "fnr", "ter"])
        for kind, points in results.items():
            for p in points:
                w.writerow([kind, _fmt(p.alpha), _fmt(p.fpr), _fmt(p.fnr), _fmt(p.ter)])


def _write_sidecar(path, config: ExperimentConfig, extra: dict | None = None) -> None:
    doc = {
        "config": config.to_dict(),
        "master_seed": config.scenario.master_seed,
        "kernel_implementation": kernels.IMPLEMENTATION,
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class RocResult:
    points: dict[str, list[RocPoint]]
    csv_path: Path
    records: list[TrialRecord] = field(repr=False, default_factory=list)


def run_roc_experiment(config: ExperimentConfig, name: str = "roc") -> RocResult:
    out = Path(config.output_path)
    out.mkdir(parents=True, exist_ok=True)
    log.info("running %d trials of %s", config.num_trials, config.scenario)
    records = run_trials(config.scenario, config.detectors, config.num_trials, config.fixed_L)
    points = {kind: sweep_thresholds(records, kind, config.alpha_grid) for kind in config.detectors}
    csv_path = out / f"{name}.csv"
    write_roc_csv(csv_path, points)
    _write_sidecar(out / f"{name}.json", config)
    return RocResult(points, csv_path, records)


@dataclass
class MismatchResult:
    jammer: str
    counts: np.ndarray  # counts[m] = trials with L - ell_hat == m
    num_trials: int
    false_positive_rate: float
    false_negative_rate: float
    csv_path: Path

    @property
    def empty(self) -> bool:
        return int(self.counts.sum()) == 0


def mismatch_histogram(records, kind: str, alpha: float, L: int) -> tuple[np.ndarray, int, int]:
    """Histogram of ``L - ell_hat`` over non-false-negative trials, plus FP and FN counts."""
    counts = np.zeros(L + 1, dtype=int)
    fp = fn = 0
    for rec in records:
        idx = int(first_crossings(rec.traces[kind], [alpha * rec.energy])[0])
        if idx > rec.L:
            fn += 1
            continue
        if idx < rec.L:
            fp += 1
        counts[rec.L - idx] += 1
    return counts, fp, fn


def run_mismatch_experiment(config: ExperimentConfig, alpha: float = 0.25, jammers=None, detector: str = "jass") -> list[MismatchResult]:
    """Distribution of the synchronization mismatch at a fixed arrival index."""
    if config.fixed_L is None:
        raise ValueError("the mismatch experiment needs fixed_L")
    L = config.fixed_L
    jammers = list(jammers or [config.scenario.jammer_kind])
    out = Path(config.output_path)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for kind in jammers:
        scenario = replace(config.scenario, jammer_kind=kind)
        records = run_trials(scenario, [detector], config.num_trials, L)
        counts, fp, fn = mismatch_histogram(records, detector, alpha, L)
        total = int(counts.sum())
        path = out / f"mismatch_{kind}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mismatch", "count", "frequency"])
            if total == 0:
                fh.write("# empty: every trial was a false negative\n")
            else:
                for m, c in enumerate(counts):
                    w.writerow([m, int(c), _fmt(c / total)])
        n = config.num_trials
        res = MismatchResult(kind, counts, n, fp / n, fn / n, path)
        _write_sidecar(
            out / f"mismatch_{kind}.json",
            replace(config, scenario=scenario),
            {"alpha": alpha, "detector": detector, "false_positive_rate": fp / n, "false_negative_rate": fn / n, "empty": res.empty},
        )
        results.append(res)
    return results


def vary_scenario(scenario: ScenarioConfig, param: str, value) -> ScenarioConfig:
    if param not in ABLATION_PARAMS:
        raise ValueError(f"cannot vary {param!r}; choose from {', '.join(ABLATION_PARAMS)}")
    if param == "I":
        return replace(scenario, I=int(value), I_hat=int(value))
    if param == "K":
        # keep the default arrival law tied to K
        return replace(scenario, K=int(value), arrival_p=1.0 / int(value) ** 2)
    cast = float if param in ("snr_db", "rho_db") else int
    return replace(scenario, **{param: cast(value)})


def run_ablation(config: ExperimentConfig, vary: str, values) -> dict:
    """One ROC experiment per value of ``vary``; returns ``{value: RocResult}``."""
    results = {}
    for value in values:
        scenario = vary_scenario(config.scenario, vary, value)
        sub = replace(config, scenario=scenario)
        results[value] = run_roc_experiment(sub, name=f"ablation_{vary}_{value}")
    return results
