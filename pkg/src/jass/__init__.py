"""Jammer-resilient time synchronization for the single-user MIMO uplink.

The package simulates a multi-antenna base station detecting the arrival of
a secret synchronization sequence while a (possibly smart) multi-antenna
jammer interferes, and compares the JASS detector with two baselines.
"""

from .detectors import (
    DetectionOutcome,
    DetectorParams,
    detect,
    metric_trace,
    statistic_bajass,
    statistic_jass,
    statistic_jass_evd,
    statistic_unmitigated,
    statistic_unnormalized,
)
from .harness import ExperimentConfig, RocPoint, TrialRecord, run_mismatch_experiment, run_roc_experiment, run_trial, sweep_thresholds
from .jammers import JammerSpec
from .kernels import IMPLEMENTATION as KERNEL_IMPLEMENTATION
from .signal import ScenarioConfig, Secret, SyncSequence, derive_sync_sequence, next_secret

__version__ = "0.1.0"
