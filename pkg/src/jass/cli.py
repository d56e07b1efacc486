"""Command-line entry point: ``jass roc | mismatch | ablation``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .harness import ABLATION_PARAMS, ExperimentConfig, best_ter, run_ablation, run_mismatch_experiment, run_roc_experiment
from .signal import ScenarioConfig

SCENARIO_FLAGS = {
    "b": "B",
    "i": "I",
    "i_hat": "I_hat",
    "k": "K",
    "t_max": "t_max",
    "snr_db": "snr_db",
    "rho_db": "rho_db",
    "seed": "master_seed",
    "channel_file": "channel_source",
}


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config; flags below override it")
    common.add_argument("--out", help="output directory")
    common.add_argument("--trials", type=int, help="number of Monte-Carlo trials")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--detectors", type=_csv_list, help="comma-separated detector names")
    common.add_argument("--jammer", help="jammer kind (comma-separated list for mismatch)")
    common.add_argument("--snr-db", type=float)
    common.add_argument("--rho-db", type=float)
    common.add_argument("--b", type=int, help="BS antennas")
    common.add_argument("--i", type=int, help="jammer antennas")
    common.add_argument("--i-hat", type=int, help="assumed jammer antennas")
    common.add_argument("--k", type=int, help="sequence length")
    common.add_argument("--t-max", type=int, help="power iterations")
    common.add_argument("--fixed-l", type=int, help="fix the arrival index in every trial")
    common.add_argument("--channel-file", help="JSON-lines channel file instead of Rayleigh draws")
    common.add_argument("--conjugate-transpose", action="store_true", help="use A^H instead of the pseudoinverse")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="jass", description="Jammer-resilient MIMO time synchronization experiments")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("roc", parents=[common], help="FPR/FNR/TER over a threshold grid")
    mm = sub.add_parser("mismatch", parents=[common], help="PMF of L - ell_hat at a fixed arrival index")
    mm.add_argument("--alpha", type=float, default=0.25, help="threshold as a fraction of ||s||^2")
    ab = sub.add_parser("ablation", parents=[common], help="repeat the ROC experiment over one parameter")
    ab.add_argument("--vary", required=True, choices=ABLATION_PARAMS)
    ab.add_argument("--values", required=True, type=_csv_list)
    return p


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for flag, name in SCENARIO_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            overrides[name] = value
    if args.jammer and args.command != "mismatch":
        overrides["jammer_kind"] = args.jammer
    elif args.jammer:
        overrides["jammer_kind"] = _csv_list(args.jammer)[0]
    if args.conjugate_transpose:
        overrides["use_pinv"] = False
    scenario = cfg.scenario
    if overrides:
        d = scenario.to_dict()
        if "K" in overrides and not args.config:
            d["arrival_p"] = None
        d.update(overrides)
        scenario = ScenarioConfig.from_dict(d)
    changes = {"scenario": scenario}
    if args.out:
        changes["output_path"] = args.out
    if args.trials is not None:
        changes["num_trials"] = args.trials
    if args.detectors:
        changes["detectors"] = args.detectors
    if args.fixed_l is not None:
        changes["fixed_L"] = args.fixed_l
    return replace(cfg, **changes)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "roc":
            res = run_roc_experiment(cfg)
            for kind, points in res.points.items():
                print(f"{kind:12s} best TER {best_ter(points):.4f}")
            print(f"wrote {res.csv_path}")
        elif args.command == "mismatch":
            if cfg.fixed_L is None:
                cfg = replace(cfg, fixed_L=4 * cfg.scenario.K)
            jammers = _csv_list(args.jammer) if args.jammer else None
            for r in run_mismatch_experiment(cfg, alpha=args.alpha, jammers=jammers):
                note = " (empty)" if r.empty else ""
                print(f"{r.jammer:18s} FPR {r.false_positive_rate:.4f} FNR {r.false_negative_rate:.4f} -> {r.csv_path}{note}")
        else:
            for value, res in run_ablation(cfg, args.vary, args.values).items():
                best = ", ".join(f"{k} {best_ter(p):.4f}" for k, p in res.points.items())
                print(f"{args.vary}={value}: {best} -> {res.csv_path}")
    except (ValueError, OSError) as exc:
        print(f"jass: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
