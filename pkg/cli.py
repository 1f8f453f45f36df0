#!/usr/bin/env python3
"""
Experiment command line
Runs one experiment from its config.yaml preset, an optional flat config file and override flags

Exit codes: 0 success, 2 configuration error, 3 too many failed trajectories
"""

import argparse
import sys
from typing import Dict, List, Optional

from models.experiment_models import ExperimentKind
from services.config_service import ConfigService
from services.experiments import run_experiment
from utils.errors import ConfigError, ExperimentAborted, ScmsError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORTED = 3

# flag destination -> ExperimentConfig field
OVERRIDE_FLAGS = {
    "alpha": "alpha",
    "eps": "epsilon",
    "dt": "dt",
    "dx": "dx",
    "T": "t_final",
    "paths": "n_trajectories",
    "seed": "seed",
    "scheme": "scheme",
    "theta": "theta",
    "noise_modes": "noise_modes",
    "out": "out_dir",
    "workers": "workers",
    "system": "system",
    "m_values": "m_values",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cli.py", description="Conformal multi-symplectic NLS experiments")
    subparsers = parser.add_subparsers(dest="experiment", required=True)
    for kind in ExperimentKind:
        sub = subparsers.add_parser(kind.value, help=f"Run the {kind.value} experiment")
        sub.add_argument("--config", help="Flat key = value file with ExperimentConfig fields")
        sub.add_argument("--alpha", type=float)
        sub.add_argument("--eps", type=float)
        sub.add_argument("--dt", type=float)
        sub.add_argument("--dx", type=float)
        sub.add_argument("--T", dest="T", type=float)
        sub.add_argument("--paths", type=int)
        sub.add_argument("--seed", type=int)
        sub.add_argument("--scheme", choices=["cms", "ms", "cn"])
        sub.add_argument("--theta", type=float)
        sub.add_argument("--noise-modes", dest="noise_modes", type=int)
        sub.add_argument("--out", help="Output directory for the CSV series")
        sub.add_argument("--workers", type=int, help="Trajectory processes (1 runs inline)")
        if kind == ExperimentKind.TWO_FORM_AUDIT:
            sub.add_argument("--system", choices=["nls", "kdv"])
        if kind == ExperimentKind.CONVERGENCE:
            sub.add_argument(
                "--m-values", dest="m_values", type=int, nargs="+", help="Noise truncations for the per-M table"
            )
        sub.add_argument("--full", action="store_true", help="Use the full-scale preset values")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, object]:
    values = vars(args)
    return {field: values[flag] for flag, field in OVERRIDE_FLAGS.items() if values.get(flag) is not None}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    kind = ExperimentKind(args.experiment)

    try:
        cfg = ConfigService().build_experiment_config(
            kind,
            overrides=overrides_from_args(args),
            config_file=args.config,
            full_scale=args.full,
        )
    except ConfigError as e:
        print(f"❌ Configuration error: {e}")
        return EXIT_CONFIG

    print("=" * 50)
    print(f"📝 Experiment: {kind.value}")
    print(f"📂 Output: {cfg.out_dir}")
    print("=" * 50)

    try:
        outcome = run_experiment(cfg)
    except ExperimentAborted as e:
        print(f"❌ Experiment aborted: {e}")
        return EXIT_ABORTED
    except ScmsError as e:
        print(f"❌ Experiment failed: {e}")
        return EXIT_ABORTED

    print(f"✅ {kind.value} completed, {len(outcome.files)} files written")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
