#!/usr/bin/env python3
"""
Command-line entry point

Usage:
    eswap-sim --experiment qpt --config configs/qpt_fock.def --sampled --seed 7
    eswap-sim --experiment fock_demo --out results/fock_demo --exact
"""

import argparse
import logging
import sys
from typing import List, Optional

from .applications import EXPERIMENTS
from .core.config_parser import EXPERIMENT_NAMES, ExperimentConfig, load_config
from .core.experiment_driver import ExperimentDriver
from .exceptions import ConfigError, EswapSimError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eswap-sim", description="Simulate eSWAP and Fredkin gate experiments"
    )
    parser.add_argument("--experiment", choices=EXPERIMENT_NAMES,
                        help="Experiment to run; taken from the config file when omitted")
    parser.add_argument("--config", help="Path to an experiment .def file")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--out", help="Output directory")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="mode", action="store_const", const="exact",
                      help="Exact expectation values")
    mode.add_argument("--sampled", dest="mode", action="store_const", const="sampled",
                      help="Finite-shot sampling")
    parser.add_argument("--workers", type=int, help="Worker processes")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file (or defaults) with command-line overrides applied"""
    if args.config:
        config = load_config(args.config)
        if args.experiment and args.experiment != config.name:
            raise ConfigError(
                f"--experiment {args.experiment} does not match config experiment '{config.name}'"
            )
    elif args.experiment:
        config = ExperimentConfig(name=args.experiment)
    else:
        raise ConfigError("Either --experiment or --config is required")
    return config.with_overrides(
        seed=args.seed, output_dir=args.out, mode=args.mode, workers=args.workers
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        config = resolve_config(args)
    except (ConfigError, FileNotFoundError) as e:
        logger.error("%s", e)
        return EXIT_CONFIG

    experiment = EXPERIMENTS[config.name](config)
    driver = ExperimentDriver(config)
    driver.add_experiment(config.name, experiment)
    try:
        manifest = driver.run_all()[config.name]
    except ConfigError as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    except (EswapSimError, RuntimeError) as e:
        logger.error("%s failed: %s", config.name, e)
        return EXIT_FAILED

    output_dir = experiment.file_manager.output_dir
    if not manifest.passed:
        failed = [name for name, ok in manifest.validations.items() if not ok]
        logger.error("%s: failed validations %s (outputs in %s)", config.name, failed, output_dir)
        return EXIT_FAILED
    logger.info("%s: %d files written to %s", config.name, len(manifest.files), output_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
