#!/usr/bin/env python3
"""
src/eswap_sim/core/experiment_driver.py

Experiment orchestration
Validates registered experiments, runs them serially or on a worker pool and
writes a manifest per run
"""

import logging
import time
from contextlib import contextmanager
from multiprocessing import Pool
from typing import Any, Dict, Iterator, List, Optional, Tuple, Type

from .. import __version__
from .base_experiment import BaseExperiment, Mapper
from .components.file_manager import MANIFEST_NAME, RunManifest
from .config_parser import ExperimentConfig

logger = logging.getLogger(__name__)


@contextmanager
def worker_mapper(workers: int) -> Iterator[Mapper]:
    """map for one worker, Pool.map otherwise; results keep submission order"""
    if workers <= 1:
        yield map
        return
    with Pool(processes=workers) as pool:
        yield pool.map


class ExperimentDriver:
    """
    Orchestrates experiment runs
    Manages registered experiments and their manifests
    """

    def __init__(self, config: ExperimentConfig) -> None:
        """
        Initialize experiment driver

        Args:
            config: Resolved configuration shared by the registered experiments
        """
        self.config = config

        # Experiment registry
        self.experiments: Dict[str, BaseExperiment] = {}  # name -> experiment instance
        self.manifests: Dict[str, RunManifest] = {}  # name -> manifest of the last run

    def add_experiment(self, name: str, experiment: BaseExperiment) -> None:
        """
        Add an experiment to the driver

        Args:
            name: Name for this experiment (e.g., 'qpt', 'fredkin')
            experiment: Instance of an experiment class
        """
        self.experiments[name] = experiment

    def validate_experiments(self) -> Tuple[bool, List[str]]:
        """
        Validate every registered experiment

        Returns:
            Tuple of (is_valid, list_of_errors)
        """
        errors = []

        for name, experiment in self.experiments.items():
            try:
                experiment.validate_requirements()
            except Exception as e:
                errors.append(f"{name}: {str(e)}")

        return len(errors) == 0, errors

    def run_experiment(self, name: str) -> RunManifest:
        """Run one experiment and write its manifest"""
        if name not in self.experiments:
            raise KeyError(f"Unknown experiment '{name}'. Registered: {list(self.experiments)}")
        experiment = self.experiments[name]
        logger.info("Running %s (config %s)", name, self.config.config_hash()[:12])

        start = time.perf_counter()
        with worker_mapper(self.config.workers) as mapper:
            experiment.run(mapper=mapper)
        wall_time = time.perf_counter() - start

        manifest = RunManifest(
            experiment=name,
            config=self.config.to_dict(),
            config_hash=self.config.config_hash(),
            code_version=__version__,
            seeds=dict(experiment.seeds),
            wall_time=wall_time,
            validations=dict(experiment.validations),
        )
        experiment.file_manager.write_manifest(manifest)
        self.manifests[name] = manifest
        logger.info(
            "%s finished in %.1f s: %d files, validations %s",
            name, wall_time, len(manifest.files), "passed" if manifest.passed else "FAILED",
        )
        return manifest

    def run_all(self) -> Dict[str, RunManifest]:
        """
        Validate and run every registered experiment

        Raises:
            RuntimeError: If validation fails
        """
        is_valid, errors = self.validate_experiments()
        if not is_valid:
            raise RuntimeError(f"Experiment validation failed: {'; '.join(errors)}")
        return {name: self.run_experiment(name) for name in self.experiments}

    def summary(self) -> Dict[str, Any]:
        return {
            "experiments": list(self.experiments),
            "runs": {name: m.passed for name, m in self.manifests.items()},
        }


def run_command(
    experiment_cls: Type[BaseExperiment],
    config: ExperimentConfig,
    output_dir: Optional[str] = None,
) -> List[str]:
    """Validate and run one experiment class; returns the written paths, manifest last"""
    experiment = experiment_cls(config, output_dir)
    name = experiment.get_experiment_name()
    driver = ExperimentDriver(config)
    driver.add_experiment(name, experiment)
    manifest = driver.run_all()[name]
    root = experiment.file_manager.output_dir
    return [str(root / f) for f in manifest.files] + [str(root / MANIFEST_NAME)]
