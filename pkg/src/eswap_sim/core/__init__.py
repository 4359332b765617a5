"""
Core components for experiment configuration and orchestration
"""

from .components import FileManager, RunManifest, noise_preset
from .base_experiment import BaseExperiment
from .config_parser import ConfigParser, ExperimentConfig, load_config
from .experiment_driver import ExperimentDriver, run_command

__all__ = [
    "FileManager", "RunManifest", "noise_preset",
    "BaseExperiment", "ConfigParser", "ExperimentConfig", "load_config",
    "ExperimentDriver", "run_command",
]
