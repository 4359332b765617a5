"""
eSWAP Simulator

Simulation of the exponential-SWAP and Fredkin gates between two bosonic
cavities: compilation, open-system dynamics, joint Wigner and process tomography.
"""

__version__ = "0.1.0"

from .core import ConfigParser, ExperimentConfig, ExperimentDriver, load_config
from .applications import EXPERIMENTS

__all__ = ["ConfigParser", "ExperimentConfig", "ExperimentDriver", "load_config", "EXPERIMENTS"]
