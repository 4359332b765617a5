"""
Experiment implementations, one per command
"""

from typing import Dict, Type

from ..core.base_experiment import BaseExperiment
from .coherent_sweep import CoherentSweepExperiment, cmd_coherent_sweep
from .error_budget import ErrorBudgetExperiment, cmd_error_budget
from .fock_demo import FockDemoExperiment, cmd_fock_demo
from .fredkin import FredkinExperiment, cmd_fredkin
from .kerr import KerrExperiment, cmd_kerr
from .qpt import QptExperiment, cmd_qpt

EXPERIMENTS: Dict[str, Type[BaseExperiment]] = {
    "fock_demo": FockDemoExperiment,
    "coherent_sweep": CoherentSweepExperiment,
    "qpt": QptExperiment,
    "fredkin": FredkinExperiment,
    "kerr": KerrExperiment,
    "error_budget": ErrorBudgetExperiment,
}

__all__ = [
    "EXPERIMENTS",
    "FockDemoExperiment", "CoherentSweepExperiment", "QptExperiment",
    "FredkinExperiment", "KerrExperiment", "ErrorBudgetExperiment",
    "cmd_fock_demo", "cmd_coherent_sweep", "cmd_qpt",
    "cmd_fredkin", "cmd_kerr", "cmd_error_budget",
]
