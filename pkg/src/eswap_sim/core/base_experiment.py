"""
Abstract base class for experiments

BaseExperiment (abstract) - defines the interface, uses composition
├── FockDemoExperiment
├── CoherentSweepExperiment
├── QptExperiment
├── FredkinExperiment
├── KerrExperiment
└── ErrorBudgetExperiment
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, Iterable, List, Optional

from ..encodings import LogicalEncoding, make_encoding
from .components.file_manager import FileManager, default_output_dir
from .config_parser import ExperimentConfig

logger = logging.getLogger(__name__)

Mapper = Callable[..., Iterable[Any]]


class BaseExperiment(ABC):
    """
    Abstract base class for all experiments
    Uses composition for output handling
    """

    default_encoding = "fock"

    def __init__(self, config: ExperimentConfig, output_dir: Optional[str] = None) -> None:
        """Initialize experiment with its file manager"""
        self.config = config
        target = output_dir or config.output_dir or str(default_output_dir(config.name))
        self.file_manager = FileManager(target, self.get_experiment_name())
        self.validations: Dict[str, bool] = {}
        self.seeds: Dict[str, Any] = {"master": config.seed}

    @abstractmethod
    def get_experiment_name(self) -> str:
        """Return the experiment name used for lookup and file naming"""
        pass

    @abstractmethod
    def run(self, mapper: Mapper = map) -> List[str]:
        """Run the experiment, write its outputs and return the written paths"""
        pass

    @property
    def encoding_name(self) -> str:
        return self.config.encoding or self.default_encoding

    def make_encoding(self) -> LogicalEncoding:
        return make_encoding(self.encoding_name, self.config.encoding_params(), self.config.cutoff)

    def validate_requirements(self) -> None:
        """Validate that the configuration suits this experiment"""
        if self.config.name != self.get_experiment_name():
            raise ValueError(
                f"Configuration is for '{self.config.name}', not '{self.get_experiment_name()}'"
            )
        if not self.config.theta_list:
            raise ValueError("theta_list must not be empty")

    def check(self, name: str, passed: bool) -> bool:
        """Record an internal validation outcome for the manifest"""
        self.validations[name] = bool(passed)
        if not passed:
            logger.warning("%s: validation '%s' failed", self.get_experiment_name(), name)
        return bool(passed)


def theta_tag(theta_c: float) -> str:
    """File tag for a control angle: pi/4 -> 'theta_0p25pi'"""
    return "theta_" + f"{theta_c / math.pi:.4g}pi".replace("-", "m").replace(".", "p")
