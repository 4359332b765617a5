#!/usr/bin/env python3
"""
src/eswap_sim/core/config_parser.py

Configuration file parser for experiment .def files
Uses Python's built-in configparser for .ini-style file handling
"""

import configparser
import hashlib
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..dynamics import BUDGET_ROWS, DEFAULT_EXPOSURE, NoiseModel, SpamModel
from ..encodings import ENCODINGS
from ..exceptions import ConfigError
from ..tomography import CONVENTIONS
from .components.parameter_tables import PRESETS, noise_preset

EXPERIMENT_NAMES = ("fock_demo", "coherent_sweep", "qpt", "fredkin", "kerr", "error_budget")
MODES = ("exact", "sampled")
VARIANTS = ("simplified", "cswap")
DEFAULT_THETAS = (0.0, math.pi / 4, math.pi / 2)

_ANGLE = re.compile(
    r"^(?P<sign>[+-]?)(?P<num>\d*\.?\d*(?:e[+-]?\d+)?)\*?(?P<pi>pi)?(?:/(?P<den>\d*\.?\d+))?$"
)


def parse_angle(text: str) -> float:
    """
    Parse an angle such as '0.785', 'pi/4', '3pi/8', '-pi' or '3*pi/8'

    Raises:
        ValueError: If the text is not an angle expression
    """
    cleaned = text.strip().lower().replace(" ", "")
    match = _ANGLE.match(cleaned)
    if not cleaned or match is None or not (match["num"] or match["pi"]):
        raise ValueError(f"Invalid angle '{text}'")
    value = float(match["num"]) if match["num"] else 1.0
    if match["pi"]:
        value *= math.pi
    if match["den"]:
        value /= float(match["den"])
    return -value if match["sign"] == "-" else value


def parse_angle_list(text: str) -> Tuple[float, ...]:
    items = [item for item in text.split(",") if item.strip()]
    if not items:
        raise ValueError("Empty angle list")
    return tuple(parse_angle(item) for item in items)


def parse_name_list(text: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in text.split(",") if item.strip())


def parse_bool(text: str) -> bool:
    states = configparser.ConfigParser.BOOLEAN_STATES
    if text.strip().lower() not in states:
        raise ValueError(f"Not a boolean: '{text}'")
    return states[text.strip().lower()]


def _choice(options: Tuple[str, ...]) -> Callable[[str], str]:
    def convert(text: str) -> str:
        value = text.strip()
        if value not in options:
            raise ValueError(f"'{value}' not in {list(options)}")
        return value

    return convert


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise ValueError(f"{value} is not positive")
    return value


# Section -> key -> converter. Anything else in a .def file is rejected.
SCHEMA: Dict[str, Dict[str, Callable[[str], Any]]] = {
    "experiment": {
        "name": _choice(EXPERIMENT_NAMES),
        "encoding": _choice(ENCODINGS),
        "theta_list": parse_angle_list,
        "mode": _choice(MODES),
        "shots_per_point": _positive_int,
        "seed": int,
        "output_dir": str,
        "cutoff": _positive_int,
        "workers": _positive_int,
        "alpha": float,
        "variant": _choice(VARIANTS),
        "convention": _choice(CONVENTIONS),
    },
    "noise": {
        "enabled": parse_bool,
        "preset": _choice(PRESETS),
        "t1_alice_us": float,
        "t1_bob_us": float,
        "t2_alice_us": float,
        "t2_bob_us": float,
        "t1_qb_us": float,
        "t2_qb_us": float,
        "kerr_alice_hz": float,
        "kerr_bob_hz": float,
        "chi_qb_bob_hz": float,
        "thermal_alice": float,
        "thermal_bob": float,
        "thermal_qb": float,
        "bs_heating": float,
        "cps_phase_error": float,
        "rotation_error": float,
    },
    "spam": {
        "enabled": parse_bool,
        "prep_loss": float,
        "prep_dephasing": float,
        "ancilla_init_error": float,
        "readout_error_a": float,
        "readout_error_b": float,
    },
    "grid": {
        "radius": float,
        "points": _positive_int,
        "plane_points": _positive_int,
        "tomography_radius": float,
    },
    "budget": {
        "exposure_time_us": float,
        "kerr_time_us": float,
        "mechanisms": parse_name_list,
        "theta_c": parse_angle,
    },
    "spectroscopy": {
        "detuning_min_mhz": float,
        "detuning_max_mhz": float,
        "detuning_points": _positive_int,
        "duration_max_us": float,
        "duration_points": _positive_int,
        "coupling_khz": float,
        "cutoff": _positive_int,
    },
}

REQUIRED_SECTIONS = ["experiment"]


@dataclass(frozen=True)
class GridSpec:
    """Phase-space grids: single-mode maps, joint-Wigner planes, tomography"""

    radius: float = 2.5
    points: int = 21
    plane_points: int = 21
    tomography_radius: Optional[float] = None

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ConfigError(f"Grid radius must be > 0, got {self.radius}")
        if self.points < 2 or self.plane_points < 2:
            raise ConfigError("Grids need at least 2 points per axis")


@dataclass(frozen=True)
class BudgetSpec:
    exposure_time: float = DEFAULT_EXPOSURE
    kerr_time: float = DEFAULT_EXPOSURE
    mechanisms: Tuple[str, ...] = BUDGET_ROWS
    theta_c: float = math.pi / 4

    def __post_init__(self) -> None:
        unknown = [m for m in self.mechanisms if m not in BUDGET_ROWS]
        if unknown:
            raise ConfigError(f"Unknown budget mechanisms {unknown}. Available: {list(BUDGET_ROWS)}")


@dataclass(frozen=True)
class SpectroscopySpec:
    """Drive-offset and duration grid of the conditional beamsplitter chevron"""

    detuning_min: float = -0.5e6
    detuning_max: float = 1.8e6
    detuning_points: int = 47
    duration_max: float = 10e-6
    duration_points: int = 21
    coupling: float = 2 * math.pi * 50e3
    cutoff: int = 2

    def detunings(self) -> List[float]:
        step = (self.detuning_max - self.detuning_min) / max(self.detuning_points - 1, 1)
        return [self.detuning_min + k * step for k in range(self.detuning_points)]

    def durations(self) -> List[float]:
        step = self.duration_max / max(self.duration_points - 1, 1)
        return [k * step for k in range(self.duration_points)]


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment configuration"""

    name: str
    encoding: Optional[str] = None
    theta_list: Tuple[float, ...] = DEFAULT_THETAS
    mode: str = "exact"
    shots_per_point: int = 500
    seed: int = 0
    output_dir: Optional[str] = None
    cutoff: Optional[int] = None
    workers: int = 1
    alpha: Optional[float] = None
    variant: str = "simplified"
    convention: str = "y"
    preset: str = "midpoint"
    noise: NoiseModel = field(default_factory=NoiseModel)
    spam: SpamModel = field(default_factory=SpamModel)
    grid: GridSpec = field(default_factory=GridSpec)
    budget: BudgetSpec = field(default_factory=BudgetSpec)
    spectroscopy: SpectroscopySpec = field(default_factory=SpectroscopySpec)

    def __post_init__(self) -> None:
        if self.name not in EXPERIMENT_NAMES:
            raise ConfigError(f"Unknown experiment '{self.name}'. Available: {list(EXPERIMENT_NAMES)}")
        if self.mode not in MODES:
            raise ConfigError(f"Unknown mode '{self.mode}'. Available: {list(MODES)}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.convention not in CONVENTIONS:
            raise ConfigError(
                f"Unknown convention '{self.convention}'. Available: {list(CONVENTIONS)}"
            )
        if self.preset not in PRESETS:
            raise ConfigError(f"Unknown preset '{self.preset}'. Available: {list(PRESETS)}")

    def encoding_params(self) -> Dict[str, Any]:
        return {"alpha": self.alpha} if self.alpha is not None else {}

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with command-line values replacing file values; None entries are ignored"""
        values = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **values) if values else self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "encoding": self.encoding,
            "theta_list": list(self.theta_list),
            "mode": self.mode,
            "shots_per_point": self.shots_per_point,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "cutoff": self.cutoff,
            "workers": self.workers,
            "alpha": self.alpha,
            "variant": self.variant,
            "convention": self.convention,
            "preset": self.preset,
            "noise": self.noise.to_dict(),
            "spam": self.spam.to_dict(),
            "grid": dict(self.grid.__dict__),
            "budget": {**self.budget.__dict__, "mechanisms": list(self.budget.mechanisms)},
            "spectroscopy": dict(self.spectroscopy.__dict__),
        }

    def config_hash(self) -> str:
        """SHA-256 of the resolved configuration; the output directory is excluded"""
        payload = self.to_dict()
        payload.pop("output_dir")
        payload.pop("workers")
        text = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


class ConfigParser:
    """Parser for experiment .def configuration files"""

    def __init__(self, def_file_path: str) -> None:
        """
        Initialize parser with .def file path

        Args:
            def_file_path: Path to the .def configuration file

        Raises:
            FileNotFoundError: If .def file doesn't exist
            ConfigError: If sections are missing, unknown or malformed
        """
        self.def_file_path = Path(def_file_path).resolve()

        if not self.def_file_path.exists():
            raise FileNotFoundError(f"Definition file not found: {self.def_file_path}")

        self.config = configparser.ConfigParser(interpolation=None)
        try:
            self.config.read(str(self.def_file_path))
        except configparser.Error as e:
            raise ConfigError(f"Cannot parse {self.def_file_path}: {e}")

        self.validate_required_sections()
        self.validate_schema()

    def validate_required_sections(self) -> None:
        """Validate that required sections exist in the .def file"""
        missing_sections = [sec for sec in REQUIRED_SECTIONS if not self.config.has_section(sec)]

        if missing_sections:
            raise ConfigError(f"Missing required sections in {self.def_file_path}: {missing_sections}")
        if "name" not in self.config["experiment"]:
            raise ConfigError("Missing required [experiment] parameter: name")

    def validate_schema(self) -> None:
        """Reject unknown sections and keys"""
        errors = []
        for section in self.config.sections():
            if section not in SCHEMA:
                errors.append(f"Unknown section [{section}]. Available: {list(SCHEMA)}")
                continue
            unknown = [key for key in self.config[section] if key not in SCHEMA[section]]
            if unknown:
                errors.append(f"Unknown keys in [{section}]: {unknown}")
        if errors:
            raise ConfigError(". ".join(errors))

    def get_section_params(self, section: str) -> Dict[str, Any]:
        """Converted parameters of a section, empty dict if the section is missing"""
        if not self.config.has_section(section):
            return {}
        converted = {}
        for key, raw in self.config[section].items():
            try:
                converted[key] = SCHEMA[section][key](raw)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"Invalid value for [{section}] {key} = {raw!r}: {e}")
        return converted

    def get_experiment_params(self) -> Dict[str, Any]:
        """Get parameters from [experiment] section"""
        return self.get_section_params("experiment")

    def get_all_sections(self) -> List[str]:
        """Get list of all sections in the .def file"""
        return list(self.config.sections())

    def get_noise_model(self) -> NoiseModel:
        """NoiseModel from the preset with [noise] overrides applied"""
        params = self.get_section_params("noise")
        preset = params.pop("preset", "midpoint")
        enabled = params.pop("enabled", True)
        overrides: Dict[str, float] = {}
        for key, value in params.items():
            if key.endswith("_us"):
                overrides[key[:-3]] = value * 1e-6
            elif key.endswith("_hz"):
                overrides[key[:-3]] = 2 * math.pi * value
            else:
                overrides[key] = value
        try:
            noise = noise_preset(preset, **overrides)
        except ValueError as e:
            raise ConfigError(f"Invalid [noise] section: {e}")
        return noise if enabled else NoiseModel.noiseless(noise.chi_qb_bob)

    def get_noise_preset(self) -> str:
        """Coherence preset named in [noise], midpoint when absent"""
        return self.get_section_params("noise").get("preset", "midpoint")

    def get_spam_model(self) -> SpamModel:
        params = self.get_section_params("spam")
        if params.get("enabled", True) is False:
            return SpamModel.none()
        try:
            return SpamModel(**params)
        except ValueError as e:
            raise ConfigError(f"Invalid [spam] section: {e}")

    def get_grid_spec(self) -> GridSpec:
        return GridSpec(**self.get_section_params("grid"))

    def get_budget_spec(self) -> BudgetSpec:
        params = self.get_section_params("budget")
        values: Dict[str, Any] = {}
        if "exposure_time_us" in params:
            values["exposure_time"] = params["exposure_time_us"] * 1e-6
        if "kerr_time_us" in params:
            values["kerr_time"] = params["kerr_time_us"] * 1e-6
        if "mechanisms" in params:
            values["mechanisms"] = params["mechanisms"]
        if "theta_c" in params:
            values["theta_c"] = params["theta_c"]
        return BudgetSpec(**values)

    def get_spectroscopy_spec(self) -> SpectroscopySpec:
        params = self.get_section_params("spectroscopy")
        scales = {
            "detuning_min_mhz": ("detuning_min", 1e6),
            "detuning_max_mhz": ("detuning_max", 1e6),
            "duration_max_us": ("duration_max", 1e-6),
            "coupling_khz": ("coupling", 2 * math.pi * 1e3),
        }
        values: Dict[str, Any] = {}
        for key, value in params.items():
            if key in scales:
                name, scale = scales[key]
                values[name] = value * scale
            else:
                values[key] = value
        return SpectroscopySpec(**values)

    def to_experiment_config(self) -> ExperimentConfig:
        """Resolve every section into an ExperimentConfig"""
        return ExperimentConfig(
            noise=self.get_noise_model(),
            preset=self.get_noise_preset(),
            spam=self.get_spam_model(),
            grid=self.get_grid_spec(),
            budget=self.get_budget_spec(),
            spectroscopy=self.get_spectroscopy_spec(),
            **self.get_experiment_params(),
        )


def load_config(def_file_path: str) -> ExperimentConfig:
    return ConfigParser(def_file_path).to_experiment_config()
