"""
src/eswap_sim/core/components/parameter_tables.py

Device parameter tables and noise presets built from the coherence ranges
"""

import math
from typing import Any, Dict, Tuple

from ...dynamics import NoiseModel

# Frequencies and dispersive shifts in MHz (divided by 2 pi)
HAMILTONIAN_TABLE: Dict[str, Dict[str, Any]] = {
    "alice": {"frequency": 5467.25, "chi": {"qa": 0.79, "qc": 0.37}, "self_kerr_khz": 6.0},
    "bob": {"frequency": 6548.18, "chi": {"qb": 1.26, "qc": 0.30}, "self_kerr_khz": 4.0},
    "qa": {"frequency": 4602.56, "anharmonicity": 174.20},
    "qb": {"frequency": 4944.66, "anharmonicity": 178.34},
    "qc": {"frequency": 5985.56, "anharmonicity": 71.25},
}

# (low, high) ranges in microseconds; excited-state population upper bounds
COHERENCE_TABLE: Dict[str, Dict[str, Any]] = {
    "alice": {"t1": (200.0, 300.0), "t2": (350.0, 400.0), "pe": 0.01},
    "bob": {"t1": (300.0, 350.0), "t2": (450.0, 500.0), "pe": 0.01},
    "qa": {"t1": (45.0, 55.0), "t2": (5.0, 10.0), "pe": 0.02},
    "qb": {"t1": (70.0, 80.0), "t2": (25.0, 35.0), "pe": 0.04},
    "qc": {"t1": (10.0, 20.0), "t2": (8.0, 16.0), "pe": 0.01},
}

PRESETS = ("best", "midpoint", "worst")

_MODE_KEYS = {"alice": "alice", "bob": "bob", "qb": "qb"}


def _pick(bounds: Tuple[float, float], preset: str) -> float:
    low, high = bounds
    if preset == "best":
        return high
    if preset == "worst":
        return low
    return 0.5 * (low + high)


def _thermal(bound: float, preset: str) -> float:
    return {"best": 0.0, "midpoint": 0.5 * bound, "worst": bound}[preset]


def coherence_values(element: str, preset: str = "midpoint") -> Dict[str, float]:
    """T1 and T2 in seconds and the thermal population of one element"""
    if preset not in PRESETS:
        raise ValueError(f"Unknown preset '{preset}'. Available: {PRESETS}")
    if element not in COHERENCE_TABLE:
        raise ValueError(f"Unknown element '{element}'. Available: {list(COHERENCE_TABLE)}")
    row = COHERENCE_TABLE[element]
    return {
        "t1": _pick(row["t1"], preset) * 1e-6,
        "t2": _pick(row["t2"], preset) * 1e-6,
        "thermal": _thermal(row["pe"], preset),
    }


def dispersive_shift(cavity: str, ancilla: str) -> float:
    """chi in rad/s"""
    try:
        return 2 * math.pi * HAMILTONIAN_TABLE[cavity]["chi"][ancilla] * 1e6
    except KeyError:
        raise ValueError(f"No dispersive shift tabulated between {cavity} and {ancilla}")


def self_kerr(cavity: str) -> float:
    """Self-Kerr in rad/s"""
    return 2 * math.pi * HAMILTONIAN_TABLE[cavity]["self_kerr_khz"] * 1e3


def noise_preset(preset: str = "midpoint", **overrides: Any) -> NoiseModel:
    """
    NoiseModel at a corner or the midpoint of the coherence ranges

    Args:
        preset: 'best', 'midpoint' or 'worst'
        **overrides: NoiseModel fields replacing the tabulated values
    """
    values: Dict[str, Any] = {}
    for element, suffix in _MODE_KEYS.items():
        row = coherence_values(element, preset)
        values[f"t1_{suffix}"] = row["t1"]
        values[f"t2_{suffix}"] = row["t2"]
        values[f"thermal_{suffix}"] = row["thermal"]
    values["kerr_alice"] = self_kerr("alice")
    values["kerr_bob"] = self_kerr("bob")
    values["chi_qb_bob"] = dispersive_shift("bob", "qb")
    values.update(overrides)
    return NoiseModel(**values)


def preparation_parameters(preset: str = "midpoint") -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """((T2_qA, T2_qB), (chi_A, chi_B)) of the state-preparation ancillas"""
    t2 = (coherence_values("qa", preset)["t2"], coherence_values("qb", preset)["t2"])
    chi = (dispersive_shift("alice", "qa"), dispersive_shift("bob", "qb"))
    return t2, chi
