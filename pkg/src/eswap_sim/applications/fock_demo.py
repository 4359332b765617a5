"""
FockDemoExperiment - deterministic entanglement of |0,3> by eSWAP(pi/4)

Emits single-mode Wigner maps and Re-Re / Im-Im joint Wigner planes before and
after the operation, ideal and noisy, plus origin parities
"""

import logging
import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..circuits import compile_eswap, eswap_ideal
from ..core.base_experiment import BaseExperiment, Mapper
from ..core.config_parser import ExperimentConfig
from ..core.experiment_driver import run_command
from ..dynamics import evolve_circuit
from ..fockspace import (
    ALICE,
    BOB,
    DensityMatrix,
    StateVector,
    as_density,
    canonical_spaces,
    ket,
    state_fidelity,
)
from ..tomography import joint_wigner, sample_parity_shots, wigner_map, wigner_plane, wigner_single

logger = logging.getLogger(__name__)

THETA_C = math.pi / 4
INITIAL_OCCUPATIONS = (0, 3)
DEFAULT_CUTOFF = 5
# Reference values for the noisy run
JOINT_PARITY_BAND = (-0.85, -0.65)


def origin_parities(rho: DensityMatrix, readout: Any = (0.0, 0.0)) -> Dict[str, float]:
    """<P_A>, <P_B>, <P_AB> at the phase-space origin with readout contrast applied"""
    e_a, e_b = readout
    return {
        "P_A": (1 - 2 * e_a) * wigner_single(rho.ptrace([ALICE]), 0j, "parity"),
        "P_B": (1 - 2 * e_b) * wigner_single(rho.ptrace([BOB]), 0j, "parity"),
        "P_AB": (1 - 2 * e_a) * (1 - 2 * e_b) * joint_wigner(rho, 0j, 0j),
    }


def _single_mode_rows(job: Tuple[str, DensityMatrix, float, int]) -> List[Dict[str, Any]]:
    """Alice and Bob Wigner maps of one named state"""
    name, rho, radius, points = job
    stage, kind = name.split("_")
    rows: List[Dict[str, Any]] = []
    for mode in (ALICE, BOB):
        axis, values = wigner_map(rho.ptrace([mode]), radius, points)
        for i, y in enumerate(axis):
            for j, x in enumerate(axis):
                rows.append({
                    "stage": stage, "kind": kind, "mode": mode,
                    "re": float(x), "im": float(y), "wigner": float(values[i, j]),
                })
    return rows


def _joint_plane_rows(job: Tuple[str, DensityMatrix, str, float, int]) -> List[Dict[str, Any]]:
    name, rho, plane, radius, points = job
    stage, kind = name.split("_")
    plane_grid = wigner_plane(rho, plane, radius, points)
    return [{"stage": stage, "kind": kind, **row} for row in plane_grid.to_rows()]


class FockDemoExperiment(BaseExperiment):
    """eSWAP(pi/4) on |0>_A |3>_B"""

    default_encoding = "fock"

    def __init__(self, config: ExperimentConfig, output_dir: Any = None) -> None:
        super().__init__(config, output_dir)
        self.cutoff = config.cutoff or DEFAULT_CUTOFF

    def get_experiment_name(self) -> str:
        """Return experiment name for lookup"""
        return "fock_demo"

    def validate_requirements(self) -> None:
        super().validate_requirements()
        if self.cutoff <= max(INITIAL_OCCUPATIONS):
            raise ValueError(
                f"fock_demo needs cutoff > {max(INITIAL_OCCUPATIONS)}, got {self.cutoff}"
            )

    def target_state(self) -> StateVector:
        """(|0,3> + i|3,0>)/sqrt(2)"""
        spaces = canonical_spaces(self.cutoff, self.cutoff, with_ancilla=False)
        amplitudes = (
            ket(spaces, INITIAL_OCCUPATIONS).amplitudes
            + 1j * ket(spaces, INITIAL_OCCUPATIONS[::-1]).amplitudes
        ) / math.sqrt(2)
        return StateVector(amplitudes, spaces)

    def prepare_states(self) -> Dict[str, DensityMatrix]:
        """before/after x ideal/noisy states on (Alice, Bob)"""
        spaces = canonical_spaces(self.cutoff, self.cutoff, with_ancilla=False)
        initial = ket(spaces, INITIAL_OCCUPATIONS)
        ideal_after = eswap_ideal(THETA_C, spaces[0], spaces[1]) @ initial

        spam = self.config.spam
        prepared = spam.prepare(initial)
        circuit = compile_eswap(
            THETA_C, canonical_spaces(self.cutoff, self.cutoff), variant=self.config.variant
        )
        outputs, counter = evolve_circuit(
            circuit, self.config.noise, [prepared], ancilla_excited=spam.ancilla_excited()
        )
        logger.info(
            "Noisy eSWAP(pi/4): ancilla exposure %.2f us, %d integration steps",
            counter.exposure * 1e6, counter.steps,
        )
        return {
            "before_ideal": as_density(initial),
            "after_ideal": as_density(ideal_after),
            "before_noisy": prepared,
            "after_noisy": outputs[0],
        }

    def write_wigner_maps(self, states: Dict[str, DensityMatrix], mapper: Mapper = map) -> None:
        grid = self.config.grid
        jobs = [(name, rho, grid.radius, grid.points) for name, rho in states.items()]
        rows = [row for chunk in mapper(_single_mode_rows, jobs) for row in chunk]
        self.file_manager.write_csv(self.file_manager.get_filename("wigner", "csv"), rows)

    def write_joint_planes(self, states: Dict[str, DensityMatrix], mapper: Mapper = map) -> None:
        grid = self.config.grid
        for plane in ("re", "im"):
            jobs = [(name, rho, plane, grid.radius, grid.plane_points)
                    for name, rho in states.items()]
            rows = [row for chunk in mapper(_joint_plane_rows, jobs) for row in chunk]
            self.file_manager.write_csv(
                self.file_manager.get_filename("joint_wigner", "csv", plane), rows
            )

    def sampled_parities(self, rho: DensityMatrix, tag: str, index: int) -> Dict[str, float]:
        seed = int(np.random.SeedSequence([self.config.seed, index]).generate_state(1)[0])
        self.seeds[tag] = seed
        record = sample_parity_shots(
            rho, [(0j, 0j)], self.config.shots_per_point,
            self.config.spam.readout_errors(), seed,
        )
        return {
            "P_A": float(np.mean(record.parity_a)),
            "P_B": float(np.mean(record.parity_b)),
            "P_AB": float(record.point_means()[0]),
        }

    def run(self, mapper: Mapper = map) -> List[str]:
        """Compute the states, write grids and the parity summary"""
        states = self.prepare_states()
        readout = self.config.spam.readout_errors()
        parities = {
            name: origin_parities(rho, readout if name.endswith("noisy") else (0.0, 0.0))
            for name, rho in states.items()
        }
        if self.config.mode == "sampled":
            for index, name in enumerate(("before_noisy", "after_noisy")):
                parities[f"{name}_sampled"] = self.sampled_parities(
                    states[name], f"{name}_shots", index
                )

        fidelity = state_fidelity(states["after_ideal"], self.target_state())
        self.check("ideal_target_fidelity", fidelity > 1 - 1e-10)
        self.check("ideal_joint_parity", abs(parities["after_ideal"]["P_AB"] + 1) < 1e-8)
        low, high = JOINT_PARITY_BAND
        noisy_joint = parities["after_noisy"]["P_AB"]

        self.write_wigner_maps(states, mapper)
        self.write_joint_planes(states, mapper)
        summary = {
            "theta_c": THETA_C,
            "cutoff": self.cutoff,
            "variant": self.config.variant,
            "initial_state": list(INITIAL_OCCUPATIONS),
            "parities": parities,
            "ideal_target_fidelity": fidelity,
            "noisy_target_fidelity": state_fidelity(states["after_noisy"], self.target_state()),
            "noisy_joint_parity_band": [low, high],
            "noisy_joint_parity_in_band": bool(low <= noisy_joint <= high),
        }
        self.file_manager.write_json(self.file_manager.get_filename("summary", "json"), summary)
        logger.info("fock_demo: <P_AB> ideal %.3f, noisy %.3f",
                    parities["after_ideal"]["P_AB"], noisy_joint)
        return self.file_manager.list_outputs()


def cmd_fock_demo(config: ExperimentConfig, output_dir: Optional[str] = None) -> List[str]:
    return run_command(FockDemoExperiment, config, output_dir)
