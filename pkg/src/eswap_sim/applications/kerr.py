"""
KerrExperiment - self-Kerr distortion of the entangled cat

eSWAP(pi/4) on |-alpha>_A |alpha>_B, then the cavity self-Kerr acting for two
beamsplitter durations. The Re-Re joint Wigner plane shows the distortion.
"""

import logging
import math
from typing import Any, Dict, List, Optional

import numpy as np

from ..circuits import T_BS, compile_eswap, eswap_ideal
from ..core.base_experiment import BaseExperiment, Mapper
from ..core.config_parser import ExperimentConfig
from ..core.experiment_driver import run_command
from ..dynamics import evolve_circuit, kerr_unitary
from ..encodings import DEFAULT_ALPHA, LogicalEncoding, encode_two_qubit, make_encoding
from ..fockspace import ancilla_space, as_density, state_fidelity
from ..tomography import joint_wigner, wigner_plane

logger = logging.getLogger(__name__)

THETA_C = math.pi / 4
INPUT_LABEL = "01"
KERR_TIME = 2 * T_BS
DISTORTION_MAX_FIDELITY = 0.95
POPULATION_TOL = 1e-12


class KerrExperiment(BaseExperiment):
    """Ideal, Kerr-distorted and gate-simulated entangled cats"""

    default_encoding = "coherent"

    def get_experiment_name(self) -> str:
        """Return experiment name for lookup"""
        return "kerr"

    def validate_requirements(self) -> None:
        super().validate_requirements()
        if self.encoding_name != "coherent":
            raise ValueError(f"kerr uses the coherent encoding, got '{self.encoding_name}'")
        noise = self.config.noise
        if noise.kerr_alice == 0 and noise.kerr_bob == 0:
            raise ValueError("kerr needs a nonzero self-Kerr on at least one cavity")

    def make_encoding(self) -> LogicalEncoding:
        alpha = self.config.alpha if self.config.alpha is not None else DEFAULT_ALPHA
        return make_encoding("coherent", {"alpha": alpha}, self.config.cutoff)

    def run(self, mapper: Mapper = map) -> List[str]:
        """Build the three states, write the Re-Re planes and the fidelities"""
        noise = self.config.noise
        encoding = self.make_encoding()
        initial = encode_two_qubit(encoding, INPUT_LABEL)
        spaces = initial.space
        ideal = eswap_ideal(THETA_C, spaces[0], spaces[1]) @ initial
        distorted = kerr_unitary(noise.kerr_alice, noise.kerr_bob, KERR_TIME, spaces) @ ideal

        circuit = compile_eswap(
            THETA_C, (ancilla_space(),) + tuple(spaces), variant=self.config.variant
        )
        outputs, counter = evolve_circuit(circuit, noise.only("self_kerr"), [initial])
        states = {
            "ideal": as_density(ideal),
            "kerr": as_density(distorted),
            "gate": outputs[0],
        }

        grid = self.config.grid
        rows: List[Dict[str, Any]] = []
        for kind, rho in states.items():
            plane = wigner_plane(rho, "re", grid.radius, grid.plane_points)
            rows.extend({"kind": kind, **row} for row in plane.to_rows())
        fm = self.file_manager
        fm.write_csv(fm.get_filename("joint_wigner", "csv", "re"), rows)

        fidelity = state_fidelity(states["kerr"], ideal)
        gate_fidelity = state_fidelity(states["gate"], ideal)
        population_shift = float(np.max(np.abs(
            np.diag(states["kerr"].matrix) - np.diag(states["ideal"].matrix)
        )))
        self.check("kerr_distorts_entangled_state", fidelity < DISTORTION_MAX_FIDELITY)
        self.check("kerr_preserves_populations", population_shift < POPULATION_TOL)

        summary = {
            "alpha": encoding.params["alpha"],
            "cutoff": encoding.cutoff,
            "theta_c": THETA_C,
            "kerr_time_s": KERR_TIME,
            "kerr_alice_hz": noise.kerr_alice / (2 * math.pi),
            "kerr_bob_hz": noise.kerr_bob / (2 * math.pi),
            "sign_convention": "H = (K/2) n(n-1), U = exp(-i H t)",
            "fidelity_kerr": fidelity,
            "fidelity_gate": gate_fidelity,
            "gate_duration_s": circuit.total_duration,
            "joint_parity_origin": {
                kind: joint_wigner(rho, 0j, 0j) for kind, rho in states.items()
            },
            "integration_steps": counter.steps,
        }
        fm.write_json(fm.get_filename("summary", "json"), summary)
        logger.info("kerr: fidelity after %.1f us of self-Kerr %.3f (gate %.3f)",
                    KERR_TIME * 1e6, fidelity, gate_fidelity)
        return fm.list_outputs()


def cmd_kerr(config: ExperimentConfig, output_dir: Optional[str] = None) -> List[str]:
    return run_command(KerrExperiment, config, output_dir)
