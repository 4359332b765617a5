"""
src/eswap_sim/circuits.py

Symbolic gate set, compilation of the Fredkin and exponential-SWAP circuits,
ideal target unitaries and equivalence verification
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import CompileError, SpaceMismatch
from .fockspace import (
    ALICE,
    ANCILLA,
    BOB,
    PHASE_EQUIV_TOL,
    DensityMatrix,
    ModeSpace,
    Operator,
    Space,
    StateVector,
    annihilation,
    as_space,
    canonical_spaces,
    embed,
    expm,
    find_mode,
    identity,
    number,
    operator_distance,
    parity_operator,
    space_dim,
)

logger = logging.getLogger(__name__)

# Gate durations used for noise scheduling (seconds)
T_BS = 5e-6
T_CPS = 0.5e-6
T_ROT = 50e-9

LEAKAGE_TOL = 1e-9
DEFAULT_CUTOFF = 8

# Beamsplitter phase for which BS^dag CPS BS is exactly cSWAP
IDENTITY_FRAME_PHASE = math.pi / 2

GATE_KINDS = ("beamsplitter", "cps", "rotation", "swap", "custom")
ROTATION_AXES = ("X", "Y", "Z", "H")

_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True, eq=False)
class GateSpec:
    """
    One symbolic gate

    `theta` is the beamsplitter mixing angle or the rotation angle, `phi` the
    beamsplitter phase. `modes` names the modes the gate touches.
    """

    kind: str
    theta: float = 0.0
    phi: float = 0.0
    axis: str = ""
    target: str = ""
    modes: Tuple[str, ...] = ()
    duration: float = 0.0
    matrix: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ValueError(f"Unknown gate kind '{self.kind}'. Available: {GATE_KINDS}")
        if self.duration < 0:
            raise ValueError(f"Gate duration must be >= 0, got {self.duration}")

        modes = tuple(self.modes)
        if self.kind == "beamsplitter":
            if not -1e-12 <= self.theta <= math.pi + 1e-12:
                raise ValueError(f"Beamsplitter theta must lie in [0, pi], got {self.theta}")
            modes = modes or (ALICE, BOB)
        elif self.kind == "cps":
            target = self.target or BOB
            if target != BOB:
                raise ValueError(f"CPS target must be the ancilla-coupled mode '{BOB}'")
            object.__setattr__(self, "target", target)
            modes = (ANCILLA, BOB)
        elif self.kind == "rotation":
            if self.axis not in ROTATION_AXES:
                raise ValueError(f"Unknown rotation axis '{self.axis}'. Available: {ROTATION_AXES}")
            modes = (ANCILLA,)
        elif self.kind == "swap":
            modes = modes or (ALICE, BOB)
        elif self.matrix is None or not modes:
            raise ValueError("Custom gates need a matrix and the modes it acts on")

        if self.matrix is not None:
            matrix = np.array(self.matrix, dtype=complex)
            matrix.setflags(write=False)
            object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "modes", modes)

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "kind": self.kind,
            "theta": self.theta,
            "phi": self.phi,
            "axis": self.axis,
            "target": self.target,
            "modes": list(self.modes),
            "duration": self.duration,
            "label": self.label,
        }
        if self.matrix is not None:
            payload["re"] = self.matrix.real.tolist()
            payload["im"] = self.matrix.imag.tolist()
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "GateSpec":
        matrix = None
        if "re" in payload:
            matrix = np.asarray(payload["re"]) + 1j * np.asarray(payload["im"])
        return cls(
            kind=payload["kind"],
            theta=float(payload["theta"]),
            phi=float(payload["phi"]),
            axis=payload["axis"],
            target=payload["target"],
            modes=tuple(payload["modes"]),
            duration=float(payload["duration"]),
            matrix=matrix,
            label=payload.get("label", ""),
        )


def bs_gate(
    theta: float, phi: float = 0.0, duration: float = T_BS, label: str = "BS"
) -> GateSpec:
    return GateSpec("beamsplitter", theta=theta, phi=float(np.mod(phi, 2 * math.pi)),
                    duration=duration, label=label)


def cps_gate(duration: float = T_CPS) -> GateSpec:
    return GateSpec("cps", target=BOB, duration=duration, label="CPS")


def rotation_gate(axis: str, angle: float, duration: float = T_ROT) -> GateSpec:
    """Ancilla rotation exp(-i angle sigma_axis / 2); axis 'H' is the Hadamard"""
    return GateSpec("rotation", theta=angle, axis=axis, duration=duration,
                    label=f"{axis}({angle:.6g})" if axis != "H" else "H")


def hadamard_gate(duration: float = T_ROT) -> GateSpec:
    return rotation_gate("H", 0.0, duration)


def swap_gate(duration: float = T_BS) -> GateSpec:
    return GateSpec("swap", duration=duration, label="SWAP")


def custom_gate(
    matrix: np.ndarray, modes: Sequence[str], duration: float = 0.0, label: str = "U"
) -> GateSpec:
    return GateSpec("custom", matrix=matrix, modes=tuple(modes), duration=duration,
                    label=label)


@dataclass(frozen=True, eq=False)
class Circuit:
    """Ordered gate sequence over a set of mode spaces"""

    gates: Tuple[GateSpec, ...]
    spaces: Space
    control_angle: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        gates = tuple(self.gates)
        spaces = as_space(self.spaces)
        labels = {s.label for s in spaces}
        for index, gate in enumerate(gates):
            missing = [m for m in gate.modes if m not in labels]
            if missing:
                raise SpaceMismatch(f"Gate {index} ({gate.kind}) references absent modes {missing}")
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "spaces", spaces)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def total_duration(self) -> float:
        return float(sum(g.duration for g in self.gates))

    def unitary(self) -> Operator:
        """Product of gate unitaries, first gate rightmost"""
        result = identity(self.spaces).matrix
        for gate in self.gates:
            result = gate_unitary(gate, self.spaces).matrix @ result
        return Operator(result, self.spaces)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gates": [g.to_dict() for g in self.gates],
            "spaces": [{"label": s.label, "cutoff": s.cutoff} for s in self.spaces],
            "control_angle": self.control_angle,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "Circuit":
        spaces = tuple(
            ModeSpace(int(s["cutoff"]), s["label"],
                      extended=(s["label"] == ANCILLA and int(s["cutoff"]) != 2))
            for s in payload["spaces"]
        )
        return cls(
            gates=tuple(GateSpec.from_dict(g) for g in payload["gates"]),
            spaces=spaces,
            control_angle=float(payload["control_angle"]),
            metadata=dict(payload.get("metadata", {})),
        )


# ---------------------------------------------------------------------------
# Ideal unitaries
# ---------------------------------------------------------------------------


def _check_cavities(space_a: ModeSpace, space_b: ModeSpace) -> None:
    if ANCILLA in (space_a.label, space_b.label):
        raise SpaceMismatch("Beamsplitter and SWAP act on cavity modes only")
    if space_a.label == space_b.label:
        raise SpaceMismatch(f"Two distinct cavities required, got '{space_a.label}' twice")


def beamsplitter_unitary(
    theta: float, phi: float, space_a: ModeSpace, space_b: ModeSpace
) -> Operator:
    """exp(-i theta (e^{i phi} a^dag b + e^{-i phi} a b^dag))"""
    _check_cavities(space_a, space_b)
    pair = (space_a, space_b)
    a = embed(annihilation(space_a), pair).matrix
    b = embed(annihilation(space_b), pair).matrix
    generator = np.exp(1j * phi) * a.conj().T @ b + np.exp(-1j * phi) * a @ b.conj().T
    return expm(Operator(generator, pair), -1j * theta)


def cps_unitary(ancilla: ModeSpace, cavity: ModeSpace) -> Operator:
    """|g><g| x I + |e><e| x exp(i pi n)"""
    if ancilla.label != ANCILLA or ancilla.cutoff != 2:
        raise SpaceMismatch("CPS needs a two-level ancilla as control")
    dim = cavity.cutoff
    matrix = np.zeros((2 * dim, 2 * dim), dtype=complex)
    matrix[:dim, :dim] = np.eye(dim)
    matrix[dim:, dim:] = parity_operator(cavity).matrix
    return Operator(matrix, (ancilla, cavity))


def swap_operator(space_a: ModeSpace, space_b: ModeSpace) -> Operator:
    """Exchange of the two cavity states, |m, n> -> |n, m>"""
    _check_cavities(space_a, space_b)
    if space_a.cutoff != space_b.cutoff:
        raise SpaceMismatch(
            f"SWAP needs equal cutoffs, got {space_a.cutoff} and {space_b.cutoff}"
        )
    dim = space_a.cutoff
    matrix = np.zeros((dim * dim, dim * dim))
    for m in range(dim):
        for n in range(dim):
            matrix[n * dim + m, m * dim + n] = 1.0
    return Operator(matrix, (space_a, space_b))


def eswap_ideal(theta_c: float, space_a: ModeSpace, space_b: ModeSpace) -> Operator:
    """exp(i theta_c SWAP) = cos(theta_c) I + i sin(theta_c) SWAP"""
    return expm(swap_operator(space_a, space_b), 1j * theta_c)


def cswap_ideal(ancilla: ModeSpace, space_a: ModeSpace, space_b: ModeSpace) -> Operator:
    """|g><g| x I + |e><e| x SWAP"""
    if ancilla.label != ANCILLA or ancilla.cutoff != 2:
        raise SpaceMismatch("cSWAP needs a two-level ancilla as control")
    swap = swap_operator(space_a, space_b).matrix
    dim = swap.shape[0]
    matrix = np.zeros((2 * dim, 2 * dim), dtype=complex)
    matrix[:dim, :dim] = np.eye(dim)
    matrix[dim:, dim:] = swap
    return Operator(matrix, (ancilla, space_a, space_b))


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """2x2 ancilla rotation exp(-i angle sigma / 2), or the Hadamard for 'H'"""
    if axis == "H":
        return _HADAMARD.copy()
    if axis not in _PAULI:
        raise ValueError(f"Unknown rotation axis '{axis}'")
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * _PAULI[axis]


def gate_unitary(gate: GateSpec, spaces: Space) -> Operator:
    """Unitary of `gate` embedded in `spaces`"""
    if gate.kind == "beamsplitter":
        local = beamsplitter_unitary(
            gate.theta, gate.phi, find_mode(spaces, gate.modes[0]),
            find_mode(spaces, gate.modes[1]),
        )
    elif gate.kind == "cps":
        local = cps_unitary(find_mode(spaces, ANCILLA), find_mode(spaces, gate.target))
    elif gate.kind == "rotation":
        local = Operator(rotation_matrix(gate.axis, gate.theta), (find_mode(spaces, ANCILLA),))
    elif gate.kind == "swap":
        local = swap_operator(find_mode(spaces, gate.modes[0]), find_mode(spaces, gate.modes[1]))
    else:
        local = Operator(gate.matrix, tuple(find_mode(spaces, m) for m in gate.modes))
    return embed(local, spaces)


def phase_frame(bob_phase: float, spaces: Space) -> Operator:
    """Single-mode phase rotation exp(i bob_phase n_B) on `spaces`"""
    return embed(expm(number(find_mode(spaces, BOB)), 1j * bob_phase), spaces)


# ---------------------------------------------------------------------------
# Application and verification
# ---------------------------------------------------------------------------


def apply(
    circuit: Circuit, state: Union[StateVector, DensityMatrix]
) -> Union[StateVector, DensityMatrix]:
    """Apply the circuit unitary to a pure or mixed state"""
    if state.space != circuit.spaces:
        raise SpaceMismatch("State space does not match circuit spaces")
    unitary = circuit.unitary()
    if isinstance(state, StateVector):
        return unitary @ state
    u = unitary.matrix
    return DensityMatrix(u @ state.matrix @ u.conj().T, state.space)


@dataclass(frozen=True)
class EquivalenceReport:
    """Outcome of comparing a compiled circuit against a target unitary"""

    distance: float
    leakage: float
    global_phase: float
    subspace_dim: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.distance < self.tol and self.leakage < LEAKAGE_TOL

    def to_dict(self) -> Dict[str, Any]:
        return {
            "distance": self.distance,
            "leakage": self.leakage,
            "global_phase": self.global_phase,
            "subspace_dim": self.subspace_dim,
            "passed": self.passed,
        }


def _number_complete_columns(cavities: Space) -> np.ndarray:
    """Cavity basis states whose total photon number is fully represented"""
    limit = min(s.cutoff for s in cavities) - 1
    grids = np.meshgrid(*[np.arange(s.cutoff) for s in cavities], indexing="ij")
    total = sum(g.ravel() for g in grids)
    return np.flatnonzero(total <= limit)


def verify_equivalence(
    circuit: Circuit,
    target: Operator,
    tol: float = PHASE_EQUIV_TOL,
    frame: Optional[Operator] = None,
) -> EquivalenceReport:
    """
    Compare a circuit to `target` up to a global phase

    For a two-cavity target the comparison is restricted to the ancilla-|g>
    input block and the ancilla-|e> output amplitude is reported as leakage.
    A target on the full space is compared directly. Only cavity states whose
    total photon number lies below the smallest cutoff are compared, since the
    truncated beamsplitter is exact there.

    Args:
        circuit: Compiled circuit
        target: Ideal unitary on the cavities or on all circuit spaces
        tol: Distance tolerance for `passed`
        frame: Optional phase-frame unitary R; the target becomes R^dag T R

    Raises:
        SpaceMismatch: If the target does not fit the circuit spaces
    """
    unitary = circuit.unitary().matrix
    cavities = tuple(s for s in circuit.spaces if s.label != ANCILLA)
    columns = _number_complete_columns(cavities)
    target_matrix = target.matrix
    if frame is not None:
        if frame.space != target.space:
            raise SpaceMismatch("Phase frame must act on the target space")
        target_matrix = frame.matrix.conj().T @ target_matrix @ frame.matrix

    has_ancilla = any(s.label == ANCILLA for s in circuit.spaces)
    if target.space == circuit.spaces:
        dim_c = space_dim(cavities)
        if has_ancilla:
            columns = np.concatenate([columns, columns + dim_c])
        distance, phase = operator_distance(unitary[:, columns], target_matrix[:, columns])
        leakage = 0.0
    elif target.space == cavities and has_ancilla and circuit.spaces[0].label == ANCILLA:
        dim_c = space_dim(cavities)
        block_gg = unitary[:dim_c, :dim_c]
        block_eg = unitary[dim_c:, :dim_c]
        distance, phase = operator_distance(block_gg[:, columns], target_matrix[:, columns])
        leakage = float(np.max(np.abs(block_eg[:, columns]), initial=0.0))
    elif target.space == cavities:
        distance, phase = operator_distance(unitary[:, columns], target_matrix[:, columns])
        leakage = 0.0
    else:
        raise SpaceMismatch("Target space does not match the circuit cavities or spaces")

    report = EquivalenceReport(distance, leakage, phase, int(columns.size), tol)
    logger.debug("Equivalence check: %s", report.to_dict())
    return report


def with_verification(circuit: Circuit, report: EquivalenceReport) -> Circuit:
    """Copy of `circuit` whose metadata records the equivalence report"""
    return replace(circuit, metadata={**circuit.metadata, "verification": report.to_dict()})


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


def default_spaces(cutoff: int = DEFAULT_CUTOFF) -> Space:
    return canonical_spaces(cutoff, cutoff)


def _frame_phase(bs_phase: float) -> float:
    # BS(phi)^dag CPS BS(phi) = R^dag cSWAP R with R = exp(i (phi - pi/2) n_B)
    return float(bs_phase - IDENTITY_FRAME_PHASE)


def compile_fredkin(
    spaces: Optional[Space] = None,
    bs_phase: float = IDENTITY_FRAME_PHASE,
    bs_duration: float = T_BS,
) -> Circuit:
    """
    Fredkin gate as [BS(pi/4), CPS, BS^dag(pi/4)]

    The beamsplitter phase fixes the phase frame exp(i (phi - pi/2) n_B); the
    default phase makes the frame the identity. The frame is stored in the
    circuit metadata and used for verification.

    Raises:
        CompileError: If the circuit does not match cSWAP in the declared frame
    """
    spaces = spaces or default_spaces()
    gates = (
        bs_gate(math.pi / 4, bs_phase, bs_duration, label="BS"),
        cps_gate(),
        bs_gate(math.pi / 4, bs_phase + math.pi, bs_duration, label="BS_dag"),
    )
    frame_phase = _frame_phase(bs_phase)
    circuit = Circuit(gates, spaces, metadata={
        "name": "fredkin",
        "bs_phase": float(np.mod(bs_phase, 2 * math.pi)),
        "frame_bob_phase": frame_phase,
    })
    target = cswap_ideal(
        find_mode(spaces, ANCILLA), find_mode(spaces, ALICE), find_mode(spaces, BOB)
    )
    report = verify_equivalence(circuit, target, frame=phase_frame(frame_phase, spaces))
    if not report.passed:
        raise CompileError(f"Fredkin verification failed: {report.to_dict()}")
    return with_verification(circuit, report)


def _cswap_block(bs_phase: float, bs_duration: float) -> List[GateSpec]:
    return [
        bs_gate(math.pi / 4, bs_phase, bs_duration, label="BS"),
        cps_gate(),
        bs_gate(math.pi / 4, bs_phase + math.pi, bs_duration, label="BS_dag"),
    ]


def compile_eswap(
    theta_c: float,
    spaces: Optional[Space] = None,
    variant: str = "simplified",
    bs_duration: float = T_BS,
) -> Circuit:
    """
    Compile exp(i theta_c SWAP) with an ancilla that starts and ends in |g>

    variant="simplified": [BS, H, CPS, X, CPS, H, BS^dag], ancilla stays in |g>
    during both beamsplitters.
    variant="cswap": [H, cSWAP, X, cSWAP, H] with each cSWAP expanded to
    [BS, CPS, BS^dag].

    The ancilla rotation is X(-2 theta_c) = exp(+i theta_c X) in the
    exp(-i angle sigma / 2) convention.

    Args:
        theta_c: Control angle in [-pi, pi]
        spaces: Canonical (ancilla, Alice, Bob) spaces, default cutoffs (2, 8, 8)
        variant: "simplified" or "cswap"
        bs_duration: Beamsplitter duration used for scheduling

    Raises:
        ValueError: If theta_c is out of range or the variant is unknown
        CompileError: If the compiled product does not verify
    """
    if not -math.pi <= theta_c <= math.pi:
        raise ValueError(f"Control angle must lie in [-pi, pi], got {theta_c}")
    spaces = spaces or default_spaces()
    bs_phase = IDENTITY_FRAME_PHASE
    rotation = rotation_gate("X", -2.0 * theta_c)

    if variant == "simplified":
        gates = [
            bs_gate(math.pi / 4, bs_phase, bs_duration, label="BS"),
            hadamard_gate(),
            cps_gate(),
            rotation,
            cps_gate(),
            hadamard_gate(),
            bs_gate(math.pi / 4, bs_phase + math.pi, bs_duration, label="BS_dag"),
        ]
    elif variant == "cswap":
        gates = (
            [hadamard_gate()]
            + _cswap_block(bs_phase, bs_duration)
            + [rotation]
            + _cswap_block(bs_phase, bs_duration)
            + [hadamard_gate()]
        )
    else:
        raise ValueError(f"Unknown eSWAP variant '{variant}'. Available: simplified, cswap")

    circuit = Circuit(tuple(gates), spaces, control_angle=float(theta_c), metadata={
        "name": "eswap",
        "variant": variant,
        "bs_phase": bs_phase,
        "frame_bob_phase": 0.0,
        "ancilla_rotation": "exp(+i theta_c X)",
    })
    target = eswap_ideal(theta_c, find_mode(spaces, ALICE), find_mode(spaces, BOB))
    report = verify_equivalence(circuit, target)
    if not report.passed:
        raise CompileError(f"eSWAP verification failed for theta_c={theta_c}: {report.to_dict()}")
    circuit = with_verification(circuit, report)
    logger.debug("Compiled %s eSWAP(theta_c=%.4f) with %d gates", variant, theta_c, len(gates))
    return circuit
