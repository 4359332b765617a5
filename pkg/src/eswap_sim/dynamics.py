"""
src/eswap_sim/dynamics.py

Time-domain engine: gate Hamiltonians, Lindblad integration, noisy channels of
compiled circuits, conditional-SWAP spectroscopy, self-Kerr, SPAM and error budgets
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import (
    Any,
    Callable,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .circuits import (
    T_BS,
    Circuit,
    GateSpec,
    compile_eswap,
    gate_unitary,
    rotation_matrix,
    swap_operator,
)
from .encodings import QPT_INPUT_LABELS, LogicalEncoding, encode_two_qubit, make_encoding
from .exceptions import CPViolation, SpaceMismatch, StepTooLarge
from .fockspace import (
    ALICE,
    ANCILLA,
    BOB,
    DensityMatrix,
    Operator,
    Space,
    State,
    annihilation,
    as_density,
    as_space,
    canonical_spaces,
    embed,
    expm_matrix,
    find_mode,
    ket,
    number,
    space_dim,
    state_fidelity,
)

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi

STEP_ERROR_TOL = 1e-6
TRACE_DRIFT_TOL = 1e-7
CP_TOL = 1e-6
CP_WARN_TOL = 1e-8
STEPS_PER_GATE = 200
STEPS_PER_PERIOD = 50
MIN_STEPS_PER_ENTRY = 50
CHOI_CHECK_MAX_DIM = 2048

DEFAULT_EXPOSURE = 3.9e-6
DEFAULT_DRIVE_COUPLING = TWO_PI * 50e3

MECHANISMS = (
    "qc_heating",
    "photon_loss",
    "cavity_dephasing",
    "self_kerr",
    "cps_phase",
    "ancilla_excitation",
    "ancilla_decoherence",
)
BUDGET_ROWS = MECHANISMS + ("all",)
BRANCHES = ("g", "e")

# Preparation ancillas (qA on Alice, qB on Bob): T2 midpoints and dispersive shifts
DEFAULT_PREP_T2 = (7.5e-6, 30e-6)
DEFAULT_PREP_CHI = (TWO_PI * 0.79e6, TWO_PI * 1.26e6)


def _rate(time: float) -> float:
    return 0.0 if math.isinf(time) else 1.0 / time


def pure_dephasing_rate(t1: float, t2: float) -> float:
    """gamma_phi = 1/T2 - 1/(2 T1)"""
    return max(0.0, _rate(t2) - 0.5 * _rate(t1))


@dataclass(frozen=True)
class NoiseModel:
    """
    Device noise parameters in SI units (seconds, rad/s)

    Defaults are the midpoints of the measured coherence ranges. An infinite
    time switches the corresponding process off.
    """

    t1_alice: float = 250e-6
    t1_bob: float = 325e-6
    t2_alice: float = 375e-6
    t2_bob: float = 475e-6
    t1_qb: float = 75e-6
    t2_qb: float = 30e-6
    kerr_alice: float = TWO_PI * 6e3
    kerr_bob: float = TWO_PI * 4e3
    chi_qb_bob: float = TWO_PI * 1.26e6
    thermal_alice: float = 0.005
    thermal_bob: float = 0.005
    thermal_qb: float = 0.02
    bs_heating: float = 0.01
    cps_phase_error: float = 0.02
    rotation_error: float = 0.01
    readout_error_a: float = 0.0
    readout_error_b: float = 0.0

    def __post_init__(self) -> None:
        for name in ("t1_alice", "t1_bob", "t2_alice", "t2_bob", "t1_qb", "t2_qb"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for t1_name, t2_name in (
            ("t1_alice", "t2_alice"),
            ("t1_bob", "t2_bob"),
            ("t1_qb", "t2_qb"),
        ):
            t1, t2 = getattr(self, t1_name), getattr(self, t2_name)
            if not math.isinf(t2) and t2 > 2 * t1 * (1 + 1e-12):
                raise ValueError(f"{t2_name}={t2} exceeds 2*{t1_name}={2 * t1}")
        for name in ("thermal_alice", "thermal_bob", "thermal_qb"):
            if not 0 <= getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in [0, 1), got {getattr(self, name)}")
        for name in ("bs_heating", "readout_error_a", "readout_error_b"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        if self.chi_qb_bob < 0:
            raise ValueError(f"chi_qb_bob must be >= 0, got {self.chi_qb_bob}")

    @classmethod
    def noiseless(cls, chi_qb_bob: float = TWO_PI * 1.26e6) -> "NoiseModel":
        inf = math.inf
        return cls(
            t1_alice=inf, t1_bob=inf, t2_alice=inf, t2_bob=inf, t1_qb=inf, t2_qb=inf,
            kerr_alice=0.0, kerr_bob=0.0, chi_qb_bob=chi_qb_bob,
            thermal_alice=0.0, thermal_bob=0.0, thermal_qb=0.0,
            bs_heating=0.0, cps_phase_error=0.0, rotation_error=0.0,
            readout_error_a=0.0, readout_error_b=0.0,
        )

    def only(self, mechanism: str) -> "NoiseModel":
        """Copy with a single error mechanism switched on"""
        if mechanism == "all":
            return self
        if mechanism not in MECHANISMS:
            raise ValueError(f"Unknown mechanism '{mechanism}'. Available: {BUDGET_ROWS}")
        base = NoiseModel.noiseless(self.chi_qb_bob)
        if mechanism == "qc_heating":
            return replace(base, bs_heating=self.bs_heating)
        if mechanism == "photon_loss":
            return replace(
                base,
                t1_alice=self.t1_alice, t2_alice=2 * self.t1_alice,
                t1_bob=self.t1_bob, t2_bob=2 * self.t1_bob,
                thermal_alice=self.thermal_alice, thermal_bob=self.thermal_bob,
            )
        if mechanism == "cavity_dephasing":
            gphi_a = pure_dephasing_rate(self.t1_alice, self.t2_alice)
            gphi_b = pure_dephasing_rate(self.t1_bob, self.t2_bob)
            return replace(
                base,
                t2_alice=1 / gphi_a if gphi_a > 0 else math.inf,
                t2_bob=1 / gphi_b if gphi_b > 0 else math.inf,
            )
        if mechanism == "self_kerr":
            return replace(base, kerr_alice=self.kerr_alice, kerr_bob=self.kerr_bob)
        if mechanism == "cps_phase":
            return replace(base, cps_phase_error=self.cps_phase_error)
        if mechanism == "ancilla_excitation":
            return replace(base, rotation_error=self.rotation_error)
        return replace(
            base, t1_qb=self.t1_qb, t2_qb=self.t2_qb, thermal_qb=self.thermal_qb
        )

    def mode_parameters(self, label: str) -> Tuple[float, float, float]:
        """(T1, T2, thermal population) of a mode"""
        if label == ANCILLA:
            return self.t1_qb, self.t2_qb, self.thermal_qb
        if label == ALICE:
            return self.t1_alice, self.t2_alice, self.thermal_alice
        return self.t1_bob, self.t2_bob, self.thermal_bob

    @property
    def is_dissipative(self) -> bool:
        rates = [
            _rate(t)
            for t in (self.t1_alice, self.t1_bob, self.t2_alice, self.t2_bob,
                      self.t1_qb, self.t2_qb)
        ]
        return any(r > 0 for r in rates) or self.bs_heating > 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            key: (None if isinstance(value, float) and math.isinf(value) else value)
            for key, value in self.__dict__.items()
        }


# ---------------------------------------------------------------------------
# Hamiltonians and collapse operators
# ---------------------------------------------------------------------------


def _sparse(matrix: Union[Operator, np.ndarray, sp.spmatrix]) -> sp.csr_matrix:
    if isinstance(matrix, Operator):
        matrix = matrix.matrix
    return sp.csr_matrix(matrix, dtype=complex)


def _row_norm(matrix: sp.spmatrix) -> float:
    if matrix.nnz == 0:
        return 0.0
    return float(abs(matrix).sum(axis=1).max())


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """H(t) = static + sum_k f_k(t) H_k, stored sparse"""

    space: Space
    static: sp.csr_matrix
    terms: Tuple[Tuple[sp.csr_matrix, Callable[[float], complex]], ...] = ()
    drive_frequency: float = 0.0

    @classmethod
    def constant(cls, operator: Operator) -> "Hamiltonian":
        if not operator.is_hermitian(1e-9):
            raise ValueError(
                f"Hamiltonian is not Hermitian (residual {operator.hermiticity_residual():.2e})"
            )
        return cls(operator.space, _sparse(operator))

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    @property
    def is_static(self) -> bool:
        return not self.terms

    def at(self, t: float) -> sp.csr_matrix:
        if not self.terms:
            return self.static
        total = self.static.copy()
        for matrix, coefficient in self.terms:
            total = total + coefficient(t) * matrix
        return total.tocsr()

    def frequency_scale(self) -> float:
        """Upper bound on the angular frequencies in H(t)"""
        return (
            _row_norm(self.static)
            + sum(_row_norm(m) for m, _ in self.terms)
            + abs(self.drive_frequency)
        )

    def __add__(self, other: "Hamiltonian") -> "Hamiltonian":
        if self.space != other.space:
            raise SpaceMismatch("Hamiltonians act on different spaces")
        return Hamiltonian(
            self.space,
            (self.static + other.static).tocsr(),
            self.terms + other.terms,
            max(abs(self.drive_frequency), abs(other.drive_frequency)),
        )


def collapse_operators(noise: NoiseModel, spaces: Space) -> List[sp.csr_matrix]:
    """
    Lindblad operators for relaxation, thermal excitation and pure dephasing

    Pure dephasing uses sqrt(2 gamma_phi) n, so coherences between neighbouring
    levels decay at gamma_phi and total coherence at 1/T2.
    """
    spaces = as_space(spaces)
    ops: List[sp.csr_matrix] = []
    for mode in spaces:
        t1, t2, thermal = noise.mode_parameters(mode.label)
        gamma = _rate(t1)
        gamma_phi = pure_dephasing_rate(t1, t2)
        lower = embed(annihilation(mode), spaces).matrix
        if gamma > 0:
            ops.append(_sparse(math.sqrt(gamma * (1 + thermal)) * lower))
            if thermal > 0:
                ops.append(_sparse(math.sqrt(gamma * thermal) * lower.conj().T))
        if gamma_phi > 0:
            ops.append(_sparse(math.sqrt(2 * gamma_phi) * embed(number(mode), spaces).matrix))
    return ops


def kerr_hamiltonian(kerr_a: float, kerr_b: float, spaces: Space) -> Operator:
    """(K_A/2) n_A(n_A-1) + (K_B/2) n_B(n_B-1), the generator of kerr_unitary"""
    spaces = as_space(spaces)
    total = np.zeros((space_dim(spaces),) * 2, dtype=complex)
    for label, kerr in ((ALICE, kerr_a), (BOB, kerr_b)):
        if kerr == 0:
            continue
        mode = find_mode(spaces, label)
        n = np.arange(mode.cutoff, dtype=float)
        local = Operator(np.diag(0.5 * kerr * n * (n - 1)), (mode,))
        total += embed(local, spaces).matrix
    return Operator(total, spaces)


def kerr_unitary(
    kerr_a: float, kerr_b: float, t: float, spaces: Optional[Space] = None
) -> Operator:
    """
    Self-Kerr evolution exp(-i t (K_A/2) n_A(n_A-1)) x exp(-i t (K_B/2) n_B(n_B-1))

    Args:
        kerr_a: Alice self-Kerr in rad/s
        kerr_b: Bob self-Kerr in rad/s
        t: Evolution time in seconds, >= 0
        spaces: Spaces containing Alice and Bob, cutoff 8 cavities by default
    """
    if t < 0:
        raise ValueError(f"Kerr evolution time must be >= 0, got {t}")
    spaces = as_space(spaces or canonical_spaces(8, 8, with_ancilla=False))
    phases = np.diag(kerr_hamiltonian(kerr_a, kerr_b, spaces).matrix).real
    return Operator(np.diag(np.exp(-1j * t * phases)), spaces)


def gate_hamiltonian(
    gate: GateSpec,
    spaces: Space,
    noise: Optional[NoiseModel] = None,
    duration: Optional[float] = None,
) -> Operator:
    """
    Constant Hamiltonian H with exp(-i H duration) equal to the gate unitary

    CPS phase and rotation-angle miscalibrations of `noise` scale the
    corresponding generators by (1 + error).
    """
    duration = gate.duration if duration is None else duration
    if duration <= 0:
        raise ValueError(f"Gate '{gate.label or gate.kind}' needs a positive duration")
    spaces = as_space(spaces)
    cps_error = noise.cps_phase_error if noise else 0.0
    rotation_error = noise.rotation_error if noise else 0.0

    if gate.kind == "beamsplitter":
        pair = (find_mode(spaces, gate.modes[0]), find_mode(spaces, gate.modes[1]))
        a = embed(annihilation(pair[0]), spaces).matrix
        b = embed(annihilation(pair[1]), spaces).matrix
        generator = np.exp(1j * gate.phi) * a.conj().T @ b
        generator = generator + generator.conj().T
        return Operator(gate.theta / duration * generator, spaces)
    if gate.kind == "cps":
        ancilla = find_mode(spaces, ANCILLA)
        cavity = find_mode(spaces, gate.target)
        excited = np.diag([0.0, 1.0])
        local = Operator(np.kron(excited, number(cavity).matrix), (ancilla, cavity))
        rate = math.pi * (1 + cps_error) / duration
        return Operator(-rate * embed(local, spaces).matrix, spaces)
    if gate.kind == "rotation":
        ancilla = find_mode(spaces, ANCILLA)
        if gate.axis == "H":
            generator = rotation_matrix("H", 0.0) - np.eye(2)
            scale = math.pi * (1 + rotation_error) / (2 * duration)
        else:
            generator = 1j * rotation_matrix(gate.axis, math.pi)
            scale = gate.theta * (1 + rotation_error) / (2 * duration)
        return Operator(scale * embed(Operator(generator, (ancilla,)), spaces).matrix, spaces)
    if gate.kind == "swap":
        local = swap_operator(find_mode(spaces, gate.modes[0]), find_mode(spaces, gate.modes[1]))
        generator = embed(local, spaces).matrix - np.eye(space_dim(spaces))
        return Operator(math.pi / (2 * duration) * generator, spaces)
    unitary = gate_unitary(gate, spaces).matrix
    generator = 1j * la.logm(unitary) / duration
    return Operator((generator + generator.conj().T) / 2, spaces)


def driven_bs_hamiltonian(
    g: complex,
    delta: float,
    spaces: Space,
    chi: float = 0.0,
    resonant_branch: str = "e",
) -> Hamiltonian:
    """
    Parametrically driven beamsplitter g e^{i delta t} a b^dag + h.c.

    Without an ancilla in `spaces` the detuning is `delta`. With an ancilla the
    drive is branch conditioned: the resonant branch sees `delta` and the other
    branch `delta - chi`.

    Args:
        g: Drive-induced coupling in rad/s, nonzero
        delta: Drive detuning in rad/s
        spaces: Mode spaces containing Alice and Bob
        chi: Dispersive shift separating the two ancilla branches
        resonant_branch: 'e' or 'g'
    """
    if g == 0:
        raise ValueError("Beamsplitter coupling g must be nonzero")
    if resonant_branch not in BRANCHES:
        raise ValueError(f"resonant_branch must be one of {BRANCHES}, got '{resonant_branch}'")
    spaces = as_space(spaces)
    a = embed(annihilation(find_mode(spaces, ALICE)), spaces).matrix
    b = embed(annihilation(find_mode(spaces, BOB)), spaces).matrix
    hop = a @ b.conj().T

    if any(s.label == ANCILLA for s in spaces):
        projectors = {}
        ancilla = find_mode(spaces, ANCILLA)
        for index, branch in enumerate(BRANCHES):
            proj = np.zeros((2, 2))
            proj[index, index] = 1.0
            projectors[branch] = embed(Operator(proj, (ancilla,)), spaces).matrix
        detunings = {
            branch: delta if branch == resonant_branch else delta - chi
            for branch in BRANCHES
        }
        pieces = [(projectors[k] @ hop, detunings[k]) for k in BRANCHES]
    else:
        pieces = [(hop, delta)]

    terms: List[Tuple[sp.csr_matrix, Callable[[float], complex]]] = []
    for matrix, detuning in pieces:
        forward = _sparse(g * matrix)
        backward = _sparse(np.conj(g) * matrix.conj().T)
        terms.append((forward, _phase(detuning)))
        terms.append((backward, _phase(-detuning)))
    drive = max(abs(d) for _, d in pieces)
    zero = sp.csr_matrix(forward.shape, dtype=complex)
    return Hamiltonian(spaces, zero, tuple(terms), drive)


def _phase(detuning: float) -> Callable[[float], complex]:
    def coefficient(t: float) -> complex:
        return complex(np.exp(1j * detuning * t))

    return coefficient


def rotating_frame_bs_hamiltonian(g: complex, delta: float, spaces: Space) -> Operator:
    """
    Time-independent form g a b^dag + g* a^dag b - delta n_A

    Equal to the driven beamsplitter in the frame rotating with exp(-i delta t n_A),
    which leaves photon-number populations unchanged.
    """
    spaces = as_space(spaces)
    a = embed(annihilation(find_mode(spaces, ALICE)), spaces).matrix
    b = embed(annihilation(find_mode(spaces, BOB)), spaces).matrix
    hop = g * a @ b.conj().T
    n_a = a.conj().T @ a
    return Operator(hop + hop.conj().T - delta * n_a, spaces)


# ---------------------------------------------------------------------------
# Lindblad integration
# ---------------------------------------------------------------------------


def _left(op: sp.spmatrix, batch: np.ndarray) -> np.ndarray:
    count, dim, _ = batch.shape
    flat = batch.transpose(1, 0, 2).reshape(dim, count * dim)
    return np.asarray(op @ flat).reshape(dim, count, dim).transpose(1, 0, 2)


def _right(batch: np.ndarray, op: sp.spmatrix) -> np.ndarray:
    count, dim, _ = batch.shape
    flat = batch.reshape(count * dim, dim)
    return np.asarray(op.T @ flat.T).T.reshape(count, dim, dim)


class _LindbladRHS:
    """d rho/dt = -i (H_eff rho - rho H_eff^dag) + sum_k L_k rho L_k^dag"""

    def __init__(self, hamiltonian: Hamiltonian, collapse: Sequence[sp.spmatrix]) -> None:
        self.hamiltonian = hamiltonian
        self.collapse = [sp.csr_matrix(c) for c in collapse]
        self.collapse_dag = [c.conj().T.tocsr() for c in self.collapse]
        loss = sp.csr_matrix((hamiltonian.dim, hamiltonian.dim), dtype=complex)
        for c, c_dag in zip(self.collapse, self.collapse_dag):
            loss = loss + c_dag @ c
        self.damping = (-0.5j * loss).tocsr()
        self._static_eff = (hamiltonian.static + self.damping).tocsr() \
            if hamiltonian.is_static else None

    def frequency_scale(self) -> float:
        return self.hamiltonian.frequency_scale() + _row_norm(self.damping)

    def __call__(self, t: float, batch: np.ndarray) -> np.ndarray:
        h_eff = self._static_eff
        if h_eff is None:
            h_eff = (self.hamiltonian.at(t) + self.damping).tocsr()
        out = -1j * (_left(h_eff, batch) - _right(batch, h_eff.conj().T.tocsr()))
        for c, c_dag in zip(self.collapse, self.collapse_dag):
            out += _right(_left(c, batch), c_dag)
        return out


def _rk4_step(rhs: _LindbladRHS, batch: np.ndarray, t: float, h: float) -> np.ndarray:
    k1 = rhs(t, batch)
    k2 = rhs(t + h / 2, batch + (h / 2) * k1)
    k3 = rhs(t + h / 2, batch + (h / 2) * k2)
    k4 = rhs(t + h, batch + h * k3)
    return batch + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def auto_step(duration: float, frequency_scale: float) -> float:
    """dt = min(duration / 200, 1 / (50 f_max)) with f_max in Hz"""
    dt = duration / STEPS_PER_GATE
    if frequency_scale > 0:
        dt = min(dt, TWO_PI / (STEPS_PER_PERIOD * frequency_scale))
    return dt


def _integrate(
    rhs: _LindbladRHS,
    batch: np.ndarray,
    t0: float,
    duration: float,
    dt: Optional[float] = None,
) -> Tuple[np.ndarray, int]:
    """
    Fixed-step RK4 from t0 to t0 + duration

    The first step is taken twice with step doubling; a discrepancy above
    STEP_ERROR_TOL raises StepTooLarge.
    """
    if duration <= 0:
        return batch, 0
    dt = dt or auto_step(duration, rhs.frequency_scale())
    n_steps = max(1, int(math.ceil(duration / dt - 1e-9)))
    h = duration / n_steps

    full = _rk4_step(rhs, batch, t0, h)
    half = _rk4_step(rhs, _rk4_step(rhs, batch, t0, h / 2), t0 + h / 2, h / 2)
    error = float(np.max(np.abs(full - half)))
    if error > STEP_ERROR_TOL:
        raise StepTooLarge(
            f"Local error estimate {error:.2e} exceeds {STEP_ERROR_TOL:g} (dt={h:.3e}s)"
        )
    state = half
    for step in range(1, n_steps):
        state = _rk4_step(rhs, state, t0 + step * h, h)
    return state, n_steps


def _as_hamiltonian(h: Union[Operator, Hamiltonian]) -> Hamiltonian:
    if isinstance(h, Hamiltonian):
        return h
    return Hamiltonian.constant(h)


def _collapse_list(ops: Iterable[Union[Operator, sp.spmatrix, np.ndarray]]) -> List[sp.csr_matrix]:
    return [_sparse(op) for op in ops]


def _check_trace(before: np.ndarray, after: np.ndarray, context: str) -> None:
    drift = float(np.max(np.abs(
        np.trace(after, axis1=1, axis2=2) - np.trace(before, axis1=1, axis2=2)
    ), initial=0.0))
    if drift > TRACE_DRIFT_TOL:
        logger.warning("Trace drift %.2e during %s", drift, context)


def lindblad_evolve(
    rho: State,
    h: Union[Operator, Hamiltonian],
    collapse_ops: Sequence[Union[Operator, sp.spmatrix, np.ndarray]],
    t: float,
    dt: Optional[float] = None,
) -> DensityMatrix:
    """
    Integrate d rho/dt = -i[H, rho] + sum D[L] rho for a time t

    Args:
        rho: Initial state
        h: Hermitian Operator or time-dependent Hamiltonian on the state space
        collapse_ops: Lindblad operators
        t: Evolution time in seconds
        dt: Fixed step; must not exceed t/50. Chosen automatically when omitted

    Raises:
        StepTooLarge: If the local error estimate exceeds 1e-6
    """
    rho = as_density(rho)
    hamiltonian = _as_hamiltonian(h)
    if hamiltonian.space != rho.space:
        raise SpaceMismatch("Hamiltonian and state act on different spaces")
    if t < 0:
        raise ValueError(f"Evolution time must be >= 0, got {t}")
    if dt is not None and t > 0 and dt > t / MIN_STEPS_PER_ENTRY:
        raise ValueError(f"Step {dt} exceeds duration/{MIN_STEPS_PER_ENTRY} for t={t}")
    rhs = _LindbladRHS(hamiltonian, _collapse_list(collapse_ops))
    batch = rho.matrix[np.newaxis].copy()
    out, steps = _integrate(rhs, batch, 0.0, t, dt)
    _check_trace(batch, out, "lindblad_evolve")
    logger.debug("Lindblad evolution over %.3e s in %d steps", t, steps)
    return DensityMatrix(out[0], rho.space)


def lindblad_trajectory(
    rho: State,
    h: Union[Operator, Hamiltonian],
    collapse_ops: Sequence[Union[Operator, sp.spmatrix, np.ndarray]],
    times: Sequence[float],
    dt: Optional[float] = None,
) -> List[DensityMatrix]:
    """States at each of the non-decreasing `times`, starting from t=0"""
    rho = as_density(rho)
    rhs = _LindbladRHS(_as_hamiltonian(h), _collapse_list(collapse_ops))
    batch = rho.matrix[np.newaxis].copy()
    states = []
    current = 0.0
    for time in times:
        if time < current:
            raise ValueError("Trajectory times must be non-decreasing and >= 0")
        batch, _ = _integrate(rhs, batch, current, time - current, dt)
        current = time
        states.append(DensityMatrix(batch[0], rho.space))
    return states


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Channel:
    """
    Linear map on density matrices stored as a superoperator

    The superoperator uses row-major vectorisation (vec(rho) = rho.ravel()) and
    has shape (d_out^2, k^2). When `input_isometry` W (d_in x k) is set, the
    channel is defined on operators W X W^dag and acts on the k x k block X;
    otherwise k = d_in.
    """

    superop: np.ndarray
    space_in: Space
    space_out: Space
    input_isometry: Optional[np.ndarray] = None
    trace_preserving: bool = True
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        space_in, space_out = as_space(self.space_in), as_space(self.space_out)
        superop = np.asarray(self.superop, dtype=complex)
        k = self.input_isometry.shape[1] if self.input_isometry is not None \
            else space_dim(space_in)
        expected = (space_dim(space_out) ** 2, k * k)
        if superop.shape != expected:
            raise SpaceMismatch(f"Superoperator shape {superop.shape}, expected {expected}")
        if self.input_isometry is not None and \
                self.input_isometry.shape[0] != space_dim(space_in):
            raise SpaceMismatch("Input isometry does not match the input space")
        object.__setattr__(self, "superop", superop)
        object.__setattr__(self, "space_in", space_in)
        object.__setattr__(self, "space_out", space_out)

    @property
    def dim_in(self) -> int:
        if self.input_isometry is not None:
            return int(self.input_isometry.shape[1])
        return space_dim(self.space_in)

    @property
    def dim_out(self) -> int:
        return space_dim(self.space_out)

    @classmethod
    def from_unitary(cls, unitary: Operator) -> "Channel":
        u = unitary.matrix
        return cls(np.kron(u, u.conj()), unitary.space, unitary.space)

    @classmethod
    def identity(cls, space: Space) -> "Channel":
        dim = space_dim(space)
        return cls(np.eye(dim * dim), space, space)

    @classmethod
    def from_kraus(
        cls, kraus: Sequence[np.ndarray], space_in: Space, space_out: Optional[Space] = None
    ) -> "Channel":
        superop = sum(np.kron(k, np.conj(k)) for k in kraus)
        space_out = space_in if space_out is None else space_out
        dim_in = space_dim(space_in)
        completeness = sum(np.conj(k).T @ k for k in kraus)
        tp = bool(np.allclose(completeness, np.eye(dim_in), atol=1e-8))
        return cls(np.asarray(superop), space_in, space_out, trace_preserving=tp)

    def apply_matrix(self, matrix: np.ndarray) -> np.ndarray:
        """Image of an arbitrary operator (not necessarily a state)"""
        x = np.asarray(matrix, dtype=complex)
        if self.input_isometry is not None:
            w = self.input_isometry
            block = w.conj().T @ x @ w
            if np.max(np.abs(w @ block @ w.conj().T - x), initial=0.0) > 1e-8:
                raise SpaceMismatch("Input operator lies outside the channel's input subspace")
            x = block
        out = self.superop @ x.ravel()
        return out.reshape(self.dim_out, self.dim_out)

    def apply(self, rho: State) -> DensityMatrix:
        rho = as_density(rho)
        if rho.space != self.space_in:
            raise SpaceMismatch("State space does not match channel input")
        return DensityMatrix(self.apply_matrix(rho.matrix), self.space_out)

    def compose(self, after: "Channel") -> "Channel":
        """Channel applying self first and then `after`"""
        if after.input_isometry is not None or after.space_in != self.space_out:
            raise SpaceMismatch("Channels cannot be composed")
        return Channel(
            after.superop @ self.superop,
            self.space_in,
            after.space_out,
            self.input_isometry,
            self.trace_preserving and after.trace_preserving,
        )

    def choi(self) -> np.ndarray:
        """sum_ij |i><j| x E(|i><j|) over the input basis"""
        k, d = self.dim_in, self.dim_out
        return self.superop.reshape(d, d, k, k).transpose(2, 0, 3, 1).reshape(k * d, k * d)

    def cp_negativity(self) -> float:
        choi = self.choi()
        smallest = float(la.eigvalsh((choi + choi.conj().T) / 2)[0])
        return max(0.0, -smallest)

    def trace_error(self) -> float:
        """max |Tr E(|i><j|) - delta_ij| over the input basis"""
        k, d = self.dim_in, self.dim_out
        traces = np.trace(self.superop.reshape(d, d, k, k), axis1=0, axis2=1)
        return float(np.max(np.abs(traces - np.eye(k))))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
            "trace_preserving": self.trace_preserving,
            "re": self.superop.real.tolist(),
            "im": self.superop.imag.tolist(),
            "metadata": self.metadata,
        }


def check_complete_positivity(channel: Channel) -> float:
    """
    Choi negativity of a channel

    Raises:
        CPViolation: If the negativity exceeds 1e-6
    """
    negativity = channel.cp_negativity()
    if negativity > CP_TOL:
        raise CPViolation(f"Choi matrix negativity {negativity:.2e} exceeds {CP_TOL:g}")
    if negativity > CP_WARN_TOL:
        logger.warning("Choi matrix negativity %.2e above %.0e", negativity, CP_WARN_TOL)
    return negativity


# ---------------------------------------------------------------------------
# Pulse schedules and noisy circuits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered (gate, duration) entries with an optional fixed integrator step"""

    entries: Tuple[Tuple[GateSpec, float], ...]
    dt: Optional[float] = None

    def __post_init__(self) -> None:
        entries = tuple((gate, float(duration)) for gate, duration in self.entries)
        for gate, duration in entries:
            if duration < 0:
                raise ValueError(f"Negative duration for gate '{gate.label or gate.kind}'")
            if self.dt is not None and duration > 0 and \
                    self.dt > duration / MIN_STEPS_PER_ENTRY * (1 + 1e-12):
                raise ValueError(
                    f"Step {self.dt} exceeds duration/{MIN_STEPS_PER_ENTRY} for "
                    f"'{gate.label or gate.kind}' ({duration} s)"
                )
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_circuit(cls, circuit: Circuit, dt: Optional[float] = None) -> "PulseSchedule":
        return cls(tuple((gate, gate.duration) for gate in circuit.gates), dt)

    @property
    def total_duration(self) -> float:
        return float(sum(duration for _, duration in self.entries))

    def exposure_window(self) -> Optional[Tuple[int, int]]:
        """Entries from the first to the last ancilla rotation"""
        indices = [i for i, (gate, _) in enumerate(self.entries) if gate.kind == "rotation"]
        if not indices:
            return None
        return indices[0], indices[-1]

    def ancilla_exposure(self) -> float:
        """Time the ancilla may spend away from |g>"""
        window = self.exposure_window()
        if window is None:
            return 0.0
        return float(sum(d for _, d in self.entries[window[0]: window[1] + 1]))


@dataclass
class ExposureCounter:
    """Instrumentation filled while a schedule is evolved"""

    exposure: float = 0.0
    steps: int = 0
    gates: int = 0


def _check_schedule(circuit: Circuit, schedule: PulseSchedule) -> None:
    if len(schedule.entries) != len(circuit.gates) or any(
        entry[0] is not gate for entry, gate in zip(schedule.entries, circuit.gates)
    ):
        raise ValueError("Pulse schedule does not cover the circuit gates in order")


def _depolarize_cavities(batch: np.ndarray, spaces: Space, probability: float) -> np.ndarray:
    """rho -> (1-p) rho + p Tr_cav(rho) x I/d_cav"""
    has_ancilla = spaces[0].label == ANCILLA
    d_anc = spaces[0].cutoff if has_ancilla else 1
    d_cav = batch.shape[1] // d_anc
    view = batch.reshape(batch.shape[0], d_anc, d_cav, d_anc, d_cav)
    reduced = np.einsum("bicjc->bij", view)
    mixed = np.einsum("bij,cd->bicjd", reduced, np.eye(d_cav) / d_cav)
    return (1 - probability) * batch + probability * mixed.reshape(batch.shape)


def _evolve_schedule(
    batch: np.ndarray,
    circuit: Circuit,
    noise: NoiseModel,
    schedule: PulseSchedule,
    counter: ExposureCounter,
) -> np.ndarray:
    spaces = circuit.spaces
    collapse = collapse_operators(noise, spaces)
    kerr = kerr_hamiltonian(noise.kerr_alice, noise.kerr_bob, spaces) \
        if (noise.kerr_alice or noise.kerr_bob) else None
    window = schedule.exposure_window()
    elapsed = 0.0

    for index, (gate, duration) in enumerate(schedule.entries):
        before = batch
        if duration == 0:
            u = gate_unitary(gate, spaces).matrix
            batch = u @ batch @ u.conj().T
        else:
            h = gate_hamiltonian(gate, spaces, noise, duration)
            if kerr is not None:
                h = h + kerr
            if collapse:
                rhs = _LindbladRHS(Hamiltonian.constant(h), collapse)
                batch, steps = _integrate(rhs, batch, elapsed, duration, schedule.dt)
                counter.steps += steps
            else:
                u = expm_matrix(h.matrix, -1j * duration)
                batch = u @ batch @ u.conj().T
        if gate.kind == "beamsplitter" and noise.bs_heating > 0:
            batch = _depolarize_cavities(batch, spaces, noise.bs_heating)
        _check_trace(before, batch, f"gate {index} ({gate.kind})")
        if window is not None and window[0] <= index <= window[1]:
            counter.exposure += duration
        counter.gates += 1
        elapsed += duration
    return batch


def _ancilla_state(excited: float) -> np.ndarray:
    return np.diag([1.0 - excited, excited]).astype(complex)


def _trace_ancilla(batch: np.ndarray, spaces: Space) -> np.ndarray:
    d_anc = spaces[0].cutoff
    d_cav = batch.shape[1] // d_anc
    view = batch.reshape(batch.shape[0], d_anc, d_cav, d_anc, d_cav)
    return np.einsum("baiaj->bij", view)


def evolve_circuit(
    circuit: Circuit,
    noise: NoiseModel,
    states: Sequence[State],
    schedule: Optional[PulseSchedule] = None,
    ancilla_excited: float = 0.0,
) -> Tuple[List[DensityMatrix], ExposureCounter]:
    """
    Evolve a batch of states through the noisy circuit

    States on the cavity spaces get the ancilla prepended in
    diag(1 - ancilla_excited, ancilla_excited) and are returned with the ancilla
    traced out; states on the full circuit space are returned in full.
    """
    schedule = schedule or PulseSchedule.from_circuit(circuit)
    _check_schedule(circuit, schedule)
    spaces = circuit.spaces
    has_ancilla = spaces[0].label == ANCILLA
    cavities = spaces[1:] if has_ancilla else spaces
    if not states:
        return [], ExposureCounter()

    densities = [as_density(s) for s in states]
    reduced_input = densities[0].space == cavities and has_ancilla
    for rho in densities:
        if rho.space != (cavities if reduced_input else spaces):
            raise SpaceMismatch("All states must share the circuit or cavity space")

    batch = np.stack([rho.matrix for rho in densities])
    if reduced_input:
        anc = _ancilla_state(ancilla_excited)
        batch = np.einsum("ij,bkl->bikjl", anc, batch).reshape(
            len(densities), space_dim(spaces), space_dim(spaces)
        )
    counter = ExposureCounter()
    out = _evolve_schedule(batch, circuit, noise, schedule, counter)
    if reduced_input:
        return [DensityMatrix(m, cavities) for m in _trace_ancilla(out, spaces)], counter
    return [DensityMatrix(m, spaces) for m in out], counter


def noisy_channel_of_circuit(
    circuit: Circuit,
    noise: NoiseModel,
    schedule: Optional[PulseSchedule] = None,
    input_isometry: Optional[np.ndarray] = None,
    trace_ancilla: bool = True,
    ancilla_excited: float = 0.0,
) -> Channel:
    """
    Channel of a compiled circuit under `noise`

    Each gate evolves under its Hamiltonian plus self-Kerr and the Lindblad
    operators of `noise`; beamsplitters are followed by the heating channel.
    Inputs are cavity operators (optionally restricted to the range of
    `input_isometry`) with the ancilla starting in |g>.

    Raises:
        StepTooLarge: If an integration step is too coarse
        CPViolation: If the Choi matrix is negative beyond 1e-6
    """
    schedule = schedule or PulseSchedule.from_circuit(circuit)
    _check_schedule(circuit, schedule)
    spaces = circuit.spaces
    has_ancilla = spaces[0].label == ANCILLA
    cavities = spaces[1:] if has_ancilla else spaces
    d_cav = space_dim(cavities)
    w = np.eye(d_cav, dtype=complex) if input_isometry is None \
        else np.asarray(input_isometry, dtype=complex)
    k = w.shape[1]

    basis = np.einsum("ai,bj->ijab", w, w.conj()).reshape(k * k, d_cav, d_cav)
    if has_ancilla:
        anc = _ancilla_state(ancilla_excited)
        batch = np.einsum("ij,bkl->bikjl", anc, basis).reshape(k * k, space_dim(spaces), -1)
    else:
        batch = basis
    counter = ExposureCounter()
    out = _evolve_schedule(batch, circuit, noise, schedule, counter)

    if has_ancilla and trace_ancilla:
        out = _trace_ancilla(out, spaces)
        space_out = cavities
    else:
        space_out = spaces

    channel = Channel(
        out.reshape(k * k, -1).T,
        cavities,
        space_out,
        None if input_isometry is None else w,
        metadata={
            "ancilla_exposure": counter.exposure,
            "integration_steps": counter.steps,
            "duration": schedule.total_duration,
        },
    )
    if channel.dim_in * channel.dim_out <= CHOI_CHECK_MAX_DIM:
        check_complete_positivity(channel)
    logger.debug(
        "Noisy channel: %d gates, exposure %.3e s, %d steps",
        counter.gates, counter.exposure, counter.steps,
    )
    return channel


# ---------------------------------------------------------------------------
# Conditional-SWAP spectroscopy
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectroscopyMap:
    """Transfer probability |0,1> -> |1,0> per ancilla branch on a detuning x duration grid"""

    detunings: np.ndarray
    durations: np.ndarray
    transfer: Dict[str, np.ndarray]
    resonant_branch: str
    coupling: float
    chi: float

    def superposition_map(self) -> np.ndarray:
        """Ancilla prepared in (|g> + |e>)/sqrt(2): equal-weight mixture of branches"""
        return 0.5 * (self.transfer["g"] + self.transfer["e"])

    def resonance_centers(self) -> Dict[str, float]:
        """Duration-averaged resonance position per branch (Hz), parabolic refinement"""
        centers = {}
        for branch, values in self.transfer.items():
            profile = values.mean(axis=1)
            peak = int(np.argmax(profile))
            center = float(self.detunings[peak])
            if 0 < peak < len(profile) - 1:
                y0, y1, y2 = profile[peak - 1: peak + 2]
                denom = y0 - 2 * y1 + y2
                if denom != 0:
                    step = float(self.detunings[peak + 1] - self.detunings[peak])
                    center += 0.5 * (y0 - y2) / denom * step
            centers[branch] = center
        return centers

    def separation(self) -> float:
        centers = self.resonance_centers()
        return abs(centers["e"] - centers["g"])

    def to_rows(self) -> List[Dict[str, float]]:
        rows = []
        for branch in BRANCHES:
            for i, detuning in enumerate(self.detunings):
                for j, duration in enumerate(self.durations):
                    rows.append({
                        "branch": branch,
                        "detuning_hz": float(detuning),
                        "duration_s": float(duration),
                        "transfer": float(self.transfer[branch][i, j]),
                    })
        return rows


def simulate_cswap_spectroscopy(
    drive_detuning_grid: Sequence[float],
    duration_grid: Sequence[float],
    noise: Optional[NoiseModel] = None,
    coupling: float = DEFAULT_DRIVE_COUPLING,
    resonant_branch: str = "e",
    cutoff: int = 2,
) -> SpectroscopyMap:
    """
    Chevron map of the branch-conditioned beamsplitter

    Args:
        drive_detuning_grid: Drive frequency offsets in Hz
        duration_grid: Drive durations in seconds
        noise: Cavity loss and dephasing during the drive; noiseless when None
        coupling: Drive-induced coupling g in rad/s
        resonant_branch: Ancilla state for which zero offset is resonant
        cutoff: Cavity cutoff

    Returns:
        SpectroscopyMap with transfer[branch] of shape (detunings, durations)
    """
    detunings = np.asarray(drive_detuning_grid, dtype=float)
    durations = np.asarray(duration_grid, dtype=float)
    if detunings.size == 0 or durations.size == 0:
        raise ValueError("Spectroscopy grids must be nonempty")
    if resonant_branch not in BRANCHES:
        raise ValueError(f"resonant_branch must be one of {BRANCHES}")
    if np.any(durations < 0):
        raise ValueError("Durations must be >= 0")
    chi = noise.chi_qb_bob if noise is not None else NoiseModel().chi_qb_bob

    spaces = canonical_spaces(cutoff, cutoff, with_ancilla=False)
    initial = ket(spaces, (0, 1))
    target = ket(spaces, (1, 0)).amplitudes
    collapse = collapse_operators(noise, spaces) if noise is not None else []
    order = np.argsort(durations)

    transfer = {}
    for branch in BRANCHES:
        values = np.zeros((detunings.size, durations.size))
        shift = 0.0 if branch == resonant_branch else chi
        for i, offset in enumerate(detunings):
            h = rotating_frame_bs_hamiltonian(coupling, TWO_PI * offset - shift, spaces)
            if collapse:
                states = lindblad_trajectory(initial, h, collapse, durations[order])
                for j, rho in zip(order, states):
                    values[i, j] = float(np.real(np.vdot(target, rho.matrix @ target)))
            else:
                w, v = la.eigh(h.matrix)
                coeffs = v.conj().T @ initial.amplitudes
                amps = (target.conj() @ v) * coeffs
                phases = np.exp(-1j * np.outer(durations, w))
                values[i] = np.abs(phases @ amps) ** 2
        transfer[branch] = values

    result = SpectroscopyMap(detunings, durations, transfer, resonant_branch, coupling, chi)
    logger.info(
        "Spectroscopy: resonance separation %.4f MHz", result.separation() / 1e6
    )
    return result


def driven_transfer(
    coupling: complex,
    delta: float,
    duration: float,
    noise: Optional[NoiseModel] = None,
    cutoff: int = 2,
) -> float:
    """
    |0,1> -> |1,0> population after `duration` under driven_bs_hamiltonian

    Lab-frame counterpart of one chevron pixel; delta is in rad/s.
    """
    spaces = canonical_spaces(cutoff, cutoff, with_ancilla=False)
    h = driven_bs_hamiltonian(coupling, delta, spaces)
    collapse = collapse_operators(noise, spaces) if noise is not None else []
    rho = lindblad_evolve(ket(spaces, (0, 1)), h, collapse, duration)
    target = ket(spaces, (1, 0)).amplitudes
    return float(np.real(np.vdot(target, rho.matrix @ target)))


# ---------------------------------------------------------------------------
# State preparation and measurement
# ---------------------------------------------------------------------------


def preparation_time(nbar: float, chi: float) -> float:
    """Minimum optimal-control preparation time nbar / chi (chi in rad/s)"""
    if chi <= 0:
        raise ValueError(f"Dispersive shift must be > 0, got {chi}")
    if nbar < 0:
        raise ValueError(f"Mean photon number must be >= 0, got {nbar}")
    return nbar / chi


def _amplitude_damping_kraus(cutoff: int, probability: float) -> List[np.ndarray]:
    kraus = []
    for k in range(cutoff):
        op = np.zeros((cutoff, cutoff))
        for n in range(k, cutoff):
            op[n - k, n] = math.sqrt(
                math.comb(n, k) * (1 - probability) ** (n - k) * probability ** k
            )
        kraus.append(op)
    return kraus


def _dephasing_kraus(cutoff: int, probability: float) -> List[np.ndarray]:
    kraus = [math.sqrt(1 - probability) * np.eye(cutoff)]
    if probability > 0:
        for n in range(cutoff):
            proj = np.zeros((cutoff, cutoff))
            proj[n, n] = math.sqrt(probability)
            kraus.append(proj)
    return kraus


def _apply_local_kraus(
    matrix: np.ndarray, dims: Sequence[int], index: int, kraus: Sequence[np.ndarray]
) -> np.ndarray:
    n = len(dims)
    view = matrix.reshape(tuple(dims) * 2)
    out = np.zeros_like(view)
    for k in kraus:
        tmp = np.moveaxis(np.tensordot(k, view, axes=([1], [index])), 0, index)
        out += np.moveaxis(
            np.tensordot(tmp, k.conj().T, axes=([n + index], [0])), -1, n + index
        )
    return out.reshape(matrix.shape)


@dataclass(frozen=True)
class SpamModel:
    """
    State-preparation and measurement errors

    Preparation acts per cavity as amplitude damping (prep_loss) followed by
    dephasing (prep_dephasing); the ancilla starts in |e> with probability
    ancilla_init_error. Readout flips each parity outcome independently.
    """

    prep_loss: float = 0.005
    prep_dephasing: float = 0.02
    ancilla_init_error: float = 0.005
    readout_error_a: float = 0.01
    readout_error_b: float = 0.015
    enabled: bool = True

    def __post_init__(self) -> None:
        for name in ("prep_loss", "prep_dephasing", "ancilla_init_error",
                     "readout_error_a", "readout_error_b"):
            value = getattr(self, name)
            if not 0 <= value <= 0.5:
                raise ValueError(f"{name} must lie in [0, 0.5], got {value}")

    @classmethod
    def none(cls) -> "SpamModel":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, enabled=False)

    def readout_errors(self) -> Tuple[float, float]:
        if not self.enabled:
            return 0.0, 0.0
        return self.readout_error_a, self.readout_error_b

    def contrast(self) -> float:
        """Joint-parity contrast (1 - 2 e_A)(1 - 2 e_B)"""
        e_a, e_b = self.readout_errors()
        return (1 - 2 * e_a) * (1 - 2 * e_b)

    def ancilla_excited(self) -> float:
        return self.ancilla_init_error if self.enabled else 0.0

    def prepare(self, rho_ab: State) -> DensityMatrix:
        """Apply the per-cavity preparation channel to a state on (Alice, Bob)"""
        rho = as_density(rho_ab)
        if not self.enabled:
            return rho
        matrix = rho.matrix
        for index, mode in enumerate(rho.space):
            if mode.label == ANCILLA:
                continue
            if self.prep_loss > 0:
                matrix = _apply_local_kraus(
                    matrix, rho.dims, index, _amplitude_damping_kraus(mode.cutoff, self.prep_loss)
                )
            if self.prep_dephasing > 0:
                matrix = _apply_local_kraus(
                    matrix, rho.dims, index, _dephasing_kraus(mode.cutoff, self.prep_dephasing)
                )
        return DensityMatrix(matrix, rho.space)

    @staticmethod
    def expected_prep_overlap(
        t_prep: Union[float, Tuple[float, float]], t2_a: float, t2_b: float
    ) -> float:
        """(1 - t_A/T2_A)(1 - t_B/T2_B)"""
        t_a, t_b = (t_prep, t_prep) if isinstance(t_prep, (int, float)) else t_prep
        return (1 - t_a / t2_a) * (1 - t_b / t2_b)

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def spam_budget(
    spam: SpamModel,
    encoding: LogicalEncoding,
    prep_t2: Tuple[float, float] = DEFAULT_PREP_T2,
    prep_chi: Tuple[float, float] = DEFAULT_PREP_CHI,
) -> List[Dict[str, Any]]:
    """
    Itemised SPAM infidelities for an encoding

    Rows: ancilla initialisation (two ancillas), cavity preparation (mean over
    the 16 tomography inputs), decoherence during the preparation pulses,
    readout, and the combined total.
    """
    init = 1 - (1 - spam.ancilla_excited()) ** 2
    fidelities = []
    for label in QPT_INPUT_LABELS:
        ideal = encode_two_qubit(encoding, label)
        fidelities.append(state_fidelity(spam.prepare(ideal), ideal))
    prep = 1 - float(np.mean(fidelities))
    nbar = float(np.mean(encoding.nbar))
    t_prep = (preparation_time(nbar, prep_chi[0]), preparation_time(nbar, prep_chi[1]))
    decoherence = 1 - SpamModel.expected_prep_overlap(t_prep, *prep_t2) if spam.enabled else 0.0
    e_a, e_b = spam.readout_errors()
    readout = 1 - (1 - e_a) * (1 - e_b)

    items = {
        "ancilla_initialization": init,
        "cavity_preparation": prep,
        "preparation_decoherence": decoherence,
        "readout": readout,
    }
    total = 1 - float(np.prod([1 - v for v in items.values()]))
    rows = [{"mechanism": k, "encoding": encoding.name, "infidelity": v} for k, v in items.items()]
    rows.append({"mechanism": "total", "encoding": encoding.name, "infidelity": total})
    return rows


# ---------------------------------------------------------------------------
# Error budget
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BudgetConfig:
    """Inputs of the operation error budget"""

    encoding: str = "binomial"
    noise: NoiseModel = field(default_factory=NoiseModel)
    exposure_time: float = DEFAULT_EXPOSURE
    kerr_time: float = DEFAULT_EXPOSURE
    theta_c: float = math.pi / 4
    mechanisms: Tuple[str, ...] = BUDGET_ROWS
    cutoff: Optional[int] = None
    encoding_params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        unknown = [m for m in self.mechanisms if m not in BUDGET_ROWS]
        if unknown:
            raise ValueError(f"Unknown budget mechanisms {unknown}. Available: {BUDGET_ROWS}")
        if self.exposure_time <= 0 or self.kerr_time <= 0:
            raise ValueError("Budget exposure and Kerr times must be > 0")


@dataclass(frozen=True)
class BudgetRow:
    mechanism: str
    encoding: str
    infidelity: float
    fidelity: float
    effective_time: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def effective_bs_duration(total_time: float, theta_c: float = math.pi / 4) -> float:
    """Beamsplitter duration making the whole eSWAP last `total_time`"""
    reference = compile_eswap(theta_c, canonical_spaces(2, 2), bs_duration=T_BS)
    other = sum(g.duration for g in reference.gates if g.kind != "beamsplitter")
    n_bs = sum(1 for g in reference.gates if g.kind == "beamsplitter")
    remaining = total_time - other
    if remaining <= 0:
        raise ValueError(
            f"Total time {total_time} s is shorter than the non-beamsplitter gates ({other} s)"
        )
    return remaining / n_bs


def _budget_fidelity(args: Tuple[BudgetConfig, str]) -> Tuple[str, float, float]:
    from .processtomo import run_qpt

    config, mechanism = args
    noise = config.noise.only(mechanism) if mechanism != "reference" \
        else NoiseModel.noiseless(config.noise.chi_qb_bob)
    total = config.kerr_time if mechanism == "self_kerr" else config.exposure_time
    encoding = make_encoding(config.encoding, config.encoding_params, config.cutoff)
    spaces = canonical_spaces(encoding.cutoff, encoding.cutoff)
    circuit = compile_eswap(
        config.theta_c, spaces, bs_duration=effective_bs_duration(total, config.theta_c)
    )
    report = run_qpt(circuit, encoding, mode="exact", noise=noise)
    logger.info("Budget %s/%s: process fidelity %.4f", config.encoding, mechanism,
                report.chi_fidelity)
    return mechanism, report.chi_fidelity, total


def error_budget(
    config: BudgetConfig,
    mapper: Callable[..., Iterable[Any]] = map,
) -> List[BudgetRow]:
    """
    Process infidelity caused by each mechanism in isolation and all together

    Each mechanism's infidelity is measured relative to the noiseless
    reference run of the same compiled circuit.

    Args:
        config: Budget inputs
        mapper: map-like callable used to evaluate mechanisms (e.g. Pool.map)
    """
    jobs = [(config, "reference")] + [(config, m) for m in config.mechanisms]
    results = list(mapper(_budget_fidelity, jobs))
    reference = results[0][1]
    rows = [
        BudgetRow(
            mechanism=mechanism,
            encoding=config.encoding,
            infidelity=max(0.0, reference - fidelity),
            fidelity=fidelity,
            effective_time=total,
        )
        for mechanism, fidelity, total in results[1:]
    ]
    return rows


def budget_total(rows: Sequence[BudgetRow]) -> float:
    """Sum of the isolated-mechanism infidelities"""
    return float(sum(r.infidelity for r in rows if r.mechanism != "all"))
