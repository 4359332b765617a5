"""
src/eswap_sim/encodings.py

Logical qubit encodings in a single cavity, two-qubit logical states,
logical Pauli correlators and direct fidelity estimation
"""

import logging
import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la

from .exceptions import EncodingUnsupported, SpaceMismatch, TruncationWarning
from .fockspace import (
    ALICE,
    BOB,
    DensityMatrix,
    ModeSpace,
    Operator,
    Space,
    State,
    StateVector,
    as_density,
    as_space,
    cavity_space,
    coherent_state,
    find_mode,
    fock_state,
    truncation_guard,
)

logger = logging.getLogger(__name__)

ENCODINGS = ("fock", "binomial", "coherent")
DEFAULT_ALPHA = 1.41
DEFAULT_CUTOFFS = {"fock": 3, "binomial": 9}
CORRELATOR_TOL = 1e-6

PAULI_LABELS = tuple(a + b for a in "IXYZ" for b in "IXYZ")
SWEEP_LABELS = ("II", "ZZ", "IZ", "ZI", "XY", "YX")

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_SQ2 = 1 / math.sqrt(2)
SINGLE_QUBIT_STATES = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([_SQ2, _SQ2], dtype=complex),
    "-": np.array([_SQ2, -_SQ2], dtype=complex),
    "+i": np.array([_SQ2, 1j * _SQ2], dtype=complex),
    "-i": np.array([_SQ2, -1j * _SQ2], dtype=complex),
}

# Informationally complete per-qubit inputs for process tomography
QPT_SINGLE_LABELS = ("0", "1", "+", "+i")
QPT_INPUT_LABELS: Tuple[Tuple[str, str], ...] = tuple(
    (a, b) for a in QPT_SINGLE_LABELS for b in QPT_SINGLE_LABELS
)

_TOKEN = re.compile(r"[+-]i|[01+-]")

LogicalLabel = Union[str, Tuple[str, str], Tuple[Tuple[float, float], Tuple[float, float]]]


@dataclass(frozen=True, eq=False)
class LogicalEncoding:
    """
    Pair of single-cavity codewords

    `basis` holds the orthonormal logical basis as columns; it equals the
    codewords for orthogonal encodings and the symmetric (Loewdin)
    orthonormalisation of {codeword0, codeword1} otherwise.
    """

    name: str
    codeword0: StateVector
    codeword1: StateVector
    orthogonalized: bool
    nbar: Tuple[float, float]
    params: Dict[str, Any] = field(default_factory=dict)
    basis: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.codeword0.space != self.codeword1.space:
            raise SpaceMismatch("Codewords must live in the same cavity space")
        if len(self.codeword0.space) != 1:
            raise SpaceMismatch("Codewords are single-cavity states")
        for word in (self.codeword0, self.codeword1):
            if abs(word.norm() - 1.0) > 1e-10:
                raise ValueError(f"Codeword of '{self.name}' is not normalized")
        if self.basis is None:
            basis = _loewdin_basis(self.codeword0.amplitudes, self.codeword1.amplitudes) \
                if self.orthogonalized else np.column_stack(
                    [self.codeword0.amplitudes, self.codeword1.amplitudes])
            basis.setflags(write=False)
            object.__setattr__(self, "basis", basis)

    @property
    def cutoff(self) -> int:
        return self.codeword0.space[0].cutoff

    @property
    def overlap(self) -> complex:
        return self.codeword0.overlap(self.codeword1)

    def codewords(self) -> np.ndarray:
        """Raw codewords as columns"""
        return np.column_stack([self.codeword0.amplitudes, self.codeword1.amplitudes])

    def padded(self, columns: np.ndarray, cutoff: int) -> np.ndarray:
        """Embed codeword columns into a cavity with another cutoff"""
        if cutoff >= self.cutoff:
            out = np.zeros((cutoff, columns.shape[1]), dtype=complex)
            out[: self.cutoff] = columns
            return out
        if np.max(np.abs(columns[cutoff:]), initial=0.0) > 1e-10:
            raise SpaceMismatch(
                f"Encoding '{self.name}' needs cutoff {self.cutoff}, space has {cutoff}"
            )
        return columns[:cutoff].copy()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "cutoff": self.cutoff,
            "orthogonalized": self.orthogonalized,
            "nbar": list(self.nbar),
            "params": self.params,
            "codeword0": {"re": self.codeword0.amplitudes.real.tolist(),
                          "im": self.codeword0.amplitudes.imag.tolist()},
            "codeword1": {"re": self.codeword1.amplitudes.real.tolist(),
                          "im": self.codeword1.amplitudes.imag.tolist()},
        }


def _loewdin_basis(word0: np.ndarray, word1: np.ndarray) -> np.ndarray:
    words = np.column_stack([word0, word1])
    gram = words.conj().T @ words
    values, vectors = la.eigh(gram)
    inv_sqrt = vectors @ np.diag(values ** -0.5) @ vectors.conj().T
    return words @ inv_sqrt


def _mean_photons(word: StateVector) -> float:
    n = np.arange(word.amplitudes.size)
    return float(np.sum(n * np.abs(word.amplitudes) ** 2))


def make_encoding(
    name: str, params: Optional[Mapping[str, Any]] = None, cutoff: Optional[int] = None
) -> LogicalEncoding:
    """
    Build a named encoding

    Args:
        name: 'fock', 'binomial' or 'coherent'
        params: Encoding parameters; 'alpha' for the coherent encoding
        cutoff: Cavity cutoff, defaults to the smallest adequate value

    Returns:
        LogicalEncoding with normalized codewords

    Raises:
        ValueError: If the name is unknown or the cutoff cannot hold the codewords
    """
    params = dict(params or {})
    if name not in ENCODINGS:
        raise ValueError(f"Unknown encoding '{name}'. Available: {ENCODINGS}")

    if name == "coherent":
        alpha = float(params.setdefault("alpha", DEFAULT_ALPHA))
        guard = truncation_guard(alpha)
        cutoff = cutoff or guard
        if cutoff < guard:
            warnings.warn(
                f"Cutoff {cutoff} below {guard} for coherent encoding alpha={alpha}",
                TruncationWarning,
                stacklevel=2,
            )
        space = cavity_space(cutoff)
        word0 = coherent_state(-alpha, space)
        word1 = coherent_state(alpha, space)
        orthogonalized = True
    elif name == "binomial":
        cutoff = cutoff or DEFAULT_CUTOFFS["binomial"]
        if cutoff < 5:
            raise ValueError(f"Binomial codewords need cutoff >= 5, got {cutoff}")
        if cutoff < 8:
            warnings.warn(
                f"Cutoff {cutoff} below 8 for binomial encoding", TruncationWarning,
                stacklevel=2,
            )
        space = cavity_space(cutoff)
        word0 = StateVector(
            (fock_state(0, space).amplitudes + fock_state(4, space).amplitudes) * _SQ2,
            space,
        )
        word1 = fock_state(2, space)
        orthogonalized = False
    else:
        cutoff = cutoff or DEFAULT_CUTOFFS["fock"]
        if cutoff < 2:
            raise ValueError(f"Fock encoding needs cutoff >= 2, got {cutoff}")
        space = cavity_space(cutoff)
        word0 = fock_state(0, space)
        word1 = fock_state(1, space)
        orthogonalized = False

    encoding = LogicalEncoding(
        name=name,
        codeword0=word0,
        codeword1=word1,
        orthogonalized=orthogonalized,
        nbar=(_mean_photons(word0), _mean_photons(word1)),
        params=params,
    )
    logger.debug(
        "Encoding %s: cutoff=%d nbar=%s overlap=%.3e",
        name, cutoff, encoding.nbar, abs(encoding.overlap),
    )
    return encoding


# ---------------------------------------------------------------------------
# Logical states
# ---------------------------------------------------------------------------


def parse_logical_label(label: Union[str, Sequence[str]]) -> Tuple[str, str]:
    """'0+i' -> ('0', '+i'); tuples pass through after validation"""
    if isinstance(label, str):
        tokens = _TOKEN.findall(label)
        if "".join(tokens) != label or len(tokens) != 2:
            raise ValueError(f"Cannot parse two-qubit logical label '{label}'")
    else:
        tokens = list(label)
    if len(tokens) != 2 or any(t not in SINGLE_QUBIT_STATES for t in tokens):
        raise ValueError(
            f"Logical label must name two of {tuple(SINGLE_QUBIT_STATES)}, got {label!r}"
        )
    return tokens[0], tokens[1]


def label_text(label: Tuple[str, str]) -> str:
    return "".join(label)


def bloch_amplitudes(theta: float, phi: float) -> np.ndarray:
    return np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])


def _qubit_amplitudes(entry: Any) -> np.ndarray:
    if isinstance(entry, str):
        return SINGLE_QUBIT_STATES[entry]
    theta, phi = entry
    return bloch_amplitudes(float(theta), float(phi))


def _word_columns(encoding: LogicalEncoding, basis: str) -> np.ndarray:
    if basis == "raw":
        return encoding.codewords()
    if basis == "orthonormal":
        return np.asarray(encoding.basis)
    raise ValueError(f"Unknown logical basis '{basis}'. Available: raw, orthonormal")


def logical_state(
    encoding: LogicalEncoding,
    amplitudes: np.ndarray,
    space: Optional[ModeSpace] = None,
    basis: str = "raw",
) -> StateVector:
    """c0 |codeword0> + c1 |codeword1>, normalized, in one cavity"""
    space = space or encoding.codeword0.space[0]
    columns = encoding.padded(_word_columns(encoding, basis), space.cutoff)
    return StateVector(columns @ np.asarray(amplitudes, dtype=complex), (space,)).normalized()


def encode_two_qubit(
    encoding: LogicalEncoding,
    label: LogicalLabel,
    spaces: Optional[Space] = None,
    basis: str = "raw",
) -> StateVector:
    """
    Product logical state on Alice x Bob

    `label` is a string such as '01' or '+i0', a pair of single-qubit labels,
    or a pair of Bloch angles ((theta_A, phi_A), (theta_B, phi_B)). Superpositions
    are formed from the raw codewords unless basis='orthonormal'.
    """
    if isinstance(label, str) or (
        isinstance(label, tuple) and all(isinstance(t, str) for t in label)
    ):
        entries: Sequence[Any] = parse_logical_label(label)  # type: ignore[arg-type]
    else:
        entries = list(label)
        if len(entries) != 2:
            raise ValueError("Bloch pair must have two entries")

    if spaces is None:
        spaces = (cavity_space(encoding.cutoff, ALICE), cavity_space(encoding.cutoff, BOB))
    spaces = as_space(spaces)
    alice = logical_state(encoding, _qubit_amplitudes(entries[0]), find_mode(spaces, ALICE), basis)
    bob = logical_state(encoding, _qubit_amplitudes(entries[1]), find_mode(spaces, BOB), basis)
    return StateVector(np.kron(alice.amplitudes, bob.amplitudes), (alice.space[0], bob.space[0]))


def encoder_isometry(
    encoding: LogicalEncoding, spaces: Space, basis: str = "orthonormal"
) -> np.ndarray:
    """Map from the 4-dim logical space into Alice x Bob"""
    spaces = as_space(spaces)
    if [s.label for s in spaces] != [ALICE, BOB]:
        raise SpaceMismatch("Encoder acts on (Alice, Bob) cavity spaces")
    columns = _word_columns(encoding, basis)
    return np.kron(
        encoding.padded(columns, spaces[0].cutoff), encoding.padded(columns, spaces[1].cutoff)
    )


# ---------------------------------------------------------------------------
# Logical Pauli observables
# ---------------------------------------------------------------------------


def two_qubit_pauli(label: str) -> np.ndarray:
    if label not in PAULI_LABELS:
        raise ValueError(f"Unknown two-qubit Pauli label '{label}'")
    return np.kron(PAULI_MATRICES[label[0]], PAULI_MATRICES[label[1]])


def logical_pauli_operators(
    encoding: LogicalEncoding, spaces: Optional[Space] = None
) -> Dict[str, Operator]:
    """
    The 16 logical Paulis embedded in Alice x Bob

    Built on the orthonormal logical basis; 'II' is the code-space projector.
    """
    if spaces is None:
        spaces = (cavity_space(encoding.cutoff, ALICE), cavity_space(encoding.cutoff, BOB))
    spaces = as_space(spaces)
    isometry = encoder_isometry(encoding, spaces)
    return {
        label: Operator(isometry @ two_qubit_pauli(label) @ isometry.conj().T, spaces)
        for label in PAULI_LABELS
    }


@dataclass(frozen=True)
class CorrelatorSet:
    """Expectation values of the 16 two-qubit logical Paulis"""

    values: Dict[str, float]

    def __post_init__(self) -> None:
        missing = set(PAULI_LABELS) - set(self.values)
        if missing:
            raise ValueError(f"Correlator set is missing labels {sorted(missing)}")
        for label, value in self.values.items():
            if not -1 - CORRELATOR_TOL <= value <= 1 + CORRELATOR_TOL:
                raise ValueError(f"Correlator <{label}> = {value} outside [-1, 1]")

    def __getitem__(self, label: str) -> float:
        return self.values[label]

    def as_array(self) -> np.ndarray:
        return np.array([self.values[label] for label in PAULI_LABELS])

    def to_dict(self) -> Dict[str, float]:
        return {label: float(self.values[label]) for label in PAULI_LABELS}


def logical_density(rho_ab: State, encoding: LogicalEncoding) -> np.ndarray:
    """4x4 projection of a cavity state onto the logical basis (trace <= 1)"""
    rho = as_density(rho_ab)
    isometry = encoder_isometry(encoding, rho.space)
    return isometry.conj().T @ rho.matrix @ isometry


def correlators_from_logical(rho_logical: np.ndarray) -> CorrelatorSet:
    return CorrelatorSet({
        label: float(np.real(np.trace(rho_logical @ two_qubit_pauli(label))))
        for label in PAULI_LABELS
    })


def correlators(rho_ab: State, encoding: LogicalEncoding) -> CorrelatorSet:
    """
    Tr(rho P_i x P_j) for all 16 logical Paulis

    Raises:
        SpaceMismatch: If rho does not live on (Alice, Bob)
    """
    return correlators_from_logical(logical_density(rho_ab, encoding))


def density_from_correlators(c: CorrelatorSet) -> np.ndarray:
    """Logical 4x4 density matrix with the given Pauli expectations"""
    return sum(c[label] * two_qubit_pauli(label) for label in PAULI_LABELS) / 4


def bloch_vectors(c: CorrelatorSet) -> Tuple[np.ndarray, np.ndarray]:
    """Single-qubit Bloch vectors of Alice and Bob, normalized by <II>"""
    norm = c["II"]
    if norm <= 0:
        raise ValueError("No population in the code space")
    alice = np.array([c["XI"], c["YI"], c["ZI"]]) / norm
    bob = np.array([c["IX"], c["IY"], c["IZ"]]) / norm
    return alice, bob


def direct_fidelity_estimate(c: CorrelatorSet) -> float:
    """1/4 (<II> - <XY> + <YX> - <ZZ>)"""
    return 0.25 * (c["II"] - c["XY"] + c["YX"] - c["ZZ"])


# ---------------------------------------------------------------------------
# Control-angle sweeps
# ---------------------------------------------------------------------------

SweepChannel = Callable[[float, State], State]


def ideal_eswap_channel(theta_c: float, state: State) -> State:
    """Apply exp(i theta_c SWAP) to a cavity state on (Alice, Bob)"""
    from .circuits import eswap_ideal

    unitary = eswap_ideal(theta_c, find_mode(state.space, ALICE), find_mode(state.space, BOB))
    if isinstance(state, StateVector):
        return unitary @ state
    u = unitary.matrix
    return DensityMatrix(u @ state.matrix @ u.conj().T, state.space)


def theta_sweep(
    encoding: LogicalEncoding,
    theta_list: Sequence[float],
    channel: Optional[SweepChannel] = None,
    input_label: LogicalLabel = "01",
    spaces: Optional[Space] = None,
) -> List[Dict[str, float]]:
    """
    Selected correlators of the channel output versus control angle

    Args:
        encoding: Logical encoding
        theta_list: Control angles
        channel: Callable (theta_c, state) -> state; ideal eSWAP by default
        input_label: Logical input state
        spaces: Cavity spaces, the encoding cutoff by default

    Returns:
        One row per angle with keys theta_c, II, ZZ, IZ, ZI, XY, YX
    """
    channel = channel or ideal_eswap_channel
    initial = encode_two_qubit(encoding, input_label, spaces)
    rows = []
    for theta_c in theta_list:
        output = channel(float(theta_c), initial)
        c = correlators(output, encoding)
        row = {"theta_c": float(theta_c)}
        row.update({label: c[label] for label in SWEEP_LABELS})
        rows.append(row)
    logger.debug("Swept %d control angles for %s", len(rows), encoding.name)
    return rows


def require_orthogonal(encoding: LogicalEncoding, operation: str) -> None:
    if encoding.orthogonalized:
        raise EncodingUnsupported(
            f"{operation} is defined for orthogonal encodings only, not '{encoding.name}'"
        )
