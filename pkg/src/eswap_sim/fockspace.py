"""
src/eswap_sim/fockspace.py

Truncated Fock-space linear algebra shared by every other module:
mode spaces, operators, states, tensor products, matrix functions and metrics.

All tensor products follow the canonical mode order (ancilla, Alice, Bob).
Operators and states are immutable; their matrices are stored read-only.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la

from .exceptions import NonFinite, SpaceMismatch, TruncationWarning

logger = logging.getLogger(__name__)

ANCILLA = "ancilla"
ALICE = "alice"
BOB = "bob"
MODE_ORDER = (ANCILLA, ALICE, BOB)

# Tolerance ledger
UNITARY_TOL = 1e-9
HERMITIAN_TOL = 1e-10
PHASE_EQUIV_TOL = 1e-8


@dataclass(frozen=True)
class ModeSpace:
    """A single truncated mode: a cavity (Alice, Bob) or the ancilla transmon"""

    cutoff: int
    label: str
    extended: bool = False

    def __post_init__(self) -> None:
        if self.label not in MODE_ORDER:
            raise ValueError(
                f"Unknown mode label '{self.label}'. Available: {list(MODE_ORDER)}"
            )
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            raise ValueError(f"Mode cutoff must be an integer >= 2, got {self.cutoff}")
        if self.label == ANCILLA and self.cutoff != 2 and not self.extended:
            raise ValueError(
                f"Ancilla space has cutoff 2 unless extended, got {self.cutoff}"
            )


Space = Tuple[ModeSpace, ...]
SpaceLike = Union[ModeSpace, Sequence[ModeSpace]]


def ancilla_space() -> ModeSpace:
    """Two-level ancilla (|g>, |e>)"""
    return ModeSpace(2, ANCILLA)


def cavity_space(cutoff: int, label: str = ALICE) -> ModeSpace:
    """Cavity mode truncated at `cutoff` photons"""
    return ModeSpace(cutoff, label)


def canonical_spaces(
    cutoff_a: int, cutoff_b: int, with_ancilla: bool = True
) -> Space:
    """Mode spaces in canonical order for the given cavity cutoffs"""
    cavities = (ModeSpace(cutoff_a, ALICE), ModeSpace(cutoff_b, BOB))
    if with_ancilla:
        return (ancilla_space(),) + cavities
    return cavities


def as_space(space: SpaceLike) -> Space:
    if isinstance(space, ModeSpace):
        return (space,)
    return tuple(space)


def space_dims(space: SpaceLike) -> Tuple[int, ...]:
    return tuple(s.cutoff for s in as_space(space))


def space_dim(space: SpaceLike) -> int:
    return int(math.prod(space_dims(space)))


def find_mode(space: SpaceLike, label: str) -> ModeSpace:
    """Return the mode with `label` in `space`"""
    for mode in as_space(space):
        if mode.label == label:
            return mode
    raise SpaceMismatch(
        f"Mode '{label}' not present in {[s.label for s in as_space(space)]}"
    )


def _freeze(values: Any) -> np.ndarray:
    array = np.array(values, dtype=complex)
    array.setflags(write=False)
    return array


def _check_same_space(left: Space, right: Space) -> None:
    if left != right:
        raise SpaceMismatch(
            f"Incompatible spaces: {[(s.label, s.cutoff) for s in left]} vs "
            f"{[(s.label, s.cutoff) for s in right]}"
        )


def _matrix_payload(values: np.ndarray, space: Space, kind: str) -> Dict[str, Any]:
    return {
        "kind": kind,
        "dims": list(space_dims(space)),
        "mode_order": [s.label for s in space],
        "re": np.real(values).ravel().tolist(),
        "im": np.imag(values).ravel().tolist(),
    }


def _space_from_payload(payload: Dict[str, Any]) -> Space:
    return tuple(
        ModeSpace(int(c), label, extended=(label == ANCILLA and int(c) != 2))
        for c, label in zip(payload["dims"], payload["mode_order"])
    )


def _values_from_payload(payload: Dict[str, Any]) -> np.ndarray:
    return np.asarray(payload["re"], dtype=float) + 1j * np.asarray(
        payload["im"], dtype=float
    )


@dataclass(frozen=True, eq=False)
class Operator:
    """Complex square matrix acting on an ordered list of mode spaces"""

    matrix: np.ndarray
    space: Space

    def __post_init__(self) -> None:
        space = as_space(self.space)
        matrix = _freeze(self.matrix)
        dim = space_dim(space)
        if matrix.shape != (dim, dim):
            raise SpaceMismatch(
                f"Operator shape {matrix.shape} does not match space dimension {dim}"
            )
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dims(self) -> Tuple[int, ...]:
        return space_dims(self.space)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(s.label for s in self.space)

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.space)

    def __matmul__(self, other: Any) -> Any:
        if isinstance(other, Operator):
            _check_same_space(self.space, other.space)
            return Operator(self.matrix @ other.matrix, self.space)
        if isinstance(other, StateVector):
            _check_same_space(self.space, other.space)
            return StateVector(self.matrix @ other.amplitudes, self.space)
        return NotImplemented

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_space(self.space, other.space)
        return Operator(self.matrix + other.matrix, self.space)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_space(self.space, other.space)
        return Operator(self.matrix - other.matrix, self.space)

    def __neg__(self) -> "Operator":
        return Operator(-self.matrix, self.space)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.matrix * scalar, self.space)

    __rmul__ = __mul__

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermiticity_residual() <= tol

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        product = self.matrix.conj().T @ self.matrix
        return float(np.max(np.abs(product - np.eye(self.dim)))) < tol

    def expect(self, state: Union["StateVector", "DensityMatrix"]) -> complex:
        """Expectation value on a pure or mixed state"""
        _check_same_space(self.space, state.space)
        if isinstance(state, StateVector):
            return complex(np.vdot(state.amplitudes, self.matrix @ state.amplitudes))
        return complex(np.trace(state.matrix @ self.matrix))

    def to_dict(self) -> Dict[str, Any]:
        return _matrix_payload(self.matrix, self.space, "operator")

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "Operator":
        space = _space_from_payload(payload)
        dim = space_dim(space)
        return cls(_values_from_payload(payload).reshape(dim, dim), space)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state amplitudes on an ordered list of mode spaces"""

    amplitudes: np.ndarray
    space: Space

    def __post_init__(self) -> None:
        space = as_space(self.space)
        amplitudes = _freeze(self.amplitudes)
        dim = space_dim(space)
        if amplitudes.shape != (dim,):
            raise SpaceMismatch(
                f"State shape {amplitudes.shape} does not match space dimension {dim}"
            )
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def dims(self) -> Tuple[int, ...]:
        return space_dims(self.space)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        norm = self.norm()
        if norm == 0.0:
            raise ValueError("Cannot normalize the zero vector")
        return StateVector(self.amplitudes / norm, self.space)

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>"""
        _check_same_space(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.space)

    def to_dict(self) -> Dict[str, Any]:
        return _matrix_payload(self.amplitudes, self.space, "state")

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "StateVector":
        return cls(_values_from_payload(payload), _space_from_payload(payload))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Mixed state; trace may be below one for trace-free reconstructions"""

    matrix: np.ndarray
    space: Space

    def __post_init__(self) -> None:
        space = as_space(self.space)
        matrix = _freeze(self.matrix)
        dim = space_dim(space)
        if matrix.shape != (dim, dim):
            raise SpaceMismatch(
                f"Density matrix shape {matrix.shape} does not match dimension {dim}"
            )
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dims(self) -> Tuple[int, ...]:
        return space_dims(self.space)

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(s.label for s in self.space)

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        hermitian = (self.matrix + self.matrix.conj().T) / 2
        return la.eigvalsh(hermitian)

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def is_physical(self, tol: float = 1e-8) -> bool:
        """Hermitian, positive semidefinite and trace at most one"""
        return (
            self.hermiticity_residual() <= HERMITIAN_TOL
            and float(self.eigenvalues().min()) >= -tol
            and self.trace() <= 1.0 + tol
        )

    def ptrace(self, keep: Sequence[str]) -> "DensityMatrix":
        return partial_trace(self, keep)

    def to_dict(self) -> Dict[str, Any]:
        return _matrix_payload(self.matrix, self.space, "density")

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "DensityMatrix":
        space = _space_from_payload(payload)
        dim = space_dim(space)
        return cls(_values_from_payload(payload).reshape(dim, dim), space)


State = Union[StateVector, DensityMatrix]


def as_density(state: State) -> DensityMatrix:
    if isinstance(state, StateVector):
        return state.to_density()
    return state


# ---------------------------------------------------------------------------
# Elementary operators
# ---------------------------------------------------------------------------


def identity(space: SpaceLike) -> Operator:
    space = as_space(space)
    return Operator(np.eye(space_dim(space)), space)


def annihilation(space: ModeSpace) -> Operator:
    """Ladder operator with <n-1|a|n> = sqrt(n)"""
    return Operator(np.diag(np.sqrt(np.arange(1, space.cutoff)), k=1), (space,))


def creation(space: ModeSpace) -> Operator:
    return annihilation(space).dag()


def number(space: ModeSpace) -> Operator:
    return Operator(np.diag(np.arange(space.cutoff, dtype=float)), (space,))


def parity_operator(space: ModeSpace) -> Operator:
    """exp(i pi n), i.e. diag((-1)^n)"""
    return Operator(np.diag((-1.0) ** np.arange(space.cutoff)), (space,))


def truncation_guard(beta: complex) -> int:
    """Smallest cutoff trusted for a displacement of amplitude `beta`"""
    return int(math.ceil(4 * abs(beta) ** 2 + 10))


def displacement_matrix(beta: complex, cutoff: int) -> np.ndarray:
    """exp(beta a^dag - beta* a) on a truncated space, no guard check"""
    a = np.diag(np.sqrt(np.arange(1, cutoff)), k=1).astype(complex)
    generator = beta * a.conj().T - np.conj(beta) * a
    return expm_matrix(generator)


def displacement(beta: complex, space: ModeSpace) -> Operator:
    """
    Displacement operator D(beta) computed on the truncated space

    Args:
        beta: Complex displacement amplitude
        space: Cavity mode space

    Returns:
        Unitary Operator on `space`

    Warns:
        TruncationWarning: If the cutoff is below 4|beta|^2 + 10
    """
    if beta != 0 and space.cutoff < truncation_guard(beta):
        warnings.warn(
            f"Cutoff {space.cutoff} below guard {truncation_guard(beta)} "
            f"for |beta|={abs(beta):.3f}",
            TruncationWarning,
            stacklevel=2,
        )
    return Operator(displacement_matrix(beta, space.cutoff), (space,))


def fock_state(n: int, space: ModeSpace) -> StateVector:
    if not 0 <= n < space.cutoff:
        raise ValueError(f"Fock level {n} outside cutoff {space.cutoff}")
    amplitudes = np.zeros(space.cutoff, dtype=complex)
    amplitudes[n] = 1.0
    return StateVector(amplitudes, (space,))


def coherent_state(alpha: complex, space: ModeSpace) -> StateVector:
    """D(alpha)|0>, renormalized on the truncated space"""
    vacuum = fock_state(0, space)
    return (displacement(alpha, space) @ vacuum).normalized()


def ket(space: SpaceLike, occupations: Sequence[int]) -> StateVector:
    """Product Fock state |n_1, n_2, ...> on `space`"""
    space = as_space(space)
    if len(occupations) != len(space):
        raise SpaceMismatch(f"Need {len(space)} occupations, got {len(occupations)}")
    return product_state([fock_state(n, s) for n, s in zip(occupations, space)])


# ---------------------------------------------------------------------------
# Tensor structure
# ---------------------------------------------------------------------------


def _reorder(matrix: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Permute the tensor factors of a square matrix; factor order[i] moves to i"""
    n = len(dims)
    if list(order) == list(range(n)):
        return matrix
    tensor_view = matrix.reshape(tuple(dims) + tuple(dims))
    axes = list(order) + [n + k for k in order]
    dim = matrix.shape[0]
    return tensor_view.transpose(axes).reshape(dim, dim)


def _canonical_key(mode: ModeSpace) -> int:
    return MODE_ORDER.index(mode.label)


def tensor(ops: Sequence[Operator]) -> Operator:
    """Kronecker product of operators on disjoint modes, arranged in canonical mode order"""
    if not ops:
        raise ValueError("tensor() needs at least one operator")
    space = tuple(s for op in ops for s in op.space)
    labels = [s.label for s in space]
    if len(set(labels)) != len(labels):
        raise SpaceMismatch(f"Repeated modes in tensor product: {labels}")
    matrix = reduce(np.kron, [op.matrix for op in ops])
    order = sorted(range(len(space)), key=lambda i: _canonical_key(space[i]))
    matrix = _reorder(matrix, [s.cutoff for s in space], order)
    return Operator(matrix, tuple(space[i] for i in order))


def product_state(states: Sequence[StateVector]) -> StateVector:
    """Tensor product of states, arranged in canonical mode order"""
    ordered = sorted(states, key=lambda st: _canonical_key(st.space[0]))
    space = tuple(s for st in ordered for s in st.space)
    labels = [s.label for s in space]
    if len(set(labels)) != len(labels):
        raise SpaceMismatch(f"Repeated modes in product state: {labels}")
    return StateVector(reduce(np.kron, [st.amplitudes for st in ordered]), space)


def embed(op: Operator, full_space: SpaceLike) -> Operator:
    """
    Pad `op` with identities on the modes of `full_space` it does not act on

    Args:
        op: Operator on a subset of the modes
        full_space: Target space; its order is preserved in the result

    Raises:
        SpaceMismatch: If a mode of `op` is absent or has another cutoff
    """
    full = as_space(full_space)
    full_labels = [s.label for s in full]
    for mode in op.space:
        if mode.label not in full_labels or full[full_labels.index(mode.label)] != mode:
            raise SpaceMismatch(f"Mode {mode} not part of target space")
    present = set(op.labels)
    rest = [s for s in full if s.label not in present]
    matrix = op.matrix
    if rest:
        matrix = np.kron(matrix, np.eye(space_dim(rest)))
    current = list(op.space) + rest
    current_labels = [s.label for s in current]
    order = [current_labels.index(label) for label in full_labels]
    matrix = _reorder(matrix, [s.cutoff for s in current], order)
    return Operator(matrix, full)


def partial_trace(rho: State, keep: Sequence[str]) -> DensityMatrix:
    """Reduced state on the modes named in `keep` (original order preserved)"""
    rho = as_density(rho)
    dims = rho.dims
    n = len(dims)
    keep_idx = [i for i, s in enumerate(rho.space) if s.label in keep]
    if len(keep_idx) != len(set(keep)):
        raise SpaceMismatch(f"Cannot keep {list(keep)} from {list(rho.labels)}")
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = [letters[n + i] if i in keep_idx else rows[i] for i in range(n)]
    out = "".join(rows[i] for i in keep_idx) + "".join(cols[i] for i in keep_idx)
    subscripts = "".join(rows) + "".join(cols) + "->" + out
    reduced = np.einsum(subscripts, rho.matrix.reshape(dims + dims))
    kept = tuple(rho.space[i] for i in keep_idx)
    dim = space_dim(kept)
    return DensityMatrix(reduced.reshape(dim, dim), kept)


# ---------------------------------------------------------------------------
# Matrix functions
# ---------------------------------------------------------------------------


def expm_matrix(matrix: np.ndarray, scale: complex = 1.0) -> np.ndarray:
    """
    exp(scale * matrix)

    Hermitian and anti-Hermitian inputs use the spectral decomposition;
    anything else falls back to scaling-and-squaring.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {m.shape}")
    tol = 1e-12 * max(1.0, float(np.max(np.abs(m)))) if m.size else 0.0
    adjoint = m.conj().T
    with np.errstate(over="ignore", invalid="ignore"):
        if np.max(np.abs(m - adjoint), initial=0.0) <= tol:
            w, v = la.eigh((m + adjoint) / 2)
            result = (v * np.exp(scale * w)) @ v.conj().T
        elif np.max(np.abs(m + adjoint), initial=0.0) <= tol:
            w, v = la.eigh((-1j * m + (-1j * m).conj().T) / 2)
            result = (v * np.exp(1j * scale * w)) @ v.conj().T
        else:
            result = la.expm(scale * m)
    if not np.all(np.isfinite(result)):
        raise NonFinite(f"Matrix exponential overflowed (scale={scale})")
    return result


def expm(h: Operator, scale: complex = 1.0) -> Operator:
    """Matrix exponential exp(scale * h) on the space of `h`"""
    return Operator(expm_matrix(h.matrix, scale), h.space)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def _pure_vector(rho: DensityMatrix, tol: float = 1e-10) -> Optional[np.ndarray]:
    if abs(rho.trace() - 1.0) > tol or abs(rho.purity() - 1.0) > tol:
        return None
    w, v = la.eigh((rho.matrix + rho.matrix.conj().T) / 2)
    return v[:, -1]


def state_fidelity(rho: State, sigma: State) -> float:
    """
    Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2

    Reduces to <psi|rho|psi> when either argument is pure.

    Raises:
        SpaceMismatch: If the states live on different spaces
    """
    _check_same_space(rho.space, sigma.space)
    if isinstance(sigma, StateVector) and isinstance(rho, StateVector):
        return float(abs(np.vdot(sigma.amplitudes, rho.amplitudes)) ** 2)
    if isinstance(rho, StateVector):
        rho, sigma = sigma, rho
    if isinstance(sigma, StateVector):
        psi = sigma.amplitudes
        return max(0.0, float(np.real(np.vdot(psi, rho.matrix @ psi))))

    for pure, other in ((sigma, rho), (rho, sigma)):
        psi = _pure_vector(pure)
        if psi is not None:
            return max(0.0, float(np.real(np.vdot(psi, other.matrix @ psi))))

    w, v = la.eigh((rho.matrix + rho.matrix.conj().T) / 2)
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    inner = sqrt_rho @ sigma.matrix @ sqrt_rho
    ev = la.eigvalsh((inner + inner.conj().T) / 2)
    return float(np.sum(np.sqrt(np.clip(ev, 0.0, None))) ** 2)


def trace_distance(rho: State, sigma: State) -> float:
    _check_same_space(rho.space, sigma.space)
    diff = as_density(rho).matrix - as_density(sigma).matrix
    return float(0.5 * np.sum(np.abs(la.eigvalsh((diff + diff.conj().T) / 2))))


def entanglement_entropy(state: State, keep: Sequence[str]) -> float:
    """Von Neumann entropy (natural log) of the reduced state on `keep`"""
    reduced = partial_trace(state, keep)
    p = reduced.eigenvalues()
    p = p[p > 1e-15]
    return float(-np.sum(p * np.log(p)))


def operator_distance(left: np.ndarray, right: np.ndarray) -> Tuple[float, float]:
    """
    Max-norm distance between two matrices minimised over a global phase

    Returns:
        (distance, phase) with left ~ exp(i phase) * right
    """
    inner = np.vdot(right, left)
    phase = float(np.angle(inner)) if abs(inner) > 0 else 0.0
    distance = float(np.max(np.abs(left - np.exp(1j * phase) * right), initial=0.0))
    return distance, phase
