"""
src/eswap_sim/processtomo.py

Process tomography on the logical two-qubit space: Pauli transfer matrices,
chi matrices, process fidelities and the sixteen-input QPT pipeline
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg as la

from .circuits import Circuit, eswap_ideal
from .dynamics import Channel, NoiseModel, SpamModel, evolve_circuit
from .encodings import (
    PAULI_LABELS,
    QPT_INPUT_LABELS,
    LogicalEncoding,
    encode_two_qubit,
    encoder_isometry,
    label_text,
    logical_density,
    require_orthogonal,
    two_qubit_pauli,
)
from .exceptions import SeedRequired, SpaceMismatch
from .fockspace import (
    ALICE,
    ANCILLA,
    BOB,
    DensityMatrix,
    Operator,
    Space,
    as_density,
    cavity_space,
)
from .tomography import reconstruct_density_matrix, sample_grid, tomography_points

logger = logging.getLogger(__name__)

CHI_NEGATIVITY_TOL = 1e-6
PTM_OVERLAP_DEFINITION = "Tr(R_ideal^T R_meas) / Tr(R_ideal^T R_ideal)"
CHI_FIDELITY_DEFINITION = "Re Tr(chi_ideal chi_meas)"
DEFAULT_SHOTS = 500

Operation = Union[None, Circuit, Channel, Operator]
LogicalMap = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=1)
def _pauli_stack() -> np.ndarray:
    return np.stack([two_qubit_pauli(label) for label in PAULI_LABELS])


@lru_cache(maxsize=1)
def _chi_transfer() -> np.ndarray:
    """B[(i, j), (m, n)] = 1/4 Tr(P_i P_m P_j P_n)"""
    p = _pauli_stack()
    b = np.einsum("iab,mbc,jcd,nda->ijmn", p, p, p, p, optimize=True) / 4
    return b.reshape(256, 256)


@dataclass(frozen=True, eq=False)
class PauliTransferMatrix:
    """R[i, j] = 1/4 Tr(P_i E(P_j)) in the order II, IX, ..., ZZ"""

    entries: np.ndarray
    encoding: str = ""

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries)
        if entries.shape != (16, 16):
            raise ValueError(f"PTM must be 16x16, got {entries.shape}")
        if np.max(np.abs(entries.imag), initial=0.0) > 1e-8:
            raise ValueError("PTM entries must be real")
        entries = entries.real.astype(float)
        if np.max(np.abs(entries)) > 1 + 1e-6:
            logger.warning("PTM entries exceed unit magnitude (max %.3f)",
                           np.max(np.abs(entries)))
        object.__setattr__(self, "entries", entries)

    def __matmul__(self, other: "PauliTransferMatrix") -> "PauliTransferMatrix":
        """PTM of applying `other` first and then self"""
        return PauliTransferMatrix(self.entries @ other.entries, self.encoding)

    def is_trace_preserving(self, tol: float = 1e-6) -> bool:
        first = np.zeros(16)
        first[0] = 1.0
        return bool(np.max(np.abs(self.entries[0] - first)) < tol)

    def to_dict(self) -> Dict[str, Any]:
        return {"labels": list(PAULI_LABELS), "entries": self.entries.tolist(),
                "encoding": self.encoding}

    def to_rows(self) -> List[Dict[str, Any]]:
        return [
            {"output": PAULI_LABELS[i], "input": PAULI_LABELS[j],
             "value": float(self.entries[i, j])}
            for i in range(16) for j in range(16)
        ]


@dataclass(frozen=True, eq=False)
class ChiMatrix:
    """Process matrix with E(rho) = sum chi_mn P_m rho P_n"""

    entries: np.ndarray
    negativity: float = 0.0

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (16, 16):
            raise ValueError(f"Chi matrix must be 16x16, got {entries.shape}")
        object.__setattr__(self, "entries", entries)

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def nonphysical(self) -> bool:
        return self.negativity > CHI_NEGATIVITY_TOL

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "labels": list(PAULI_LABELS),
            "re": self.entries.real.tolist(),
            "im": self.entries.imag.tolist(),
            "negativity": self.negativity,
            "nonphysical": self.nonphysical,
        }


def _as_ptm_array(r: Union[PauliTransferMatrix, np.ndarray]) -> np.ndarray:
    return r.entries if isinstance(r, PauliTransferMatrix) else np.asarray(r, dtype=float)


def _as_chi_array(chi: Union[ChiMatrix, np.ndarray]) -> np.ndarray:
    return chi.entries if isinstance(chi, ChiMatrix) else np.asarray(chi, dtype=complex)


def ptm_from_logical_map(logical_map: LogicalMap, encoding: str = "") -> PauliTransferMatrix:
    p = _pauli_stack()
    images = np.stack([logical_map(pj) for pj in p])
    entries = np.einsum("iab,jba->ij", p, images).real / 4
    return PauliTransferMatrix(entries, encoding)


def _cavity_spaces(encoding: LogicalEncoding) -> Space:
    return (cavity_space(encoding.cutoff, ALICE), cavity_space(encoding.cutoff, BOB))


def logical_map(
    operation: Union[Channel, Operator], encoding: LogicalEncoding
) -> LogicalMap:
    """X -> V^dag E(V X V^dag) V for the orthonormal encoder V"""
    space = operation.space_in if isinstance(operation, Channel) else operation.space
    if [s.label for s in space] != [ALICE, BOB]:
        raise SpaceMismatch("Process tomography needs an operation on (Alice, Bob)")
    v = encoder_isometry(encoding, space)
    if isinstance(operation, Channel):
        def apply_channel(x: np.ndarray) -> np.ndarray:
            return v.conj().T @ operation.apply_matrix(v @ x @ v.conj().T) @ v

        return apply_channel
    reduced = v.conj().T @ operation.matrix @ v

    def apply_unitary(x: np.ndarray) -> np.ndarray:
        return reduced @ x @ reduced.conj().T

    return apply_unitary


def ptm_from_channel(
    channel: Union[Channel, Operator],
    encoding: LogicalEncoding,
    allow_nonorthogonal: bool = False,
) -> PauliTransferMatrix:
    """
    R[i][j] = 1/4 Tr(P_i E(P_j)) over the logical Paulis

    Raises:
        EncodingUnsupported: For non-orthogonal encodings unless allowed
    """
    if not allow_nonorthogonal:
        require_orthogonal(encoding, "process tomography")
    return ptm_from_logical_map(logical_map(channel, encoding), encoding.name)


def chi_from_ptm(ptm: Union[PauliTransferMatrix, np.ndarray]) -> ChiMatrix:
    """Linear inversion of R = B chi"""
    r = _as_ptm_array(ptm)
    chi = la.solve(_chi_transfer(), r.ravel().astype(complex)).reshape(16, 16)
    chi = (chi + chi.conj().T) / 2
    smallest = float(la.eigvalsh(chi)[0])
    negativity = max(0.0, -smallest)
    if negativity > CHI_NEGATIVITY_TOL:
        logger.info("Chi matrix negativity %.2e (non-physical estimate)", negativity)
    return ChiMatrix(chi, negativity)


def ptm_from_chi(chi: Union[ChiMatrix, np.ndarray]) -> PauliTransferMatrix:
    entries = (_chi_transfer() @ _as_chi_array(chi).ravel()).reshape(16, 16)
    return PauliTransferMatrix(entries)


def chi_from_channel(
    channel: Union[Channel, Operator],
    encoding: LogicalEncoding,
    allow_nonorthogonal: bool = False,
) -> ChiMatrix:
    return chi_from_ptm(ptm_from_channel(channel, encoding, allow_nonorthogonal))


def chi_trace_product(
    chi_meas: Union[ChiMatrix, np.ndarray], chi_ideal: Union[ChiMatrix, np.ndarray]
) -> complex:
    return complex(np.trace(_as_chi_array(chi_ideal) @ _as_chi_array(chi_meas)))


def process_fidelity_chi(
    chi_meas: Union[ChiMatrix, np.ndarray], chi_ideal: Union[ChiMatrix, np.ndarray]
) -> float:
    """Re Tr(chi_ideal chi_meas); the imaginary residual is logged"""
    value = chi_trace_product(chi_meas, chi_ideal)
    if abs(value.imag) > 1e-9:
        logger.debug("Chi fidelity imaginary residual %.2e", value.imag)
    return float(value.real)


def ptm_overlap(
    r_meas: Union[PauliTransferMatrix, np.ndarray],
    r_ideal: Union[PauliTransferMatrix, np.ndarray],
) -> float:
    """Tr(R_ideal^T R_meas) / Tr(R_ideal^T R_ideal)"""
    meas, ideal = _as_ptm_array(r_meas), _as_ptm_array(r_ideal)
    return float(np.trace(ideal.T @ meas) / np.trace(ideal.T @ ideal))


def fit_ptm(inputs: np.ndarray, outputs: np.ndarray, encoding: str = "") -> PauliTransferMatrix:
    """
    Least-squares R with outputs ~ R inputs

    Args:
        inputs: (16, n) Pauli vectors Tr(P_i rho_in) as columns
        outputs: (16, n) measured output Pauli vectors
    """
    if inputs.shape != outputs.shape or inputs.shape[0] != 16:
        raise ValueError("Inputs and outputs must both be 16 x n Pauli vectors")
    solution, _, rank, _ = la.lstsq(inputs.T, outputs.T)
    if rank < 16:
        raise ValueError(f"Input states span rank {rank} < 16")
    return PauliTransferMatrix(solution.T, encoding)


def pauli_vector(rho_logical: np.ndarray) -> np.ndarray:
    return np.einsum("iab,ba->i", _pauli_stack(), rho_logical).real


# ---------------------------------------------------------------------------
# Sixteen-input QPT
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QptReport:
    """Results of a process-tomography run"""

    encoding: str
    mode: str
    ptm: PauliTransferMatrix
    ptm_ideal: PauliTransferMatrix
    chi: ChiMatrix
    chi_ideal: ChiMatrix
    chi_fidelity: float
    chi_fidelity_imag: float
    ptm_overlap: float
    residuals: Tuple[float, ...]
    output_traces: Tuple[float, ...]
    seeds: Tuple[Optional[int], ...]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        return {
            "encoding": self.encoding,
            "mode": self.mode,
            "chi_fidelity": self.chi_fidelity,
            "ptm_overlap": self.ptm_overlap,
            "max_residual": max(self.residuals),
            "mean_trace": float(np.mean(self.output_traces)),
        }

    def to_dict(self) -> Dict[str, Any]:
        payload = self.summary()
        payload.update({
            "chi_fidelity_imag": self.chi_fidelity_imag,
            "ptm": self.ptm.to_dict(),
            "ptm_ideal": self.ptm_ideal.to_dict(),
            "chi": self.chi.to_dict(),
            "chi_ideal": self.chi_ideal.to_dict(),
            "inputs": [label_text(label) for label in QPT_INPUT_LABELS],
            "residuals": list(self.residuals),
            "output_traces": list(self.output_traces),
            "seeds": list(self.seeds),
            "metadata": self.metadata,
        })
        return payload


def _branch_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _ideal_operator(operation: Operation, spaces: Space, ideal: Optional[Operator]) -> Operator:
    if ideal is not None:
        return ideal
    if operation is None:
        return Operator(np.eye(spaces[0].cutoff * spaces[1].cutoff), spaces)
    if isinstance(operation, Operator):
        return operation
    if isinstance(operation, Circuit) and operation.metadata.get("name") == "eswap":
        return eswap_ideal(operation.control_angle, spaces[0], spaces[1])
    raise ValueError("An ideal target operator is required for this operation")


def _apply_operation(
    operation: Operation,
    states: List[DensityMatrix],
    noise: Optional[NoiseModel],
    spam: SpamModel,
) -> Tuple[List[DensityMatrix], Dict[str, Any]]:
    if operation is None:
        return states, {}
    if isinstance(operation, Circuit):
        noise = noise or NoiseModel.noiseless()
        outputs, counter = evolve_circuit(
            operation, noise, states, ancilla_excited=spam.ancilla_excited()
        )
        return outputs, {"ancilla_exposure": counter.exposure,
                         "integration_steps": counter.steps}
    if isinstance(operation, Channel):
        return [operation.apply(s) for s in states], {}
    u = operation.matrix
    return [DensityMatrix(u @ s.matrix @ u.conj().T, s.space) for s in states], {}


def _sampled_pauli_vector(args: Tuple[Any, ...]) -> Tuple[np.ndarray, float, float]:
    rho, encoding, points, shots, readout, seed = args
    grid = sample_grid(rho, points, points, shots, readout, seed)
    result = reconstruct_density_matrix(grid, encoding.cutoff, spaces=rho.space)
    vector = pauli_vector(logical_density(result.density, encoding))
    return vector, result.density.trace(), result.residual


def run_qpt(
    operation: Operation,
    encoding: LogicalEncoding,
    mode: str = "exact",
    noise: Optional[NoiseModel] = None,
    seed: Optional[int] = None,
    ideal: Optional[Operator] = None,
    spam: Optional[SpamModel] = None,
    shots_per_point: int = DEFAULT_SHOTS,
    tomography_radius: Optional[float] = None,
    allow_nonorthogonal: bool = False,
    mapper: Callable[..., Iterable[Any]] = map,
) -> QptReport:
    """
    Process tomography from the sixteen product inputs {0, 1, +, +i}^2

    Inputs are prepared (with SPAM preparation errors), passed through the
    operation and measured either exactly or through sampled joint-parity shots
    and reconstruction. The PTM is fitted by least squares against the ideal
    input Pauli vectors.

    Args:
        operation: Compiled circuit (evolved under `noise`), channel, unitary
            on (Alice, Bob), or None for the encode-only reference
        encoding: Logical encoding
        mode: 'exact' or 'sampled'
        noise: Noise model for circuit operations; noiseless when None
        seed: Master seed, required in sampled mode
        ideal: Target unitary on (Alice, Bob); derived for eSWAP circuits
        spam: Preparation and readout errors; none when omitted
        shots_per_point: Shots per joint-parity point in sampled mode
        tomography_radius: Largest displacement of the reconstruction grid
        allow_nonorthogonal: Permit encodings with overlapping codewords
        mapper: map-like callable for the per-input reconstructions

    Raises:
        EncodingUnsupported: For non-orthogonal encodings unless allowed
        SeedRequired: In sampled mode without a seed
        UnderdeterminedGrid: If the reconstruction grid is too small
    """
    if mode not in ("exact", "sampled"):
        raise ValueError(f"Unknown QPT mode '{mode}'. Available: exact, sampled")
    if not allow_nonorthogonal:
        require_orthogonal(encoding, "process tomography")
    spam = spam or SpamModel.none()
    spaces = _cavity_spaces(encoding)
    if isinstance(operation, Circuit):
        circuit_cavities = tuple(s for s in operation.spaces if s.label != ANCILLA)
        if circuit_cavities != spaces:
            raise SpaceMismatch(
                f"Circuit cavities {[s.cutoff for s in circuit_cavities]} do not match "
                f"the encoding cutoff {encoding.cutoff}"
            )
    target = _ideal_operator(operation, spaces, ideal)

    ideal_inputs = [as_density(encode_two_qubit(encoding, label)) for label in QPT_INPUT_LABELS]
    prepared = [spam.prepare(rho) for rho in ideal_inputs]
    outputs, run_info = _apply_operation(operation, prepared, noise, spam)

    in_vectors = np.stack([pauli_vector(logical_density(r, encoding)) for r in ideal_inputs], 1)
    contrast = spam.contrast()
    seeds: List[Optional[int]] = []
    if mode == "exact":
        out_vectors = np.stack(
            [contrast * pauli_vector(logical_density(r, encoding)) for r in outputs], 1
        )
        traces = [contrast * r.trace() for r in outputs]
        seeds = [None] * len(outputs)
        recon_residuals: List[float] = []
    else:
        if seed is None:
            raise SeedRequired("Sampled QPT needs a seed")
        points = tomography_points(encoding.cutoff, tomography_radius)
        readout = spam.readout_errors()
        seeds = [_branch_seed(seed, k) for k in range(len(outputs))]
        jobs = [(rho, encoding, points, shots_per_point, readout, s)
                for rho, s in zip(outputs, seeds)]
        results = list(mapper(_sampled_pauli_vector, jobs))
        out_vectors = np.stack([r[0] for r in results], 1)
        traces = [r[1] for r in results]
        recon_residuals = [r[2] for r in results]

    ptm = fit_ptm(in_vectors, out_vectors, encoding.name)
    residuals = np.linalg.norm(ptm.entries @ in_vectors - out_vectors, axis=0)
    ptm_ideal = ptm_from_channel(target, encoding, allow_nonorthogonal)
    chi = chi_from_ptm(ptm)
    chi_ideal = chi_from_ptm(ptm_ideal)
    product = chi_trace_product(chi, chi_ideal)

    metadata: Dict[str, Any] = {
        "ptm_overlap_definition": PTM_OVERLAP_DEFINITION,
        "chi_fidelity_definition": CHI_FIDELITY_DEFINITION,
        "shots_per_point": shots_per_point if mode == "sampled" else 0,
        "master_seed": seed,
        "spam": spam.to_dict(),
        "noise": (noise or NoiseModel.noiseless()).to_dict()
        if isinstance(operation, Circuit) else None,
        "chi_negativity": chi.negativity,
        "chi_nonphysical": chi.nonphysical,
        "reconstruction_residuals": recon_residuals,
    }
    metadata.update(run_info)
    if isinstance(operation, Circuit):
        metadata["theta_c"] = operation.control_angle

    report = QptReport(
        encoding=encoding.name,
        mode=mode,
        ptm=ptm,
        ptm_ideal=ptm_ideal,
        chi=chi,
        chi_ideal=chi_ideal,
        chi_fidelity=float(product.real),
        chi_fidelity_imag=float(product.imag),
        ptm_overlap=ptm_overlap(ptm, ptm_ideal),
        residuals=tuple(float(r) for r in residuals),
        output_traces=tuple(float(t) for t in traces),
        seeds=tuple(seeds),
        metadata=metadata,
    )
    logger.info(
        "QPT %s/%s: chi fidelity %.4f, PTM overlap %.4f",
        encoding.name, mode, report.chi_fidelity, report.ptm_overlap,
    )
    return report


def encode_only_fidelity(
    encoding: LogicalEncoding,
    spam: Optional[SpamModel] = None,
    mode: str = "exact",
    seed: Optional[int] = None,
    shots_per_point: int = DEFAULT_SHOTS,
) -> QptReport:
    """QPT of the identity: the preparation and measurement reference"""
    return run_qpt(None, encoding, mode=mode, seed=seed, spam=spam,
                   shots_per_point=shots_per_point)
