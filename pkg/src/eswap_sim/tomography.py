"""
src/eswap_sim/tomography.py

Wigner and joint-Wigner evaluation, shot-level parity sampling, density-matrix
reconstruction and the conditional three-mode assembly
"""

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la

from .encodings import PAULI_LABELS, CorrelatorSet, LogicalEncoding
from .exceptions import (
    EncodingUnsupported,
    NonConvergence,
    SeedRequired,
    SpaceMismatch,
    TruncationWarning,
    UnderdeterminedGrid,
)
from .fockspace import (
    ALICE,
    ANCILLA,
    BOB,
    DensityMatrix,
    Space,
    State,
    ancilla_space,
    as_density,
    as_space,
    cavity_space,
    displacement_matrix,
    truncation_guard,
)

logger = logging.getLogger(__name__)

NORMALIZATIONS = ("wigner", "parity")
WIGNER_SCALE = 2 / math.pi
MAX_PADDED_CUTOFF = 100
CLIP_TOL = 1e-8
RANK_TOL = 1e-6
DEFAULT_RADIUS = 2.5
DEFAULT_PLANE_POINTS = 21
CONVENTIONS = ("y", "x")

Point = Tuple[complex, Optional[complex]]
ReadoutError = Union[float, Tuple[float, float]]


# ---------------------------------------------------------------------------
# Displaced parity and Wigner values
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _displaced_parity(beta: complex, cutoff: int) -> np.ndarray:
    padded = max(cutoff, truncation_guard(beta))
    if padded > MAX_PADDED_CUTOFF:
        warnings.warn(
            f"Displacement |beta|={abs(beta):.2f} needs cutoff {padded}; "
            f"using {MAX_PADDED_CUTOFF}",
            TruncationWarning,
            stacklevel=3,
        )
        padded = max(cutoff, MAX_PADDED_CUTOFF)
    d = displacement_matrix(beta, padded)
    parity = (-1.0) ** np.arange(padded)
    full = (d * parity) @ d.conj().T
    out = full[:cutoff, :cutoff].copy()
    out.setflags(write=False)
    return out


def displaced_parity(beta: complex, cutoff: int) -> np.ndarray:
    """D(beta) P D(beta)^dag truncated to `cutoff` after computing on a padded space"""
    return _displaced_parity(complex(beta), int(cutoff))


def _scale(normalization: str, modes: int) -> float:
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"Unknown normalization '{normalization}'. Available: {NORMALIZATIONS}")
    return WIGNER_SCALE ** modes if normalization == "wigner" else 1.0


def wigner_single(rho: State, beta: complex, normalization: str = "wigner") -> float:
    """
    (2/pi) Tr[D(beta) P D(beta)^dag rho] for a single-mode state

    normalization='parity' drops the 2/pi factor.
    """
    rho = as_density(rho)
    if len(rho.space) != 1:
        raise SpaceMismatch(f"Single-mode state expected, got {len(rho.space)} modes")
    parity = displaced_parity(beta, rho.space[0].cutoff)
    value = float(np.real(np.sum(parity.T * rho.matrix)))
    return _scale(normalization, 1) * value


def wigner_map(
    rho: State,
    radius: float = DEFAULT_RADIUS,
    points: int = DEFAULT_PLANE_POINTS,
    normalization: str = "wigner",
) -> Tuple[np.ndarray, np.ndarray]:
    """Single-mode Wigner function on a square grid; returns (axis, values[im, re])"""
    axis = np.linspace(-radius, radius, points)
    values = np.array([
        [wigner_single(rho, complex(x, y), normalization) for x in axis] for y in axis
    ])
    return axis, values


def _two_mode(rho: State) -> DensityMatrix:
    rho = as_density(rho)
    if [s.label for s in rho.space] != [ALICE, BOB]:
        raise SpaceMismatch("Joint Wigner functions need a state on (Alice, Bob)")
    return rho


def joint_wigner_table(
    rho_ab: State,
    points_a: Sequence[complex],
    points_b: Sequence[complex],
    normalization: str = "parity",
) -> np.ndarray:
    """Joint Wigner values on the product grid points_a x points_b"""
    rho = _two_mode(rho_ab)
    ca, cb = rho.dims
    tensor = rho.matrix.reshape(ca, cb, ca, cb)
    pa = np.stack([displaced_parity(b, ca) for b in points_a])
    pb = np.stack([displaced_parity(b, cb) for b in points_b])
    values = np.einsum("pxa,qyb,abxy->pq", pa, pb, tensor, optimize=True)
    return _scale(normalization, 2) * values.real


def joint_wigner(
    rho_ab: State, beta1: complex, beta2: complex, normalization: str = "parity"
) -> float:
    """<D(b1) P_A D(b1)^dag x D(b2) P_B D(b2)^dag>, parity normalized by default"""
    return float(joint_wigner_table(rho_ab, [beta1], [beta2], normalization)[0, 0])


def _single_parities(
    rho: DensityMatrix, points_a: Sequence[complex], points_b: Sequence[complex]
) -> Tuple[np.ndarray, np.ndarray]:
    ca, cb = rho.dims
    tensor = rho.matrix.reshape(ca, cb, ca, cb)
    rho_a = np.einsum("abcb->ac", tensor)
    rho_b = np.einsum("abad->bd", tensor)
    pa = np.array([np.sum(displaced_parity(b, ca).T * rho_a).real for b in points_a])
    pb = np.array([np.sum(displaced_parity(b, cb).T * rho_b).real for b in points_b])
    return pa, pb


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """
    Phase-space points with measured or computed (joint) Wigner values

    Points are (beta1, beta2) pairs, beta2 None for single-mode grids.
    shots_per_point is 0 for exact values. `axes` holds the two single-mode
    point lists when the grid is their full product in row-major order.
    """

    points: Tuple[Point, ...]
    values: np.ndarray
    shots_per_point: int = 0
    normalization: str = "parity"
    axes: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).ravel()
        points = tuple((complex(b1), None if b2 is None else complex(b2))
                       for b1, b2 in self.points)
        if len(points) != values.size:
            raise ValueError(f"{len(points)} points but {values.size} values")
        _scale(self.normalization, 1)
        modes = 1 if points and points[0][1] is None else 2
        bound = _scale(self.normalization, modes) * (1 + 1e-6)
        if values.size and np.max(np.abs(values)) > bound:
            raise ValueError(f"Wigner values exceed the {self.normalization} bound {bound:.4f}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "points", points)

    @property
    def modes(self) -> int:
        return 1 if self.points and self.points[0][1] is None else 2

    def parity_values(self) -> np.ndarray:
        return self.values / _scale(self.normalization, self.modes)

    def table(self) -> np.ndarray:
        """Values reshaped to (len(axes[0]), len(axes[1])) for product grids"""
        if self.axes is None:
            raise ValueError("Grid is not a product grid")
        return self.values.reshape(len(self.axes[0]), len(self.axes[1]))

    def to_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for index, ((b1, b2), value) in enumerate(zip(self.points, self.values)):
            rows.append({
                "point_index": index,
                "beta1_re": b1.real,
                "beta1_im": b1.imag,
                "beta2_re": "" if b2 is None else b2.real,
                "beta2_im": "" if b2 is None else b2.imag,
                "value": float(value),
            })
        return rows

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[Dict[str, Any]],
        shots_per_point: int = 0,
        normalization: str = "parity",
    ) -> "WignerGrid":
        points = []
        for row in rows:
            b2 = None if row["beta2_re"] in ("", None) else \
                complex(float(row["beta2_re"]), float(row["beta2_im"]))
            points.append((complex(float(row["beta1_re"]), float(row["beta1_im"])), b2))
        values = [float(row["value"]) for row in rows]
        return cls(tuple(points), np.array(values), shots_per_point, normalization)


def product_points(
    points_a: Sequence[complex], points_b: Sequence[complex]
) -> Tuple[Point, ...]:
    return tuple((complex(a), complex(b)) for a in points_a for b in points_b)


def exact_grid(
    rho_ab: State,
    points_a: Sequence[complex],
    points_b: Sequence[complex],
    normalization: str = "parity",
) -> WignerGrid:
    """Exact joint Wigner values on a product grid"""
    values = joint_wigner_table(rho_ab, points_a, points_b, normalization)
    axes = (np.asarray(points_a, dtype=complex), np.asarray(points_b, dtype=complex))
    return WignerGrid(product_points(points_a, points_b), values, 0, normalization, axes)


def plane_axis(radius: float = DEFAULT_RADIUS, points: int = DEFAULT_PLANE_POINTS,
               plane: str = "re") -> np.ndarray:
    if plane not in ("re", "im"):
        raise ValueError(f"Unknown plane '{plane}'. Available: re, im")
    axis = np.linspace(-radius, radius, points)
    return axis.astype(complex) if plane == "re" else 1j * axis


def wigner_plane(
    rho_ab: State,
    plane: str = "re",
    radius: float = DEFAULT_RADIUS,
    points: int = DEFAULT_PLANE_POINTS,
    normalization: str = "parity",
) -> WignerGrid:
    """
    Joint Wigner function on the Re-Re (beta real) or Im-Im (beta imaginary) plane
    """
    axis = plane_axis(radius, points, plane)
    return exact_grid(rho_ab, axis, axis, normalization)


def fringe_contrast(grid: WignerGrid) -> float:
    """Half the peak-to-peak spread of the grid values"""
    if grid.values.size == 0:
        raise ValueError("Empty grid")
    return float((grid.values.max() - grid.values.min()) / 2)


def tomography_points(cutoff: int, radius: Optional[float] = None) -> np.ndarray:
    """
    Single-mode displacements for reconstruction: the origin plus rings

    Rings of 4, 8, 12, ... points at evenly spaced radii are added until at
    least 1.5 cutoff^2 points are available.
    """
    radius = radius if radius is not None else 0.75 + 0.5 * math.sqrt(cutoff)
    needed = int(math.ceil(1.5 * cutoff * cutoff))
    rings = 1
    while 1 + sum(4 * k for k in range(1, rings + 1)) < needed:
        rings += 1
    points = [0j]
    for k in range(1, rings + 1):
        r = radius * k / rings
        count = 4 * k
        offset = math.pi / count * (k % 2)
        points.extend(r * np.exp(1j * (2 * math.pi * np.arange(count) / count + offset)))
    return np.array(points, dtype=complex)


# ---------------------------------------------------------------------------
# Shot sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    """Per-shot parity outcomes of the two cavities at each displacement point"""

    points: Tuple[Point, ...]
    point_index: np.ndarray
    parity_a: np.ndarray
    parity_b: np.ndarray
    seed: int
    readout_error: Tuple[float, float] = (0.0, 0.0)
    axes: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self) -> None:
        if not (len(self.point_index) == len(self.parity_a) == len(self.parity_b)):
            raise ValueError("Shot arrays must have equal length")

    @property
    def joint(self) -> np.ndarray:
        """Joint parity per shot: the product of the two outcomes"""
        return self.parity_a * self.parity_b

    @property
    def shots_per_point(self) -> int:
        return int(len(self.point_index) // max(1, len(self.points)))

    def point_means(self) -> np.ndarray:
        counts = np.bincount(self.point_index, minlength=len(self.points))
        sums = np.bincount(self.point_index, weights=self.joint, minlength=len(self.points))
        return sums / np.maximum(counts, 1)

    def to_grid(self) -> WignerGrid:
        return WignerGrid(self.points, self.point_means(), self.shots_per_point,
                          "parity", self.axes)

    def to_rows(self) -> List[Dict[str, Any]]:
        return [
            {"point_index": int(i), "parity_a": int(a), "parity_b": int(b)}
            for i, a, b in zip(self.point_index, self.parity_a, self.parity_b)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "readout_error": list(self.readout_error),
            "points": [[b1.real, b1.imag, b2.real, b2.imag] for b1, b2 in self.points],
            "shots": len(self.point_index),
        }


def _readout_pair(readout_err: ReadoutError) -> Tuple[float, float]:
    if isinstance(readout_err, (int, float)):
        pair = (float(readout_err), float(readout_err))
    else:
        pair = (float(readout_err[0]), float(readout_err[1]))
    for e in pair:
        if not 0 <= e <= 0.5:
            raise ValueError(f"Readout error must lie in [0, 0.5], got {e}")
    return pair


def sample_parity_shots(
    rho_ab: State,
    points: Sequence[Point],
    n_shots: int,
    readout_err: ReadoutError = 0.0,
    seed: Optional[int] = None,
) -> MeasurementRecord:
    """
    Draw single-shot parity pairs at each displacement point

    Outcomes come from the exact four-outcome distribution of the commuting
    displaced-parity observables; each outcome is then flipped with the
    ancilla's readout error. Point k uses the stream default_rng([seed, k]).

    Raises:
        SeedRequired: If seed is None
    """
    if seed is None:
        raise SeedRequired("Shot sampling needs an explicit seed")
    if n_shots < 1:
        raise ValueError(f"n_shots must be >= 1, got {n_shots}")
    rho = _two_mode(rho_ab)
    e_a, e_b = _readout_pair(readout_err)
    points = tuple((complex(b1), complex(b2)) for b1, b2 in points)
    trace = max(rho.trace(), 0.0)

    outcomes = np.array([(1, 1), (1, -1), (-1, 1), (-1, -1)], dtype=np.int8)
    index = np.repeat(np.arange(len(points)), n_shots)
    parity_a = np.empty(len(points) * n_shots, dtype=np.int8)
    parity_b = np.empty_like(parity_a)
    for k, (b1, b2) in enumerate(points):
        joint = joint_wigner_table(rho, [b1], [b2])[0, 0]
        single_a, single_b = _single_parities(rho, [b1], [b2])
        probs = np.array([
            trace + sa * single_a[0] + sb * single_b[0] + sa * sb * joint
            for sa, sb in outcomes
        ]) / 4
        probs = np.clip(probs, 0.0, None)
        total = probs.sum()
        probs = probs / total if total > 0 else np.full(4, 0.25)
        rng = np.random.default_rng([seed, k])
        draws = outcomes[rng.choice(4, size=n_shots, p=probs)]
        flips_a = np.where(rng.random(n_shots) < e_a, -1, 1).astype(np.int8)
        flips_b = np.where(rng.random(n_shots) < e_b, -1, 1).astype(np.int8)
        parity_a[k * n_shots: (k + 1) * n_shots] = draws[:, 0] * flips_a
        parity_b[k * n_shots: (k + 1) * n_shots] = draws[:, 1] * flips_b
    logger.debug("Sampled %d shots at %d points (seed %d)", len(index), len(points), seed)
    return MeasurementRecord(points, index, parity_a, parity_b, seed, (e_a, e_b))


def sample_grid(
    rho_ab: State,
    points_a: Sequence[complex],
    points_b: Sequence[complex],
    n_shots: int,
    readout_err: ReadoutError = 0.0,
    seed: Optional[int] = None,
) -> WignerGrid:
    """Shot-averaged joint parities on a product grid"""
    record = sample_parity_shots(
        rho_ab, product_points(points_a, points_b), n_shots, readout_err, seed
    )
    axes = (np.asarray(points_a, dtype=complex), np.asarray(points_b, dtype=complex))
    return WignerGrid(record.points, record.point_means(), n_shots, "parity", axes)


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _hermitian_basis(cutoff: int) -> np.ndarray:
    """Orthonormal Hermitian basis, Tr(G_k G_l) = delta_kl, shape (c^2, c, c)"""
    basis = []
    for n in range(cutoff):
        g = np.zeros((cutoff, cutoff), dtype=complex)
        g[n, n] = 1.0
        basis.append(g)
    for m in range(cutoff):
        for n in range(m + 1, cutoff):
            sym = np.zeros((cutoff, cutoff), dtype=complex)
            sym[m, n] = sym[n, m] = 1 / math.sqrt(2)
            anti = np.zeros((cutoff, cutoff), dtype=complex)
            anti[m, n] = -1j / math.sqrt(2)
            anti[n, m] = 1j / math.sqrt(2)
            basis.extend([sym, anti])
    out = np.array(basis)
    out.setflags(write=False)
    return out


def _design_matrix(points: Sequence[complex], cutoff: int) -> np.ndarray:
    """A[p, k] = Tr(G_k D(beta_p) P D(beta_p)^dag)"""
    basis = _hermitian_basis(cutoff)
    parities = np.stack([displaced_parity(b, cutoff) for b in points])
    return np.einsum("kij,pji->pk", basis, parities).real


def _solver(design: np.ndarray, regularization: float) -> np.ndarray:
    if regularization > 0:
        gram = design.T @ design + regularization * np.eye(design.shape[1])
        return la.solve(gram, design.T, assume_a="pos")
    return la.pinv(design)


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Reconstructed state with fit diagnostics"""

    density: DensityMatrix
    residual: float
    effective_rank: int
    clipped: float
    raw_trace: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "residual": self.residual,
            "effective_rank": self.effective_rank,
            "clipped": self.clipped,
            "trace": self.density.trace(),
            "raw_trace": self.raw_trace,
        }


def _project_positive(matrix: np.ndarray) -> Tuple[np.ndarray, float, int]:
    matrix = (matrix + matrix.conj().T) / 2
    w, v = la.eigh(matrix)
    negative = w < -CLIP_TOL
    clipped = float(-w[negative].sum())
    w = np.where(w < 0, 0.0, w)
    out = (v * w) @ v.conj().T
    out = (out + out.conj().T) / 2
    rank = int(np.sum(w > RANK_TOL * max(w.max(initial=0.0), 1e-300)))
    return out, clipped, rank


def reconstruct_density_matrix(
    grid: WignerGrid,
    cutoff: int,
    regularization: float = 0.0,
    spaces: Optional[Space] = None,
) -> ReconstructionResult:
    """
    Least-squares density matrix from (joint) Wigner values, trace left free

    The state is expanded in an orthonormal Hermitian basis. Product grids are
    solved factor by factor; other point sets use a dense least-squares solve.
    Negative eigenvalues are clipped to zero and the clipped weight reported.

    Args:
        grid: Measured or exact values
        cutoff: Per-mode cutoff of the reconstructed state
        regularization: Ridge parameter applied to each design factor
        spaces: Mode spaces of the result, (Alice, Bob) or (Alice,) by default

    Raises:
        UnderdeterminedGrid: If the points cannot determine a cutoff-sized state
            or all values vanish
        NonConvergence: If the solve produces non-finite numbers
    """
    if cutoff < 1:
        raise ValueError(f"Cutoff must be >= 1, got {cutoff}")
    values = grid.parity_values()
    if values.size == 0 or not np.any(np.abs(values) > 0):
        raise UnderdeterminedGrid("All grid values vanish; nothing to reconstruct")
    modes = grid.modes
    c2 = cutoff * cutoff
    basis = _hermitian_basis(cutoff)

    if modes == 1:
        design = _design_matrix([b1 for b1, _ in grid.points], cutoff)
        if np.linalg.matrix_rank(design) < c2:
            raise UnderdeterminedGrid(f"Grid rank below {c2} for cutoff {cutoff}")
        coeffs = _solver(design, regularization) @ values
        model = design @ coeffs
        matrix = np.einsum("k,kij->ij", coeffs, basis)
        default = (cavity_space(cutoff, ALICE),)
    elif grid.axes is not None:
        design_a = _design_matrix(grid.axes[0], cutoff)
        design_b = _design_matrix(grid.axes[1], cutoff)
        for design in (design_a, design_b):
            if np.linalg.matrix_rank(design) < c2:
                raise UnderdeterminedGrid(f"Grid factor rank below {c2} for cutoff {cutoff}")
        table = values.reshape(len(grid.axes[0]), len(grid.axes[1]))
        coeffs = _solver(design_a, regularization) @ table @ _solver(design_b, regularization).T
        model = (design_a @ coeffs @ design_b.T).ravel()
        matrix = np.einsum("kl,kij,lxy->ixjy", coeffs, basis, basis).reshape(c2, c2)
        default = (cavity_space(cutoff, ALICE), cavity_space(cutoff, BOB))
    else:
        design_a = _design_matrix([b1 for b1, _ in grid.points], cutoff)
        design_b = _design_matrix([b2 for _, b2 in grid.points], cutoff)
        design = np.einsum("pk,pl->pkl", design_a, design_b).reshape(len(values), c2 * c2)
        if np.linalg.matrix_rank(design) < c2 * c2:
            raise UnderdeterminedGrid(f"Grid rank below {c2 * c2} for cutoff {cutoff}")
        coeffs = _solver(design, regularization) @ values
        model = design @ coeffs
        matrix = np.einsum("kl,kij,lxy->ixjy", coeffs.reshape(c2, c2), basis, basis
                           ).reshape(c2, c2)
        default = (cavity_space(cutoff, ALICE), cavity_space(cutoff, BOB))

    if not np.all(np.isfinite(matrix)):
        raise NonConvergence("Reconstruction produced non-finite entries")
    residual = float(np.sqrt(np.mean((model - values) ** 2)))
    raw_trace = float(np.trace(matrix).real)
    physical, clipped, rank = _project_positive(matrix)
    if clipped > 1e-6:
        logger.warning("Reconstruction clipped negative weight %.2e", clipped)
    space = as_space(spaces) if spaces is not None else default
    logger.debug("Reconstruction residual %.3e, rank %d, trace %.4f", residual, rank,
                 raw_trace)
    return ReconstructionResult(DensityMatrix(physical, space), residual, rank, clipped,
                                raw_trace)


# ---------------------------------------------------------------------------
# Ancilla-conditioned states and three-mode assembly
# ---------------------------------------------------------------------------


def _ancilla_vectors(convention: str) -> Dict[str, np.ndarray]:
    if convention not in CONVENTIONS:
        raise ValueError(f"Unknown convention '{convention}'. Available: {CONVENTIONS}")
    s = 1 / math.sqrt(2)
    second = np.array([s, 1j * s]) if convention == "y" else np.array([s, -s])
    return {
        "g": np.array([1.0, 0.0], dtype=complex),
        "e": np.array([0.0, 1.0], dtype=complex),
        "+": np.array([s, s], dtype=complex),
        "-": second.astype(complex),
    }


def conditional_states(rho: State, convention: str = "y") -> Dict[str, DensityMatrix]:
    """
    Unnormalized cavity states <k| rho |k> for ancilla projections g, e, +, -

    With convention 'y' the '-' projection is (|g> + i|e>)/sqrt(2); with 'x' it
    is (|g> - |e>)/sqrt(2).
    """
    rho = as_density(rho)
    if rho.space[0].label != ANCILLA or rho.space[0].cutoff != 2:
        raise SpaceMismatch("Conditional states need a two-level ancilla as the first mode")
    cavities = rho.space[1:]
    d = rho.matrix.shape[0] // 2
    blocks = rho.matrix.reshape(2, d, 2, d)
    out = {}
    for label, vec in _ancilla_vectors(convention).items():
        matrix = np.einsum("i,iajb,j->ab", vec.conj(), blocks, vec)
        out[label] = DensityMatrix(matrix, cavities)
    return out


@dataclass(frozen=True, eq=False)
class AssembledState:
    density: DensityMatrix
    hermiticity_residual: float


def assemble_three_mode(
    e_gg: State, e_ee: State, e_pp: State, e_mm: State, convention: str = "y"
) -> AssembledState:
    """
    Ancilla-cavity density matrix from four ancilla-conditioned cavity states

    rho = [[rho1, rho2], [rho3, rho4]] with rho1 = E(g), rho4 = E(e),
    rho2 = E(+) - i E(-) - (1 - i)(rho1 + rho4)/2 and
    rho3 = E(+) + i E(-) - (1 + i)(rho1 + rho4)/2.
    The result is Hermitized and the residual reported.

    Raises:
        SpaceMismatch: If the four states do not share a space
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"Unknown convention '{convention}'. Available: {CONVENTIONS}")
    states = [as_density(s) for s in (e_gg, e_ee, e_pp, e_mm)]
    space = states[0].space
    if any(s.space != space for s in states):
        raise SpaceMismatch("Conditional states act on different spaces")
    rho1, rho4, plus, minus = (s.matrix for s in states)
    rho2 = plus - 1j * minus - (1 - 1j) * (rho1 + rho4) / 2
    rho3 = plus + 1j * minus - (1 + 1j) * (rho1 + rho4) / 2
    block = np.block([[rho1, rho2], [rho3, rho4]])
    residual = float(np.max(np.abs(block - block.conj().T)))
    block = (block + block.conj().T) / 2
    if residual > 1e-9:
        logger.debug("Three-mode assembly Hermiticity residual %.3e", residual)
    return AssembledState(DensityMatrix(block, (ancilla_space(),) + tuple(space)), residual)


# ---------------------------------------------------------------------------
# Sixteen-point Pauli measurement plan
# ---------------------------------------------------------------------------

_SIGMA = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True, eq=False)
class PauliPlan:
    """
    Sixteen joint-parity points and the linear map to the logical correlators

    Single-mode displacements are {0, -alpha, alpha, i pi / (8 alpha)}; the
    joint points are all their pairs. For states inside the code space the
    map is exact; leakage out of the code space biases the estimate.
    """

    single_points: np.ndarray
    points: Tuple[Point, ...]
    response: np.ndarray
    inverse: np.ndarray
    cutoff: int

    def correlators_from_values(
        self, values: Sequence[float], contrast: float = 1.0
    ) -> CorrelatorSet:
        """Correlators from the 16 joint parities, clipped to [-1, 1]"""
        values = np.asarray(values, dtype=float) / contrast
        if values.shape != (16,):
            raise ValueError(f"Need 16 joint-parity values, got shape {values.shape}")
        estimate = np.clip(self.inverse @ values, -1.0, 1.0)
        return CorrelatorSet(dict(zip(PAULI_LABELS, estimate.tolist())))

    def exact_values(self, rho_ab: State) -> np.ndarray:
        return joint_wigner_table(rho_ab, self.single_points, self.single_points).ravel()

    def evaluate(self, rho_ab: State) -> CorrelatorSet:
        return self.correlators_from_values(self.exact_values(rho_ab))

    def sample(
        self,
        rho_ab: State,
        n_shots: int,
        readout_err: ReadoutError = 0.0,
        seed: Optional[int] = None,
        correct_contrast: bool = False,
    ) -> CorrelatorSet:
        record = sample_parity_shots(rho_ab, self.points, n_shots, readout_err, seed)
        e_a, e_b = record.readout_error
        contrast = (1 - 2 * e_a) * (1 - 2 * e_b) if correct_contrast else 1.0
        return self.correlators_from_values(record.point_means(), contrast)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "single_points": [[b.real, b.imag] for b in self.single_points],
            "response": self.response.tolist(),
            "cutoff": self.cutoff,
        }


def pauli_points_plan(
    encoding: LogicalEncoding, alpha: Optional[float] = None, cutoff: Optional[int] = None
) -> PauliPlan:
    """
    Measurement plan for the coherent encoding

    response[p, mu] = 1/2 Tr(B^dag Pi_p B sigma_mu) on the orthonormal code
    basis B; the 16 x 16 map from joint parities to correlators is the inverse
    of response x response.

    Raises:
        EncodingUnsupported: For encodings other than 'coherent'
    """
    if encoding.name != "coherent":
        raise EncodingUnsupported(
            f"The sixteen-point plan is defined for the coherent encoding, not '{encoding.name}'"
        )
    alpha = float(alpha if alpha is not None else encoding.params.get("alpha"))
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    cutoff = cutoff or encoding.cutoff
    basis = encoding.padded(np.asarray(encoding.basis), cutoff)
    single = np.array([0.0, -alpha, alpha, 1j * math.pi / (8 * alpha)], dtype=complex)
    response = np.zeros((4, 4))
    for p, beta in enumerate(single):
        reduced = basis.conj().T @ displaced_parity(beta, cutoff) @ basis
        for mu, sigma in enumerate(_SIGMA):
            response[p, mu] = 0.5 * np.trace(reduced @ sigma).real
    full = np.kron(response, response)
    if np.linalg.cond(full) > 1e8:
        raise UnderdeterminedGrid("Pauli plan response is singular for this alpha")
    plan = PauliPlan(single, product_points(single, single), response, la.inv(full), cutoff)
    logger.debug("Pauli plan for alpha=%.3f, condition %.2f", alpha, np.linalg.cond(full))
    return plan
