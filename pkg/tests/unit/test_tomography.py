#!/usr/bin/env python3
"""
tests/unit/test_tomography.py

Unit tests for Wigner values, shot sampling, reconstruction, three-mode
assembly and the sixteen-point Pauli plan
"""

import math

import numpy as np
import pytest

from eswap_sim.encodings import (
    PAULI_LABELS,
    correlators,
    encode_two_qubit,
    make_encoding,
)
from eswap_sim.exceptions import (
    EncodingUnsupported,
    SeedRequired,
    SpaceMismatch,
    UnderdeterminedGrid,
)
from eswap_sim.fockspace import (
    ALICE,
    DensityMatrix,
    StateVector,
    canonical_spaces,
    cavity_space,
    fock_state,
    ket,
    parity_operator,
    state_fidelity,
    trace_distance,
)
from eswap_sim.tomography import (
    WIGNER_SCALE,
    WignerGrid,
    assemble_three_mode,
    conditional_states,
    displaced_parity,
    exact_grid,
    fringe_contrast,
    joint_wigner,
    pauli_points_plan,
    reconstruct_density_matrix,
    sample_grid,
    sample_parity_shots,
    tomography_points,
    wigner_map,
    wigner_plane,
    wigner_single,
)


def _bell_like(spaces):
    """(|0,1> + i|1,0>)/sqrt(2) on (Alice, Bob)"""
    amplitudes = (ket(spaces, (0, 1)).amplitudes + 1j * ket(spaces, (1, 0)).amplitudes)
    return StateVector(amplitudes / math.sqrt(2), spaces)


class TestWignerValues:
    """Test single-mode and joint Wigner values"""

    def test_displaced_parity_at_origin(self):
        """Test D(0) P D(0)^dag is the parity operator"""
        expected = parity_operator(cavity_space(4)).matrix
        assert np.allclose(displaced_parity(0.0, 4), expected)

    def test_vacuum_and_one_photon(self):
        """Test W(0) = 2/pi for |0> and -2/pi for |1>"""
        space = cavity_space(4)
        assert wigner_single(fock_state(0, space), 0.0) == pytest.approx(WIGNER_SCALE)
        assert wigner_single(fock_state(1, space), 0.0) == pytest.approx(-WIGNER_SCALE)
        assert wigner_single(fock_state(1, space), 0.0, "parity") == pytest.approx(-1.0)

    def test_vacuum_gaussian(self):
        """Test W(beta) = (2/pi) exp(-2|beta|^2) for the vacuum"""
        value = wigner_single(fock_state(0, cavity_space(6)), 0.5 + 0.5j)
        assert value == pytest.approx(WIGNER_SCALE * math.exp(-1.0), abs=1e-6)

    def test_unknown_normalization(self):
        """Test normalizations other than wigner and parity"""
        with pytest.raises(ValueError, match="normalization"):
            wigner_single(fock_state(0, cavity_space(3)), 0.0, "husimi")

    def test_single_mode_required(self, cavity_spaces):
        """Test wigner_single on a two-mode state"""
        with pytest.raises(SpaceMismatch):
            wigner_single(ket(cavity_spaces, (0, 0)), 0.0)

    def test_wigner_map_peak(self):
        """Test the vacuum map peaks at the origin"""
        axis, values = wigner_map(fock_state(0, cavity_space(6)), radius=1.0, points=5)
        assert values.shape == (5, 5)
        assert axis[2] == pytest.approx(0.0)
        assert np.unravel_index(np.argmax(values), values.shape) == (2, 2)

    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_wigner_integrates_to_trace(self, n):
        """Test the integral of W over phase space equals Tr rho"""
        rho = fock_state(n, cavity_space(8)).to_density()
        axis, values = wigner_map(rho, radius=3.0, points=49)
        step = axis[1] - axis[0]
        assert float(np.sum(values)) * step ** 2 == pytest.approx(rho.trace(), rel=0.02)

    def test_joint_parity_at_origin(self, cavity_spaces):
        """Test the joint parity of |0,1> at the origin is -1"""
        assert joint_wigner(ket(cavity_spaces, (0, 1)), 0.0, 0.0) == pytest.approx(-1.0)

    def test_joint_needs_two_cavities(self, small_spaces):
        """Test joint Wigner values on a three-mode state"""
        with pytest.raises(SpaceMismatch):
            joint_wigner(ket(small_spaces, (0, 0, 1)), 0.0, 0.0)


class TestWignerGrid:
    """Test grid validation and helpers"""

    def test_value_bound(self):
        """Test parity values above one"""
        with pytest.raises(ValueError, match="bound"):
            WignerGrid(((0j, 0j),), np.array([1.5]))

    def test_point_count(self):
        """Test mismatched points and values"""
        with pytest.raises(ValueError, match="points"):
            WignerGrid(((0j, 0j),), np.array([0.1, 0.2]))

    def test_rows_round_trip(self, cavity_spaces):
        """Test grids survive to_rows/from_rows"""
        grid = wigner_plane(ket(cavity_spaces, (0, 1)), radius=1.0, points=3)
        restored = WignerGrid.from_rows(grid.to_rows())
        assert np.allclose(restored.values, grid.values)
        assert restored.points == grid.points

    def test_table_requires_product(self):
        """Test table() on a scattered grid"""
        grid = WignerGrid(((0j, 0j), (1j, 0j)), np.array([0.1, 0.2]))
        with pytest.raises(ValueError, match="product"):
            grid.table()

    def test_plane_table_shape(self, cavity_spaces):
        """Test the Re-Re plane is a product table"""
        grid = wigner_plane(ket(cavity_spaces, (0, 1)), radius=1.5, points=7)
        assert grid.table().shape == (7, 7)
        assert grid.table()[3, 3] == pytest.approx(-1.0)

    def test_fringe_contrast(self):
        """Test half the peak-to-peak spread"""
        points = ((0j, 0j), (1j, 1j), (1 + 0j, 1 + 0j))
        grid = WignerGrid(points, np.array([-1.0, 0.5, 0.2]))
        assert fringe_contrast(grid) == pytest.approx(0.75)

    def test_tomography_points(self):
        """Test the origin plus rings give at least 1.5 c^2 points"""
        points = tomography_points(3)
        assert points[0] == 0
        assert len(points) >= math.ceil(1.5 * 9)


class TestSampling:
    """Test single-shot parity sampling"""

    def test_seed_required(self, cavity_spaces):
        """Test sampling without a seed"""
        with pytest.raises(SeedRequired):
            sample_parity_shots(ket(cavity_spaces, (0, 1)), [(0j, 0j)], 10)

    def test_readout_range(self, cavity_spaces):
        """Test readout errors above 0.5"""
        with pytest.raises(ValueError, match="Readout"):
            sample_parity_shots(ket(cavity_spaces, (0, 1)), [(0j, 0j)], 10, 0.7, seed=1)

    def test_deterministic_outcomes(self, cavity_spaces):
        """Test |0,1> at the origin always gives (+1, -1)"""
        record = sample_parity_shots(ket(cavity_spaces, (0, 1)), [(0j, 0j)], 50, seed=3)
        assert np.all(record.parity_a == 1)
        assert np.all(record.parity_b == -1)
        assert record.point_means()[0] == pytest.approx(-1.0)
        assert record.shots_per_point == 50

    def test_same_seed_same_shots(self, cavity_spaces):
        """Test a fixed seed reproduces the shot record"""
        rho = _bell_like(cavity_spaces)
        points = [(0.3 + 0j, 0.3j), (0.5j, -0.2 + 0j)]
        first = sample_parity_shots(rho, points, 100, 0.02, seed=11)
        second = sample_parity_shots(rho, points, 100, 0.02, seed=11)
        assert np.array_equal(first.parity_a, second.parity_a)
        assert np.array_equal(first.parity_b, second.parity_b)

    def test_sampled_grid_near_exact(self, cavity_spaces):
        """Test shot means approach the exact joint parities"""
        rho = _bell_like(cavity_spaces)
        axis = np.array([0.0, 0.4j])
        exact = exact_grid(rho, axis, axis)
        sampled = sample_grid(rho, axis, axis, 4000, seed=5)
        assert sampled.shots_per_point == 4000
        assert np.max(np.abs(sampled.values - exact.values)) < 0.1

    @pytest.mark.parametrize("n_shots", [100, 10_000])
    def test_shot_mean_within_binomial_error(self, cavity_spaces, n_shots):
        """Test the sampled joint parity lies within 4 sigma, sigma = sqrt((1 - m^2) / N)"""
        rho = _bell_like(cavity_spaces)
        point = (0.3 + 0.1j, -0.2j)
        exact = joint_wigner(rho, *point)
        record = sample_parity_shots(rho, [point], n_shots, seed=17)
        sigma = math.sqrt((1 - exact ** 2) / n_shots)
        assert abs(record.point_means()[0] - exact) < 4 * sigma

    def test_readout_contrast_bias(self, cavity_spaces):
        """Test readout error e scales the joint parity by (1 - 2e)^2"""
        error = 0.1
        record = sample_parity_shots(ket(cavity_spaces, (0, 1)), [(0j, 0j)], 10_000, error,
                                     seed=23)
        expected = -((1 - 2 * error) ** 2)
        sigma = math.sqrt((1 - expected ** 2) / 10_000)
        assert abs(record.point_means()[0] - expected) < 4 * sigma


class TestReconstruction:
    """Test least-squares density matrix reconstruction"""

    def test_two_mode_product_grid(self, cavity_spaces):
        """Test an exact product grid reconstructs the state"""
        psi = _bell_like(cavity_spaces)
        points = tomography_points(3)
        result = reconstruct_density_matrix(exact_grid(psi, points, points), 3)
        assert state_fidelity(result.density, psi) == pytest.approx(1.0, abs=1e-6)
        assert result.residual < 1e-8
        assert result.raw_trace == pytest.approx(1.0, abs=1e-6)
        assert result.effective_rank == 1

    def test_single_mode_grid(self):
        """Test reconstruction of a single-mode state"""
        space = cavity_space(3)
        psi = StateVector(np.array([1, 1j, 0]) / math.sqrt(2), (space,))
        points = tomography_points(3)
        values = [wigner_single(psi, b, "parity") for b in points]
        grid = WignerGrid(tuple((b, None) for b in points), np.array(values))
        result = reconstruct_density_matrix(grid, 3)
        assert [s.label for s in result.density.space] == [ALICE]
        assert state_fidelity(result.density, psi) == pytest.approx(1.0, abs=1e-6)

    def test_vanishing_values(self):
        """Test a grid of zeros"""
        grid = WignerGrid(((0j, 0j), (1j, 1j)), np.zeros(2))
        with pytest.raises(UnderdeterminedGrid):
            reconstruct_density_matrix(grid, 2)

    def test_too_few_points(self, cavity_spaces):
        """Test a grid too small for the cutoff"""
        axis = np.array([0.0, 0.5])
        grid = exact_grid(ket(cavity_spaces, (0, 1)), axis, axis)
        with pytest.raises(UnderdeterminedGrid):
            reconstruct_density_matrix(grid, 3)


class TestThreeModeAssembly:
    """Test ancilla-conditioned states and their assembly"""

    def _three_mode_state(self):
        spaces = canonical_spaces(2, 2)
        amplitudes = (ket(spaces, (0, 0, 1)).amplitudes
                      + 1j * ket(spaces, (1, 1, 0)).amplitudes) / math.sqrt(2)
        return StateVector(amplitudes, spaces).to_density()

    def test_round_trip(self):
        """Test conditional states reassemble the original density matrix"""
        rho = self._three_mode_state()
        parts = conditional_states(rho)
        assembled = assemble_three_mode(parts["g"], parts["e"], parts["+"], parts["-"])
        assert assembled.hermiticity_residual < 1e-12
        assert np.allclose(assembled.density.matrix, rho.matrix)

    def test_conditional_traces(self):
        """Test the g and e projections carry half the weight each"""
        parts = conditional_states(self._three_mode_state())
        assert parts["g"].trace() == pytest.approx(0.5)
        assert parts["e"].trace() == pytest.approx(0.5)

    def test_needs_ancilla(self, cavity_spaces):
        """Test conditional states of a cavity-only state"""
        with pytest.raises(SpaceMismatch):
            conditional_states(ket(cavity_spaces, (0, 1)))

    def test_unknown_convention(self):
        """Test conventions other than y and x"""
        with pytest.raises(ValueError, match="convention"):
            conditional_states(self._three_mode_state(), "z")

    @pytest.mark.parametrize("convention,exact", [("y", True), ("x", False)])
    def test_convention_on_ancilla_coherence(self, convention, exact):
        """Test only the y projection matches the assembly for (|g,0,1> + |e,1,0>)/sqrt(2)"""
        spaces = canonical_spaces(2, 2)
        amplitudes = (ket(spaces, (0, 0, 1)).amplitudes
                      + ket(spaces, (1, 1, 0)).amplitudes) / math.sqrt(2)
        rho = StateVector(amplitudes, spaces).to_density()
        parts = conditional_states(rho, convention)
        assembled = assemble_three_mode(parts["g"], parts["e"], parts["+"], parts["-"])
        distance = trace_distance(assembled.density, rho)
        if exact:
            assert distance < 1e-9
        else:
            assert distance > 0.1

    @pytest.mark.parametrize("convention", ["y", "x"])
    def test_convention_without_coherence(self, convention):
        """Test both projections rebuild a state with the ancilla in |e>"""
        spaces = canonical_spaces(2, 2)
        rho = ket(spaces, (1, 0, 1)).to_density()
        parts = conditional_states(rho, convention)
        assembled = assemble_three_mode(parts["g"], parts["e"], parts["+"], parts["-"])
        assert trace_distance(assembled.density, rho) < 1e-9

    def test_mismatched_parts(self, cavity_spaces):
        """Test conditional states on different spaces"""
        a = ket(cavity_spaces, (0, 1)).to_density()
        b = DensityMatrix(np.eye(4) / 4, canonical_spaces(2, 2, with_ancilla=False))
        with pytest.raises(SpaceMismatch):
            assemble_three_mode(a, a, a, b)


class TestPauliPlan:
    """Test the sixteen-point joint-parity plan"""

    def test_coherent_only(self):
        """Test the plan rejects Fock codewords"""
        with pytest.raises(EncodingUnsupported):
            pauli_points_plan(make_encoding("fock"))

    def test_exact_on_code_space(self):
        """Test the plan recovers the correlators of a code-space state"""
        enc = make_encoding("coherent", {"alpha": 1.0})
        plan = pauli_points_plan(enc)
        assert len(plan.points) == 16
        psi = encode_two_qubit(enc, "+0")
        expected = correlators(psi, enc)
        estimate = plan.evaluate(psi)
        for label in PAULI_LABELS:
            assert estimate[label] == pytest.approx(expected[label], abs=1e-6)

    def test_value_count(self):
        """Test fewer than sixteen values"""
        plan = pauli_points_plan(make_encoding("coherent", {"alpha": 1.0}))
        with pytest.raises(ValueError, match="16"):
            plan.correlators_from_values(np.zeros(4))

    def test_sampled_correlators(self):
        """Test sampled correlators are reproducible and stay in range"""
        enc = make_encoding("coherent", {"alpha": 1.0})
        plan = pauli_points_plan(enc)
        psi = encode_two_qubit(enc, "01")
        first = plan.sample(psi, 200, 0.01, seed=4, correct_contrast=True)
        second = plan.sample(psi, 200, 0.01, seed=4, correct_contrast=True)
        for label in PAULI_LABELS:
            assert -1.0 <= first[label] <= 1.0
            assert first[label] == second[label]
