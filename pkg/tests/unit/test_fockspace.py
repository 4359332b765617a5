#!/usr/bin/env python3
"""
tests/unit/test_fockspace.py

Unit tests for mode spaces, operators and states
"""

import math

import numpy as np
import pytest

from eswap_sim.exceptions import NonFinite, SpaceMismatch, TruncationWarning
from eswap_sim.fockspace import (
    ALICE,
    ANCILLA,
    BOB,
    DensityMatrix,
    ModeSpace,
    Operator,
    StateVector,
    ancilla_space,
    annihilation,
    canonical_spaces,
    cavity_space,
    coherent_state,
    displacement,
    embed,
    entanglement_entropy,
    expm,
    expm_matrix,
    find_mode,
    fock_state,
    identity,
    ket,
    number,
    operator_distance,
    parity_operator,
    partial_trace,
    product_state,
    state_fidelity,
    tensor,
    trace_distance,
)


class TestModeSpace:
    """Test ModeSpace validation and canonical ordering"""

    def test_canonical_order(self):
        """Test canonical spaces are (ancilla, Alice, Bob)"""
        spaces = canonical_spaces(4, 5)
        assert [s.label for s in spaces] == [ANCILLA, ALICE, BOB]
        assert [s.cutoff for s in spaces] == [2, 4, 5]

    def test_without_ancilla(self):
        """Test cavity-only spaces"""
        spaces = canonical_spaces(3, 3, with_ancilla=False)
        assert [s.label for s in spaces] == [ALICE, BOB]

    def test_unknown_label(self):
        """Test unknown mode labels are rejected"""
        with pytest.raises(ValueError, match="Unknown mode label"):
            ModeSpace(3, "charlie")

    def test_small_cutoff(self):
        """Test cutoffs below two are rejected"""
        with pytest.raises(ValueError, match="cutoff"):
            ModeSpace(1, ALICE)

    def test_ancilla_is_two_level(self):
        """Test the ancilla needs cutoff 2 unless extended"""
        with pytest.raises(ValueError, match="Ancilla"):
            ModeSpace(3, ANCILLA)
        assert ModeSpace(3, ANCILLA, extended=True).cutoff == 3

    def test_find_mode_missing(self):
        """Test find_mode on an absent label"""
        with pytest.raises(SpaceMismatch):
            find_mode(canonical_spaces(3, 3, with_ancilla=False), ANCILLA)


class TestOperators:
    """Test elementary operators"""

    def test_annihilation_matrix_elements(self):
        """Test <n-1|a|n> = sqrt(n)"""
        a = annihilation(cavity_space(4)).matrix
        for n in range(1, 4):
            assert a[n - 1, n] == pytest.approx(math.sqrt(n))

    def test_number_from_ladder(self):
        """Test a^dag a equals the number operator"""
        space = cavity_space(5)
        a = annihilation(space)
        assert np.allclose((a.dag() @ a).matrix, number(space).matrix)

    def test_parity_diagonal(self):
        """Test the parity operator is diag((-1)^n)"""
        p = parity_operator(cavity_space(4)).matrix
        assert np.allclose(np.diag(p), [1, -1, 1, -1])

    def test_matmul_space_mismatch(self):
        """Test operators on different spaces cannot be multiplied"""
        a = annihilation(cavity_space(3, ALICE))
        b = annihilation(cavity_space(3, BOB))
        with pytest.raises(SpaceMismatch):
            a @ b

    def test_shape_mismatch(self):
        """Test operator shape must match the space dimension"""
        with pytest.raises(SpaceMismatch):
            Operator(np.eye(4), (cavity_space(3),))

    def test_operator_is_immutable(self):
        """Test operator matrices are read-only"""
        op = number(cavity_space(3))
        with pytest.raises(ValueError):
            op.matrix[0, 0] = 1.0

    def test_displacement_unitary(self):
        """Test D(beta) is unitary on a guarded cutoff"""
        d = displacement(0.5 + 0.2j, cavity_space(12))
        assert d.is_unitary(1e-9)

    def test_displacement_warns_below_guard(self):
        """Test the truncation warning for small cutoffs"""
        with pytest.warns(TruncationWarning):
            displacement(2.0, cavity_space(5))

    def test_coherent_state_mean_photons(self):
        """Test <n> = |alpha|^2 for a coherent state"""
        space = cavity_space(20)
        psi = coherent_state(1.2, space)
        mean = number(space).expect(psi).real
        assert mean == pytest.approx(1.44, abs=1e-6)


class TestTensorStructure:
    """Test embedding, product states and partial traces"""

    def test_embed_preserves_target_order(self, small_spaces):
        """Test embedding a Bob operator into (ancilla, Alice, Bob)"""
        bob = find_mode(small_spaces, BOB)
        n_b = embed(number(bob), small_spaces)
        psi = ket(small_spaces, (1, 0, 2))
        assert n_b.expect(psi).real == pytest.approx(2.0)

    def test_embed_rejects_foreign_mode(self, small_spaces):
        """Test embedding an operator on a mode with another cutoff"""
        with pytest.raises(SpaceMismatch):
            embed(number(cavity_space(5, ALICE)), small_spaces)

    def test_product_state_canonical_order(self):
        """Test product_state sorts factors into canonical order"""
        alice = fock_state(1, cavity_space(3, ALICE))
        bob = fock_state(2, cavity_space(3, BOB))
        state = product_state([bob, alice])
        assert [s.label for s in state.space] == [ALICE, BOB]
        assert np.allclose(state.amplitudes, ket(state.space, (1, 2)).amplitudes)

    def test_tensor_identities(self):
        """Test tensor(I2, I3) = I6"""
        product = tensor([identity(cavity_space(2, ALICE)), identity(cavity_space(3, BOB))])
        assert np.allclose(product.matrix, np.eye(6))

    def test_tensor_canonical_order(self):
        """Test tensor sorts factors into (ancilla, Alice, Bob) order"""
        a_bob = annihilation(cavity_space(3, BOB))
        n_alice = number(cavity_space(2, ALICE))
        flip = Operator(np.array([[0, 1], [1, 0]]), (ancilla_space(),))
        product = tensor([a_bob, flip, n_alice])
        assert [s.label for s in product.space] == [ANCILLA, ALICE, BOB]
        expected = np.kron(flip.matrix, np.kron(n_alice.matrix, a_bob.matrix))
        assert np.allclose(product.matrix, expected)

    def test_tensor_associative(self):
        """Test grouping of the factors does not matter"""
        rng = np.random.default_rng(4)
        ops = [
            Operator(rng.normal(size=(s.cutoff, s.cutoff)), (s,))
            for s in canonical_spaces(2, 3)
        ]
        left = tensor([tensor(ops[:2]), ops[2]])
        right = tensor([ops[0], tensor(ops[1:])])
        assert left.space == right.space
        assert np.allclose(left.matrix, right.matrix)

    def test_tensor_repeated_mode(self):
        """Test two factors on the same mode"""
        with pytest.raises(SpaceMismatch):
            tensor([number(cavity_space(2, ALICE)), number(cavity_space(2, ALICE))])

    def test_ket_occupation_count(self, cavity_spaces):
        """Test ket needs one occupation per mode"""
        with pytest.raises(SpaceMismatch):
            ket(cavity_spaces, (0,))

    def test_partial_trace_of_product(self, cavity_spaces):
        """Test the reduced state of a product state"""
        rho = ket(cavity_spaces, (0, 2)).to_density()
        reduced = partial_trace(rho, [BOB])
        assert reduced.space == (cavity_spaces[1],)
        assert reduced.matrix[2, 2].real == pytest.approx(1.0)

    def test_entanglement_entropy_bell_like(self, cavity_spaces):
        """Test entropy ln 2 for (|0,1> + |1,0>)/sqrt(2)"""
        amplitudes = (ket(cavity_spaces, (0, 1)).amplitudes
                      + ket(cavity_spaces, (1, 0)).amplitudes) / math.sqrt(2)
        psi = StateVector(amplitudes, cavity_spaces)
        assert entanglement_entropy(psi, [ALICE]) == pytest.approx(math.log(2))


def _taylor_expm(matrix, terms=80):
    """Truncated power series of exp(matrix)"""
    result = np.eye(matrix.shape[0], dtype=complex)
    term = np.eye(matrix.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ matrix / k
        result = result + term
    return result


class TestMatrixFunctions:
    """Test the matrix exponential against its power series"""

    @pytest.fixture
    def hermitian(self):
        rng = np.random.default_rng(21)
        x = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        return (x + x.conj().T) / 2

    def test_hermitian_unitary_evolution(self, hermitian):
        """Test exp(-i t H) for Hermitian H matches the series and is unitary"""
        u = expm_matrix(hermitian, -0.3j)
        assert np.max(np.abs(u - _taylor_expm(-0.3j * hermitian))) < 1e-10
        assert np.max(np.abs(u.conj().T @ u - np.eye(8))) < 1e-10

    def test_hermitian_real_scale(self, hermitian):
        """Test exp(s H) for a real scale"""
        assert np.allclose(expm_matrix(hermitian, 0.2), _taylor_expm(0.2 * hermitian),
                           atol=1e-10)

    def test_anti_hermitian(self, hermitian):
        """Test the anti-Hermitian branch"""
        assert np.allclose(expm_matrix(1j * hermitian, 0.25), _taylor_expm(0.25j * hermitian),
                           atol=1e-10)

    def test_general_matrix(self):
        """Test a non-normal matrix through scaling and squaring"""
        rng = np.random.default_rng(8)
        m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        assert np.allclose(expm_matrix(m, 0.3), _taylor_expm(0.3 * m), atol=1e-10)

    def test_expm_operator_keeps_space(self, cavity_spaces):
        """Test expm of an Operator stays on its space"""
        n_a = embed(number(cavity_spaces[0]), cavity_spaces)
        u = expm(n_a, 1j * math.pi)
        assert u.space == cavity_spaces
        assert np.allclose(u.matrix, embed(parity_operator(cavity_spaces[0]), cavity_spaces).matrix)


class TestMetrics:
    """Test fidelities and distances"""

    def test_fidelity_pure_states(self, cavity_spaces):
        """Test orthogonal and identical pure states"""
        a = ket(cavity_spaces, (0, 1))
        b = ket(cavity_spaces, (1, 0))
        assert state_fidelity(a, a) == pytest.approx(1.0)
        assert state_fidelity(a, b) == pytest.approx(0.0)

    def test_fidelity_mixed_states(self):
        """Test Uhlmann fidelity of two diagonal mixed states"""
        space = (cavity_space(2),)
        rho = DensityMatrix(np.diag([0.5, 0.5]), space)
        sigma = DensityMatrix(np.diag([0.9, 0.1]), space)
        expected = (math.sqrt(0.45) + math.sqrt(0.05)) ** 2
        assert state_fidelity(rho, sigma) == pytest.approx(expected)

    def test_fidelity_space_mismatch(self):
        """Test fidelity between different spaces"""
        with pytest.raises(SpaceMismatch):
            state_fidelity(
                fock_state(0, cavity_space(2)), fock_state(0, cavity_space(3))
            )

    def test_trace_distance_orthogonal(self, cavity_spaces):
        """Test trace distance one for orthogonal states"""
        a = ket(cavity_spaces, (0, 1))
        b = ket(cavity_spaces, (1, 0))
        assert trace_distance(a, b) == pytest.approx(1.0)

    def test_operator_distance_global_phase(self):
        """Test the phase-minimised distance ignores a global phase"""
        u = np.array([[0, 1], [1, 0]], dtype=complex)
        distance, phase = operator_distance(np.exp(0.3j) * u, u)
        assert distance < 1e-12
        assert phase == pytest.approx(0.3)

    def test_expm_overflow(self):
        """Test non-finite matrix exponentials raise NonFinite"""
        with pytest.raises(NonFinite):
            expm_matrix(np.diag([1000.0, 0.0]), 1000.0)


class TestSerialization:
    """Test dictionary payloads"""

    def test_density_matrix_payload(self, small_spaces):
        """Test density payload carries dims and mode order"""
        rho = ket(small_spaces, (1, 0, 2)).to_density()
        payload = rho.to_dict()
        assert payload["kind"] == "density"
        assert payload["dims"] == [2, 3, 3]
        assert payload["mode_order"] == [ANCILLA, ALICE, BOB]
        restored = DensityMatrix.from_dict(payload)
        assert restored.space == rho.space
        assert np.allclose(restored.matrix, rho.matrix)
