#!/usr/bin/env python3
"""
tests/unit/test_dynamics.py

Unit tests for the noise model, Lindblad engine, channels, spectroscopy,
SPAM and the error budget
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from eswap_sim.circuits import T_CPS, T_ROT, apply, compile_eswap, eswap_ideal
from eswap_sim.dynamics import (
    BUDGET_ROWS,
    MECHANISMS,
    BudgetConfig,
    Channel,
    NoiseModel,
    PulseSchedule,
    SpamModel,
    budget_total,
    check_complete_positivity,
    collapse_operators,
    driven_bs_hamiltonian,
    driven_transfer,
    effective_bs_duration,
    error_budget,
    evolve_circuit,
    kerr_hamiltonian,
    kerr_unitary,
    lindblad_evolve,
    lindblad_trajectory,
    noisy_channel_of_circuit,
    pure_dephasing_rate,
    simulate_cswap_spectroscopy,
    spam_budget,
)
from eswap_sim.encodings import make_encoding
from eswap_sim.exceptions import CPViolation, SpaceMismatch
from eswap_sim.fockspace import (
    DensityMatrix,
    Operator,
    StateVector,
    ancilla_space,
    annihilation,
    as_density,
    canonical_spaces,
    cavity_space,
    embed,
    fock_state,
    ket,
    number,
    state_fidelity,
)


class TestNoiseModel:
    """Test NoiseModel validation and mechanism selection"""

    def test_defaults_are_dissipative(self):
        """Test the default model has finite coherence times"""
        assert NoiseModel().is_dissipative

    def test_noiseless(self):
        """Test the noiseless model keeps only the dispersive shift"""
        noise = NoiseModel.noiseless()
        assert not noise.is_dissipative
        assert noise.kerr_alice == 0.0
        assert noise.chi_qb_bob > 0

    def test_t2_above_twice_t1(self):
        """Test T2 > 2 T1 is rejected"""
        with pytest.raises(ValueError, match="exceeds"):
            NoiseModel(t1_alice=100e-6, t2_alice=300e-6)

    def test_thermal_population_range(self):
        """Test thermal populations must lie in [0, 1)"""
        with pytest.raises(ValueError, match="thermal_qb"):
            NoiseModel(thermal_qb=1.0)

    def test_non_positive_time(self):
        """Test coherence times must be positive"""
        with pytest.raises(ValueError, match="t1_bob"):
            NoiseModel(t1_bob=0.0)

    def test_only_self_kerr(self):
        """Test isolating the self-Kerr mechanism"""
        noise = NoiseModel().only("self_kerr")
        assert not noise.is_dissipative
        assert noise.kerr_alice == NoiseModel().kerr_alice
        assert noise.cps_phase_error == 0.0

    def test_only_photon_loss(self):
        """Test photon loss keeps T1 without pure dephasing"""
        base = NoiseModel()
        noise = base.only("photon_loss")
        assert noise.t1_alice == base.t1_alice
        assert pure_dephasing_rate(noise.t1_alice, noise.t2_alice) == 0.0
        assert math.isinf(noise.t1_qb)

    def test_only_cavity_dephasing(self):
        """Test pure dephasing keeps the original dephasing rate"""
        base = NoiseModel()
        noise = base.only("cavity_dephasing")
        assert math.isinf(noise.t1_bob)
        expected = pure_dephasing_rate(base.t1_bob, base.t2_bob)
        actual = pure_dephasing_rate(noise.t1_bob, noise.t2_bob)
        assert actual == pytest.approx(expected)

    def test_only_all_and_unknown(self):
        """Test 'all' returns the model and unknown names fail"""
        base = NoiseModel()
        assert base.only("all") is base
        with pytest.raises(ValueError, match="Unknown mechanism"):
            base.only("cosmic_rays")

    def test_infinite_times_serialize_as_none(self):
        """Test to_dict maps infinite times to None"""
        payload = NoiseModel.noiseless().to_dict()
        assert payload["t1_alice"] is None


class TestKerr:
    """Test the self-Kerr Hamiltonian and unitary"""

    def test_kerr_hamiltonian_diagonal(self, cavity_spaces):
        """Test (K/2) n(n-1) on |2, 0>"""
        h = kerr_hamiltonian(2.0, 0.0, cavity_spaces)
        psi = ket(cavity_spaces, (2, 0))
        assert h.expect(psi).real == pytest.approx(2.0)

    def test_kerr_unitary_sign(self, cavity_spaces):
        """Test U = exp(-i t (K/2) n(n-1))"""
        u = kerr_unitary(1.0, 0.0, 0.5, cavity_spaces)
        out = u @ ket(cavity_spaces, (2, 0))
        assert out.amplitudes[6] == pytest.approx(np.exp(-0.5j))

    def test_kerr_unitary_negative_time(self, cavity_spaces):
        """Test negative Kerr evolution times"""
        with pytest.raises(ValueError):
            kerr_unitary(1.0, 1.0, -1.0, cavity_spaces)


class TestLindblad:
    """Test the Lindblad integrator"""

    def test_amplitude_decay(self):
        """Test |1> decays as exp(-gamma t)"""
        space = (cavity_space(3),)
        gamma = 1e4
        zero_h = Operator(np.zeros((3, 3)), space)
        collapse = [math.sqrt(gamma) * annihilation(space[0]).matrix]
        rho = lindblad_evolve(fock_state(1, space[0]), zero_h, collapse, 1 / gamma)
        assert rho.matrix[1, 1].real == pytest.approx(math.exp(-1), abs=1e-7)
        assert rho.trace() == pytest.approx(1.0, abs=1e-9)

    def test_photon_loss_lowers_photon_number(self):
        """Test <n_A + n_B> never grows under photon loss from |2,1>"""
        spaces = canonical_spaces(4, 4, with_ancilla=False)
        noise = NoiseModel().only("photon_loss")
        zero_h = Operator(np.zeros((16, 16)), spaces)
        total = sum(embed(number(s), spaces).matrix for s in spaces)
        times = np.linspace(0, 200e-6, 9)
        states = lindblad_trajectory(
            ket(spaces, (2, 1)), zero_h, collapse_operators(noise, spaces), times
        )
        photons = [float(np.real(np.trace(total @ rho.matrix))) for rho in states]
        assert photons[0] == pytest.approx(3.0)
        assert all(b <= a + 1e-9 for a, b in zip(photons, photons[1:]))
        assert photons[-1] < 2.0

    def test_transmon_coherence_decay(self):
        """Test |+> loses coherence as exp(-t/T2) and population as exp(-t/T1)"""
        space = (ancilla_space(),)
        noise = replace(NoiseModel.noiseless(), t1_qb=75e-6, t2_qb=30e-6)
        plus = StateVector(np.array([1.0, 1.0]) / math.sqrt(2), space)
        zero_h = Operator(np.zeros((2, 2)), space)
        t = 20e-6
        rho = lindblad_evolve(plus, zero_h, collapse_operators(noise, space), t)
        assert abs(rho.matrix[0, 1]) == pytest.approx(0.5 * math.exp(-t / 30e-6), abs=1e-6)
        assert rho.matrix[1, 1].real == pytest.approx(0.5 * math.exp(-t / 75e-6), abs=1e-6)

    def test_coarse_step_rejected(self):
        """Test steps above duration/50"""
        space = (cavity_space(2),)
        zero_h = Operator(np.zeros((2, 2)), space)
        with pytest.raises(ValueError, match="exceeds"):
            lindblad_evolve(fock_state(0, space[0]), zero_h, [], 1e-6, dt=1e-7)

    def test_space_mismatch(self):
        """Test Hamiltonian and state on different spaces"""
        h = Operator(np.zeros((3, 3)), (cavity_space(3),))
        with pytest.raises(SpaceMismatch):
            lindblad_evolve(fock_state(0, cavity_space(2)), h, [], 1e-6)

    def test_negative_time(self):
        """Test negative evolution times"""
        space = (cavity_space(2),)
        with pytest.raises(ValueError):
            zero_h = Operator(np.zeros((2, 2)), space)
            lindblad_evolve(fock_state(0, space[0]), zero_h, [], -1.0)


class TestPulseSchedule:
    """Test schedules and exposure accounting"""

    def test_exposure_window(self, small_spaces):
        """Test exposure spans the first to the last ancilla rotation"""
        circuit = compile_eswap(math.pi / 4, small_spaces)
        schedule = PulseSchedule.from_circuit(circuit)
        assert schedule.exposure_window() == (1, 5)
        assert schedule.ancilla_exposure() == pytest.approx(3 * T_ROT + 2 * T_CPS)

    def test_step_too_coarse(self, small_spaces):
        """Test a fixed step above the shortest entry/50"""
        circuit = compile_eswap(math.pi / 4, small_spaces)
        with pytest.raises(ValueError, match="exceeds"):
            PulseSchedule.from_circuit(circuit, dt=1e-8)


class TestEvolveCircuit:
    """Test circuit evolution"""

    def test_noiseless_matches_ideal(self, small_spaces, cavity_spaces):
        """Test noiseless evolution equals the ideal eSWAP on cavity inputs"""
        circuit = compile_eswap(math.pi / 4, small_spaces)
        initial = ket(cavity_spaces, (0, 1))
        outputs, counter = evolve_circuit(circuit, NoiseModel.noiseless(), [initial])
        ideal = eswap_ideal(math.pi / 4, *cavity_spaces) @ initial
        assert outputs[0].space == cavity_spaces
        assert state_fidelity(outputs[0], ideal) == pytest.approx(1.0, abs=1e-9)
        assert counter.steps == 0
        assert counter.gates == len(circuit.gates)
        assert counter.exposure == pytest.approx(3 * T_ROT + 2 * T_CPS)

    def test_full_space_input(self, small_spaces):
        """Test inputs on the full circuit space are returned in full"""
        circuit = compile_eswap(0.3, small_spaces)
        initial = ket(small_spaces, (0, 1, 0))
        outputs, _ = evolve_circuit(circuit, NoiseModel.noiseless(), [initial])
        expected = as_density(apply(circuit, initial))
        assert outputs[0].space == small_spaces
        assert np.allclose(outputs[0].matrix, expected.matrix, atol=1e-9)

    def test_noisy_evolution_trace_preserving(self, cavity_spaces, small_spaces):
        """Test noisy evolution keeps unit trace and loses fidelity"""
        circuit = compile_eswap(math.pi / 4, small_spaces)
        initial = ket(cavity_spaces, (0, 1))
        outputs, counter = evolve_circuit(circuit, NoiseModel(), [initial])
        ideal = eswap_ideal(math.pi / 4, *cavity_spaces) @ initial
        assert outputs[0].trace() == pytest.approx(1.0, abs=1e-6)
        assert counter.steps > 0
        assert 0.5 < state_fidelity(outputs[0], ideal) < 1.0

    def test_empty_batch(self, small_spaces):
        """Test evolving no states"""
        circuit = compile_eswap(0.1, small_spaces)
        outputs, counter = evolve_circuit(circuit, NoiseModel(), [])
        assert outputs == []
        assert counter.gates == 0

    def test_mixed_spaces_rejected(self, small_spaces, cavity_spaces):
        """Test a batch with states on different spaces"""
        circuit = compile_eswap(0.1, small_spaces)
        states = [ket(cavity_spaces, (0, 1)), ket(small_spaces, (0, 0, 1))]
        with pytest.raises(SpaceMismatch):
            evolve_circuit(circuit, NoiseModel.noiseless(), states)


class TestChannel:
    """Test superoperator channels"""

    def test_from_unitary(self, cavity_spaces):
        """Test a unitary channel acts as U rho U^dag"""
        u = eswap_ideal(0.4, *cavity_spaces)
        rho = ket(cavity_spaces, (1, 0)).to_density()
        out = Channel.from_unitary(u).apply(rho)
        expected = u.matrix @ rho.matrix @ u.matrix.conj().T
        assert np.allclose(out.matrix, expected)

    def test_compose(self, cavity_spaces):
        """Test composing two eSWAPs adds their angles"""
        first = Channel.from_unitary(eswap_ideal(0.2, *cavity_spaces))
        second = Channel.from_unitary(eswap_ideal(0.3, *cavity_spaces))
        combined = Channel.from_unitary(eswap_ideal(0.5, *cavity_spaces))
        assert np.allclose(first.compose(second).superop, combined.superop)

    def test_identity_trace_error(self, cavity_spaces):
        """Test the identity channel is trace preserving"""
        assert Channel.identity(cavity_spaces).trace_error() < 1e-12

    def test_transpose_not_cp(self):
        """Test the transpose map violates complete positivity"""
        space = (cavity_space(2),)
        superop = np.zeros((4, 4))
        for i in range(2):
            for j in range(2):
                superop[j * 2 + i, i * 2 + j] = 1.0
        with pytest.raises(CPViolation):
            check_complete_positivity(Channel(superop, space, space))

    def test_shape_mismatch(self, cavity_spaces):
        """Test superoperators of the wrong shape"""
        with pytest.raises(SpaceMismatch):
            Channel(np.eye(4), cavity_spaces, cavity_spaces)

    def test_noisy_channel_of_circuit(self):
        """Test the noisy eSWAP channel is trace preserving and CP"""
        spaces = canonical_spaces(2, 2)
        circuit = compile_eswap(math.pi / 4, spaces)
        channel = noisy_channel_of_circuit(circuit, NoiseModel())
        assert channel.dim_in == 4
        assert channel.trace_error() < 1e-6
        assert check_complete_positivity(channel) < 1e-6
        assert channel.metadata["integration_steps"] > 0


class TestSpectroscopy:
    """Test the conditional beamsplitter chevron"""

    def test_resonance_separation(self):
        """Test the branch resonances are separated by chi / 2 pi"""
        noise = NoiseModel.noiseless()
        detunings = np.linspace(-0.5e6, 1.8e6, 47)
        durations = np.linspace(0, 10e-6, 21)
        smap = simulate_cswap_spectroscopy(detunings, durations, noise=noise)
        expected = noise.chi_qb_bob / (2 * math.pi)
        assert abs(smap.separation() - expected) < 0.05 * expected
        assert smap.resonance_centers()["e"] == pytest.approx(0.0, abs=10e3)

    def test_on_resonance_full_transfer(self):
        """Test a full |0,1> -> |1,0> transfer at the resonant offset"""
        smap = simulate_cswap_spectroscopy([0.0], np.linspace(0, 10e-6, 21),
                                           noise=NoiseModel.noiseless())
        assert smap.transfer["e"].max() > 0.98
        assert smap.transfer["e"][0, 0] == pytest.approx(0.0, abs=1e-12)

    def test_superposition_map(self):
        """Test the superposition map is the branch average"""
        smap = simulate_cswap_spectroscopy([0.0, 1.26e6], [0.0, 5e-6],
                                           noise=NoiseModel.noiseless())
        expected = 0.5 * (smap.transfer["g"] + smap.transfer["e"])
        assert np.allclose(smap.superposition_map(), expected)
        assert len(smap.to_rows()) == 2 * 2 * 2

    def test_invalid_grids(self):
        """Test empty grids and negative durations"""
        with pytest.raises(ValueError):
            simulate_cswap_spectroscopy([], [1e-6])
        with pytest.raises(ValueError):
            simulate_cswap_spectroscopy([0.0], [-1e-6])

    def test_driven_full_swap(self):
        """Test a resonant lab-frame drive swaps |0,1> into |1,0> at t = pi / 2g"""
        g = 2 * math.pi * 50e3
        assert driven_transfer(g, 0.0, math.pi / (2 * g)) > 0.999

    def test_driven_far_detuned(self):
        """Test transfer stays below 4g^2 / (4g^2 + delta^2) for g / delta = 0.1"""
        g = 2 * math.pi * 50e3
        delta = 10 * g
        rabi = math.sqrt(4 * g**2 + delta**2)
        peak = driven_transfer(g, delta, math.pi / rabi)
        assert peak == pytest.approx(4 * g**2 / rabi**2, abs=1e-3)
        for t in (0.3 / g, 1.0 / g, 2.5 / g):
            assert driven_transfer(g, delta, t) < 0.05

    def test_driven_matches_rotating_frame(self):
        """Test the lab-frame drive reproduces the chevron populations"""
        offsets = [0.0, 0.05e6, -0.3e6]
        durations = [3e-6, 7e-6]
        smap = simulate_cswap_spectroscopy(offsets, durations, noise=NoiseModel.noiseless())
        for i, offset in enumerate(offsets):
            for j, t in enumerate(durations):
                lab = driven_transfer(smap.coupling, 2 * math.pi * offset, t)
                assert lab == pytest.approx(smap.transfer["e"][i, j], abs=5e-3)

    def test_driven_branch_conditioned(self):
        """Test only the resonant ancilla branch swaps the cavities"""
        spaces = canonical_spaces(2, 2)
        g = 2 * math.pi * 50e3
        chi = NoiseModel().chi_qb_bob
        h = driven_bs_hamiltonian(g, 0.0, spaces, chi=chi, resonant_branch="e")
        t = math.pi / (2 * g)
        for branch, (start, end), bound in (
            ("e", ((1, 0, 1), (1, 1, 0)), lambda p: p > 0.999),
            ("g", ((0, 0, 1), (0, 1, 0)), lambda p: p < 0.05),
        ):
            rho = lindblad_evolve(ket(spaces, start), h, [], t)
            target = ket(spaces, end).amplitudes
            population = float(np.real(np.vdot(target, rho.matrix @ target)))
            assert bound(population), branch

    def test_driven_zero_coupling(self, cavity_spaces):
        """Test g = 0 is rejected"""
        with pytest.raises(ValueError, match="nonzero"):
            driven_bs_hamiltonian(0.0, 0.0, cavity_spaces)


class TestSpam:
    """Test state preparation and measurement errors"""

    def test_contrast(self):
        """Test joint-parity contrast (1 - 2 e_A)(1 - 2 e_B)"""
        spam = SpamModel(readout_error_a=0.01, readout_error_b=0.015)
        assert spam.contrast() == pytest.approx(0.98 * 0.97)

    def test_disabled(self):
        """Test the disabled model is the identity"""
        spam = SpamModel.none()
        assert spam.contrast() == 1.0
        assert spam.ancilla_excited() == 0.0
        rho = ket(canonical_spaces(3, 3, with_ancilla=False), (1, 1)).to_density()
        assert spam.prepare(rho) is rho

    def test_range(self):
        """Test SPAM probabilities above 0.5"""
        with pytest.raises(ValueError, match="prep_loss"):
            SpamModel(prep_loss=0.6)

    def test_prepare_loss(self, cavity_spaces):
        """Test preparation loss moves population from |1,1> downward"""
        spam = SpamModel(prep_loss=0.1, prep_dephasing=0.0)
        out = spam.prepare(ket(cavity_spaces, (1, 1)))
        assert out.trace() == pytest.approx(1.0)
        assert out.matrix[4, 4].real == pytest.approx(0.81)
        assert out.matrix[0, 0].real == pytest.approx(0.01)

    def test_prepare_keeps_cavity_spaces(self, cavity_spaces):
        """Test prepared states stay density matrices on the cavity spaces"""
        out = SpamModel().prepare(ket(cavity_spaces, (0, 1)))
        assert isinstance(out, DensityMatrix)
        assert out.space == cavity_spaces

    def test_spam_budget_rows(self):
        """Test the SPAM budget lists its items and a combined total"""
        rows = spam_budget(SpamModel(), make_encoding("fock"))
        names = [r["mechanism"] for r in rows]
        assert names == ["ancilla_initialization", "cavity_preparation",
                         "preparation_decoherence", "readout", "total"]
        items = [r["infidelity"] for r in rows[:-1]]
        assert all(0 <= v < 1 for v in items)
        assert rows[-1]["infidelity"] == pytest.approx(
            1 - np.prod([1 - v for v in items]))

    def test_spam_budget_disabled(self):
        """Test a disabled SPAM model has zero budget"""
        rows = spam_budget(SpamModel.none(), make_encoding("fock"))
        assert rows[-1]["infidelity"] == pytest.approx(0.0, abs=1e-12)


class TestErrorBudget:
    """Test the operation error budget"""

    def test_budget_config_validation(self):
        """Test unknown mechanisms and non-positive times"""
        with pytest.raises(ValueError, match="Unknown budget mechanisms"):
            BudgetConfig(mechanisms=("gremlins",))
        with pytest.raises(ValueError, match="> 0"):
            BudgetConfig(exposure_time=0.0)

    def test_budget_rows_cover_mechanisms(self):
        """Test every mechanism plus 'all' is a budget row"""
        assert BUDGET_ROWS == MECHANISMS + ("all",)
        assert len(MECHANISMS) == 7

    def test_effective_bs_duration(self):
        """Test the beamsplitters take the time not used by other gates"""
        other = 2 * T_CPS + 3 * T_ROT
        assert effective_bs_duration(3.9e-6) == pytest.approx((3.9e-6 - other) / 2)
        with pytest.raises(ValueError, match="shorter"):
            effective_bs_duration(1e-6)

    def test_unitary_mechanisms(self):
        """Test self-Kerr and CPS phase errors in the Fock encoding"""
        config = BudgetConfig(encoding="fock", cutoff=3,
                              mechanisms=("self_kerr", "cps_phase"))
        rows = error_budget(config)
        assert [r.mechanism for r in rows] == ["self_kerr", "cps_phase"]
        for row in rows:
            assert 0.0 <= row.infidelity <= 1.0
            assert row.fidelity <= 1.0 + 1e-9
            assert row.effective_time == pytest.approx(config.exposure_time)
        assert rows[0].infidelity > 0.0
        assert budget_total(rows) == pytest.approx(sum(r.infidelity for r in rows))

