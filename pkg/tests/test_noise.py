"""Depolarizing noise tests, including the exact fidelity closed loop."""

import numpy as np
import pytest

from teleinverse.noise import (
    NoiseConfig,
    calibrate_p_for_fidelity,
    depolarize,
    depolarize_qubit,
)
from teleinverse.qmath import (
    ID2,
    random_state_vector,
    random_unitary_params,
    realize_unitary,
    require_density_matrix,
)
from teleinverse.tomography import choi_of_channel, choi_of_unitary, process_fidelity


def random_density(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


class TestDepolarize:
    def test_p_zero_is_identity_map(self):
        rng = np.random.default_rng(41)
        rho = random_density(rng)
        np.testing.assert_allclose(depolarize(rho, 0.0), rho, atol=0)

    def test_p_one_is_maximally_mixed(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            np.testing.assert_allclose(
                depolarize(random_density(rng), 1.0), ID2 / 2, atol=1e-12
            )

    def test_half_on_zero_state(self):
        rho = np.diag([1.0, 0.0]).astype(complex)
        np.testing.assert_allclose(depolarize(rho, 0.5), np.diag([0.75, 0.25]), atol=1e-15)

    def test_output_is_valid_density_matrix(self):
        rng = np.random.default_rng(43)
        for _ in range(100):
            out = depolarize(random_density(rng), float(rng.uniform(0, 1)))
            require_density_matrix(out)

    def test_p_out_of_range(self):
        rho = np.diag([0.5, 0.5])
        with pytest.raises(ValueError):
            depolarize(rho, -0.1)
        with pytest.raises(ValueError):
            depolarize(rho, 1.1)

    def test_rejects_invalid_state(self):
        with pytest.raises(ValueError):
            depolarize(np.diag([1.0, 1.0]), 0.5)


class TestDepolarizeQubit:
    def test_agrees_with_single_qubit_form(self):
        rng = np.random.default_rng(44)
        for _ in range(50):
            rho = random_density(rng)
            p = float(rng.uniform(0, 1))
            np.testing.assert_allclose(
                depolarize_qubit(rho, p, 0, 1), depolarize(rho, p), atol=1e-12
            )

    def test_acts_locally_on_product_states(self):
        rng = np.random.default_rng(45)
        rho_a = random_density(rng)
        rho_b = random_density(rng)
        p = 0.3
        joint = np.kron(rho_a, rho_b)
        np.testing.assert_allclose(
            depolarize_qubit(joint, p, 0, 2), np.kron(depolarize(rho_a, p), rho_b), atol=1e-12
        )
        np.testing.assert_allclose(
            depolarize_qubit(joint, p, 1, 2), np.kron(rho_a, depolarize(rho_b, p)), atol=1e-12
        )

    def test_dimension_checks(self):
        with pytest.raises(ValueError):
            depolarize_qubit(np.eye(4) / 4, 0.5, 2, 2)
        with pytest.raises(ValueError):
            depolarize_qubit(np.eye(2) / 2, 0.5, 0, 2)


class TestCalibration:
    def test_unit_fidelity_needs_no_noise(self):
        assert calibrate_p_for_fidelity(1.0) == 0.0

    def test_reference_average_target(self):
        # p = 4 (1 - 0.9767) / 3, computed independently.
        assert calibrate_p_for_fidelity(0.9767) == pytest.approx(4 * 0.0233 / 3, abs=1e-15)
        assert calibrate_p_for_fidelity(0.9767) == pytest.approx(0.03107, abs=5e-6)

    def test_floor_target(self):
        assert calibrate_p_for_fidelity(0.25) == pytest.approx(1.0, abs=1e-12)

    def test_out_of_range(self):
        for bad in (0.0, -0.5, 1.5, 0.2):
            with pytest.raises(ValueError):
                calibrate_p_for_fidelity(bad)

    def test_closed_loop_through_exact_choi(self):
        # F(chi of depolarized-U channel, chi_ideal of U) = 1 - 3 p / 4,
        # with the channel Choi matrix assembled exactly, not sampled.
        rng = np.random.default_rng(46)
        for p in np.linspace(0.0, 1.0, 11):
            u = realize_unitary(random_unitary_params(rng))

            def channel(rho, u=u, p=p):
                return depolarize(u @ rho @ u.conj().T, float(p))

            chi = choi_of_channel(channel)
            fidelity = process_fidelity(chi, choi_of_unitary(u))
            assert abs(fidelity - (1.0 - 0.75 * float(p))) < 1e-10

    def test_calibrated_p_hits_target_fidelity(self):
        rng = np.random.default_rng(47)
        for target in (0.9767, 0.9, 0.5):
            p = calibrate_p_for_fidelity(target)
            u = realize_unitary(random_unitary_params(rng))

            def channel(rho):
                return depolarize(u @ rho @ u.conj().T, p)

            fidelity = process_fidelity(choi_of_channel(channel), choi_of_unitary(u))
            assert abs(fidelity - target) < 1e-10


class TestNoiseConfig:
    def test_validation(self):
        NoiseConfig(0.5, "output")
        NoiseConfig(0.0, "none")
        with pytest.raises(ValueError):
            NoiseConfig(1.5, "output")
        with pytest.raises(ValueError):
            NoiseConfig(0.5, "everywhere")

    def test_enabled(self):
        assert NoiseConfig(0.1, "output").enabled
        assert not NoiseConfig(0.0, "output").enabled
        assert not NoiseConfig(0.1, "none").enabled
