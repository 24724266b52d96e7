import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_density_matrix
from negspec.entanglement import negativity, negativity_spectrum
from negspec.errors import DomainError, IncompleteDataError, InfeasibleTargetError, ValidationError
from negspec.qstate import (
    DensityMatrix,
    Partition,
    StateVector,
    basis_state,
    purity,
    random_state,
    reduced_density_array,
)
from negspec.tomography import (
    PauliSetting,
    ShotRecord,
    all_settings,
    depolarize,
    linear_inversion,
    measure_density_matrix,
    project_physical,
    purity_rescale,
    simulate_measurements,
)

ONE_QUBIT_A = Partition((0,), (), ())
PLUS = StateVector(1, np.array([1, 1]) / math.sqrt(2))


def record_for(records, label):
    return next(r for r in records if r.setting.label == label)


class TestSettings:
    def test_full_set(self):
        settings = all_settings(3)
        assert len(settings) == 27 and len({s.label for s in settings}) == 27

    def test_labels_validated(self):
        with pytest.raises(DomainError):
            PauliSetting(("X", "Q"))

    def test_record_round_trip(self):
        rec = ShotRecord(PauliSetting(("X", "Z")), np.array([3, 1, 0, 6]), 10)
        back = ShotRecord.from_dict(rec.to_dict())
        assert back.setting == rec.setting and back.shots == 10
        np.testing.assert_array_equal(back.counts, rec.counts)


class TestMeasurements:
    def test_exact_mode_probabilities(self, rng):
        psi = random_state(4, rng)
        for rec in simulate_measurements(psi, Partition.from_sizes(1, 2, 1), 0):
            assert rec.counts.sum() == pytest.approx(1.0, abs=1e-12)

    def test_counts_sum_to_shots(self, rng):
        for rec in simulate_measurements(random_state(3, rng), Partition.from_sizes(1, 1, 1), 500, rng):
            assert rec.counts.sum() == 500

    def test_zero_state_in_z(self, rng):
        rec = record_for(simulate_measurements(basis_state(1), ONE_QUBIT_A, 1000, rng), "Z")
        np.testing.assert_array_equal(rec.counts, [1000, 0])

    def test_plus_state_in_z(self, rng):
        shots = 4000
        rec = record_for(simulate_measurements(PLUS, ONE_QUBIT_A, shots, rng), "Z")
        sigma = math.sqrt(0.25 / shots)
        assert abs(rec.counts[0] / shots - 0.5) < 3 * sigma

    def test_plus_state_in_x_is_deterministic(self, rng):
        rec = record_for(simulate_measurements(PLUS, ONE_QUBIT_A, 100, rng), "X")
        np.testing.assert_array_equal(rec.counts, [100, 0])

    def test_y_eigenstate(self, rng):
        plus_i = StateVector(1, np.array([1, 1j]) / math.sqrt(2))
        rec = record_for(simulate_measurements(plus_i, ONE_QUBIT_A, 100, rng), "Y")
        np.testing.assert_array_equal(rec.counts, [100, 0])

    def test_size_guard(self):
        with pytest.raises(DomainError):
            simulate_measurements(basis_state(9), Partition.from_sizes(4, 5, 0), 0)

    def test_finite_shots_need_rng(self):
        with pytest.raises(DomainError):
            measure_density_matrix(np.eye(2) / 2, 10)


class TestLinearInversion:
    def test_exact_records_reconstruct(self, rng):
        rho = random_density_matrix(3, rng)
        np.testing.assert_allclose(linear_inversion(measure_density_matrix(rho, 0)), rho, atol=1e-10)

    def test_finite_shots_hermitian_unit_trace(self, rng):
        rho = random_density_matrix(2, rng, rank=1)
        est = linear_inversion(measure_density_matrix(rho, 200, rng))
        np.testing.assert_allclose(est, est.conj().T, atol=1e-15)
        assert np.trace(est).real == pytest.approx(1.0, abs=1e-12)

    def test_single_qubit_x_eigenstate(self):
        records = [
            ShotRecord(PauliSetting(("X",)), np.array([1.0, 0.0]), 0),
            ShotRecord(PauliSetting(("Y",)), np.array([0.5, 0.5]), 0),
            ShotRecord(PauliSetting(("Z",)), np.array([0.5, 0.5]), 0),
        ]
        np.testing.assert_allclose(linear_inversion(records), np.array([[1, 1], [1, 1]]) / 2, atol=1e-15)

    def test_missing_settings(self, rng):
        records = measure_density_matrix(random_density_matrix(2, rng), 0)
        with pytest.raises(IncompleteDataError):
            linear_inversion(records[:-1])
        with pytest.raises(IncompleteDataError):
            linear_inversion([])

    @given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(0, 2))
    def test_exact_round_trip(self, seed, n_a, n_b):
        rng = np.random.default_rng(seed)
        n_a1 = int(rng.integers(0, n_a + 1))
        part = Partition.from_sizes(n_a1, n_a - n_a1, n_b)
        psi = random_state(part.n_qubits, rng)
        est = linear_inversion(simulate_measurements(psi, part, 0))
        assert np.max(np.abs(est - reduced_density_array(psi, part))) < 1e-9

    def test_error_scales_as_inverse_sqrt_shots(self):
        rng = np.random.default_rng(17)
        rho = random_density_matrix(2, rng)
        errors = {}
        for shots in (100, 1000, 10000):
            trials = [
                np.linalg.norm(linear_inversion(measure_density_matrix(rho, shots, rng)) - rho)
                for _ in range(20)
            ]
            errors[shots] = float(np.mean(trials))
        for shots, err in errors.items():
            ratio = err * math.sqrt(shots) / (errors[100] * 10)
            assert 1 / 3 < ratio < 3


class TestProjection:
    def test_physical_fixed_point(self, rng):
        rho = random_density_matrix(3, rng)
        np.testing.assert_allclose(project_physical(rho).elements, rho, atol=1e-12)

    def test_one_step(self):
        np.testing.assert_allclose(project_physical(np.diag([1.2, -0.2])).elements, np.diag([1.0, 0.0]), atol=1e-15)

    def test_redistribution(self):
        # -0.3 is zeroed; sharing it would leave 0.1 at exactly zero, so three values absorb it
        out = project_physical(np.diag([0.7, 0.5, 0.1, -0.3])).elements
        np.testing.assert_allclose(np.diag(out), [0.6, 0.4, 0.0, 0.0], atol=1e-15)

    def test_requires_unit_trace(self):
        with pytest.raises(ValidationError):
            project_physical(np.diag([0.7, 0.7]))

    @given(st.integers(0, 2**32 - 1))
    def test_postcondition_and_never_moves_away(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density_matrix(2, rng, rank=int(rng.integers(1, 5)))
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        noise = 0.1 * (g + g.conj().T)
        noise -= np.trace(noise) * np.eye(4) / 4
        raw = rho + noise
        out = project_physical(raw).elements
        assert np.linalg.eigvalsh(out).min() >= -1e-12
        assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(out - rho) <= np.linalg.norm(raw - rho) + 1e-12


class TestPurityRescale:
    def test_no_change_at_current_purity(self, rng):
        rho = random_density_matrix(2, rng)
        np.testing.assert_allclose(purity_rescale(rho, purity(rho)).elements, rho, atol=1e-10)

    def test_full_mixing(self, rng):
        rho = random_density_matrix(2, rng)
        np.testing.assert_allclose(purity_rescale(rho, 0.25).elements, np.eye(4) / 4, atol=1e-12)

    def test_pure_qubit_half_mixture(self):
        rho = np.diag([1.0, 0.0])
        out = purity_rescale(rho, 0.625).elements
        np.testing.assert_allclose(out, 0.5 * rho + 0.25 * np.eye(2), atol=1e-12)

    def test_raising_purity_inverts_mixing(self, rng):
        rho = random_density_matrix(2, rng, rank=1)
        mixed = depolarize(rho, 0.3)
        out = purity_rescale(mixed, 1.0)
        assert purity(out) == pytest.approx(1.0, abs=1e-6)
        np.testing.assert_allclose(out.elements, rho, atol=1e-5)

    def test_out_of_range_target(self, rng):
        with pytest.raises(DomainError):
            purity_rescale(random_density_matrix(1, rng), 0.3)

    def test_maximally_mixed_cannot_be_purified(self):
        with pytest.raises(InfeasibleTargetError):
            purity_rescale(np.eye(2) / 2, 0.9)


class TestDepolarize:
    def test_identity_and_full(self, rng):
        rho = random_density_matrix(2, rng)
        np.testing.assert_allclose(depolarize(rho, 0.0).elements, rho)
        np.testing.assert_allclose(depolarize(rho, 1.0).elements, np.eye(4) / 4)

    def test_werner_threshold(self):
        bell = DensityMatrix.from_pure(StateVector(2, np.array([1, 0, 0, 1]) / math.sqrt(2)))
        out = depolarize(bell, 2 / 3)
        res = negativity(negativity_spectrum(out, Partition.from_sizes(1, 1, 0)))
        assert res.negativity == pytest.approx(0.0, abs=1e-15)
        below = depolarize(bell, 0.6)
        assert negativity(negativity_spectrum(below, Partition.from_sizes(1, 1, 0))).negativity > 0

    def test_invalid_epsilon(self):
        with pytest.raises(DomainError):
            depolarize(np.eye(2) / 2, 1.5)

    @given(st.integers(0, 2**32 - 1), st.floats(0, 1), st.floats(0, 1))
    def test_linear_trace_preserving_and_monotone(self, seed, eps, mix):
        rng = np.random.default_rng(seed)
        part = Partition.from_sizes(3, 3, 0)
        r1 = random_density_matrix(6, rng, rank=1)
        r2 = random_density_matrix(6, rng, rank=2)
        combo = depolarize(mix * r1 + (1 - mix) * r2, eps).elements
        parts = mix * depolarize(r1, eps).elements + (1 - mix) * depolarize(r2, eps).elements
        np.testing.assert_allclose(combo, parts, atol=1e-14)
        assert np.trace(combo).real == pytest.approx(1.0, abs=1e-12)
        before = negativity(negativity_spectrum(r1, part)).negativity
        after = negativity(negativity_spectrum(depolarize(r1, eps), part)).negativity
        assert after <= before + 1e-12
