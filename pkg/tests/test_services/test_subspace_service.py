"""
Tests for the recursive PCA service: truncated-SVD initialization, projection,
decay removal, incremental SVD and new-direction retention.

Version: 1.0
"""

# External imports with versions
import numpy as np  # numpy v1.24+
import pytest  # pytest v7.3+
import scipy.linalg  # scipy v1.10+

# Internal imports
from reprocs.core.exceptions import DimensionMismatchException, ValidationException
from reprocs.models.subspace import SubspaceEstimate
from reprocs.services.subspace_service import (
    energy_rank,
    fix_signs,
    incremental_update,
    init_truncated_svd,
    project_perp,
    push_frame,
    remove_decayed,
    update_cycle,
)
from tests.helpers import exact_estimate, orthonormal

# Test constants
ORACLE_INSTANCES = 200


def _training(singvals, n=20, count=50, seed=3):
    """n x count matrix with prescribed singular values."""
    rng = np.random.default_rng(seed)
    left = orthonormal(n, len(singvals), rng)
    right = orthonormal(count, len(singvals), rng)
    return left @ np.diag(singvals) @ right.T, left


@pytest.mark.subspace
class TestInitialization:
    """Truncated-SVD initialization of the principal-components estimate."""

    def test_exact_rank_data_recovers_its_span(self, rng):
        basis = orthonormal(20, 3, rng)
        training = basis @ rng.standard_normal((3, 50))

        est = init_truncated_svd(training)

        assert est.rank == 3
        assert np.linalg.norm(project_perp(est, basis)) < 1e-10
        assert np.allclose(est.basis.T @ est.basis, np.eye(3), atol=1e-12)
        assert est.frames_seen == 50
        assert est.train_count == 50
        assert est.buffer == []
        assert est.mean is None

    def test_default_alpha_is_half_the_smallest_variance_per_frame(self):
        training, _ = _training([10.0, 5.0, 1.0])
        est = init_truncated_svd(training)

        assert est.sigma_min_sq == pytest.approx(1.0)
        assert est.alpha == pytest.approx(0.5 * 1.0 / 50)

    def test_explicit_alpha_is_kept(self):
        training, _ = _training([10.0, 5.0])
        assert init_truncated_svd(training, alpha=3.5).alpha == 3.5

    def test_alpha0_threshold(self):
        training, _ = _training([10.0, 5.0, 1.0])
        est = init_truncated_svd(training, alpha0=3.0)

        assert est.rank == 2
        assert np.allclose(est.singvals, [10.0, 5.0])

    def test_energy_request(self):
        # energies 100, 25, 1 of 126: 90% needs two directions
        training, _ = _training([10.0, 5.0, 1.0])
        assert init_truncated_svd(training, energy=90.0).rank == 2
        assert init_truncated_svd(training, energy=100.0).rank == 3

    def test_mean_subtraction(self, rng):
        basis = orthonormal(20, 2, rng)
        level = 100.0 + rng.standard_normal(20)
        training = level[:, None] + basis @ rng.standard_normal((2, 40))

        est = init_truncated_svd(training, subtract_mean=True)

        assert est.rank == 2
        assert np.allclose(est.mean, training.mean(axis=1))
        assert np.linalg.norm(project_perp(est, basis)) < 1e-8

    @pytest.mark.parametrize("level", [50.0, 1e4])
    def test_centering_round_off_adds_no_direction(self, rng, level):
        basis = orthonormal(10, 3, rng)
        training = basis @ rng.standard_normal((3, 30)) + level

        assert init_truncated_svd(training, subtract_mean=True).rank == 3
        assert init_truncated_svd(training, subtract_mean=True, energy=100.0).rank == 3

    def test_list_of_frames_is_accepted(self, rng):
        basis = orthonormal(10, 1, rng)
        frames = [basis[:, 0] * c for c in (1.0, -2.0, 3.0)]
        assert init_truncated_svd(frames).rank == 1

    def test_empty_training_raises(self):
        with pytest.raises(ValidationException):
            init_truncated_svd([])
        with pytest.raises(ValidationException):
            init_truncated_svd(np.zeros((5, 0)))

    def test_non_finite_training_raises(self):
        training = np.ones((4, 3))
        training[1, 2] = np.nan
        with pytest.raises(ValidationException):
            init_truncated_svd(training)

    def test_negative_alpha0_raises(self):
        with pytest.raises(ValidationException):
            init_truncated_svd(np.eye(3), alpha0=-1.0)


@pytest.mark.subspace
class TestHelpers:
    """Energy rank, sign convention and projection."""

    @pytest.mark.parametrize("percent,expected", [
        (50.0, 1),
        (64.0, 1),
        (90.0, 2),
        (100.0, 3),
    ])
    def test_energy_rank(self, percent, expected):
        # energies 9, 4, 1 of 14
        assert energy_rank(np.array([3.0, 2.0, 1.0]), percent) == expected

    def test_energy_rank_of_zero_spectrum(self):
        assert energy_rank(np.zeros(3), 90.0) == 0

    def test_fix_signs(self):
        basis = np.array([[0.0, -0.6], [-1.0, 0.8]])
        fixed = fix_signs(basis)
        assert np.array_equal(fixed, np.array([[0.0, 0.6], [1.0, -0.8]]))

    def test_projection_is_idempotent_and_annihilates_the_basis(self, small_estimate, small_basis, rng):
        v = rng.standard_normal(12)
        once = project_perp(small_estimate, v)

        assert np.allclose(project_perp(small_estimate, once), once, atol=1e-12)
        assert np.allclose(project_perp(small_estimate, small_basis), 0.0, atol=1e-12)

    def test_projection_with_empty_basis_is_identity(self, rng):
        est = exact_estimate(np.zeros((6, 0)))
        v = rng.standard_normal(6)
        assert np.array_equal(project_perp(est, v), v)

    def test_projection_dimension_mismatch(self, small_estimate):
        with pytest.raises(DimensionMismatchException):
            project_perp(small_estimate, np.zeros(5))


@pytest.mark.subspace
class TestIncrementalUpdate:
    """Incremental SVD against the batch SVD of [P diag(lambda), D]."""

    def test_matches_batch_svd(self):
        rng = np.random.default_rng(11)
        n = 16
        for _ in range(ORACLE_INSTANCES):
            r = int(rng.integers(0, 5))
            width = int(rng.integers(1, 7))
            basis = orthonormal(n, r, rng)
            singvals = np.sort(rng.uniform(0.5, 20.0, r))[::-1]
            frames = [rng.standard_normal(n) * rng.uniform(0.1, 5.0) for _ in range(width)]
            est = SubspaceEstimate(basis=basis, singvals=singvals, tau=width, alpha=0.0, buffer=frames)

            updated = incremental_update(est)

            stacked = np.hstack([basis * singvals, np.column_stack(frames)])
            left, oracle, _ = np.linalg.svd(stacked, full_matrices=False)
            k = r + width
            assert updated.rank == k
            np.testing.assert_allclose(updated.singvals, oracle[:k], rtol=1e-9, atol=1e-12)
            assert np.max(scipy.linalg.subspace_angles(updated.basis, left[:, :k])) < 1e-7
            assert np.allclose(updated.basis.T @ updated.basis, np.eye(k), atol=1e-10)

    def test_frames_inside_the_span_add_no_direction(self, small_basis):
        est = SubspaceEstimate(
            basis=small_basis, singvals=np.array([4.0, 2.0]), tau=2, alpha=0.0,
            buffer=[small_basis @ np.array([1.0, 1.0]), small_basis @ np.array([-2.0, 0.5])],
        )
        updated = incremental_update(est)

        assert updated.rank == 2
        assert np.max(scipy.linalg.subspace_angles(updated.basis, small_basis)) < 1e-8

    def test_empty_buffer_is_a_no_op(self, small_estimate):
        assert incremental_update(small_estimate) is small_estimate


@pytest.mark.subspace
class TestUpdateCycle:
    """Decay removal, retention of new directions and the update period."""

    @staticmethod
    def _axis_estimate(alpha=1.0, tau=2):
        basis = np.zeros((6, 1))
        basis[0, 0] = 1.0
        return SubspaceEstimate(basis=basis, singvals=np.array([10.0]), tau=tau, alpha=alpha, frames_seen=10)

    @staticmethod
    def _frame(a, b):
        v = np.zeros(6)
        v[0], v[1] = a, b
        return v

    def test_remove_decayed_drops_silent_directions(self):
        basis = np.eye(6)[:, :2]
        est = SubspaceEstimate(
            basis=basis, singvals=np.array([2.0, 1.0]), tau=2, alpha=1.0,
            buffer=[self._frame(3.0, 0.0), self._frame(3.0, 0.0)],
        )
        trimmed = remove_decayed(est)

        assert trimmed.rank == 1
        assert np.array_equal(trimmed.basis[:, 0], basis[:, 0])

    def test_weak_new_direction_is_not_retained(self):
        est = self._axis_estimate()
        est = push_frame(est, self._frame(5.0, 0.01))
        assert len(est.buffer) == 1
        est = push_frame(est, self._frame(5.0, -0.01))

        assert est.buffer == []
        assert est.rank == 1
        assert est.singvals[0] == pytest.approx(np.sqrt(150.0))
        assert est.frames_seen == 12

    def test_strong_new_direction_is_retained(self):
        est = self._axis_estimate()
        est = push_frame(est, self._frame(5.0, 5.0))
        est = push_frame(est, self._frame(5.0, -5.0))

        assert est.rank == 2
        np.testing.assert_allclose(est.singvals, [np.sqrt(150.0), np.sqrt(50.0)], rtol=1e-12)
        assert abs(est.basis[1, 1]) == pytest.approx(1.0)

    def test_forced_update_runs_before_tau(self):
        est = self._axis_estimate(tau=20)
        est = push_frame(est, self._frame(5.0, 0.0), force_update=True)
        assert est.buffer == []

    def test_update_cycle_on_buffer(self):
        est = self._axis_estimate()
        est.buffer = [self._frame(1.0, 0.0)]
        # variance 1 along the basis meets alpha exactly
        assert update_cycle(est).rank == 1

    def test_buffer_is_mean_subtracted(self):
        est = self._axis_estimate(tau=5)
        est.mean = np.full(6, 100.0)
        est = push_frame(est, np.full(6, 101.0))
        assert np.array_equal(est.buffer[0], np.ones(6))

    def test_push_rejects_wrong_length(self):
        with pytest.raises(DimensionMismatchException):
            push_frame(self._axis_estimate(), np.zeros(3))
