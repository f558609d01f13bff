"""
Tests for synthetic data generation: the orthonormal basis, the autoregressive
coefficient model with scheduled direction changes, support processes and composition.

Version: 1.0
"""

# External imports with versions
import numpy as np  # numpy v1.24+
import pytest  # pytest v7.3+

# Internal imports
from reprocs.cli.presets import PRESETS
from reprocs.core.exceptions import DimensionMismatchException, ValidationException
from reprocs.schemas.synth import GeneratorSpec, SupportProcessSpec
from reprocs.services.synth_service import (
    coefficient_sets,
    compose,
    generate_basis,
    generate_sequence,
    init_support_state,
    min_foreground_magnitude,
    move_object,
    object_indices,
    step_lowrank,
    step_support,
    uniform_support,
)

# Test constants
GENERATOR = {
    "n": 20,
    "ladder": {"start": 100.0, "ratio": 0.5, "count": 3},
    "extra_variances": [4.0, 6.0],
    "schedule": [{"time": 8, "add": [3, 4], "decay": [2]}],
}
STRIPS = {
    "kind": "strips",
    "frame_shape": [20, 1],
    "objects": [{"half_size": [4, 0], "magnitude": 10.0}],
}


@pytest.fixture
def generator() -> GeneratorSpec:
    return GeneratorSpec.parse_obj(GENERATOR)


@pytest.fixture
def strips() -> SupportProcessSpec:
    return SupportProcessSpec.parse_obj(STRIPS)


@pytest.mark.synth
class TestBasisAndCoefficients:
    """Basis generation and the scheduled coefficient model."""

    def test_basis_is_orthonormal_and_seeded(self):
        basis = generate_basis(16, 4)

        assert np.allclose(basis.T @ basis, np.eye(16), atol=1e-12)
        assert np.array_equal(basis, generate_basis(16, 4))
        assert not np.array_equal(basis, generate_basis(16, 5))

    def test_basis_dimension_must_be_positive(self):
        with pytest.raises(ValidationException):
            generate_basis(0, 1)

    def test_ladder_expansion(self, generator):
        assert generator.variances[:5] == [100.0, 50.0, 25.0, 4.0, 6.0]
        assert generator.variances[5:] == [0.0] * 15
        assert generator.initial_support == [0, 1, 2]

    def test_coefficient_sets_follow_the_schedule(self, generator):
        before = coefficient_sets(generator, 7)
        at = coefficient_sets(generator, 8)
        after = coefficient_sets(generator, 9)

        assert np.flatnonzero(before.steady).tolist() == [0, 1, 2]
        assert not before.added.any() and not before.decaying.any()
        assert np.flatnonzero(at.added).tolist() == [3, 4]
        assert np.flatnonzero(at.decaying).tolist() == [2]
        assert np.flatnonzero(at.steady).tolist() == [0, 1]
        assert np.flatnonzero(after.steady).tolist() == [0, 1, 3, 4]
        assert np.flatnonzero(after.decaying).tolist() == [2]

    def test_inactive_coefficients_stay_zero(self, generator):
        rng = np.random.default_rng(0)
        x = np.zeros(20)
        for t in range(1, 8):
            x = step_lowrank(generator, x, t, rng)
        assert np.count_nonzero(x[3:]) == 0
        assert np.count_nonzero(x[:3]) == 3

    def test_decaying_coefficients_shrink_geometrically(self, generator):
        x = np.zeros(20)
        x[2] = 8.0
        stepped = step_lowrank(generator, x, 9, np.random.default_rng(1))
        assert stepped[2] == pytest.approx(0.8)

    def test_step_dimension_mismatch(self, generator):
        with pytest.raises(DimensionMismatchException):
            step_lowrank(generator, np.zeros(3), 1, np.random.default_rng(0))

    @pytest.mark.parametrize("change", [
        {"f": 0.1, "f_d": 0.5},
        {"theta": 1.0},
        {"schedule": [{"time": 8, "add": [0]}]},
        {"schedule": [{"time": 8, "decay": [7]}]},
        {"schedule": [{"time": 8, "add": [30]}]},
        {"schedule": [{"time": 8, "add": [3]}, {"time": 8, "add": [4]}]},
        {"schedule": [{"time": 8, "add": [10]}]},
        {"d": 5, "schedule": [{"time": 8, "add": [3]}, {"time": 10, "add": [4]}]},
        {"schedule": [{"time": 8, "decay": [2]}, {"time": 12, "add": [2]}]},
    ])
    def test_invalid_generators(self, change):
        with pytest.raises(ValueError):
            GeneratorSpec.parse_obj({**GENERATOR, **change})


@pytest.mark.synth
class TestSupportProcesses:
    """Object motion, border handling and support geometry."""

    def test_first_step_emits_start_positions(self):
        spec = SupportProcessSpec.parse_obj({
            **STRIPS, "objects": [{"half_size": [4, 0], "position": [10, 0], "magnitude": 10.0}]
        })
        rng = np.random.default_rng(0)
        state, support, values = step_support(spec, init_support_state(spec, rng), rng)

        assert support.tolist() == list(range(6, 15))
        assert np.all(values[support] == 10.0)
        assert state.started

    def test_strip_supports_keep_their_size(self, strips):
        rng = np.random.default_rng(3)
        state = init_support_state(strips, rng)
        for _ in range(200):
            state, support, _ = step_support(strips, state, rng)
            assert support.size == 9
            assert np.all(np.diff(support) == 1)
            assert support.min() >= 0 and support.max() < 20

    def test_move_blocked_at_border(self):
        position = np.array([4.0, 0.0])
        moved, blocked = move_object(position, np.array([-1.0, 0.0]), (4, 0), (20, 1))
        assert blocked
        assert np.array_equal(moved, position)

        moved, blocked = move_object(position, np.array([1.0, 0.0]), (4, 0), (20, 1))
        assert not blocked
        assert moved[0] == 5.0

    def test_object_indices_are_row_major(self):
        idx = object_indices(np.array([2.0, 3.0]), (1, 1), (5, 6))
        assert idx.tolist() == [8, 9, 10, 14, 15, 16, 20, 21, 22]

    def test_constant_velocity_without_acceleration(self):
        spec = SupportProcessSpec.parse_obj({
            "kind": "constant_velocity",
            "frame_shape": [10, 30],
            "objects": [{"half_size": [1, 2], "position": [5, 5], "velocity": [0.0, 0.5], "magnitude": 3.0}],
        })
        rng = np.random.default_rng(0)
        state = init_support_state(spec, rng)
        positions = []
        for _ in range(5):
            state, _, _ = step_support(spec, state, rng)
            positions.append(state.positions[0, 1])
        assert positions == [5.0, 5.5, 6.0, 6.5, 7.0]

    def test_constant_velocity_acceleration_only_on_selected_axes(self):
        spec = SupportProcessSpec.parse_obj({
            "kind": "constant_velocity",
            "frame_shape": [30, 30],
            "objects": [{"half_size": [1, 1], "position": [15, 15], "magnitude": 3.0}],
            "accel_var": 1e-4,
            "accel_axes": [False, True],
        })
        rng = np.random.default_rng(4)
        state = init_support_state(spec, rng)
        for _ in range(20):
            state, _, _ = step_support(spec, state, rng)
        assert state.velocities[0, 0] == 0.0
        assert state.velocities[0, 1] != 0.0
        # truncated at two standard deviations per step
        assert abs(state.velocities[0, 1]) <= 19 * 2 * 1e-2

    def test_uniform_support_is_fresh_each_frame(self):
        spec = SupportProcessSpec.parse_obj({"kind": "uniform", "frame_shape": [16, 16], "size": 49, "magnitude": 5.0})
        rng = np.random.default_rng(8)
        state = init_support_state(spec, rng)
        state, first, values = step_support(spec, state, rng)
        state, second, _ = step_support(spec, state, rng)

        assert first.size == second.size == 49
        assert len(set(first.tolist())) == 49
        assert not np.array_equal(first, second)
        assert np.all(values[first] == 5.0)

    def test_uniform_support_bounds(self):
        with pytest.raises(ValidationException):
            uniform_support(4, 5, 0)

    def test_full_scale_two_block_support_size(self):
        spec = SupportProcessSpec.parse_obj(PRESETS["twoblocks_modcs"](True)["support"])
        rng = np.random.default_rng(0)
        _, support, values = step_support(spec, init_support_state(spec, rng), rng)

        assert support.size == 2610
        assert np.count_nonzero(values == 10.0) == 1305
        assert np.count_nonzero(values == 20.0) == 1305

    @pytest.mark.parametrize("full_scale", [False, True])
    def test_two_blocks_stay_inside_the_frame(self, full_scale):
        data = PRESETS["twoblocks_modcs"](full_scale)
        spec = SupportProcessSpec.parse_obj(data["support"])
        for seed in range(20):
            rng = np.random.default_rng(seed)
            state = init_support_state(spec, rng)
            for _ in range(data["horizon"]):
                state, _, _ = step_support(spec, state, rng)
            assert not state.clipped

    @pytest.mark.parametrize("name", ["table1_large_36", "table1_small_36"])
    def test_four_strip_presets_start_disjoint(self, name):
        spec = SupportProcessSpec.parse_obj(PRESETS[name](False)["support"])
        rng = np.random.default_rng(0)
        _, support, _ = step_support(spec, init_support_state(spec, rng), rng)

        assert len(spec.objects) == 4
        assert support.size == 36

    def test_minimum_magnitude(self, strips):
        assert min_foreground_magnitude(strips) == 10.0
        assert min_foreground_magnitude(SupportProcessSpec()) is None

    @pytest.mark.parametrize("change", [
        {"p_static": 0.9, "p_move": 0.1},
        {"objects": [{"half_size": [10, 0]}]},
        {"objects": [{"half_size": [4, 0], "position": [2, 0]}]},
        {"kind": "spiral"},
        {"frame_shape": [0, 1]},
    ])
    def test_invalid_support_processes(self, change):
        with pytest.raises(ValueError):
            SupportProcessSpec.parse_obj({**STRIPS, **change})


@pytest.mark.synth
class TestCompose:
    """Additive and overlay composition of measurements."""

    def test_additive(self):
        lowrank = np.arange(5.0)
        foreground = np.full(5, 10.0)
        measurement, sparse = compose(lowrank, foreground, np.array([1, 3]), "additive")

        assert sparse.tolist() == [0.0, 10.0, 0.0, 10.0, 0.0]
        assert np.array_equal(measurement, lowrank + sparse)

    def test_overlay_replaces_the_background(self):
        lowrank = np.arange(5.0)
        foreground = np.full(5, 10.0)
        measurement, sparse = compose(lowrank, foreground, np.array([1, 3]), "overlay")

        assert measurement.tolist() == [0.0, 10.0, 2.0, 10.0, 4.0]
        assert sparse.tolist() == [0.0, 9.0, 0.0, 7.0, 0.0]

    def test_unknown_mode(self):
        with pytest.raises(ValidationException):
            compose(np.zeros(3), np.zeros(3), np.array([0]), "blend")

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchException):
            compose(np.zeros(3), np.zeros(4), np.array([0]))


@pytest.mark.synth
class TestGenerateSequence:
    """Whole-sequence generation."""

    def test_training_frames_have_no_sparse_part(self, generator, strips):
        seq = generate_sequence(generator, strips, t0=10, horizon=5, seed=3)

        assert seq.M.shape == (20, 15)
        assert np.array_equal(seq.S[:, :10], np.zeros((20, 10)))
        assert np.array_equal(seq.M[:, :10], seq.L[:, :10])
        assert all(s.size == 0 for s in seq.supports[:10])
        assert all(s.size == 9 for s in seq.supports[10:])
        assert seq.object_states[:10] == [[]] * 10
        assert len(seq.object_states[10]) == 1

    def test_additive_measurement_is_sum(self, generator, strips):
        seq = generate_sequence(generator, strips, t0=10, horizon=5, seed=3)

        assert np.array_equal(seq.M, seq.L + seq.S)
        assert np.array_equal(seq.O, seq.S)
        for k in range(10, 15):
            assert np.flatnonzero(seq.S[:, k]).tolist() == seq.supports[k].tolist()

    def test_low_rank_part_lies_in_the_active_directions(self, generator, strips):
        seq = generate_sequence(generator, strips, t0=7, horizon=0, seed=3)
        coeffs = seq.basis.T @ seq.L
        assert np.allclose(coeffs[3:, :], 0.0, atol=1e-10)

    def test_same_seed_same_sequence(self, generator, strips):
        first = generate_sequence(generator, strips, t0=10, horizon=5, seed=42)
        second = generate_sequence(generator, strips, t0=10, horizon=5, seed=42)
        other = generate_sequence(generator, strips, t0=10, horizon=5, seed=43)

        assert np.array_equal(first.M, second.M)
        assert [s.tolist() for s in first.supports] == [s.tolist() for s in second.supports]
        assert not np.array_equal(first.M, other.M)

    def test_direction_change_is_reported(self, generator, strips):
        seq = generate_sequence(generator, strips, t0=5, horizon=5, seed=1)
        assert seq.added_directions == [3, 4]
        assert seq.decayed_directions == [2]

    def test_overlay_sequence(self, generator, strips):
        seq = generate_sequence(generator, strips, t0=4, horizon=3, compose_mode="overlay", seed=2)
        for k in range(4, 7):
            support = seq.supports[k]
            assert np.allclose(seq.M[support, k], 10.0)
            outside = np.setdiff1d(np.arange(20), support)
            assert np.array_equal(seq.M[outside, k], seq.L[outside, k])

    def test_background_replaces_the_low_rank_part(self, generator, strips):
        background = np.full((20, 12), 3.0)
        seq = generate_sequence(generator, strips, t0=5, horizon=5, seed=2, background=background)
        assert np.array_equal(seq.L, background[:, :10])

    def test_short_background_is_rejected(self, generator, strips):
        with pytest.raises(DimensionMismatchException):
            generate_sequence(generator, strips, t0=5, horizon=5, background=np.zeros((20, 4)))

    def test_background_mean(self, strips):
        spec = GeneratorSpec.parse_obj({**GENERATOR, "background_mean": 100.0})
        seq = generate_sequence(spec, strips, t0=5, horizon=0, seed=2)
        coeffs = seq.basis.T @ (seq.L - 100.0)
        assert np.allclose(coeffs[3:, :], 0.0, atol=1e-9)
