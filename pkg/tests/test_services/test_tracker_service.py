"""
Tests for Kalman support tracking: filter recursion, support prediction and clipping,
observed-location extraction, the observation-error bound and intensity assignment.

Version: 1.0
"""

# External imports with versions
import numpy as np  # numpy v1.24+
import pytest  # pytest v7.3+
import scipy.linalg  # scipy v1.10+

# Internal imports
from reprocs.core.exceptions import ConfigurationException, TrackLostException, ValidationException
from reprocs.models.tracking import OBSERVATION, TRANSITION, TrackState
from reprocs.schemas.tracker import TrackerConfig
from reprocs.services.tracker_service import (
    assign_supports,
    create_object_track,
    create_tracks,
    object_support,
    observation_variance_from_bound,
    observe,
    observe_object,
    omega_bound,
    predict,
    predict_object,
    predicted_support,
    round_half_away,
    update,
    update_object,
)

# Test constants
RICCATI_STEPS = 500
SWEEP_CHUNK = 1 << 15


def _state(p=10.0, v=0.0, sigma=(1.0, 1.0), Q=1e-3, R=1e-2, w=2, extent=100) -> TrackState:
    return TrackState(g=np.array([p, v]), Sigma=np.diag(sigma), Q=Q, R=R, w=w, extent=extent)


def _riccati(sigma, Q, R):
    """One predict-update step of the constant-velocity filter in closed form."""
    G = np.array([[1.0, 1.0], [0.0, 1.0]])
    predicted = G @ sigma @ G.T + np.diag([0.0, Q])
    gain = predicted[:, 0] / (predicted[0, 0] + R)
    posterior = predicted - np.outer(gain, predicted[0, :])
    return predicted, gain, posterior


@pytest.mark.tracker
class TestKalmanRecursion:
    """Predict and update against an independent closed-form recursion."""

    def test_covariances_and_gains_match_closed_form(self):
        rng = np.random.default_rng(9)
        Q, R = 2.5e-5, 1e-4
        state = _state(p=20.0, v=0.3, Q=Q, R=R)
        sigma = state.Sigma.copy()
        for _ in range(RICCATI_STEPS):
            state, _ = predict(state)
            predicted, gain, sigma = _riccati(sigma, Q, R)
            assert np.allclose(state.Sigma, predicted, rtol=1e-9, atol=1e-14)

            state = update(state, state.position + rng.standard_normal() * 0.01)
            assert np.allclose(state.gain, gain, rtol=1e-9, atol=1e-14)
            assert np.allclose(state.Sigma, sigma, rtol=1e-9, atol=1e-14)
            assert np.array_equal(state.Sigma, state.Sigma.T)
            assert np.all(np.linalg.eigvalsh(state.Sigma) >= -1e-15)

    @pytest.mark.parametrize("Q,R", [(2.5e-5, 1e-4), (1e-3, 1e-2), (0.5, 0.1)])
    def test_covariance_converges_to_the_riccati_solution(self, Q, R):
        steady = scipy.linalg.solve_discrete_are(TRANSITION.T, OBSERVATION.T, np.diag([0.0, Q]), np.array([[R]]))
        state = _state(p=50.0, v=0.1, sigma=(4.0, 1.0), Q=Q, R=R)
        for _ in range(RICCATI_STEPS):
            state, _ = predict(state)
            state = update(state, state.position)
        predicted, _ = predict(state)

        np.testing.assert_allclose(predicted.Sigma, steady, rtol=1e-6, atol=1e-12)
        gain = steady[:, 0] / (steady[0, 0] + R)
        np.testing.assert_allclose(update(predicted, predicted.position).gain, gain, rtol=1e-6)

    def test_predict_moves_by_velocity(self):
        predicted, support = predict(_state(p=10.0, v=2.0))
        assert predicted.position == pytest.approx(12.0)
        assert support.tolist() == [10, 11, 12, 13, 14]

    def test_update_with_perfect_observation_and_zero_noise(self):
        state = _state(sigma=(1.0, 0.0), R=0.0)
        updated = update(state, 14.0)
        assert updated.position == pytest.approx(14.0)
        assert updated.Sigma[0, 0] == pytest.approx(0.0, abs=1e-15)

    def test_zero_innovation_variance_gives_zero_gain(self):
        state = _state(sigma=(0.0, 0.0), R=0.0)
        updated = update(state, 55.0)
        assert np.array_equal(updated.gain, np.zeros(2))
        assert np.array_equal(updated.g, state.g)


@pytest.mark.tracker
class TestSupportPrediction:
    """Rounding and clipping of predicted supports."""

    @pytest.mark.parametrize("x,expected", [(2.5, 3), (-2.5, -3), (0.49, 0), (1.5, 2), (-0.5, -1), (3.0, 3)])
    def test_round_half_away(self, x, expected):
        assert round_half_away(x) == expected

    def test_interior_support(self):
        support, clipped = predicted_support(_state(p=10.4, w=2))
        assert support.tolist() == [8, 9, 10, 11, 12]
        assert not clipped

    def test_border_support_is_clipped(self):
        support, clipped = predicted_support(_state(p=1.0, w=2, extent=10))
        assert support.tolist() == [0, 1, 2, 3]
        assert clipped

    def test_far_side_clipping(self):
        support, clipped = predicted_support(_state(p=9.0, w=2, extent=10))
        assert support.tolist() == [7, 8, 9]
        assert clipped

    @pytest.mark.parametrize("half_width", [(0, 0), (1, 3), (4, 2), (7, 10)])
    def test_interior_object_support_has_full_width_on_each_axis(self, half_width):
        track = create_object_track(TrackerConfig(half_width=half_width), (40, 50), (20.0, 25.0, 0.4, -0.6))
        predicted, support = predict_object(track)
        rows, cols = np.divmod(support, 50)

        assert not predicted.row.clipped and not predicted.col.clipped
        assert np.unique(rows).size == 2 * half_width[0] + 1
        assert np.unique(cols).size == 2 * half_width[1] + 1
        assert support.size == np.unique(support).size == (2 * half_width[0] + 1) * (2 * half_width[1] + 1)
        assert sorted(set(rows.tolist())) == list(range(20 - half_width[0], 21 + half_width[0]))

    def test_predict_flags_clipping(self):
        predicted, _ = predict(_state(p=0.0, v=-1.0, w=1, extent=5))
        assert predicted.clipped


@pytest.mark.tracker
class TestObserve:
    """Observed location of a support estimate."""

    @pytest.mark.parametrize("support,mode,expected", [
        ([1, 2, 3, 4], "median", 2.0),
        ([4, 1, 3], "median", 3.0),
        ([1, 2, 3, 4], "centroid", 2.5),
        ([7], "centroid", 7.0),
    ])
    def test_location(self, support, mode, expected):
        assert observe(support, mode) == expected

    def test_empty_support_is_no_observation(self):
        assert observe([], "median") is None
        assert observe(np.zeros(0, dtype=np.int64), "centroid") is None

    def test_unknown_mode(self):
        with pytest.raises(ValidationException):
            observe([1], "mode")


@pytest.mark.tracker
class TestOmegaBound:
    """Observation-error bound from misses and extras."""

    def test_formula(self):
        # w = 2, one miss, one extra three cells away: 1*2/4 + 1*3/4
        assert omega_bound(_state(p=10.0, w=2), 1, [13]) == pytest.approx(1.25)

    def test_no_errors_gives_zero(self):
        assert omega_bound(_state(w=3), 0, []) == 0.0

    def test_point_object_with_extras_is_unbounded(self):
        assert omega_bound(_state(w=0), 0, [12]) == np.inf

    def test_all_missed_loses_the_track(self):
        with pytest.raises(TrackLostException):
            omega_bound(_state(w=1), 3, [])

    def test_variance_from_bound(self):
        assert observation_variance_from_bound(3.0) == pytest.approx(3.0)

    @pytest.mark.parametrize("w", [1, 2, 3, 4, 5])
    def test_bound_holds_for_every_support_near_the_object(self, w):
        """Every support drawn from [p - 2w, p + 2w] keeps the centroid within the bound."""
        p = 30
        window = np.arange(p - 2 * w, p + 2 * w + 1)
        inside = np.abs(window - p) <= w
        distance = np.abs(window - p).astype(np.float64)
        size = window.size
        for start in range(1, 1 << size, SWEEP_CHUNK):
            codes = np.arange(start, min(start + SWEEP_CHUNK, 1 << size), dtype=np.int64)
            bits = ((codes[:, None] >> np.arange(size)) & 1).astype(bool)
            misses = (~bits[:, inside]).sum(axis=1)
            keep = misses < 2 * w + 1
            bits, misses = bits[keep], misses[keep]
            centroid = (bits * window).sum(axis=1) / bits.sum(axis=1)
            extras = bits & ~inside
            farthest = np.where(extras, distance, 0.0).max(axis=1)
            bound = misses * w / (2 * w + 1 - misses) + extras.sum(axis=1) * farthest / (2 * w)
            assert np.all(np.abs(centroid - p) <= bound + 1e-12)

        # the vectorized bound agrees with the service on a few supports
        state = _state(p=float(p), w=w)
        sample = [window[inside][1:], np.append(window[inside], window[-1])]
        for support in sample:
            m = int(np.setdiff1d(window[inside], support).size)
            extra = np.setdiff1d(support, window[inside])
            expected = m * w / (2 * w + 1 - m) + (extra.size * np.abs(extra - p).max() / (2 * w) if extra.size else 0)
            assert omega_bound(state, m, extra) == pytest.approx(expected)


@pytest.mark.tracker
class TestObjectTracks:
    """Two-axis tracks, truth initialization and intensity assignment."""

    def test_prior_ready_track_predicts_in_place(self):
        cfg = TrackerConfig(half_width=(1, 0))
        track = create_object_track(cfg, (12, 1), (5.0, 0.0, 0.0, 0.0), prior_ready=True)
        predicted, support = predict_object(track)

        assert support.tolist() == [4, 5, 6]
        assert predicted.row.position == 5.0
        assert not predicted.prior_ready
        assert np.array_equal(predicted.row.Sigma, np.zeros((2, 2)))

    def test_second_prediction_applies_motion(self):
        cfg = TrackerConfig(half_width=(1, 1))
        track = create_object_track(cfg, (20, 20), (5.0, 5.0, 1.0, -1.0), prior_ready=True)
        track, _ = predict_object(track)
        track, support = predict_object(track)

        rows, cols = np.divmod(support, 20)
        assert sorted(set(rows.tolist())) == [5, 6, 7]
        assert sorted(set(cols.tolist())) == [3, 4, 5]

    def test_observe_and_update_object(self):
        cfg = TrackerConfig(half_width=(1, 1), R=1e-4, initial_cov=(1.0, 1.0))
        track = create_object_track(cfg, (20, 20), (5.0, 5.0, 0.0, 0.0))
        support = object_support(track, (7.0, 8.0))
        observation = observe_object(support, track)

        assert observation == (7.0, 8.0)
        updated = update_object(track, observation)
        assert updated.row.position == pytest.approx(7.0, abs=1e-3)
        assert updated.col.position == pytest.approx(8.0, abs=1e-3)
        assert updated.last_observation == (7.0, 8.0)
        assert updated.coasted == 0

    def test_missing_observation_coasts(self):
        track = create_object_track(TrackerConfig(), (10, 1), (3.0, 0.0, 0.5, 0.0))
        coasted = update_object(update_object(track, None), None)

        assert coasted.coasted == 2
        assert np.array_equal(coasted.row.g, track.row.g)
        assert coasted.last_observation is None
        assert observe_object(np.zeros(0, dtype=np.int64), track) is None

    def test_assignment_by_intensity(self):
        tracks = create_tracks(
            [TrackerConfig(intensity_range=(5.0, 15.0)), TrackerConfig(intensity_range=(15.0, 25.0))],
            (10, 1),
            [(2.0, 0.0, 0.0, 0.0), (7.0, 0.0, 0.0, 0.0)],
        )
        s_hat = np.zeros(10)
        s_hat[[1, 2, 3]] = 10.0
        s_hat[[6, 7]] = 20.0
        s_hat[9] = 40.0

        assigned = assign_supports(s_hat, tracks)

        assert assigned[0].tolist() == [1, 2, 3]
        assert assigned[1].tolist() == [6, 7]

    def test_single_track_without_range_takes_everything(self):
        tracks = create_tracks([TrackerConfig()], (10, 1), [(2.0, 0.0, 0.0, 0.0)])
        s_hat = np.zeros(10)
        s_hat[[0, 5]] = [1.0, -3.0]
        assert assign_supports(s_hat, tracks)[0].tolist() == [0, 5]

    def test_overlapping_ranges_are_rejected(self):
        with pytest.raises(ConfigurationException):
            create_tracks(
                [TrackerConfig(intensity_range=(5.0, 15.0)), TrackerConfig(intensity_range=(10.0, 25.0))],
                (10, 1),
                [(2.0, 0.0, 0.0, 0.0), (7.0, 0.0, 0.0, 0.0)],
            )

    def test_several_tracks_need_ranges(self):
        with pytest.raises(ConfigurationException):
            create_tracks([TrackerConfig(), TrackerConfig()], (10, 1), [(2.0, 0.0, 0.0, 0.0)] * 2)

    def test_state_count_must_match(self):
        with pytest.raises(ConfigurationException):
            create_tracks([TrackerConfig()], (10, 1), [])

    def test_tracker_config_validation(self):
        with pytest.raises(ValueError):
            TrackerConfig(half_width=(-1, 0))
        with pytest.raises(ValueError):
            TrackerConfig(intensity_range=(3.0, 3.0))
        with pytest.raises(ValueError):
            TrackerConfig(observe_mode="mean")
