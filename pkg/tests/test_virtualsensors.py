import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gimbench.virtualsensors import (BalanceConfig, MocapConfig, angle_from_markers, balance_stream,
                                     frame_times, marker_positions, mocap_stream, write_balance_log)


@given(theta=st.floats(-1.4, 1.4), sep=st.floats(1.0, 100.0))
def test_noise_free_markers_recover_angle(theta, sep):
    a, b = marker_positions(theta, sep)
    assert angle_from_markers(a, b) == pytest.approx(theta, abs=1e-12)


def test_transverse_offsets_give_resolution_angle():
    a, b = marker_positions(0.0, 40.0, -0.05, 0.05)
    assert angle_from_markers(a, b) == pytest.approx(math.atan(0.1 / 40), rel=1e-12)


def test_coincident_markers_rejected():
    with pytest.raises(ValueError):
        angle_from_markers((1.0, 2.0), (1.0, 2.0))


def test_angle_wraps_into_pi():
    assert angle_from_markers((0, 0), (-1, 0.01), nominal=-3.0) == pytest.approx(
        math.atan2(0.01, -1) + 3.0 - 2 * math.pi)


def test_frame_count():
    assert frame_times(240.0, 29.5, 30.0).size == 120


def test_mocap_noise_statistics():
    cfg = MocapConfig()
    s = mocap_stream(0.02, cfg, np.random.default_rng(3), 0.0, 200.0)
    assert s.unit == "rad"
    assert s.values.mean() == pytest.approx(0.02, abs=2e-5)
    assert s.values.std() == pytest.approx(cfg.frame_angle_sd, rel=0.02)


def test_mocap_zero_noise_returns_truth_without_drawing():
    rng = np.random.default_rng(0)
    s = mocap_stream(lambda t: 0.001 * t, MocapConfig(marker_position_sd=0.0), rng, 0.0, 1.0)
    np.testing.assert_allclose(s.values, 0.001 * s.timestamps)
    assert rng.random() == np.random.default_rng(0).random()


def test_mocap_trajectory_must_cover_window():
    with pytest.raises(ValueError):
        mocap_stream((np.array([0.0, 1.0]), np.zeros(2)), MocapConfig(), np.random.default_rng(), 0.5, 2.0)


def test_balance_reading_drops_with_thrust(tmp_path):
    cfg = BalanceConfig(reading_sd=0.0, tare=10.0)
    s = balance_stream(135.0, cfg, None, 0.0, 1.0)
    np.testing.assert_allclose(s.values, 10.0 + 1500.0 - 135.0)
    assert s.timestamps.size == 10
    path = tmp_path / "bal.log"
    write_balance_log(s, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t_seconds,reading_mg"
    assert lines[1] == "0.0,1375.0"


@pytest.mark.parametrize("cls,kwargs", [
    (MocapConfig, {"frame_rate": 0.0}), (MocapConfig, {"marker_position_sd": -1.0}),
    (BalanceConfig, {"report_rate": 0.0}), (BalanceConfig, {"reading_sd": -0.1}),
])
def test_invalid_configs(cls, kwargs):
    with pytest.raises(ValueError):
        cls(**kwargs)


def test_rigid_rotation_and_nominal_markers():
    a, b = marker_positions(0.0, 40.0)
    assert angle_from_markers(a, b) == 0.0
    a, b = marker_positions(math.radians(1.0), 40.0)
    assert math.degrees(angle_from_markers(a, b)) == pytest.approx(1.0, abs=1e-12)


def test_window_average_shrinks_by_root_frames():
    cfg = MocapConfig()
    rng = np.random.default_rng(11)
    means = [mocap_stream(0.0, cfg, rng, 0.0, 0.5).mean() for _ in range(4000)]
    assert np.std(means) == pytest.approx(cfg.frame_angle_sd / math.sqrt(120), rel=0.05)


def test_mocap_unbiased():
    cfg = MocapConfig()
    s = mocap_stream(0.01, cfg, np.random.default_rng(99), 0.0, 1e5 / 240)
    assert s.values.size == 100000
    assert abs(s.values.mean() - 0.01) <= 3 * cfg.frame_angle_sd / math.sqrt(s.values.size)


def test_balance_zero_and_hover_thrust():
    cfg = BalanceConfig(reading_sd=0.0, tare=3.0)
    assert balance_stream(0.0, cfg, None, 0.0, 1.0).mean() == 1503.0
    assert balance_stream(180.0, cfg, None, 0.0, 1.0).mean() == 1503.0 - 180.0
