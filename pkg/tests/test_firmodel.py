import numpy as np
import pytest
from hypothesis import given, strategies as st

from gimbench.errors import InfeasibleCommandError
from gimbench.firmodel import (FirCharacter, OffsetLoad, WearState, advance_wear, offset_torque,
                               stroke_avg_wrench)
from gimbench.signalgen import DriveCommand

MAPPING = FirCharacter(pitch_bias=0.39, roll_bias=-8.33, thrust_at_baseline=135.0,
                       thrust_pitch_slope=-0.26, thrust_roll_slope=-0.16)


def test_mapping_fly_nulls_at_its_trim():
    w = stroke_avg_wrench(MAPPING, DriveCommand(offset_voltage=-3.0, amplitude_difference=17.0))
    assert w.pitch == pytest.approx(0.0, abs=1e-12)
    assert w.roll == pytest.approx(0.0, abs=1e-12)
    assert w.thrust == pytest.approx(135 + 0.78 - 2.72)


@given(vo=st.floats(-15, 15), da=st.floats(-25, 25))
def test_noiseless_model_is_affine(vo, da):
    w = stroke_avg_wrench(MAPPING, DriveCommand(offset_voltage=vo, amplitude_difference=da))
    assert w.pitch == pytest.approx(0.13 * vo + 0.39, abs=1e-12)
    assert w.roll == pytest.approx(0.49 * da - 8.33, abs=1e-12)


def test_coupling_terms():
    fir = MAPPING.with_coupling(0.1)
    w0 = stroke_avg_wrench(fir, DriveCommand())
    w = stroke_avg_wrench(fir, DriveCommand(offset_voltage=10.0, amplitude_difference=20.0))
    assert w.pitch - w0.pitch == pytest.approx(1.3 + 2.0)
    assert w.roll - w0.roll == pytest.approx(9.8 + 1.0)


def test_cubic_saturation_is_odd():
    fir = FirCharacter(cubic_coeff=1e-4)
    a = stroke_avg_wrench(fir, DriveCommand(offset_voltage=10.0))
    b = stroke_avg_wrench(fir, DriveCommand(offset_voltage=-10.0))
    assert a.pitch == pytest.approx(1.3 - 0.1)
    assert a.pitch == pytest.approx(-b.pitch)


def test_rail_violation_raises():
    with pytest.raises(InfeasibleCommandError):
        stroke_avg_wrench(MAPPING, DriveCommand(offset_voltage=40.0, amplitude_difference=25.0))


def test_noise_draws_three_normals():
    fir = FirCharacter(inner_noise_sd_pitch=0.2, inner_noise_sd_roll=0.77, extreme_noise_sd_pitch=0.32,
                       extreme_noise_sd_roll=3.46, thrust_noise_sd=0.8)
    r1, r2 = np.random.default_rng(5), np.random.default_rng(5)
    stroke_avg_wrench(fir, DriveCommand(), rng=r1)
    r2.standard_normal(3)
    assert r1.random() == r2.random()


def test_extreme_noise_regime():
    fir = FirCharacter(inner_noise_sd_pitch=0.2, inner_noise_sd_roll=0.77, extreme_noise_sd_pitch=0.32,
                       extreme_noise_sd_roll=3.46)
    rng = np.random.default_rng(0)
    inner = [stroke_avg_wrench(fir, DriveCommand(amplitude_difference=5.0), rng=rng).roll for _ in range(4000)]
    extreme = [stroke_avg_wrench(fir, DriveCommand(amplitude_difference=25.0), rng=rng).roll for _ in range(4000)]
    assert np.std(inner) == pytest.approx(0.77, rel=0.05)
    assert np.std(extreme) == pytest.approx(3.46, rel=0.05)
    assert fir.is_extreme(15.0, 0.0) and fir.is_extreme(0.0, -25.0) and not fir.is_extreme(10.0, 20.0)


def test_wear_drift_accumulates():
    fir = FirCharacter(wear_drift_rate_roll=0.57 / 270, wear_drift_rate_pitch=0.275 / 270)
    state = advance_wear(fir, 135.0)
    state = advance_wear(fir, 135.0, state)
    assert state == WearState(270.0, pytest.approx(0.275), pytest.approx(0.57))
    w = stroke_avg_wrench(fir, DriveCommand(), flap_time_so_far=270.0)
    assert (w.pitch, w.roll) == (pytest.approx(0.275), pytest.approx(0.57))
    with pytest.raises(ValueError):
        advance_wear(fir, -1.0)


def test_offset_load_torque_and_validation():
    assert offset_torque(OffsetLoad(31.8, 4.0, "roll")) == pytest.approx(1.2474, abs=1e-4)
    assert offset_torque(OffsetLoad(25.0, 4.0, "pitch", sign=-1)) == pytest.approx(-0.9807, abs=1e-4)
    with pytest.raises(ValueError):
        OffsetLoad(1.0, 1.0, "yaw")
    with pytest.raises(ValueError):
        OffsetLoad(1.0, 1.0, "roll", sign=2)


@pytest.mark.parametrize("kwargs", [
    {"pitch_slope": 0.0}, {"thrust_at_baseline": -1.0}, {"inner_noise_sd_roll": -0.1},
    {"inner_noise_sd_roll": 1.0, "extreme_noise_sd_roll": 0.5}, {"extreme_threshold_fraction": 0.0},
])
def test_invalid_characters(kwargs):
    with pytest.raises(ValueError):
        FirCharacter(**kwargs)


def test_zero_model_returns_baseline_thrust():
    fir = FirCharacter(pitch_slope=1e-300, roll_slope=1e-300, thrust_at_baseline=150.0)
    w = stroke_avg_wrench(fir, DriveCommand(offset_voltage=5.0, amplitude_difference=5.0))
    assert w.pitch == pytest.approx(0.0, abs=1e-290) and w.thrust == 150.0


def test_zero_mass_load_and_zero_rate():
    assert offset_torque(OffsetLoad(0.0, 7.0, "pitch")) == 0.0
    assert advance_wear(FirCharacter(), 1e6) == WearState(1e6, 0.0, 0.0)


@given(t1=st.floats(0, 1e4), t2=st.floats(0, 1e4), rate=st.floats(-1e-2, 1e-2))
def test_wear_additive(t1, t2, rate):
    fir = FirCharacter(wear_drift_rate_roll=rate)
    a = advance_wear(fir, t1 + t2)
    b = advance_wear(fir, t2, advance_wear(fir, t1))
    assert b.drift_roll == pytest.approx(a.drift_roll, rel=1e-9, abs=1e-12)


def test_validation_fly_session_drift_moves_trim():
    # -0.57 uNm would move the trim toward -8.5 V, not -11.5 V; the drift is +0.57
    s_r, bias = 0.38, 3.8
    assert s_r * -10.0 + bias == pytest.approx(0.0)
    assert s_r * -11.5 + bias + 0.57 == pytest.approx(0.0)
