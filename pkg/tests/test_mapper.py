import dataclasses

import numpy as np
import pytest

from gimbench.errors import InfeasibleCommandError, TrimError
from gimbench.firmodel import FirCharacter, OffsetLoad, WearState
from gimbench.mapper import (CSV_HEADER, Plant, SweepDataset, SweepSpec, load_torques, measure_point,
                             point_rng, run_grid, trim_search)
from gimbench.signalgen import DriveCommand
from gimbench.virtualsensors import BalanceConfig, MocapConfig

QUIET_MOCAP = MocapConfig(marker_position_sd=0.0)
QUIET_BALANCE = BalanceConfig(reading_sd=0.0)


def mapping_fly(**kw):
    base = dict(pitch_bias=0.39, roll_bias=-8.33, thrust_at_baseline=135.0,
                thrust_pitch_slope=-0.26, thrust_roll_slope=-0.16)
    base.update(kw)
    return FirCharacter(**base)


@pytest.fixture(scope="module")
def gimbal():
    from gimbench.gimbalsim import design_axis
    return {"pitch": design_axis(107.7), "roll": design_axis(87.1)}


SMALL = SweepSpec(pitch_levels=(-15.0, 0.0, 15.0), roll_levels=(-25.0, 0.0, 25.0), settle_duration=30.0)


def test_grid_is_pitch_major():
    cmds = SMALL.grid()
    assert [(c.offset_voltage, c.amplitude_difference) for c in cmds[:4]] == [
        (-15.0, -25.0), (-15.0, 0.0), (-15.0, 25.0), (0.0, -25.0)]
    assert all(c.duration == 30.0 for c in cmds)


def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(pitch_levels=())
    with pytest.raises(ValueError):
        SweepSpec(settle_duration=0.5, average_window=0.5)


def test_noise_free_point_reads_true_torque(gimbal):
    plant = Plant(gimbal, mapping_fly(), QUIET_MOCAP, QUIET_BALANCE)
    m = measure_point(plant, DriveCommand(offset_voltage=10.0, amplitude_difference=20.0),
                      np.random.default_rng(0), settle=60.0)
    assert m.tau_pitch == pytest.approx(m.true_pitch, rel=2e-3)
    assert m.tau_roll == pytest.approx(m.true_roll, rel=2e-3)
    assert m.thrust == pytest.approx(135 - 2.6 - 3.2, abs=1e-9)
    assert m.steady


def test_short_hold_is_flagged_non_steady(gimbal):
    plant = Plant(gimbal, mapping_fly())
    m = measure_point(plant, DriveCommand(amplitude_difference=-25.0), np.random.default_rng(0), settle=3.0)
    assert not m.steady
    assert abs(m.tau_roll) < 0.75 * abs(m.true_roll)


def test_run_grid_excludes_rail_corners(gimbal):
    ds = run_grid(Plant(gimbal, mapping_fly()), SMALL, seed=1)
    excluded = [(p.offset_voltage, p.amplitude_difference) for p in ds.points if p.excluded]
    assert excluded == [(-15.0, -25.0), (-15.0, 25.0), (15.0, -25.0), (15.0, 25.0)]
    assert ds.metadata["seed"] == 1
    assert ds.metadata["flap_time_end_s"] == pytest.approx(5 * 30.0)


def test_default_grid_has_73_points(gimbal):
    spec = dataclasses.replace(SweepSpec(), settle_duration=30.0)
    ds = run_grid(Plant(gimbal, mapping_fly()), spec, seed=0)
    assert len(ds.points) == 77 and len(ds.included()) == 73


def test_run_grid_deterministic_and_parallel_equivalent(gimbal):
    plant = Plant(gimbal, mapping_fly(inner_noise_sd_roll=0.77, extreme_noise_sd_roll=3.46))
    a = run_grid(plant, SMALL, seed=7)
    b = run_grid(plant, SMALL, seed=7)
    c = run_grid(plant, SMALL, seed=7, parallel=True, workers=3)
    assert a.points == b.points == c.points
    assert run_grid(plant, SMALL, seed=8).points != a.points


def test_parallel_refused_with_wear(gimbal):
    plant = Plant(gimbal, mapping_fly(wear_drift_rate_roll=1e-3))
    with pytest.raises(ValueError, match="wear"):
        run_grid(plant, SMALL, seed=0, parallel=True)


def test_wear_moves_later_points(gimbal):
    fir = mapping_fly(wear_drift_rate_roll=0.01)
    ds = run_grid(Plant(gimbal, fir, QUIET_MOCAP, QUIET_BALANCE), SMALL, seed=0, wear=WearState(100.0))
    first = next(p for p in ds.points if not p.excluded)
    assert first.true_roll == pytest.approx(0.49 * first.amplitude_difference - 8.33 + 1.0)
    assert ds.metadata["flap_time_end_s"] == pytest.approx(100.0 + 150.0)


def test_csv_round_trip(tmp_path, gimbal):
    ds = run_grid(Plant(gimbal, mapping_fly()), SMALL, seed=3)
    ds.write(tmp_path / "s.csv", tmp_path / "s.json")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == ",".join(CSV_HEADER)
    back = SweepDataset.from_csv(tmp_path / "s.csv", tmp_path / "s.json")
    assert back.metadata == ds.metadata
    for a, b in zip(ds.points, back.points):
        assert (a.offset_voltage, a.amplitude_difference, a.excluded) == (b.offset_voltage, b.amplitude_difference, b.excluded)
        assert (a.tau_pitch, a.tau_roll, a.thrust) == (b.tau_pitch, b.tau_roll, b.thrust)
    np.testing.assert_array_equal(ds.arrays()["tau_roll"], back.arrays()["tau_roll"])


def test_point_rng_streams_independent():
    assert point_rng(0, 1).random() != point_rng(0, 2).random()
    assert point_rng(5, 3).random() == point_rng(5, 3).random()


def test_trim_mapping_fly():
    tr = trim_search(mapping_fly(), DriveCommand(), np.random.default_rng(0))
    assert (tr.delta_a, tr.offset_voltage) == (17.0, -3.0)
    assert abs(tr.residual_pitch) <= 0.3 and abs(tr.residual_roll) <= 0.3


def test_trim_with_roll_load_shifts_opposite_to_external_torque():
    load = OffsetLoad(31.8, 4.0, "roll", sign=1)
    assert load_torques(load) == (0.0, pytest.approx(1.2474, abs=1e-4))
    tr = trim_search(mapping_fly(), DriveCommand(), np.random.default_rng(0), load=load)
    assert tr.delta_a == pytest.approx(17 - 1.2474 / 0.49, abs=0.5)
    assert tr.external_roll == pytest.approx(1.2474, abs=1e-4)


def test_trim_failure_reports_best():
    # trim point beyond the rail: the search stalls at the boundary
    fir = mapping_fly(roll_bias=-60.0)
    with pytest.raises(TrimError) as err:
        trim_search(fir, DriveCommand(), np.random.default_rng(0), margin=2.0)
    assert err.value.best is not None


def test_trim_infeasible_start():
    with pytest.raises(InfeasibleCommandError):
        trim_search(mapping_fly(), DriveCommand(), np.random.default_rng(0), start=(25.0, 40.0))


def test_pure_roll_torque_reads_through(gimbal):
    fir = FirCharacter(roll_bias=1.0)
    m = measure_point(Plant(gimbal, fir, QUIET_MOCAP, QUIET_BALANCE), DriveCommand(),
                      np.random.default_rng(0), settle=60.0)
    assert m.tau_roll == pytest.approx(1.0, abs=0.005)
    assert m.tau_pitch == 0.0


def test_repeat_measurement_spread_matches_mocap_budget(gimbal):
    plant = Plant(gimbal, FirCharacter())
    assert plant.mocap.frame_angle_sd == pytest.approx(1.77e-3, rel=0.01)
    reads = [measure_point(plant, DriveCommand(), np.random.default_rng(i), settle=0.5).tau_roll
             for i in range(600)]
    expected = plant.calibrated("roll") * plant.mocap.frame_angle_sd / np.sqrt(120)
    assert np.std(reads) == pytest.approx(expected, rel=0.1)


def test_zero_noise_grid_lies_on_planes(gimbal):
    from gimbench.analysis import planar_fit
    plant = Plant(gimbal, mapping_fly(), QUIET_MOCAP, QUIET_BALANCE)
    ds = run_grid(plant, SMALL, 0)
    cols = ds.arrays()
    # the gravity term is sin(theta), so large angles bend the plane slightly
    for resp, key in (("pitch", "tau_pitch"), ("roll", "tau_roll"), ("thrust", "thrust")):
        span = np.ptp(cols[key])
        assert planar_fit(ds, resp).residual_sd < 1e-3 * max(span, 1.0)


def test_unbiased_fly_trims_at_origin():
    tr = trim_search(FirCharacter(), DriveCommand(), np.random.default_rng(0))
    assert (tr.delta_a, tr.offset_voltage) == (0.0, 0.0)


def test_validation_fly_roll_load_trim_shift():
    fir = FirCharacter(pitch_slope=0.11, roll_slope=0.38, roll_bias=3.8, pitch_bias=-0.825)
    base = DriveCommand(amplitude=168.0)
    free = trim_search(fir, base, np.random.default_rng(0))
    loaded = trim_search(fir, base, np.random.default_rng(0), load=OffsetLoad(31.8, 4.0, "roll"))
    assert (free.delta_a, free.offset_voltage) == (-10.0, 7.5)
    assert loaded.delta_a - free.delta_a == pytest.approx(-3.3, abs=0.5)
