import json

import pytest

from gimbench import gimbalsim
from gimbench.config import config_hash, from_unit_dict, load_config, parse_config, to_unit_dict
from gimbench.errors import ConfigError
from gimbench.mapper import SweepSpec
from gimbench.signalgen import DriveCommand, rail_feasible


def bundled_doc():
    from importlib import resources
    return json.loads(resources.files("gimbench").joinpath("scenarios/paper.json").read_text())


def test_bundled_scenario_matches_reference_numbers(scenario):
    assert gimbalsim.total_stiffness(scenario.gimbal["pitch"]) == pytest.approx(107.7)
    assert gimbalsim.total_stiffness(scenario.gimbal["roll"]) == pytest.approx(87.1)
    assert scenario.mapping_fly.roll_slope == 0.49 and scenario.validation_fly.roll_slope == 0.38
    assert scenario.sweep.settle_duration == 30.0
    assert scenario.validation_sweep.amplitude == 168.0
    assert scenario.source == "bundled:paper.json"
    assert len(scenario.config_hash) == 16


def test_validation_wear_reaches_post_session_trims(scenario):
    fir = scenario.validation_fly
    spec = scenario.validation_sweep
    session = sum(rail_feasible(c, spec.rail_margin).feasible for c in spec.grid()) * spec.settle_duration
    assert session * fir.wear_drift_rate_roll == pytest.approx(0.57)
    assert session * fir.wear_drift_rate_pitch == pytest.approx(0.275)
    # post-session null torque at (dA, V_o) = (-11.5, 5)
    assert 0.38 * -11.5 + 3.8 + 0.57 == pytest.approx(0.0)
    assert 0.11 * 5.0 - 0.825 + 0.275 == pytest.approx(0.0)


def test_unit_dict_round_trip():
    spec = SweepSpec(pitch_levels=(0.0, 5.0))
    d = to_unit_dict(spec)
    assert "settle_duration_s" in d and d["pitch_levels_V"] == [0.0, 5.0]
    assert from_unit_dict(SweepSpec, d, "sweep") == spec


def test_unknown_and_unitless_keys_rejected():
    with pytest.raises(ConfigError, match="settle_duration"):
        from_unit_dict(SweepSpec, {"settle_duration": 3.0}, "sweep")
    with pytest.raises(ConfigError, match="expected an object"):
        from_unit_dict(SweepSpec, [1, 2], "sweep")


def test_comment_keys_ignored():
    assert from_unit_dict(SweepSpec, {"_note": "x"}, "sweep") == SweepSpec()


def test_invariant_violation_becomes_config_error():
    doc = bundled_doc()
    doc["mapping_fly"]["pitch_slope_uNm_per_V"] = -1.0
    with pytest.raises(ConfigError, match="mapping_fly"):
        parse_config(doc)


def test_missing_section():
    doc = bundled_doc()
    del doc["gimbal"]
    with pytest.raises(ConfigError, match="missing"):
        parse_config(doc)


def test_hash_ignores_key_order():
    doc = bundled_doc()
    shuffled = dict(reversed(list(doc.items())))
    assert config_hash(doc) == config_hash(shuffled)
    doc["seed"] = 99
    assert config_hash(doc) != config_hash(shuffled)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)
    ok = tmp_path / "ok.json"
    ok.write_text(json.dumps(bundled_doc()))
    assert load_config(ok).config_hash == load_config().config_hash
