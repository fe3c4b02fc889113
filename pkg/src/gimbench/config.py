"""Scenario files: one JSON document, unit suffix on every dimensioned key.

Keys beginning with ``_`` are comments. Unknown keys are rejected so a
misspelled unit suffix cannot silently fall back to a default.
"""
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .calibkit import DEFAULT_LOADS
from .errors import ConfigError
from .firmodel import FirCharacter, OffsetLoad
from .gimbalsim import GimbalParams
from .mapper import SweepSpec
from .virtualsensors import BalanceConfig, MocapConfig


def _key(name, unit):
    return f"{name}_{unit}" if unit else name


def from_unit_dict(cls, doc, where):
    """Build dataclass ``cls`` from a dict whose keys carry unit suffixes."""
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    units = cls.UNITS
    known = {_key(f.name, units.get(f.name, "")): f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in doc.items():
        if key.startswith("_"):
            continue
        if key not in known:
            raise ConfigError(f"{where}: unknown key {key!r} (expected one of {sorted(known)})")
        kwargs[known[key]] = tuple(value) if isinstance(value, list) else value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def to_unit_dict(obj):
    units = type(obj).UNITS
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        out[_key(f.name, units.get(f.name, ""))] = list(v) if isinstance(v, tuple) else v
    return out


def _load(doc, where):
    try:
        return OffsetLoad(mass=doc["mass_mg"], lever=doc["lever_mm"],
                          axis=doc.get("axis", "roll"), sign=doc.get("sign", 1))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: bad load {doc!r}: {exc}") from exc


@dataclass(frozen=True)
class CalibrationProtocol:
    loads: tuple = DEFAULT_LOADS
    settle: float = 30.0
    window: float = 0.5


@dataclass(frozen=True)
class TrimSettings:
    step: float = 0.5
    observation_sd: float = 0.02
    tolerance: float = 0.3
    max_iterations: int = 500


@dataclass
class ScenarioConfig:
    gimbal: dict
    mapping_fly: FirCharacter
    validation_fly: FirCharacter
    mocap: MocapConfig = MocapConfig()
    balance: BalanceConfig = BalanceConfig()
    sweep: SweepSpec = SweepSpec()
    validation_sweep: SweepSpec = SweepSpec()
    calibration: CalibrationProtocol = CalibrationProtocol()
    step_angles_deg: tuple = (-4.0, -2.0, 2.0, 4.0)
    step_duration: float = 20.0
    trim: TrimSettings = TrimSettings()
    validation_loads: tuple = ()
    reported_trims: dict = field(default_factory=dict)
    targets: dict = field(default_factory=dict)
    seed: int = 0
    dt: float = 1e-3
    output_dir: str = "out"
    config_hash: str = ""
    source: str = ""


def config_hash(doc):
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def parse_config(doc, source="<dict>"):
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a JSON object")
    try:
        gim = doc["gimbal"]
        gimbal = {axis: from_unit_dict(GimbalParams, gim[axis], f"gimbal.{axis}")
                  for axis in ("pitch", "roll")}
        mapping = from_unit_dict(FirCharacter, doc["mapping_fly"], "mapping_fly")
    except KeyError as exc:
        raise ConfigError(f"{source}: missing section {exc}") from exc
    validation = from_unit_dict(FirCharacter, doc.get("validation_fly", {}), "validation_fly")
    cal = doc.get("calibration", {})
    loads = tuple(_load(d, "calibration.loads") for d in cal.get("loads", [])) or DEFAULT_LOADS
    step = doc.get("step_response", {})
    trim = doc.get("trim", {})
    val = doc.get("validation", {})
    try:
        return ScenarioConfig(
            gimbal=gimbal,
            mapping_fly=mapping,
            validation_fly=validation,
            mocap=from_unit_dict(MocapConfig, doc.get("mocap", {}), "mocap"),
            balance=from_unit_dict(BalanceConfig, doc.get("balance", {}), "balance"),
            sweep=from_unit_dict(SweepSpec, doc.get("sweep", {}), "sweep"),
            validation_sweep=from_unit_dict(SweepSpec, doc.get("validation_sweep", {}),
                                            "validation_sweep"),
            calibration=CalibrationProtocol(loads=loads, settle=float(cal.get("settle_s", 30.0)),
                                            window=float(cal.get("window_s", 0.5))),
            step_angles_deg=tuple(step.get("initial_angles_deg", (-4.0, -2.0, 2.0, 4.0))),
            step_duration=float(step.get("duration_s", 20.0)),
            trim=TrimSettings(step=float(trim.get("step_V", 0.5)),
                              observation_sd=float(trim.get("observation_sd_uNm", 0.02)),
                              tolerance=float(trim.get("tolerance_uNm", 0.3)),
                              max_iterations=int(trim.get("max_iterations", 500))),
            validation_loads=tuple(_load(d, "validation.loads") for d in val.get("loads", [])),
            reported_trims=val.get("reported_trims", {}),
            targets=doc.get("targets", {}),
            seed=int(doc.get("seed", 0)),
            dt=float(doc.get("dt_s", 1e-3)),
            output_dir=str(doc.get("output_dir", "out")),
            config_hash=config_hash(doc),
            source=source,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path=None):
    """Read a scenario file; ``None`` loads the bundled reference scenario."""
    if path is None:
        text = resources.files("gimbench").joinpath("scenarios/paper.json").read_text()
        source = "bundled:paper.json"
    else:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = p.read_text()
        source = str(p)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON: {exc}") from exc
    return parse_config(doc, source)
