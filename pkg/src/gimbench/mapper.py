"""Experiment protocols on the simulated plant: point, grid sweep, trim search."""
import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional

import numpy as np

from . import gimbalsim
from .errors import InfeasibleCommandError, TrimError
from .firmodel import FirCharacter, WearState, advance_wear, offset_torque, stroke_avg_wrench
from .gimbalsim import GimbalParams
from .signalgen import DriveCommand, rail_feasible
from .virtualsensors import BalanceConfig, MocapConfig, balance_stream, mocap_stream

DEFAULT_PITCH_LEVELS = (-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0)
DEFAULT_ROLL_LEVELS = tuple(float(v) for v in range(-25, 30, 5))

STEADY_FLOOR_RAD = 1e-6
CSV_HEADER = ["v_o_volts", "delta_a_volts", "tau_pitch_uNm", "tau_roll_uNm", "thrust_mg", "excluded"]


@dataclass(frozen=True)
class Plant:
    """Everything needed to run the measurement chain.

    ``stiffness`` holds the *calibrated* k_s per axis (uNm/rad) used to turn
    angles into torques; ``gimbal`` holds the true axis physics.
    """

    gimbal: Mapping[str, GimbalParams]
    fir: FirCharacter
    mocap: MocapConfig = MocapConfig()
    balance: BalanceConfig = BalanceConfig()
    stiffness: Optional[Mapping[str, float]] = None
    dt: float = 1e-3

    def calibrated(self, axis):
        if self.stiffness is not None and axis in self.stiffness:
            return self.stiffness[axis]
        return gimbalsim.total_stiffness(self.gimbal[axis])


@dataclass(frozen=True)
class SweepSpec:
    pitch_levels: tuple = DEFAULT_PITCH_LEVELS
    roll_levels: tuple = DEFAULT_ROLL_LEVELS
    settle_duration: float = 3.0
    average_window: float = 0.5
    amplitude: float = 192.0
    bias_voltage: float = 250.0
    frequency: float = 180.0
    rail_margin: float = 2.0

    UNITS = {"pitch_levels": "V", "roll_levels": "V", "settle_duration": "s",
             "average_window": "s", "amplitude": "V", "bias_voltage": "V",
             "frequency": "Hz", "rail_margin": "V"}

    def __post_init__(self):
        if not self.pitch_levels or not self.roll_levels:
            raise ValueError("grid levels must be nonempty")
        if not 0 < self.average_window < self.settle_duration:
            raise ValueError("average_window must be positive and shorter than settle_duration")

    def command(self, offset_voltage=0.0, amplitude_difference=0.0):
        return DriveCommand(bias_voltage=self.bias_voltage, amplitude=self.amplitude,
                            amplitude_difference=amplitude_difference,
                            offset_voltage=offset_voltage, frequency=self.frequency,
                            duration=self.settle_duration)

    def grid(self):
        """Commands in traversal order: pitch-major, roll-minor."""
        return [self.command(vo, da) for vo in self.pitch_levels for da in self.roll_levels]


@dataclass
class Measurement:
    offset_voltage: float
    amplitude_difference: float
    tau_pitch: Optional[float] = None
    tau_roll: Optional[float] = None
    thrust: Optional[float] = None
    excluded: bool = False
    steady: bool = True
    true_pitch: Optional[float] = None
    true_roll: Optional[float] = None
    true_thrust: Optional[float] = None


@dataclass
class SweepDataset:
    points: list
    metadata: dict = field(default_factory=dict)

    def included(self):
        return [p for p in self.points if not p.excluded]

    def arrays(self):
        """Column arrays over non-excluded points."""
        pts = self.included()
        return {
            "v_o": np.array([p.offset_voltage for p in pts]),
            "delta_a": np.array([p.amplitude_difference for p in pts]),
            "tau_pitch": np.array([p.tau_pitch for p in pts]),
            "tau_roll": np.array([p.tau_roll for p in pts]),
            "thrust": np.array([p.thrust for p in pts]),
        }

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for p in self.points:
                if p.excluded:
                    w.writerow([repr(p.offset_voltage), repr(p.amplitude_difference), "", "", "", 1])
                else:
                    w.writerow([repr(p.offset_voltage), repr(p.amplitude_difference),
                                repr(p.tau_pitch), repr(p.tau_roll), repr(p.thrust), 0])

    def write(self, csv_path, sidecar_path):
        self.to_csv(csv_path)
        with open(sidecar_path, "w") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_csv(cls, path, sidecar_path=None):
        points = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                excluded = row["excluded"].strip() == "1"
                m = Measurement(float(row["v_o_volts"]), float(row["delta_a_volts"]), excluded=excluded)
                if not excluded:
                    m.tau_pitch = float(row["tau_pitch_uNm"])
                    m.tau_roll = float(row["tau_roll_uNm"])
                    m.thrust = float(row["thrust_mg"])
                points.append(m)
        meta = {}
        if sidecar_path is not None:
            with open(sidecar_path) as fh:
                meta = json.load(fh)
        return cls(points, meta)


@dataclass(frozen=True)
class TrimResult:
    delta_a: float
    offset_voltage: float
    iterations: int
    residual_pitch: float
    residual_roll: float
    external_pitch: float = 0.0
    external_roll: float = 0.0
    label: str = ""


def point_rng(seed, index):
    """Independent stream for grid point ``index`` of a run seeded ``seed``."""
    return np.random.default_rng([int(seed), int(index)])


def _window_drift(stream):
    """Second-half mean minus first-half mean of a sensor window."""
    v = stream.values
    h = v.size // 2
    return float(abs(v[h:].mean() - v[:h].mean())) if h else 0.0


def _measure_batch(plant, cmds, rngs, flap_times, settle, window, margin):
    wrenches = [stroke_avg_wrench(plant.fir, c, ft, r, margin)
                for c, r, ft in zip(cmds, rngs, flap_times)]
    n = len(cmds)
    params = [plant.gimbal["pitch"]] * n + [plant.gimbal["roll"]] * n
    torques = [w.pitch for w in wrenches] + [w.roll for w in wrenches]
    times, theta = gimbalsim.hold_constant_torques(params, torques, settle, plant.dt, window)
    t0 = settle - window
    # half-window mean difference has twice the SD of the full-window mean
    n_frames = max(2, round(plant.mocap.frame_rate * window))
    limit = 3.0 * max(2.0 * plant.mocap.frame_angle_sd / math.sqrt(n_frames), STEADY_FLOOR_RAD)
    k_p, k_r = plant.calibrated("pitch"), plant.calibrated("roll")
    out = []
    for i, (cmd, w, rng) in enumerate(zip(cmds, wrenches, rngs)):
        sp = mocap_stream((times, theta[i]), plant.mocap, rng, t0, settle)
        sr = mocap_stream((times, theta[n + i]), plant.mocap, rng, t0, settle)
        base = balance_stream(0.0, plant.balance, rng, -window, 0.0)
        active = balance_stream(w.thrust, plant.balance, rng, t0, settle)
        steady = _window_drift(sp) <= limit and _window_drift(sr) <= limit
        out.append(Measurement(
            offset_voltage=cmd.offset_voltage, amplitude_difference=cmd.amplitude_difference,
            tau_pitch=float(k_p * sp.mean()), tau_roll=float(k_r * sr.mean()),
            thrust=float(base.mean() - active.mean()), steady=bool(steady),
            true_pitch=w.pitch, true_roll=w.roll, true_thrust=w.thrust))
    return out


def measure_point(plant, cmd, rng, flap_time=0.0, settle=3.0, window=0.5, margin=0.0):
    """Hold ``cmd`` for ``settle`` s from rest and average the last ``window`` s.

    Torques come from the averaged mocap angle times the calibrated k_s;
    thrust is the pre-run balance baseline minus the averaged active reading.
    ``Measurement.steady`` is False when the angle drifts across the window
    by more than three standard errors of the window mean.
    """
    return _measure_batch(plant, [cmd], [rng], [flap_time], settle, window, margin)[0]


def run_grid(plant, spec, seed, wear=None, parallel=False, workers=4):
    """Measure every rail-feasible grid point in pitch-major order.

    Wear accumulates ``settle_duration`` flapping seconds per measured point.
    Per-point random streams come from (seed, index), so the result does not
    depend on scheduling when ``parallel`` is set.
    """
    fir = plant.fir
    if parallel and (fir.wear_drift_rate_pitch or fir.wear_drift_rate_roll):
        raise ValueError("parallel sweeps require zero wear drift")
    wear = wear or WearState()
    points, todo = [], []
    flap = wear.flap_time
    for idx, cmd in enumerate(spec.grid()):
        m = Measurement(cmd.offset_voltage, cmd.amplitude_difference)
        if not rail_feasible(cmd, spec.rail_margin).feasible:
            m.excluded = True
        else:
            todo.append((len(points), cmd, point_rng(seed, idx), flap))
            flap += spec.settle_duration
        points.append(m)

    def work(chunk):
        return _measure_batch(plant, [c for _, c, _, _ in chunk], [r for _, _, r, _ in chunk],
                              [f for _, _, _, f in chunk], spec.settle_duration,
                              spec.average_window, spec.rail_margin)

    if parallel and len(todo) > 1:
        size = math.ceil(len(todo) / workers)
        chunks = [todo[i:i + size] for i in range(0, len(todo), size)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = [m for part in pool.map(work, chunks) for m in part]
    else:
        results = work(todo) if todo else []
    for (pos, *_), m in zip(todo, results):
        points[pos] = m
    final_wear = advance_wear(fir, flap - wear.flap_time, wear)
    meta = {
        "seed": int(seed),
        "spec": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(spec).items()},
        "calibration": {a: plant.calibrated(a) for a in ("pitch", "roll")},
        "non_steady_points": [i for i, p in enumerate(points) if not p.excluded and not p.steady],
        "flap_time_end_s": final_wear.flap_time,
    }
    return SweepDataset(points, meta)


def free_flight_torque(fir, cmd, external=(0.0, 0.0), flap_time=0.0):
    """Net (pitch, roll) torque in free flight: robot wrench plus external load."""
    w = stroke_avg_wrench(fir, cmd, flap_time)
    return w.pitch + external[0], w.roll + external[1]


def load_torques(load, g=9.80665):
    if load is None:
        return 0.0, 0.0
    tau = offset_torque(load, g)
    return (tau, 0.0) if load.axis == "pitch" else (0.0, tau)


def trim_search(fir, template, rng, load=None, step=0.5, observation_sd=0.02,
                tolerance=0.3, start=(0.0, 0.0), max_iterations=500, flap_time=0.0,
                margin=0.0, label=""):
    """Quantized coordinate descent on (dA, V_o) until takeoff is level.

    Each "takeoff" observes the net free-flight torques plus Gaussian noise.
    Per axis the search walks in ``step`` volt increments against the sign
    of the observed torque until the sign flips, then keeps whichever end of
    the bracket looked better. Passes repeat until one changes nothing.
    ``start`` is (dA, V_o).
    """
    external = load_torques(load)
    x = {"roll": round(start[0] / step) * step, "pitch": round(start[1] / step) * step}
    evals = 0
    best = None

    def observe():
        nonlocal evals, best
        cmd = template.with_trim(offset_voltage=x["pitch"], amplitude_difference=x["roll"])
        if not rail_feasible(cmd, margin).feasible:
            return None
        tp, tr = free_flight_torque(fir, cmd, external, flap_time)
        noise = rng.normal(0.0, observation_sd, size=2) if observation_sd > 0 else (0.0, 0.0)
        obs = {"pitch": tp + noise[0], "roll": tr + noise[1]}
        evals += 1
        score = max(abs(obs["pitch"]), abs(obs["roll"]))
        if best is None or score < best[0]:
            best = (score, dict(x), obs)
        return obs

    obs = observe()
    if obs is None:
        raise InfeasibleCommandError("trim search start point violates the rail")
    while evals < max_iterations:
        moved = False
        for axis in ("roll", "pitch"):
            origin = x[axis]
            if obs[axis] == 0:
                continue
            direction = -math.copysign(1.0, obs[axis])
            while evals < max_iterations:
                x[axis] += direction * step
                nxt = observe()
                if nxt is None:
                    x[axis] -= direction * step
                    break
                if math.copysign(1.0, nxt[axis]) != math.copysign(1.0, obs[axis]):
                    if abs(nxt[axis]) > abs(obs[axis]):
                        x[axis] -= direction * step
                    else:
                        obs = nxt
                    break
                obs = nxt
            moved = moved or x[axis] != origin
        if not moved:
            break
    if abs(obs["pitch"]) <= tolerance and abs(obs["roll"]) <= tolerance:
        return TrimResult(delta_a=x["roll"], offset_voltage=x["pitch"], iterations=evals,
                          residual_pitch=float(obs["pitch"]), residual_roll=float(obs["roll"]),
                          external_pitch=external[0], external_roll=external[1], label=label)
    raise TrimError(f"trim search did not converge after {evals} takeoffs", best=best)
