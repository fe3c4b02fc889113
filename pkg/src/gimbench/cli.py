"""gimbench command line: calibrate | step-response | sweep | validate | report."""
import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, calibkit, gimbalsim
from .config import load_config
from .errors import ConfigError, FitError, GimbenchError, TrimError
from .firmodel import offset_torque
from .mapper import Plant, SweepDataset, TrimResult, run_grid, trim_search
from .units import DEG_PER_RAD, RAD_PER_DEG

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_CHECK = 0, 2, 3, 4

REPORTED_FC_INTERVAL_HZ = (0.036, 0.063)
REPORTED_FC_CAPTION_HZ = 0.03
DESIGN_TAU_INTERVAL_S = (3.0, 4.0)

# independent random streams per protocol stage
_STREAM_CALIBRATION, _STREAM_TRIM = 1, 2


@dataclasses.dataclass
class Run:
    """A loaded scenario with command-line overrides applied."""

    cfg: object
    seed: int
    out: Path
    no_noise: bool = False
    coupling: float = None

    @property
    def overrides(self):
        return {"no_noise": self.no_noise, "coupling": self.coupling}

    def metadata(self, **extra):
        meta = {"config_hash": self.cfg.config_hash, "seed": self.seed,
                "source": self.cfg.source, "overrides": self.overrides,
                "version": __version__}
        meta.update(extra)
        return meta

    def fir(self, which="mapping"):
        fir = self.cfg.mapping_fly if which == "mapping" else self.cfg.validation_fly
        if self.coupling is not None:
            fir = fir.with_coupling(self.coupling)
        return fir.noiseless() if self.no_noise else fir

    @property
    def mocap(self):
        m = self.cfg.mocap
        return dataclasses.replace(m, marker_position_sd=0.0) if self.no_noise else m

    @property
    def balance(self):
        b = self.cfg.balance
        return dataclasses.replace(b, reading_sd=0.0) if self.no_noise else b

    @property
    def trim_noise(self):
        return 0.0 if self.no_noise else self.cfg.trim.observation_sd

    def rng(self, stream, index=0):
        return np.random.default_rng([self.seed, stream, index])


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _say(msg):
    print(msg, flush=True)


# calibration -------------------------------------------------------------

def calibrate(run):
    """Hung-mass calibration of both axes; returns (fits, points)."""
    cal = run.cfg.calibration
    fits, points = {}, {}
    for i, axis in enumerate(gimbalsim.AXES):
        loads = [dataclasses.replace(ld, axis=axis) for ld in cal.loads]
        pts, fit = calibkit.hung_mass_calibration(
            run.cfg.gimbal[axis], axis, run.mocap, run.rng(_STREAM_CALIBRATION, i),
            loads=loads, settle=cal.settle, window=cal.window, dt=run.cfg.dt)
        fits[axis], points[axis] = fit, pts
    return fits, points


def _calibration_doc(run, fits):
    ang = calibkit.marker_angular_resolution(run.cfg.mocap)
    doc = calibkit.calibration_report(fits, ang)
    for axis in fits:
        truth = gimbalsim.total_stiffness(run.cfg.gimbal[axis])
        doc[axis]["true_k_s_uNm_per_rad"] = truth
        doc[axis]["relative_error"] = fits[axis].k_s / truth - 1.0
    return {"axes": doc, "angular_resolution_rad": ang,
            "angular_resolution_deg": ang * DEG_PER_RAD, "metadata": run.metadata()}


def cmd_calibrate(run):
    fits, points = calibrate(run)
    doc = _calibration_doc(run, fits)
    _write_json(run.out / "calibration.json", doc)
    with open(run.out / "calibration_points.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["axis", "applied_torque_uNm", "measured_angle_rad"])
        for axis in gimbalsim.AXES:
            for p in points[axis]:
                w.writerow([axis, repr(float(p.applied_torque)), repr(float(p.measured_angle))])
    for axis in gimbalsim.AXES:
        a = doc["axes"][axis]
        _say(f"{axis}: k_s = {a['k_s_uNm_per_rad']:.3f} uNm/rad ({a['k_s_uNm_per_deg']:.4f} uNm/deg), "
             f"R^2 = {a['r_squared']:.6f}, error {100 * a['relative_error']:+.2f}%, "
             f"resolution {a['resolution_uNm']:.3f} uNm")
    return EXIT_OK


def _stiffness(run):
    """Calibrated k_s per axis, reusing calibration.json when it matches this run."""
    path = run.out / "calibration.json"
    if path.is_file():
        doc = _read_json(path)
        meta = doc.get("metadata", {})
        if (meta.get("config_hash") == run.cfg.config_hash and meta.get("seed") == run.seed
                and meta.get("overrides") == run.overrides):
            return {a: doc["axes"][a]["k_s_uNm_per_rad"] for a in gimbalsim.AXES}
    fits, _ = calibrate(run)
    return {a: fits[a].k_s for a in gimbalsim.AXES}


# step response -----------------------------------------------------------

def cmd_step_response(run):
    cfg = run.cfg
    rows = []
    for axis in gimbalsim.AXES:
        p = cfg.gimbal[axis]
        overdamped = gimbalsim.is_overdamped(p)
        for angle in cfg.step_angles_deg:
            trace = gimbalsim.step_response(p, angle * RAD_PER_DEG, cfg.step_duration, cfg.dt)
            name = f"step_{axis}_{angle:+g}deg.csv".replace("+", "p").replace("-", "m")
            with open(run.out / name, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t_seconds", "theta_rad"])
                for t, th in zip(trace.time, trace.theta):
                    w.writerow([repr(float(t)), repr(float(th))])
            row = {"axis": axis, "initial_angle_deg": angle, "trace": name,
                   "overdamped": overdamped}
            try:
                fit = calibkit.fit_time_constant(trace)
            except FitError as exc:
                row.update(tau_s=None, f_c_Hz=None, error=str(exc))
            else:
                row.update(tau_s=fit.tau, f_c_Hz=calibkit.bandwidth_from_tau(fit.tau),
                           r_squared=fit.r_squared, error=None)
            rows.append(row)
    _write_json(run.out / "step_response.json", {
        "runs": rows,
        "design_tau_interval_s": list(DESIGN_TAU_INTERVAL_S),
        "reported_f_c_interval_Hz": list(REPORTED_FC_INTERVAL_HZ),
        "reported_f_c_caption_Hz": REPORTED_FC_CAPTION_HZ,
        "metadata": run.metadata(),
    })
    for r in rows:
        if r["tau_s"] is None:
            kind = "" if r["overdamped"] else " (underdamped configuration)"
            _say(f"{r['axis']} {r['initial_angle_deg']:+g} deg: no fit{kind}: {r['error']}")
        else:
            _say(f"{r['axis']} {r['initial_angle_deg']:+g} deg: tau_c = {r['tau_s']:.3f} s, "
                 f"f_c = {r['f_c_Hz']:.4f} Hz")
    lo, hi = REPORTED_FC_INTERVAL_HZ
    _say(f"reported f_c interval for comparison: [{lo}, {hi}] Hz "
         f"(figure caption quotes {REPORTED_FC_CAPTION_HZ} Hz)")
    return EXIT_OK


# sweep -------------------------------------------------------------------

def _trim(run, fir, template, load=None, flap_time=0.0, label="", index=0):
    t = run.cfg.trim
    return trim_search(fir, template, run.rng(_STREAM_TRIM, index), load=load, step=t.step,
                       observation_sd=run.trim_noise, tolerance=t.tolerance,
                       max_iterations=t.max_iterations, flap_time=flap_time, label=label)


def mapping_sweep(run, stiffness=None, parallel=False):
    """Calibrate if needed, trim the mapping fly, sweep the grid, analyze."""
    cfg = run.cfg
    stiffness = stiffness or _stiffness(run)
    fir = run.fir("mapping")
    plant = Plant(cfg.gimbal, fir, run.mocap, run.balance, stiffness, cfg.dt)
    trim = _trim(run, fir, cfg.sweep.command(), label="no_load")
    ds = run_grid(plant, cfg.sweep, run.seed, parallel=parallel)
    ds.metadata.update(run.metadata(trims=[dataclasses.asdict(trim)]))
    report = analysis.analyze(ds, trims=[trim])
    return ds, report, trim


def _write_analysis(run, ds, report, prefix):
    meta = dict(ds.metadata)
    analysis.write_report_json(report, run.out / f"{prefix}_report.json", meta)
    plots = run.out / f"{prefix}_plots"
    plots.mkdir(exist_ok=True)
    analysis.write_plot_data(ds, report, plots)


def _summarize(report, label):
    pf, rf = report.pitch_fit, report.roll_fit
    ts = report.thrust_stats
    _say(f"{label} pitch: slope {pf.slope:.4f} uNm/V, R^2 {pf.r_squared:.3f}; "
         f"roll: slope {rf.slope:.4f} uNm/V, R^2 {rf.r_squared:.3f}")
    cc = report.cross_corr
    _say(f"{label} cross-correlation: roll cmd vs pitch torque {cc['roll_cmd_vs_pitch_torque']:+.3f}, "
         f"pitch cmd vs roll torque {cc['pitch_cmd_vs_roll_torque']:+.3f}")
    _say(f"{label} sigma inner pitch/roll {report.sigma_inner['pitch']:.3f}/{report.sigma_inner['roll']:.3f}, "
         f"extreme {report.sigma_extreme['pitch']:.3f}/{report.sigma_extreme['roll']:.3f} uNm")
    _say(f"{label} thrust: mean {ts['mean']:.2f} mg, max deviation {100 * ts['max_dev_fraction']:.2f}%, "
         f"slopes {ts['slope_pitch']:+.3f}/{ts['slope_roll']:+.3f} mg/V")


def cmd_sweep(run, parallel=False):
    ds, report, trim = mapping_sweep(run, parallel=parallel)
    ds.write(run.out / "sweep.csv", run.out / "sweep_meta.json")
    _write_analysis(run, ds, report, "sweep")
    _say(f"trim: dA = {trim.delta_a:+.1f} V, V_o = {trim.offset_voltage:+.1f} V "
         f"after {trim.iterations} takeoffs")
    _summarize(report, "sweep")
    n_bad = len(ds.metadata["non_steady_points"])
    if n_bad:
        _say(f"warning: {n_bad} points not at steady state at the end of the hold")
    return EXIT_OK


# validate ----------------------------------------------------------------

def _mapping_sigma(run):
    path = run.out / "sweep_report.json"
    if path.is_file():
        doc = _read_json(path)
        meta = doc.get("metadata", {})
        if (meta.get("config_hash") == run.cfg.config_hash and meta.get("seed") == run.seed
                and meta.get("overrides") == run.overrides):
            return doc["sigma_inner"]
    _, report, _ = mapping_sweep(run)
    return dict(report.sigma_inner)


def load_shift_discrepancy(fits, loads, reported, g):
    """Predicted trim shift under each load against the reported free-flight shift.

    Informational only. ``reported`` holds the free-flight trims keyed
    no_load / roll_load / pitch_load.
    """
    rows = []
    base = reported.get("no_load", {})
    for load in loads:
        tau = offset_torque(load, g)
        key, axis = ("delta_a_V", "roll") if load.axis == "roll" else ("v_o_V", "pitch")
        row = {"axis": axis, "load_torque_uNm": tau, "predicted_shift_V": -tau / fits[axis].slope}
        loaded = reported.get(f"{load.axis}_load", {})
        if key in loaded and key in base:
            row["reported_shift_V"] = loaded[key] - base[key]
        rows.append(row)
    return rows


def cmd_validate(run):
    cfg = run.cfg
    if not cfg.validation_loads:
        raise ConfigError("scenario defines no validation loads")
    sigma = _mapping_sigma(run)
    stiffness = _stiffness(run)
    fir = run.fir("validation")
    template = cfg.validation_sweep.command()
    trims = [_trim(run, fir, template, label="pre_no_load", index=0)]
    for i, load in enumerate(cfg.validation_loads, start=1):
        trims.append(_trim(run, fir, template, load=load, label=f"{load.axis}_load", index=i))
    plant = Plant(cfg.gimbal, fir, run.mocap, run.balance, stiffness, cfg.dt)
    ds = run_grid(plant, cfg.validation_sweep, run.seed)
    session = ds.metadata["flap_time_end_s"]
    trims.append(_trim(run, fir, template, flap_time=session, label="post_no_load",
                       index=len(trims)))
    fits = {"pitch": analysis.axis_regression(ds, "pitch"),
            "roll": analysis.axis_regression(ds, "roll")}
    checks = analysis.trim_consistency(fits, trims, sigma)
    g = cfg.gimbal["pitch"].gravity
    shifts = load_shift_discrepancy(fits, cfg.validation_loads, cfg.reported_trims, g)
    ds.metadata.update(run.metadata(trims=[dataclasses.asdict(t) for t in trims]))
    ds.write(run.out / "validation.csv", run.out / "validation_meta.json")
    _write_json(run.out / "validation_report.json", {
        "fits": {a: dataclasses.asdict(f) for a, f in fits.items()},
        "sigma_mapping_inner": sigma,
        "trims": [dataclasses.asdict(t) for t in trims],
        "trim_checks": checks,
        "load_shift_informational": shifts,
        "reported_trims": cfg.reported_trims,
        "metadata": ds.metadata,
    })
    _say(f"{'trim':14s}{'axis':7s}{'load uNm':>10s}{'pred V':>9s}{'obs V':>8s}{'dev uNm':>9s}{'sigma':>7s}")
    for c in checks:
        _say(f"{c['source']:14s}{c['axis']:7s}{c['external_torque_uNm']:+10.3f}"
             f"{c['predicted_trim_V']:+9.2f}{c['observed_trim_V']:+8.1f}"
             f"{c['deviation_uNm']:9.3f}{c['deviation_sigma']:7.2f}")
    for s in shifts:
        rep = s.get("reported_shift_V")
        rep_txt = f"{rep:+.2f} V" if rep is not None else "n/a"
        _say(f"info: {s['axis']} load {s['load_torque_uNm']:+.2f} uNm predicts a trim shift of "
             f"{s['predicted_shift_V']:+.2f} V; reported free-flight shift {rep_txt}")
    return EXIT_OK


# report ------------------------------------------------------------------

def _rel_ok(value, target, tol):
    return abs(value / target - 1.0) <= tol


def check_targets(report, targets, trims=()):
    """(name, passed, detail) rows comparing a report with scenario targets."""
    rows = []
    for axis, fit in (("pitch", report.pitch_fit), ("roll", report.roll_fit)):
        key = f"{axis}_slope_uNm_per_V"
        if key in targets:
            tol = targets.get("slope_rel_tol", 0.08)
            rows.append((f"{axis} slope", _rel_ok(fit.slope, targets[key], tol),
                         f"{fit.slope:.4f} vs {targets[key]} +-{100 * tol:g}%"))
    if "cross_corr_abs_max" in targets:
        lim = targets["cross_corr_abs_max"]
        for name, v in report.cross_corr.items():
            rows.append((f"cross-correlation {name}", abs(v) <= lim, f"{v:+.3f}, limit {lim}"))
    ts = report.thrust_stats
    if "thrust_max_dev_fraction" in targets:
        t, tol = targets["thrust_max_dev_fraction"], targets.get("thrust_max_dev_tol", 0.015)
        rows.append(("thrust max deviation", abs(ts["max_dev_fraction"] - t) <= tol,
                     f"{ts['max_dev_fraction']:.4f} vs {t} +-{tol}"))
    for axis in ("pitch", "roll"):
        key = f"thrust_slope_{axis}_mg_per_V"
        if key in targets:
            tol = targets.get("thrust_slope_rel_tol", 0.10)
            v = ts[f"slope_{axis}"]
            rows.append((f"thrust slope {axis}", _rel_ok(v, targets[key], tol),
                         f"{v:+.4f} vs {targets[key]} +-{100 * tol:g}%"))
    tol = targets.get("trim_tol_V", 1.0)
    for tr in trims:
        if tr.label != "no_load":
            continue
        if "mapping_trim_delta_a_V" in targets:
            t = targets["mapping_trim_delta_a_V"]
            rows.append(("trim dA", abs(tr.delta_a - t) <= tol, f"{tr.delta_a:+.1f} vs {t:+g} +-{tol}"))
        if "mapping_trim_v_o_V" in targets:
            t = targets["mapping_trim_v_o_V"]
            rows.append(("trim V_o", abs(tr.offset_voltage - t) <= tol,
                         f"{tr.offset_voltage:+.1f} vs {t:+g} +-{tol}"))
    for c in report.trim_checks:
        rows.append((f"trim consistency {c['source']} {c['axis']}", c["within_sigma"],
                     f"{c['deviation_uNm']:.3f} uNm = {c['deviation_sigma']:.2f} sigma"))
    return rows


def cmd_report(run, dataset=None, check=False):
    csv_path = Path(dataset) if dataset else run.out / "sweep.csv"
    meta_path = csv_path.with_name(csv_path.stem + "_meta.json")
    if not csv_path.is_file():
        raise ConfigError(f"dataset not found: {csv_path} (run 'gimbench sweep' first)")
    ds = SweepDataset.from_csv(csv_path, meta_path if meta_path.is_file() else None)
    trims = [TrimResult(**t) for t in ds.metadata.get("trims", [])]
    report = analysis.analyze(ds, trims=trims)
    ds.metadata.setdefault("config_hash", run.cfg.config_hash)
    ds.metadata.setdefault("seed", run.seed)
    _write_analysis(run, ds, report, "analysis")
    _summarize(report, "report")
    if not check:
        return EXIT_OK
    rows = check_targets(report, run.cfg.targets, trims)
    for name, ok, detail in rows:
        _say(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    failed = sum(not ok for _, ok, _ in rows)
    _say(f"{len(rows) - failed}/{len(rows)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_CHECK


# entry point -------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON (default: bundled reference scenario)")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--out", help="output directory (default: scenario output_dir)")
    common.add_argument("--coupling", type=float,
                        help="set both cross-axis coupling coefficients (uNm/V)")
    common.add_argument("--no-noise", action="store_true",
                        help="disable robot, mocap, balance and trim noise")
    common.add_argument("--parallel", action="store_true",
                        help="measure grid points concurrently (zero wear drift only)")

    parser = argparse.ArgumentParser(prog="gimbench", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("calibrate", parents=[common], help="hung-mass stiffness calibration")
    sub.add_parser("step-response", parents=[common], help="free-decay time constants")
    sub.add_parser("sweep", parents=[common], help="trim, grid sweep and analysis")
    sub.add_parser("validate", parents=[common], help="free-flight trim consistency")
    rep = sub.add_parser("report", parents=[common], help="analyze a saved sweep")
    rep.add_argument("--dataset", help="sweep CSV (default: OUT/sweep.csv)")
    rep.add_argument("--check", action="store_true",
                     help="compare against scenario targets; exit 4 on any failure")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out or cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        run = Run(cfg, cfg.seed if args.seed is None else args.seed, out,
                  no_noise=args.no_noise, coupling=args.coupling)
        if args.coupling is not None and not math.isfinite(args.coupling):
            raise ConfigError("--coupling must be finite")
        if args.verb == "calibrate":
            return cmd_calibrate(run)
        if args.verb == "step-response":
            return cmd_step_response(run)
        if args.verb == "sweep":
            return cmd_sweep(run, parallel=args.parallel)
        if args.verb == "validate":
            return cmd_validate(run)
        return cmd_report(run, dataset=args.dataset, check=args.check)
    except ConfigError as exc:
        print(f"gimbench: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrimError as exc:
        print(f"gimbench: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (GimbenchError, ValueError, RuntimeError, OSError) as exc:
        print(f"gimbench: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
