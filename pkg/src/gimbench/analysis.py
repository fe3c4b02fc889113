"""Statistics over a sweep: regressions, planar fits, coupling, dispersion, thrust, trims."""
import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .calibkit import ols_line
from .errors import FitError

TETHER_DISTURBANCE_UNM = 0.3

COMMAND = {"pitch": "v_o", "roll": "delta_a"}
RESPONSE = {"pitch": "tau_pitch", "roll": "tau_roll", "thrust": "thrust"}


@dataclass(frozen=True)
class AxisFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def predict(self, command):
        return self.intercept + self.slope * np.asarray(command, dtype=float)


@dataclass(frozen=True)
class PlanarFit:
    c0: float
    c_pitch: float
    c_roll: float
    residual_sd: float
    residuals: tuple = field(repr=False, default=())


@dataclass
class AnalysisReport:
    pitch_fit: AxisFit
    roll_fit: AxisFit
    planar_fits: dict
    cross_corr: dict
    residual_cross_corr: dict
    sigma_inner: dict
    sigma_extreme: dict
    thrust_stats: dict
    trim_checks: list = field(default_factory=list)

    def to_dict(self):
        planar = {k: {"c0": v.c0, "c_pitch": v.c_pitch, "c_roll": v.c_roll,
                      "residual_sd": v.residual_sd} for k, v in self.planar_fits.items()}
        return {
            "pitch_fit": asdict(self.pitch_fit),
            "roll_fit": asdict(self.roll_fit),
            "planar_fits": planar,
            "cross_corr": dict(self.cross_corr),
            "residual_cross_corr": dict(self.residual_cross_corr),
            "sigma_inner": dict(self.sigma_inner),
            "sigma_extreme": dict(self.sigma_extreme),
            "thrust_stats": dict(self.thrust_stats),
            "trim_checks": list(self.trim_checks),
        }


def _columns(ds, minimum):
    cols = ds.arrays()
    if cols["v_o"].size < minimum:
        raise FitError(f"need at least {minimum} measured points, got {cols['v_o'].size}")
    return cols


def axis_regression(ds, axis):
    """OLS of an axis torque on its own command over all measured points."""
    cols = _columns(ds, 3)
    x, y = cols[COMMAND[axis]], cols[RESPONSE[axis]]
    if np.unique(x).size < 2:
        raise FitError(f"{axis} command takes a single level; slope undefined")
    slope, intercept, r2 = ols_line(x, y)
    return AxisFit(slope, intercept, r2, int(x.size))


def planar_fit(ds, response):
    """Least squares of ``response`` on (1, V_o, dA)."""
    cols = _columns(ds, 4)
    design = np.column_stack([np.ones_like(cols["v_o"]), cols["v_o"], cols["delta_a"]])
    if np.linalg.matrix_rank(design) < 3:
        raise FitError("planar fit design is rank deficient; both commands must vary")
    y = cols[RESPONSE[response]]
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = max(1, y.size - 3)
    return PlanarFit(float(coef[0]), float(coef[1]), float(coef[2]),
                     float(np.sqrt(np.sum(resid ** 2) / dof)), tuple(resid.tolist()))


def _pearson(x, y):
    x = np.asarray(x, dtype=float) - np.mean(x)
    y = np.asarray(y, dtype=float) - np.mean(y)
    sx, sy = np.sqrt(np.sum(x * x)), np.sqrt(np.sum(y * y))
    if sx == 0 or sy == 0:
        raise FitError("zero-variance series; correlation undefined")
    return float(np.clip(np.sum(x * y) / (sx * sy), -1.0, 1.0))


def cross_correlation(ds):
    """Pearson correlation of each cross-axis command with the measured torque."""
    cols = _columns(ds, 3)
    return {
        "roll_cmd_vs_pitch_torque": _pearson(cols["delta_a"], cols["tau_pitch"]),
        "pitch_cmd_vs_roll_torque": _pearson(cols["v_o"], cols["tau_roll"]),
    }


def _pearson_or_none(x, y):
    try:
        return _pearson(x, y)
    except FitError:
        return None


def residual_cross_correlation(ds, fits):
    """Same pairing, but on residuals from each axis' own-command trend line.

    A pair whose residuals vanish (a noise-free affine map) reports None.
    """
    cols = _columns(ds, 3)
    rp = cols["tau_pitch"] - fits["pitch"].predict(cols["v_o"])
    rr = cols["tau_roll"] - fits["roll"].predict(cols["delta_a"])
    # float round-off leaves ~1e-15 residuals on exact data; treat as zero
    scale = 1e-12 * (1.0 + np.abs(cols["tau_pitch"]).max() + np.abs(cols["tau_roll"]).max())
    rp = np.where(np.abs(rp) < scale, 0.0, rp)
    rr = np.where(np.abs(rr) < scale, 0.0, rr)
    return {
        "roll_cmd_vs_pitch_torque": _pearson_or_none(cols["delta_a"], rp),
        "pitch_cmd_vs_roll_torque": _pearson_or_none(cols["v_o"], rr),
    }


def point_classes(ds):
    """Boolean masks (inner, extreme) over the measured points.

    Inner: the three smallest-magnitude levels of each command (a 3x3 block).
    Extreme: either command at its largest magnitude.
    """
    cols = ds.arrays()
    vo, da = cols["v_o"], cols["delta_a"]
    all_pts = ds.points
    vo_levels = sorted({p.offset_voltage for p in all_pts}, key=lambda v: (abs(v), v))
    da_levels = sorted({p.amplitude_difference for p in all_pts}, key=lambda v: (abs(v), v))
    inner = np.isin(vo, vo_levels[:3]) & np.isin(da, da_levels[:3])
    extreme = (np.abs(vo) == max(abs(v) for v in vo_levels)) | \
              (np.abs(da) == max(abs(v) for v in da_levels))
    return inner, extreme


def dispersion_stats(ds, fits):
    """RMS deviation from each axis trend line over inner and extreme points."""
    cols = ds.arrays()
    inner, extreme = point_classes(ds)
    if not inner.any() or not extreme.any():
        raise FitError("dataset lacks inner or extreme points")
    out = {"sigma_inner": {}, "sigma_extreme": {},
           "n_inner": int(inner.sum()), "n_extreme": int(extreme.sum())}
    for axis in ("pitch", "roll"):
        resid = cols[RESPONSE[axis]] - fits[axis].predict(cols[COMMAND[axis]])
        out["sigma_inner"][axis] = float(np.sqrt(np.mean(resid[inner] ** 2)))
        out["sigma_extreme"][axis] = float(np.sqrt(np.mean(resid[extreme] ** 2)))
    return out


def thrust_stats(ds):
    cols = _columns(ds, 4)
    t = cols["thrust"]
    mean = float(np.mean(t))
    fit = planar_fit(ds, "thrust")
    return {
        "mean": mean,
        "max_dev_fraction": float(np.max(np.abs(t - mean)) / abs(mean)),
        "slope_pitch": fit.c_pitch,
        "slope_roll": fit.c_roll,
    }


def trim_consistency(fits, trims, sigma):
    """Compare observed free-flight trims with the map's zero-torque command.

    The predicted trim on each axis solves slope * x + intercept + external = 0.
    ``sigma`` maps axis -> dispersion used to express deviations in sigma units.
    """
    checks = []
    for trim in trims:
        for axis, observed, external in (("roll", trim.delta_a, trim.external_roll),
                                         ("pitch", trim.offset_voltage, trim.external_pitch)):
            fit = fits[axis]
            if fit.slope == 0:
                raise FitError(f"{axis} slope is zero; trim prediction undefined")
            predicted = -(fit.intercept + external) / fit.slope
            dv = abs(observed - predicted)
            dtau = abs(fit.slope) * dv
            checks.append({
                "source": trim.label,
                "axis": axis,
                "external_torque_uNm": external,
                "predicted_trim_V": predicted,
                "observed_trim_V": observed,
                "deviation_V": dv,
                "deviation_uNm": dtau,
                "deviation_sigma": dtau / sigma[axis] if sigma[axis] > 0 else float("inf"),
                "within_sigma": bool(dtau <= sigma[axis]),
                "within_tether": bool(dtau <= TETHER_DISTURBANCE_UNM),
            })
    return checks


def analyze(ds, trims=(), sigma=None):
    """Full report. ``sigma`` overrides the per-axis sigma used for trim checks."""
    fits = {"pitch": axis_regression(ds, "pitch"), "roll": axis_regression(ds, "roll")}
    disp = dispersion_stats(ds, fits)
    report = AnalysisReport(
        pitch_fit=fits["pitch"],
        roll_fit=fits["roll"],
        planar_fits={r: planar_fit(ds, r) for r in ("pitch", "roll", "thrust")},
        cross_corr=cross_correlation(ds),
        residual_cross_corr=residual_cross_correlation(ds, fits),
        sigma_inner=disp["sigma_inner"],
        sigma_extreme=disp["sigma_extreme"],
        thrust_stats=thrust_stats(ds),
    )
    if trims:
        report.trim_checks = trim_consistency(fits, trims, sigma or disp["sigma_inner"])
    return report


def write_report_json(report, path, metadata=None):
    doc = report.to_dict()
    if metadata:
        doc["metadata"] = metadata
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_plot_data(ds, report, outdir):
    """CSV files behind each figure: torque scatter with sigma band, planar residuals, thrust map."""
    cols = ds.arrays()
    fits = {"pitch": report.pitch_fit, "roll": report.roll_fit}
    written = []
    for axis in ("pitch", "roll"):
        x = cols[COMMAND[axis]]
        trend = fits[axis].predict(x)
        s = report.sigma_inner[axis]
        path = outdir / f"{axis}_scatter.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["v_o_volts", "delta_a_volts", f"tau_{axis}_uNm", "trend_uNm",
                        "band_low_uNm", "band_high_uNm"])
            for row in zip(cols["v_o"], cols["delta_a"], cols[RESPONSE[axis]], trend):
                w.writerow([repr(float(v)) for v in row] + [repr(float(row[3] - s)), repr(float(row[3] + s))])
        written.append(path)
    for resp, pf in report.planar_fits.items():
        path = outdir / f"planar_{resp}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["v_o_volts", "delta_a_volts", "value", "planar_fit", "residual"])
            for vo, da, y, r in zip(cols["v_o"], cols["delta_a"], cols[RESPONSE[resp]], pf.residuals):
                w.writerow([repr(float(vo)), repr(float(da)), repr(float(y)), repr(float(y - r)), repr(float(r))])
        written.append(path)
    mean = report.thrust_stats["mean"]
    path = outdir / "thrust_deviation.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["v_o_volts", "delta_a_volts", "thrust_mg", "deviation_fraction"])
        for vo, da, t in zip(cols["v_o"], cols["delta_a"], cols["thrust"]):
            w.writerow([repr(float(vo)), repr(float(da)), repr(float(t)), repr(float((t - mean) / mean))])
    written.append(path)
    return written
