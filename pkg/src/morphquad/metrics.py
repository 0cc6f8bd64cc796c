"""Run telemetry schema, summary metrics and run-to-run comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _triplet(stem: str, suffixes=("x", "y", "z")):
    return [f"{stem}_{s}" for s in suffixes]


LOG_COLUMNS = (
    ["t"]
    + _triplet("p") + _triplet("pd")
    + ["phi", "theta", "psi", "phid", "thetad", "psid"]
    + _triplet("v") + _triplet("w")
    + _triplet("f") + _triplet("tau")
    + _triplet("fhat") + _triplet("tauhat")
    + _triplet("fd") + _triplet("taud")
    + _triplet("s1") + _triplet("s2")
    + _triplet("d1") + _triplet("d2")
    + ["mhat"] + _triplet("bhat")
    + ["V", "Vdot", "alpha", "sat_flag"]
)

SETTLE_THRESHOLD = 0.025   # position error norm for "settled" [m]
SETTLE_HOLD = 0.5          # time the error must stay below it [s]


class ComparisonError(ValueError):
    """The two logs cannot be compared (schema/duration mismatch)."""


def load_log(path) -> dict[str, np.ndarray]:
    """Read a run CSV into a column-name -> array mapping."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise ComparisonError(f"{path}: row width does not match header")
    return {name: data[:, i] for i, name in enumerate(header)}


def _stack(log: dict, stem: str) -> np.ndarray:
    return np.column_stack([log[f"{stem}_{s}"] for s in ("x", "y", "z")])


def position_error(log: dict) -> np.ndarray:
    """(n, 3) tracking error p - p_d."""
    return _stack(log, "p") - _stack(log, "pd")


def detect_events(t: np.ndarray, alpha: np.ndarray,
                  atol: float = 1e-12) -> list[float]:
    """Times where the fold angle starts moving after being at rest."""
    moving = np.abs(np.diff(alpha)) > atol
    events = []
    for i in range(len(moving)):
        if moving[i] and (i == 0 or not moving[i - 1]):
            events.append(float(t[i]))
    return events


def settling_time(t: np.ndarray, err_norm: np.ndarray, event_t: float,
                  window_end: float, threshold: float = SETTLE_THRESHOLD,
                  hold: float = SETTLE_HOLD) -> float:
    """Seconds from the event until the error stays below the threshold.

    The error must remain below ``threshold`` for ``hold`` seconds (or to
    the window end if it is closer).  Returns inf when it never settles.
    """
    sel = (t >= event_t) & (t <= window_end)
    tw = t[sel]
    ew = err_norm[sel]
    if len(tw) == 0:
        return math.inf
    below = ew < threshold
    for i in range(len(tw)):
        if not below[i]:
            continue
        hold_end = min(tw[i] + hold, window_end)
        j = np.searchsorted(tw, hold_end, side="right")
        if below[i:j].all():
            return float(tw[i] - event_t)
    return math.inf


@dataclass
class RunMetrics:
    """Summary statistics of one scenario run."""

    rms_error: np.ndarray                     # per-axis RMS position error [m]
    max_error: float                          # max error norm [m]
    settling_times: list = field(default_factory=list)   # per morph event [s]
    saturation_ticks: int = 0
    vdot_min: float = 0.0
    vdot_max: float = 0.0
    observer_force_rms: float = 0.0           # RMS of f_d - f_hat [N]
    observer_torque_rms: float = 0.0          # RMS of tau_d - tau_hat [N m]

    def as_dict(self) -> dict:
        return {
            "rms_error_x": float(self.rms_error[0]),
            "rms_error_y": float(self.rms_error[1]),
            "rms_error_z": float(self.rms_error[2]),
            "max_error": float(self.max_error),
            "settling_times": [float(s) for s in self.settling_times],
            "saturation_ticks": int(self.saturation_ticks),
            "vdot_min": float(self.vdot_min),
            "vdot_max": float(self.vdot_max),
            "observer_force_rms": float(self.observer_force_rms),
            "observer_torque_rms": float(self.observer_torque_rms),
        }


def metrics_from_log(path) -> RunMetrics:
    """Recompute the run summary purely from the CSV columns."""
    log = load_log(path)
    err = position_error(log)
    err_norm = np.linalg.norm(err, axis=1)
    t = log["t"]
    events = detect_events(t, log["alpha"])
    settles = []
    for i, ev in enumerate(events):
        window_end = events[i + 1] if i + 1 < len(events) else float(t[-1])
        settles.append(settling_time(t, err_norm, ev, window_end))
    f_res = _stack(log, "fd") - _stack(log, "fhat")
    tau_res = _stack(log, "taud") - _stack(log, "tauhat")
    return RunMetrics(
        rms_error=np.sqrt(np.mean(err ** 2, axis=0)),
        max_error=float(err_norm.max()),
        settling_times=settles,
        saturation_ticks=int(np.sum(log["sat_flag"] > 0.5)),
        vdot_min=float(log["Vdot"].min()),
        vdot_max=float(log["Vdot"].max()),
        observer_force_rms=float(np.sqrt(np.mean(f_res ** 2))),
        observer_torque_rms=float(np.sqrt(np.mean(tau_res ** 2))),
    )


@dataclass
class Comparison:
    """Per-axis ratios of run A's tracking statistics over run B's."""

    rms_a: np.ndarray
    rms_b: np.ndarray
    rms_ratio: np.ndarray
    max_a: np.ndarray
    max_b: np.ndarray
    max_ratio: np.ndarray
    events: list
    settling_a: list
    settling_b: list

    def table(self) -> str:
        lines = ["axis  rms_a      rms_b      rms_a/b   max_a      max_b      max_a/b"]
        for i, axis in enumerate("xyz"):
            lines.append(
                f"{axis}     {self.rms_a[i]:<10.4g} {self.rms_b[i]:<10.4g} "
                f"{self.rms_ratio[i]:<9.3g} {self.max_a[i]:<10.4g} "
                f"{self.max_b[i]:<10.4g} {self.max_ratio[i]:<.3g}")
        if self.events:
            lines.append("event_t   settle_a  settle_b")
            for ev, sa, sb in zip(self.events, self.settling_a,
                                  self.settling_b):
                lines.append(f"{ev:<9.3g} {sa:<9.3g} {sb:<9.3g}")
        return "\n".join(lines)


def compare_runs(path_a, path_b) -> Comparison:
    """Compare two logs that share the schema, tick grid and events."""
    log_a = load_log(path_a)
    log_b = load_log(path_b)
    if sorted(log_a) != sorted(log_b):
        raise ComparisonError("logs do not share a column schema")
    if len(log_a["t"]) != len(log_b["t"]) or not np.array_equal(
            log_a["t"], log_b["t"]):
        raise ComparisonError("logs do not share duration / tick grid")

    err_a = position_error(log_a)
    err_b = position_error(log_b)
    rms_a = np.sqrt(np.mean(err_a ** 2, axis=0))
    rms_b = np.sqrt(np.mean(err_b ** 2, axis=0))
    max_a = np.abs(err_a).max(axis=0)
    max_b = np.abs(err_b).max(axis=0)

    t = log_a["t"]
    events = detect_events(t, log_a["alpha"])
    norm_a = np.linalg.norm(err_a, axis=1)
    norm_b = np.linalg.norm(err_b, axis=1)
    settling_a, settling_b = [], []
    for i, ev in enumerate(events):
        end = events[i + 1] if i + 1 < len(events) else float(t[-1])
        settling_a.append(settling_time(t, norm_a, ev, end))
        settling_b.append(settling_time(t, norm_b, ev, end))

    with np.errstate(divide="ignore", invalid="ignore"):
        rms_ratio = rms_a / rms_b
        max_ratio = max_a / max_b
    return Comparison(rms_a=rms_a, rms_b=rms_b, rms_ratio=rms_ratio,
                      max_a=max_a, max_b=max_b, max_ratio=max_ratio,
                      events=events, settling_a=settling_a,
                      settling_b=settling_b)


def write_comparison_csv(comparison: Comparison, path) -> None:
    """Delimited form of the comparison table."""
    lines = ["axis,rms_a,rms_b,rms_ratio,max_a,max_b,max_ratio"]
    for i, axis in enumerate("xyz"):
        lines.append(",".join([axis] + ["%.12g" % v for v in (
            comparison.rms_a[i], comparison.rms_b[i],
            comparison.rms_ratio[i], comparison.max_a[i],
            comparison.max_b[i], comparison.max_ratio[i])]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
