"""Render run telemetry into figure files next to the CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import load_log, position_error  # noqa: E402

_FIG_KW = {"figsize": (8.0, 6.0), "dpi": 120}


def _shade_morph(ax, t, alpha):
    moving = np.abs(np.diff(alpha)) > 1e-12
    if not moving.any():
        return
    start = None
    for i, m in enumerate(moving):
        if m and start is None:
            start = t[i]
        elif not m and start is not None:
            ax.axvspan(start, t[i], color="0.85", zorder=0)
            start = None
    if start is not None:
        ax.axvspan(start, t[-1], color="0.85", zorder=0)


def render_run_figures(log_path, out_dir=None) -> list[Path]:
    """Write tracking/error/estimate/stability figures for one log."""
    log_path = Path(log_path)
    out_dir = Path(out_dir) if out_dir is not None else log_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = log_path.stem
    log = load_log(log_path)
    t = log["t"]
    paths = []

    # tracking per axis plus the fold angle
    fig, axes = plt.subplots(4, 1, sharex=True, **_FIG_KW)
    for i, axis in enumerate("xyz"):
        axes[i].plot(t, log[f"pd_{axis}"], "k--", lw=1.0, label="setpoint")
        axes[i].plot(t, log[f"p_{axis}"], lw=1.2, label="actual")
        axes[i].set_ylabel(f"{axis} [m]")
        _shade_morph(axes[i], t, log["alpha"])
    axes[0].legend(loc="upper right", fontsize=8)
    axes[3].plot(t, np.degrees(log["alpha"]), lw=1.2, color="tab:red")
    axes[3].set_ylabel("fold [deg]")
    axes[3].set_xlabel("t [s]")
    fig.suptitle(f"{stem}: position tracking")
    fig.tight_layout()
    p = out_dir / f"{stem}_tracking.png"
    fig.savefig(p)
    plt.close(fig)
    paths.append(p)

    # tracking error
    err = position_error(log)
    fig, ax = plt.subplots(1, 1, **_FIG_KW)
    for i, axis in enumerate("xyz"):
        ax.plot(t, err[:, i], lw=1.0, label=f"e_{axis}")
    ax.plot(t, np.linalg.norm(err, axis=1), "k", lw=1.4, label="|e|")
    _shade_morph(ax, t, log["alpha"])
    ax.set_xlabel("t [s]")
    ax.set_ylabel("position error [m]")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.suptitle(f"{stem}: tracking error")
    fig.tight_layout()
    p = out_dir / f"{stem}_errors.png"
    fig.savefig(p)
    plt.close(fig)
    paths.append(p)

    # estimates: mass, inertia, disturbance force/torque
    fig, axes = plt.subplots(2, 2, sharex=True, **_FIG_KW)
    axes[0, 0].plot(t, log["mhat"], lw=1.2)
    axes[0, 0].set_ylabel("m_hat [kg]")
    for axis in "xyz":
        axes[0, 1].plot(t, log[f"bhat_{axis}"], lw=1.0, label=axis)
    axes[0, 1].set_ylabel("b_hat [kg m$^2$]")
    axes[0, 1].legend(fontsize=8)
    for axis in "xyz":
        axes[1, 0].plot(t, log[f"fd_{axis}"], "--", lw=0.8)
        axes[1, 0].plot(t, log[f"fhat_{axis}"], lw=1.0, label=axis)
    axes[1, 0].set_ylabel("f_d (dashed) / f_hat [N]")
    axes[1, 0].set_xlabel("t [s]")
    axes[1, 0].legend(fontsize=8)
    for axis in "xyz":
        axes[1, 1].plot(t, log[f"taud_{axis}"], "--", lw=0.8)
        axes[1, 1].plot(t, log[f"tauhat_{axis}"], lw=1.0, label=axis)
    axes[1, 1].set_ylabel("tau_d (dashed) / tau_hat [N m]")
    axes[1, 1].set_xlabel("t [s]")
    fig.suptitle(f"{stem}: estimates")
    fig.tight_layout()
    p = out_dir / f"{stem}_estimates.png"
    fig.savefig(p)
    plt.close(fig)
    paths.append(p)

    # storage function and its analytic rate
    fig, axes = plt.subplots(2, 1, sharex=True, **_FIG_KW)
    axes[0].plot(t, log["V"], lw=1.2)
    axes[0].set_ylabel("V")
    axes[1].plot(t, log["Vdot"], lw=1.0)
    axes[1].axhline(0.0, color="k", lw=0.6)
    axes[1].set_ylabel("dV/dt")
    axes[1].set_xlabel("t [s]")
    for ax in axes:
        _shade_morph(ax, t, log["alpha"])
        ax.grid(alpha=0.3)
    fig.suptitle(f"{stem}: stability instrumentation")
    fig.tight_layout()
    p = out_dir / f"{stem}_lyapunov.png"
    fig.savefig(p)
    plt.close(fig)
    paths.append(p)

    return paths


def render_comparison_figure(path_a, path_b, out_path,
                             labels=("A", "B")) -> Path:
    """Overlay the error norms of two runs in one figure."""
    log_a = load_log(path_a)
    log_b = load_log(path_b)
    fig, ax = plt.subplots(1, 1, **_FIG_KW)
    for log, label, style in ((log_a, labels[0], "-"),
                              (log_b, labels[1], "--")):
        err = np.linalg.norm(position_error(log), axis=1)
        ax.plot(log["t"], err, style, lw=1.2, label=label)
    _shade_morph(ax, log_a["t"], log_a["alpha"])
    ax.set_xlabel("t [s]")
    ax.set_ylabel("position error norm [m]")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path)
    plt.close(fig)
    return out_path
