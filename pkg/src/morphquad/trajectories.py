"""Reference trajectories with analytic velocity/acceleration feedforward."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controller import Setpoint


@dataclass(frozen=True)
class HoverPath:
    """Hold a fixed position and heading."""

    position: np.ndarray
    yaw: float = 0.0

    def setpoint(self, t: float) -> Setpoint:
        return Setpoint(p_d=np.asarray(self.position, dtype=float),
                        v_d=np.zeros(3), a_d=np.zeros(3),
                        psi_d=self.yaw, psi_rate_d=0.0)


@dataclass(frozen=True)
class CirclePath:
    """Horizontal circle at fixed altitude with a smooth spin-up.

    The angular speed ramps from zero to 2*pi/period over ``spin_up``
    seconds with a smoothstep profile, so the vehicle can start at rest on
    the circle without a feedforward jump.
    """

    radius: float
    center: np.ndarray          # (x, y) of the circle centre
    altitude: float
    period: float
    spin_up: float = 2.0
    yaw: float = 0.0

    def _phase(self, t: float):
        w = 2.0 * math.pi / self.period
        ts = self.spin_up
        if ts <= 0.0 or t >= ts:
            extra = 0.5 * ts if ts > 0.0 else 0.0
            return w * (t - extra), w, 0.0
        u = t / ts
        lam = w * ts * (u ** 3 - 0.5 * u ** 4)
        lam_dot = w * (3.0 * u * u - 2.0 * u ** 3)
        lam_ddot = w * (6.0 * u - 6.0 * u * u) / ts
        return lam, lam_dot, lam_ddot

    def setpoint(self, t: float) -> Setpoint:
        lam, lam_dot, lam_ddot = self._phase(t)
        sl, cl = math.sin(lam), math.cos(lam)
        r = self.radius
        cx, cy = self.center
        p = np.array([cx + r * sl, cy - r * cl, self.altitude])
        v = np.array([r * lam_dot * cl, r * lam_dot * sl, 0.0])
        a = np.array([r * lam_ddot * cl - r * lam_dot ** 2 * sl,
                      r * lam_ddot * sl + r * lam_dot ** 2 * cl, 0.0])
        return Setpoint(p_d=p, v_d=v, a_d=a, psi_d=self.yaw, psi_rate_d=0.0)


def _smoothstep5(u: float):
    """Quintic smoothstep and its first two derivatives on [0, 1]."""
    s = u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)
    ds = 30.0 * u * u * (1.0 - u) ** 2
    dds = 60.0 * u * (1.0 - 3.0 * u + 2.0 * u * u)
    return s, ds, dds


@dataclass(frozen=True)
class WaypointPath:
    """Piecewise quintic blends between timed waypoints (rest at each)."""

    times: np.ndarray
    points: np.ndarray          # (n, 3)
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        if len(self.times) != len(self.points) or len(self.times) == 0:
            raise ValueError("waypoint times and points must match and be non-empty")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("waypoint times must be strictly increasing")

    def setpoint(self, t: float) -> Setpoint:
        times, pts = self.times, self.points
        if t <= times[0]:
            p, v, a = pts[0], np.zeros(3), np.zeros(3)
        elif t >= times[-1]:
            p, v, a = pts[-1], np.zeros(3), np.zeros(3)
        else:
            i = int(np.searchsorted(times, t, side="right")) - 1
            t0, t1 = times[i], times[i + 1]
            span = t1 - t0
            u = (t - t0) / span
            s, ds, dds = _smoothstep5(u)
            delta = pts[i + 1] - pts[i]
            p = pts[i] + delta * s
            v = delta * ds / span
            a = delta * dds / span ** 2
        return Setpoint(p_d=np.asarray(p, dtype=float), v_d=v, a_d=a,
                        psi_d=self.yaw, psi_rate_d=0.0)
