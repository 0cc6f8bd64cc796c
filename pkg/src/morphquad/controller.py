"""Cascade adaptive sliding-mode controller with boundary-layer saturation.

Position loop -> desired force -> attitude setpoint -> attitude loop, with
online adaptation of the mass and diagonal-inertia estimates and optional
feedforward of externally estimated disturbances.

For each loop the tracking error e = x - x_d defines a sliding surface
s = e_dot + Lambda e.  Inside the boundary layer |s_i| <= sigma the
switching term is linearised by sat(s/sigma) and the out-of-layer excess
Delta = s - sigma sat(s/sigma) vanishes, which freezes adaptation and
removes chattering.  Control laws:

    f   = m_hat (g + a_r) - K_p1 Delta_1 - K_p2 sat(s_1/sigma_1) - f_hat
    tau = Y b_hat - K_z1 Delta_2 - (K_z2 - sigma_2 C) sat(s_2/sigma_2)
          - tau_hat

with a_r/zeta_ddot_r the reference accelerations (setpoint acceleration
minus Lambda times the error rate) and Y the regressor that makes the
rotational dynamics linear in the inertia diagonal b:
Y(...) b = B zeta_ddot_r + C zeta_dot_r.

Adaptation (gradient, frozen inside the boundary layers):

    m_hat_dot = -(g + a_r)^T Delta_1 / Gamma_1
    b_hat_dot = -Gamma_2^-1 Y^T Delta_2

A quadratic storage function over (Delta_1, Delta_2, m error, b error) and
its analytic decrease rate are evaluated for instrumentation only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import b_and_c_matrices
from .observer import torque_estimate_to_inertial


class InfeasibleAttitudeError(RuntimeError):
    """The demanded force cannot be realised by tilting (no climb thrust)."""


@dataclass(frozen=True)
class ControllerGains:
    """Surface slopes, loop gains, boundary widths and adaptation gains."""

    lambda1: np.ndarray = field(default_factory=lambda: np.full(3, 3.0))
    lambda2: np.ndarray = field(default_factory=lambda: np.full(3, 6.0))
    k_p1: np.ndarray = field(default_factory=lambda: np.full(3, 8.0))
    k_p2: np.ndarray = field(default_factory=lambda: np.full(3, 0.12))
    k_z1: np.ndarray = field(default_factory=lambda: np.full(3, 0.5))
    k_z2: np.ndarray = field(default_factory=lambda: np.full(3, 0.04))
    sigma1: float = 0.02
    sigma2: float = 0.10
    gamma1: float = 2.0
    gamma2: np.ndarray = field(default_factory=lambda: np.full(3, 50.0))
    m_floor: float = 0.1      # projection floor for the mass estimate [kg]
    b_floor: float = 1e-5     # projection floor for inertia entries [kg m^2]

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "k_p1", "k_p2", "k_z1", "k_z2",
                     "gamma2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if not np.all(arr > 0.0):
                raise ValueError(f"{name} entries must be strictly positive")
        for name in ("sigma1", "sigma2", "gamma1", "m_floor", "b_floor"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")

    def meets_robustness_bounds(self, f_residual: float,
                                tau_residual: float) -> bool:
        """Switching gains must dominate the uncompensated disturbance."""
        return bool(np.all(self.k_p2 >= f_residual)
                    and np.all(self.k_z2 >= tau_residual))


@dataclass
class ControllerState:
    """Parameter estimates and the latest per-tick diagnostics."""

    m_hat: float
    b_hat: np.ndarray
    s1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    s2: np.ndarray = field(default_factory=lambda: np.zeros(3))
    delta1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    delta2: np.ndarray = field(default_factory=lambda: np.zeros(3))
    V: float = 0.0
    V_dot: float = 0.0


@dataclass(frozen=True)
class Setpoint:
    """Desired translation (with feedforward) and heading."""

    p_d: np.ndarray
    v_d: np.ndarray
    a_d: np.ndarray
    psi_d: float = 0.0
    psi_rate_d: float = 0.0


@dataclass
class ControlCommand:
    """Everything one controller tick produces, for mixing and logging."""

    force: np.ndarray          # desired force vector, world frame [N]
    thrust: float              # collective thrust magnitude [N]
    zeta_d: np.ndarray         # attitude setpoint (phi, theta, psi) [rad]
    zeta_d_rate: np.ndarray
    tau_zeta: np.ndarray       # Euler-space control torque [N m]
    s1: np.ndarray
    s2: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray
    sat1: np.ndarray
    sat2: np.ndarray
    accel_r: np.ndarray        # position-loop reference acceleration
    zeta_rate_r: np.ndarray    # attitude-loop reference rate
    zeta_accel_r: np.ndarray   # attitude-loop reference acceleration
    Y: np.ndarray              # inertia regressor at this tick


def sliding_surfaces(e: np.ndarray, e_dot: np.ndarray, lam: np.ndarray,
                     sp_rate: np.ndarray, sp_accel: np.ndarray):
    """Surface s = e_dot + lam*e plus the reference rate/acceleration.

    The reference trajectory is the setpoint shifted against the error,
    x_dot_r = x_dot_d - lam*e, so that s is also x_dot - x_dot_r.
    """
    s = e_dot + lam * e
    rate_r = sp_rate - lam * e
    accel_r = sp_accel - lam * e_dot
    return s, rate_r, accel_r


def boundary_layer_delta(s: np.ndarray, sigma: float):
    """Out-of-layer excess Delta and the saturated switching direction."""
    sat = np.clip(s / sigma, -1.0, 1.0)
    return s - sigma * sat, sat


def regressor(zeta: np.ndarray, zeta_dot: np.ndarray,
              zeta_dot_r: np.ndarray, zeta_ddot_r: np.ndarray) -> np.ndarray:
    """Matrix Y with Y @ b = B(zeta) zeta_ddot_r + C(zeta_dot, zeta) zeta_dot_r.

    B and C are linear in the diagonal inertia entries, so column i is the
    left-hand side evaluated with b equal to the i-th unit vector.
    """
    Y = np.empty((3, 3))
    for i in range(3):
        e_i = np.zeros(3)
        e_i[i] = 1.0
        B_i, C_i = b_and_c_matrices(zeta, zeta_dot, e_i)
        Y[:, i] = B_i @ zeta_ddot_r + C_i @ zeta_dot_r
    return Y


def position_control(accel_r: np.ndarray, m_hat: float, delta1: np.ndarray,
                     sat1: np.ndarray, f_hat: np.ndarray,
                     gains: ControllerGains, g: np.ndarray) -> np.ndarray:
    """Desired force vector of the position loop (world frame)."""
    return (m_hat * (np.asarray(g, dtype=float) + accel_r)
            - gains.k_p1 * delta1 - gains.k_p2 * sat1
            - np.asarray(f_hat, dtype=float))


def attitude_setpoint(f: np.ndarray, psi_d: float,
                      min_fz: float = 1e-6):
    """Roll/pitch setpoint and thrust magnitude realising force ``f``.

    Returns (phi_d, theta_d, thrust) such that the body z axis at
    (phi_d, theta_d, psi_d) points along f and thrust = |f|.
    """
    f = np.asarray(f, dtype=float)
    if f[2] <= min_fz:
        raise InfeasibleAttitudeError(
            f"vertical force {f[2]:.3f} N cannot be realised by tilting")
    thrust = float(np.linalg.norm(f))
    n = f / thrust
    cpsi, spsi = math.cos(psi_d), math.sin(psi_d)
    # undo the yaw: n expressed in the yaw-aligned frame
    nx = cpsi * n[0] + spsi * n[1]
    ny = -spsi * n[0] + cpsi * n[1]
    nz = n[2]
    phi_d = math.asin(max(-1.0, min(1.0, -ny)))
    theta_d = math.atan2(nx, nz)
    return phi_d, theta_d, thrust


def attitude_control(Y: np.ndarray, b_hat: np.ndarray, delta2: np.ndarray,
                     sat2: np.ndarray, C: np.ndarray, tau_hat: np.ndarray,
                     gains: ControllerGains) -> np.ndarray:
    """Euler-space control torque of the attitude loop."""
    gain2 = np.diag(gains.k_z2) - gains.sigma2 * C
    return (Y @ b_hat - gains.k_z1 * delta2 - gain2 @ sat2
            - np.asarray(tau_hat, dtype=float))


def adaptive_update(m_hat: float, b_hat: np.ndarray, delta1: np.ndarray,
                    delta2: np.ndarray, g_plus_accel_r: np.ndarray,
                    Y: np.ndarray, gains: ControllerGains, dt: float):
    """Forward-Euler step of the adaptation laws with projection floors."""
    if dt <= 0.0:
        raise ValueError("dt must be strictly positive")
    m_new = m_hat - dt * float(g_plus_accel_r @ delta1) / gains.gamma1
    b_new = b_hat - dt * (Y.T @ delta2) / gains.gamma2
    return max(m_new, gains.m_floor), np.maximum(b_new, gains.b_floor)


def lyapunov_eval(delta1: np.ndarray, delta2: np.ndarray, sat1: np.ndarray,
                  sat2: np.ndarray, m_hat: float, b_hat: np.ndarray,
                  m_true: float, b_true: np.ndarray, B_true: np.ndarray,
                  f_residual: np.ndarray, tau_residual: np.ndarray,
                  gains: ControllerGains):
    """Storage function V and its analytic rate, instrumentation only.

    Needs the true mass/inertia (simulation ground truth) and the current
    disturbance residuals d - d_hat in each loop's coordinates.
    """
    m_err = m_true - m_hat
    b_err = np.asarray(b_true, dtype=float) - b_hat
    V = (0.5 * m_true * float(delta1 @ delta1)
         + 0.5 * gains.gamma1 * m_err ** 2
         + 0.5 * float(delta2 @ (B_true @ delta2))
         + 0.5 * float((gains.gamma2 * b_err) @ b_err))
    V_dot = (-float(delta1 @ (gains.k_p1 * delta1))
             - float(delta1 @ (gains.k_p2 * sat1))
             + float(delta1 @ f_residual)
             - float(delta2 @ (gains.k_z1 * delta2))
             - float(delta2 @ (gains.k_z2 * sat2))
             + float(delta2 @ tau_residual))
    return V, V_dot


class CascadeController:
    """Stateful position/attitude cascade, stepped once per control tick.

    Attitude-setpoint rates and accelerations are obtained by dirty
    differentiation of the extracted roll/pitch angles (first-order filter
    with time constant ``setpoint_filter_tau``); the yaw rate comes from
    the trajectory.
    """

    def __init__(self, gains: ControllerGains, m_init: float,
                 b_init: np.ndarray, g: np.ndarray = (0.0, 0.0, 9.81),
                 setpoint_filter_tau: float = 0.02):
        self.gains = gains
        self.state = ControllerState(m_hat=float(m_init),
                                     b_hat=np.asarray(b_init, dtype=float).copy())
        self.g = np.asarray(g, dtype=float)
        self.setpoint_filter_tau = setpoint_filter_tau
        self.negative_gain_ticks = 0  # ticks where sigma2*C ate a K_z2 entry
        self._zeta_d_prev: np.ndarray | None = None
        self._rate_est = np.zeros(3)
        self._accel_est = np.zeros(3)

    def _setpoint_derivatives(self, zeta_d: np.ndarray, psi_rate: float,
                              dt: float):
        if self._zeta_d_prev is None:
            self._zeta_d_prev = zeta_d.copy()
            self._rate_est = np.array([0.0, 0.0, psi_rate])
            self._accel_est = np.zeros(3)
            return self._rate_est.copy(), self._accel_est.copy()
        beta = dt / (self.setpoint_filter_tau + dt)
        raw_rate = (zeta_d - self._zeta_d_prev) / dt
        rate_prev = self._rate_est.copy()
        rate = rate_prev + beta * (raw_rate - rate_prev)
        rate[2] = psi_rate  # yaw rate is supplied analytically
        raw_accel = (rate - rate_prev) / dt
        self._accel_est = self._accel_est + beta * (raw_accel - self._accel_est)
        self._rate_est = rate
        self._zeta_d_prev = zeta_d.copy()
        return rate.copy(), self._accel_est.copy()

    def update(self, sp: Setpoint, p: np.ndarray, v: np.ndarray,
               zeta: np.ndarray, zeta_dot: np.ndarray, f_hat: np.ndarray,
               tau_hat_b: np.ndarray, dt: float) -> ControlCommand:
        gains = self.gains
        st = self.state

        # position loop
        e1 = p - sp.p_d
        e1_dot = v - sp.v_d
        s1, _, accel_r = sliding_surfaces(e1, e1_dot, gains.lambda1,
                                          sp.v_d, sp.a_d)
        delta1, sat1 = boundary_layer_delta(s1, gains.sigma1)
        force = position_control(accel_r, st.m_hat, delta1, sat1, f_hat,
                                 gains, self.g)

        # attitude setpoint from the demanded force direction
        phi_d, theta_d, thrust = attitude_setpoint(force, sp.psi_d)
        zeta_d = np.array([phi_d, theta_d, sp.psi_d])
        zeta_d_rate, zeta_d_accel = self._setpoint_derivatives(
            zeta_d, sp.psi_rate_d, dt)

        # attitude loop
        e2 = zeta - zeta_d
        e2_dot = zeta_dot - zeta_d_rate
        s2, rate_r, accel_r2 = sliding_surfaces(e2, e2_dot, gains.lambda2,
                                                zeta_d_rate, zeta_d_accel)
        delta2, sat2 = boundary_layer_delta(s2, gains.sigma2)
        Y = regressor(zeta, zeta_dot, rate_r, accel_r2)
        _, C_hat = b_and_c_matrices(zeta, zeta_dot, st.b_hat)
        tau_hat = torque_estimate_to_inertial(tau_hat_b, zeta)
        tau = attitude_control(Y, st.b_hat, delta2, sat2, C_hat, tau_hat,
                               gains)
        if np.any(gains.k_z2 - gains.sigma2 * np.diag(C_hat) < 0.0):
            self.negative_gain_ticks += 1

        # adaptation acts after the commands are formed
        st.m_hat, st.b_hat = adaptive_update(
            st.m_hat, st.b_hat, delta1, delta2, self.g + accel_r, Y,
            gains, dt)
        st.s1, st.s2 = s1, s2
        st.delta1, st.delta2 = delta1, delta2

        return ControlCommand(
            force=force, thrust=thrust, zeta_d=zeta_d,
            zeta_d_rate=zeta_d_rate, tau_zeta=tau, s1=s1, s2=s2,
            delta1=delta1, delta2=delta2, sat1=sat1, sat2=sat2,
            accel_r=accel_r, zeta_rate_r=rate_r, zeta_accel_r=accel_r2, Y=Y)
