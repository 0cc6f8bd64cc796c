"""Six-DOF rigid-body plant with morphing mass properties.

State and conventions
---------------------
    p          position in the world frame [m], z up
    v          velocity p_dot [m/s]
    zeta       Z-Y-X Euler angles (phi, theta, psi) [rad]
    zeta_dot   Euler angle rates [rad/s]

Translation:    m * p_ddot = f + f_d - m * g        (g = (0, 0, 9.81))
Rotation:       B(zeta) * zeta_ddot + C(zeta, zeta_dot) * zeta_dot
                    = tau + T(zeta)^T tau_d^b

where T maps Euler rates to body rates (omega = T @ zeta_dot),
B = T^T diag(J) T is the Euler-space inertia and C collects the
Coriolis/centripetal terms.  ``tau`` is the control torque already
expressed in Euler space; the disturbance torque arrives in the body
frame and is converted inside the derivative evaluation.

Integration is fixed-step classical Runge-Kutta; the morphing geometry
enters through the diagonal inertia carried by the MorphState argument,
held constant within a step and refreshed by the caller every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .morphology import MorphGeometry, MorphState, tip_to_tip_length
from .rotations import euler_zyx_to_rotation, skew

THETA_GUARD = math.pi / 2 - 1e-3


class SingularAttitudeError(RuntimeError):
    """Pitch angle too close to +-pi/2 for the Euler-angle formulation."""


class DivergenceError(RuntimeError):
    """Integration produced a non-finite state."""


@dataclass
class RigidBodyState:
    """Translational and rotational state, all world-frame/Euler form."""

    p: np.ndarray
    v: np.ndarray
    zeta: np.ndarray
    zeta_dot: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.zeta = np.asarray(self.zeta, dtype=float)
        self.zeta_dot = np.asarray(self.zeta_dot, dtype=float)
        for name in ("p", "v", "zeta", "zeta_dot"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DivergenceError(f"non-finite entries in {name}")

    @classmethod
    def at_rest(cls, p, zeta=(0.0, 0.0, 0.0)) -> "RigidBodyState":
        return cls(p=np.asarray(p, dtype=float), v=np.zeros(3),
                   zeta=np.asarray(zeta, dtype=float), zeta_dot=np.zeros(3))

    def copy(self) -> "RigidBodyState":
        return RigidBodyState(self.p.copy(), self.v.copy(),
                              self.zeta.copy(), self.zeta_dot.copy())


@dataclass
class PlantParams:
    """Inertial and rotor parameters of the plant."""

    m: float = 0.805                       # total mass [kg]
    g: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 9.81]))
    J: np.ndarray = field(default_factory=lambda: np.array([5e-3, 5e-3, 9e-3]))
    k_f: float = 8.0e-6                    # thrust coefficient [N s^2]
    k_m: float = 1.2e-7                    # drag-torque coefficient [N m s^2]
    w_max: float = 1200.0                  # rotor speed limit [rad/s]

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float)
        self.J = np.asarray(self.J, dtype=float)
        if not self.m > 0.0:
            raise ValueError("mass must be strictly positive")
        if not np.all(self.J > 0.0):
            raise ValueError("inertia entries must be strictly positive")
        if not (self.k_f > 0.0 and self.k_m > 0.0 and self.w_max > 0.0):
            raise ValueError("rotor coefficients must be strictly positive")

    @property
    def max_thrust(self) -> float:
        """Per-rotor thrust ceiling [N]."""
        return self.k_f * self.w_max ** 2


@dataclass(frozen=True)
class DisturbanceSample:
    """External force (world frame) and torque (body frame) for one step."""

    f_d: np.ndarray
    tau_d_b: np.ndarray

    @classmethod
    def zero(cls) -> "DisturbanceSample":
        return cls(np.zeros(3), np.zeros(3))


def euler_rate_matrix(zeta: np.ndarray) -> np.ndarray:
    """Map T with omega = T @ zeta_dot for Z-Y-X Euler angles."""
    phi, theta, _ = zeta
    if abs(theta) >= THETA_GUARD:
        raise SingularAttitudeError(
            f"pitch {theta:.4f} rad too close to the gimbal-lock singularity")
    cphi, sphi = math.cos(phi), math.sin(phi)
    ctheta, stheta = math.cos(theta), math.sin(theta)
    return np.array([[1.0, 0.0, -stheta],
                     [0.0, cphi, sphi * ctheta],
                     [0.0, -sphi, cphi * ctheta]])


def euler_rate_matrix_dot(zeta: np.ndarray, zeta_dot: np.ndarray) -> np.ndarray:
    """Analytic time derivative of ``euler_rate_matrix`` along zeta_dot."""
    phi, theta, _ = zeta
    dphi, dtheta, _ = zeta_dot
    cphi, sphi = math.cos(phi), math.sin(phi)
    ctheta, stheta = math.cos(theta), math.sin(theta)
    return np.array([
        [0.0, 0.0, -ctheta * dtheta],
        [0.0, -sphi * dphi,
         cphi * ctheta * dphi - sphi * stheta * dtheta],
        [0.0, -cphi * dphi,
         -sphi * ctheta * dphi - cphi * stheta * dtheta],
    ])


def omega_from_euler_rates(zeta: np.ndarray, zeta_dot: np.ndarray) -> np.ndarray:
    """Body angular velocity for the given Euler state."""
    return euler_rate_matrix(zeta) @ zeta_dot


def b_and_c_matrices(zeta: np.ndarray, zeta_dot: np.ndarray, J: np.ndarray):
    """Euler-space inertia B and Coriolis matrix C for diagonal inertia J.

    B = T^T diag(J) T.  The Coriolis matrix is assembled in the
    factorisation C = T^T diag(J) T_dot - T^T S(diag(J) omega) T, which
    yields the same product C @ zeta_dot as the raw chain-rule expansion
    of the body equations while keeping dB/dt - 2C exactly
    skew-symmetric (the passivity property the adaptive design relies
    on).
    """
    J = np.asarray(J, dtype=float)
    T = euler_rate_matrix(zeta)
    T_dot = euler_rate_matrix_dot(zeta, zeta_dot)
    B = T.T @ (J[:, None] * T)
    omega = T @ zeta_dot
    C = T.T @ (J[:, None] * T_dot) - T.T @ skew(J * omega) @ T
    return B, C


def _solve3(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Cramer's rule; avoids np.linalg.solve overhead in the hot loop.
    a00, a01, a02, a10, a11, a12, a20, a21, a22 = A.ravel().tolist()
    b0, b1, b2 = b.tolist()
    m00 = a11 * a22 - a12 * a21
    m01 = a10 * a22 - a12 * a20
    m02 = a10 * a21 - a11 * a20
    det = a00 * m00 - a01 * m01 + a02 * m02
    x0 = (b0 * m00
          - a01 * (b1 * a22 - a12 * b2)
          + a02 * (b1 * a21 - a11 * b2)) / det
    x1 = (a00 * (b1 * a22 - a12 * b2)
          - b0 * m01
          + a02 * (a10 * b2 - b1 * a20)) / det
    x2 = (a00 * (a11 * b2 - b1 * a21)
          - a01 * (a10 * b2 - b1 * a20)
          + b0 * m02) / det
    return np.array([x0, x1, x2])


def step_dynamics(state: RigidBodyState, morph: MorphState,
                  params: PlantParams, f: np.ndarray, tau: np.ndarray,
                  d: DisturbanceSample, dt: float) -> RigidBodyState:
    """One classical Runge-Kutta step of the coupled rigid-body equations.

    ``f`` is the applied force in the world frame, ``tau`` the control
    torque in Euler space, both held constant over the step.  The
    disturbance force adds in the world frame and the disturbance torque
    (body frame) is mapped through T^T at every derivative evaluation.
    """
    if not 0.0 < dt <= 0.01:
        raise ValueError("dt must lie in (0, 0.01]")
    f = np.asarray(f, dtype=float)
    tau = np.asarray(tau, dtype=float)
    J = morph.J
    Jcol = J[:, None]
    inv_m = 1.0 / params.m
    acc = (f + d.f_d) * inv_m - params.g

    def deriv(x: np.ndarray) -> np.ndarray:
        zeta = x[6:9]
        zeta_dot = x[9:12]
        # inline of b_and_c_matrices to share T across the B/C/tau terms
        T = euler_rate_matrix(zeta)
        T_dot = euler_rate_matrix_dot(zeta, zeta_dot)
        Tt = T.T
        B = Tt @ (Jcol * T)
        omega = T @ zeta_dot
        C = Tt @ (Jcol * T_dot) - Tt @ skew(J * omega) @ T
        tau_total = tau + Tt @ d.tau_d_b
        zeta_ddot = _solve3(B, tau_total - C @ zeta_dot)
        out = np.empty(12)
        out[0:3] = x[3:6]
        out[3:6] = acc
        out[6:9] = zeta_dot
        out[9:12] = zeta_ddot
        return out

    x0 = np.concatenate((state.p, state.v, state.zeta, state.zeta_dot))
    k1 = deriv(x0)
    k2 = deriv(x0 + 0.5 * dt * k1)
    k3 = deriv(x0 + 0.5 * dt * k2)
    k4 = deriv(x0 + dt * k3)
    x1 = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x1)):
        raise DivergenceError("integration produced a non-finite state")
    return RigidBodyState(x1[0:3], x1[3:6], x1[6:9], x1[9:12])


def allocation_matrix(alpha: float, geom: MorphGeometry,
                      params: PlantParams) -> np.ndarray:
    """Map from the four rotor thrusts to (collective f_z^b, body torques).

    X layout: rotor i sits on the arm-i diagonal at the fold-dependent
    radius l_b/2 + l_a cos(alpha) + rotor_offset, so the roll/pitch moment
    arm is radius/sqrt(2).  Spin directions alternate (+, -, +, -) and the
    drag torque is k_m/k_f times the thrust.
    """
    radius = 0.5 * geom.l_b + geom.l_a * math.cos(alpha) + geom.rotor_offset
    a = radius / math.sqrt(2.0)
    kappa = params.k_m / params.k_f
    x = np.array([a, -a, -a, a])
    y = np.array([a, a, -a, -a])
    spin = np.array([1.0, -1.0, 1.0, -1.0])
    return np.vstack((np.ones(4), y, -x, -spin * kappa))


def apply_rotor_limits(thrusts: np.ndarray, params: PlantParams):
    """Clamp per-rotor thrusts to [0, k_f w_max^2]; flag any clamping."""
    thrusts = np.asarray(thrusts, dtype=float)
    clipped = np.clip(thrusts, 0.0, params.max_thrust)
    return clipped, bool(np.any(clipped != thrusts))


@dataclass
class DisturbanceParams:
    """Synthetic bounded disturbance acting on the plant.

    The force/torque are a constant bias plus coloured (Ornstein-
    Uhlenbeck) noise, amplified as the frame contracts:
    scale(alpha) = 1 + fold_gain * (L(0)/L(alpha) - 1), then clamped
    componentwise to f_max / tau_max.
    """

    force_bias: np.ndarray = field(
        default_factory=lambda: np.array([0.25, -0.20, -0.30]))
    force_noise: float = 0.08          # stationary noise std [N]
    torque_bias: np.ndarray = field(
        default_factory=lambda: np.array([0.004, -0.003, 0.002]))
    torque_noise: float = 0.0015       # stationary noise std [N m]
    correlation_time: float = 0.2      # noise correlation time [s]
    f_max: float = 1.0                 # componentwise force bound [N]
    tau_max: float = 0.05              # componentwise torque bound [N m]
    fold_gain: float = 4.0             # contraction amplification factor

    def __post_init__(self):
        self.force_bias = np.asarray(self.force_bias, dtype=float)
        self.torque_bias = np.asarray(self.torque_bias, dtype=float)
        if self.correlation_time <= 0.0:
            raise ValueError("correlation_time must be strictly positive")
        if self.force_noise < 0.0 or self.torque_noise < 0.0:
            raise ValueError("noise amplitudes must be non-negative")
        if self.f_max <= 0.0 or self.tau_max <= 0.0:
            raise ValueError("disturbance bounds must be strictly positive")


class DisturbanceModel:
    """Deterministic-given-seed generator of DisturbanceSample values."""

    def __init__(self, params: DisturbanceParams, geom: MorphGeometry,
                 seed: int):
        self.params = params
        self.geom = geom
        self._rng = np.random.default_rng(seed)
        self._noise_f = np.zeros(3)
        self._noise_t = np.zeros(3)
        self._L0 = tip_to_tip_length(0.0, geom)

    def scale(self, alpha: float) -> float:
        """Amplification of the disturbance in the contracted state."""
        L = tip_to_tip_length(alpha, self.geom)
        return 1.0 + self.params.fold_gain * (self._L0 / L - 1.0)

    def sample(self, alpha: float, dt: float) -> DisturbanceSample:
        p = self.params
        rho = math.exp(-dt / p.correlation_time)
        kick = math.sqrt(max(0.0, 1.0 - rho * rho))
        self._noise_f = (rho * self._noise_f
                         + kick * self._rng.normal(0.0, p.force_noise, 3))
        self._noise_t = (rho * self._noise_t
                         + kick * self._rng.normal(0.0, p.torque_noise, 3))
        s = self.scale(alpha)
        f_d = np.clip(s * (p.force_bias + self._noise_f), -p.f_max, p.f_max)
        tau_d = np.clip(s * (p.torque_bias + self._noise_t),
                        -p.tau_max, p.tau_max)
        return DisturbanceSample(f_d=f_d, tau_d_b=tau_d)
