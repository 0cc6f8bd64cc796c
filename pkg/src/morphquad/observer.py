"""Momentum-based estimator of the external force and torque.

The estimator compares the measured linear/angular momentum against the
integral of the commanded wrench:

    f_hat   = K_f (m v       - int(f_c  - m g                + f_hat) dt)
    tau_hat = K_t (J omega   - int(tau_c - S(omega) J omega  + tau_hat) dt)

Force is estimated in the world frame, torque in the body frame.  As long
as the commanded wrench matches the applied one, each channel behaves as a
first-order low-pass filter of the true disturbance with bandwidth K.

The integrals are discretised with the trapezoidal rule, solved implicitly
for the estimate so the filter property holds to second order in dt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import euler_rate_matrix
from .rotations import skew


class ObserverError(ValueError):
    """A measurement or parameter fed to the observer was unusable."""


@dataclass(frozen=True)
class ObserverGains:
    """Diagonal filter bandwidths [1/s] for the force and torque channels."""

    k_f: np.ndarray = field(default_factory=lambda: np.full(3, 8.0))
    k_t: np.ndarray = field(default_factory=lambda: np.full(3, 8.0))

    def __post_init__(self):
        object.__setattr__(self, "k_f", np.asarray(self.k_f, dtype=float))
        object.__setattr__(self, "k_t", np.asarray(self.k_t, dtype=float))
        if not (np.all(self.k_f > 0.0) and np.all(self.k_t > 0.0)):
            raise ObserverError("observer gains must be strictly positive")


@dataclass
class ObserverState:
    """Current estimates plus the integral accumulators of both channels."""

    f_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tau_hat_b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    int_f: np.ndarray = field(default_factory=lambda: np.zeros(3))
    int_tau: np.ndarray = field(default_factory=lambda: np.zeros(3))
    # previous-step integrands for the trapezoidal rule; None until the
    # first update has been processed
    last_f_integrand: np.ndarray | None = None
    last_tau_integrand: np.ndarray | None = None

    @classmethod
    def zero(cls) -> "ObserverState":
        return cls()


def _channel_update(k, momentum, integral, last_integrand, u, dt, limit):
    # Implicit trapezoid: estimate = k (momentum - integral) with
    # integral advanced by dt/2 (last_integrand + u + estimate).
    if last_integrand is None:
        last_integrand = u.copy()
    half = 0.5 * dt
    est = (k * (momentum - integral - half * (last_integrand + u))
           / (1.0 + k * half))
    if limit is not None:
        est = np.clip(est, -limit, limit)
    integrand = u + est
    integral = integral + half * (last_integrand + integrand)
    return est, integral, integrand


def observer_update(obs: ObserverState, v: np.ndarray, omega: np.ndarray,
                    J: np.ndarray, m: float, f_c: np.ndarray,
                    tau_c: np.ndarray, dt: float, gains: ObserverGains,
                    g: np.ndarray = (0.0, 0.0, 9.81),
                    f_limit: float | None = None,
                    tau_limit: float | None = None) -> ObserverState:
    """Advance the estimator by one control interval of length dt.

    ``f_c``/``tau_c`` are the wrench commands applied over the interval
    that just ended; ``v``/``omega`` the measurements at its end.  ``J``
    and ``m`` are the current modelled inertia diagonal and mass.
    Optional limits clamp each estimate componentwise (sanity bound).
    """
    if dt <= 0.0:
        raise ObserverError("dt must be strictly positive")
    v = np.asarray(v, dtype=float)
    omega = np.asarray(omega, dtype=float)
    J = np.asarray(J, dtype=float)
    f_c = np.asarray(f_c, dtype=float)
    tau_c = np.asarray(tau_c, dtype=float)
    g = np.asarray(g, dtype=float)
    for name, val in (("v", v), ("omega", omega), ("f_c", f_c),
                      ("tau_c", tau_c)):
        if not np.all(np.isfinite(val)):
            raise ObserverError(f"non-finite {name} fed to the observer")

    u_f = f_c - m * g
    u_t = tau_c - skew(omega) @ (J * omega)

    f_hat, int_f, g_f = _channel_update(
        gains.k_f, m * v, obs.int_f, obs.last_f_integrand, u_f, dt, f_limit)
    tau_hat, int_tau, g_t = _channel_update(
        gains.k_t, J * omega, obs.int_tau, obs.last_tau_integrand, u_t, dt,
        tau_limit)

    return ObserverState(f_hat=f_hat, tau_hat_b=tau_hat,
                         int_f=int_f, int_tau=int_tau,
                         last_f_integrand=g_f, last_tau_integrand=g_t)


def torque_estimate_to_inertial(tau_hat_b: np.ndarray,
                                zeta: np.ndarray) -> np.ndarray:
    """Express the body-frame torque estimate in Euler-space coordinates.

    The generalized torque matching the Euler-angle dynamics is
    T(zeta)^T tau^b, the same mapping that carries the control torque
    between the two formulations.
    """
    T = euler_rate_matrix(zeta)
    return T.T @ np.asarray(tau_hat_b, dtype=float)
