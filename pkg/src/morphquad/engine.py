"""Closed-loop scenario execution: plant + observer + controller + logging.

The plant integrates at ``plant_dt`` (1 ms), the controller and observer
run at ``control_dt`` (2 ms) with zero-order-held commands, and one CSV row
is written per control tick.  Given the same config and seed every output
byte is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import ScenarioConfig
from .controller import (CascadeController, InfeasibleAttitudeError,
                         lyapunov_eval)
from .dynamics import (DisturbanceModel, DisturbanceSample, DivergenceError,
                       PlantParams, RigidBodyState, SingularAttitudeError,
                       allocation_matrix, apply_rotor_limits,
                       b_and_c_matrices, euler_rate_matrix,
                       omega_from_euler_rates, step_dynamics)
from .metrics import LOG_COLUMNS, RunMetrics, metrics_from_log
from .morphology import (MorphGeometry, composite_inertia, frame_length,
                         morph_state)
from .observer import ObserverGains, ObserverState, observer_update
from .rotations import euler_zyx_to_rotation


class SimulationDiverged(RuntimeError):
    """The plant state became non-finite; carries the failing tick index."""

    def __init__(self, tick: int, time: float, cause: Exception):
        super().__init__(f"simulation diverged at tick {tick} (t={time:.3f} s): "
                         f"{cause}")
        self.tick = tick
        self.time = time


@dataclass(frozen=True)
class GapClearance:
    """Geometric fit of the vehicle (with blades) through a gap."""

    total_width: float
    clearance: float
    passes: bool


def gap_clearance(alpha: float, geom: MorphGeometry, gap_width: float,
                  margin: float = 0.0) -> GapClearance:
    """Check whether the folded frame plus blade overhang fits a gap.

    Total width is the adjacent-motor-base distance plus the blade
    overhang on both sides; passing requires total width + margin to stay
    strictly below the gap width.
    """
    if gap_width <= 0.0:
        raise ValueError("gap width must be strictly positive")
    total = frame_length(alpha, geom) + 2.0 * geom.prop_extent
    return GapClearance(total_width=total, clearance=gap_width - total,
                        passes=total + margin < gap_width)


class _MorphCache:
    """Memoised morphology snapshots; alpha is constant most of the run."""

    def __init__(self, geom: MorphGeometry, masses):
        self._geom = geom
        self._masses = masses
        self._cache: dict = {}

    def get(self, alpha: float):
        hit = self._cache.get(alpha)
        if hit is None:
            hit = morph_state(alpha, self._geom, self._masses)
            self._cache[alpha] = hit
        return hit


class _ServoTracker:
    """Rate-limited servo angle following the morph schedule."""

    def __init__(self, schedule, rate: float):
        self._schedule = sorted(schedule, key=lambda e: e.time)
        self._rate = rate
        self.servo = self._schedule[0].servo if (
            self._schedule and self._schedule[0].time <= 0.0) else 0.0

    def target(self, t: float) -> float:
        target = 0.0
        for event in self._schedule:
            if event.time <= t + 1e-12:
                target = event.servo
            else:
                break
        return target

    def advance(self, t: float, dt: float) -> None:
        step = self._rate * dt
        err = self.target(t) - self.servo
        self.servo += min(max(err, -step), step)


class _PayloadTracker:
    """Attached payload mass and its lever arm, driven by timed events."""

    def __init__(self, events):
        self._pending = sorted(events, key=lambda e: e.time)
        self.mass = 0.0
        self.moment = np.zeros(3)   # mass-weighted offset sum

    def advance(self, t: float) -> None:
        while self._pending and self._pending[0].time <= t + 1e-12:
            event = self._pending.pop(0)
            if event.action == "attach":
                self.mass += event.mass
                self.moment = self.moment + event.mass * event.offset
            else:
                released = min(event.mass, self.mass)
                if self.mass > 0.0:
                    self.moment = self.moment * (1.0 - released / self.mass)
                self.mass -= released

    @property
    def offset(self) -> np.ndarray:
        if self.mass <= 0.0:
            return np.zeros(3)
        return self.moment / self.mass


def _effective_mass_inertia(morph, base_mass: float, payload: _PayloadTracker):
    """Plant mass and inertia diagonal including any attached payload."""
    if payload.mass <= 0.0:
        return base_mass, morph.J
    m_p = payload.mass
    m_t = base_mass + m_p
    r_v = morph.r_cog
    r_p = payload.offset
    r_c = (base_mass * r_v + m_p * r_p) / m_t
    J = composite_inertia([np.diag(morph.J), np.zeros((3, 3))],
                          [base_mass, m_p], [r_v, r_p], r_c)
    return m_t, np.diag(J).copy()


def _initial_state(config: ScenarioConfig) -> RigidBodyState:
    sp = config.trajectory.setpoint(0.0)
    return RigidBodyState(p=sp.p_d.copy(), v=sp.v_d.copy(),
                          zeta=np.array([0.0, 0.0, sp.psi_d]),
                          zeta_dot=np.zeros(3))


def _format_row(values) -> str:
    return ",".join("%.12g" % v for v in values)


@dataclass
class RunResult:
    log_path: str
    metrics: RunMetrics
    negative_gain_ticks: int = 0


def run_scenario(config: ScenarioConfig, out_dir,
                 observer: bool | None = None,
                 seed: int | None = None) -> RunResult:
    """Execute one scenario and write its CSV log; returns path + metrics.

    ``observer``/``seed`` override the config when given (CLI flags).
    """
    from pathlib import Path

    config = config.with_overrides(observer=observer, seed=seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = config.output or config.name
    log_path = out_dir / f"{stem}.csv"

    geom = config.geometry
    masses = config.masses
    base_mass = masses.total
    plant = replace(config.plant, m=base_mass)
    g_vec = plant.g

    morphs = _MorphCache(geom, masses)
    morph0 = morphs.get(0.0)
    plant.J = morph0.J.copy()

    dist = DisturbanceModel(config.disturbance, geom, config.seed)
    obs_gains = ObserverGains(k_f=np.full(3, config.observer_k),
                              k_t=np.full(3, config.observer_k))
    obs = ObserverState.zero()
    f_clamp = 2.0 * config.disturbance.f_max
    tau_clamp = 2.0 * config.disturbance.tau_max

    ctrl = CascadeController(
        gains=config.gains,
        m_init=config.mhat_init_factor * base_mass,
        b_init=morph0.J,
        g=g_vec,
        setpoint_filter_tau=config.setpoint_filter_tau)

    servo = _ServoTracker(config.morph_schedule, config.servo_rate)
    payload = _PayloadTracker(config.payload_events)
    payload.advance(0.0)

    state = _initial_state(config)
    prev_f_c = base_mass * g_vec
    prev_tau_c = np.zeros(3)

    dt_c = config.control_dt
    dt_p = config.plant_dt
    substeps = int(round(dt_c / dt_p))
    n_ticks = int(math.floor(config.duration / dt_c))

    lines = [",".join(LOG_COLUMNS)]

    for k in range(n_ticks + 1):
        t = k * dt_c
        alpha = min(geom.k_servo * servo.servo, geom.alpha_max)
        morph = morphs.get(alpha)
        m_plant, j_plant = _effective_mass_inertia(morph, base_mass, payload)
        plant.J = j_plant

        try:
            omega = omega_from_euler_rates(state.zeta, state.zeta_dot)
            if k > 0:
                obs = observer_update(obs, state.v, omega, morph.J, base_mass,
                                      prev_f_c, prev_tau_c, dt_c, obs_gains,
                                      g=g_vec, f_limit=f_clamp,
                                      tau_limit=tau_clamp)
            if config.observer_on:
                f_hat, tau_hat_b = obs.f_hat, obs.tau_hat_b
            else:
                f_hat, tau_hat_b = np.zeros(3), np.zeros(3)

            sp = config.trajectory.setpoint(t)
            cmd = ctrl.update(sp, state.p, state.v, state.zeta,
                              state.zeta_dot, f_hat, tau_hat_b, dt_c)

            # mix to rotors, clamp, recover the wrench actually applied
            T = euler_rate_matrix(state.zeta)
            R = euler_zyx_to_rotation(state.zeta)
            tau_b_cmd = np.linalg.solve(T.T, cmd.tau_zeta)
            A = allocation_matrix(alpha, geom, plant)
            thrusts = np.linalg.solve(
                A, np.concatenate(([cmd.thrust], tau_b_cmd)))
            thrusts, saturated = apply_rotor_limits(thrusts, plant)
            wrench = A @ thrusts
            f_applied = wrench[0] * R[:, 2]
            tau_zeta_applied = T.T @ wrench[1:]
        except (SingularAttitudeError, InfeasibleAttitudeError) as exc:
            raise SimulationDiverged(k, t, exc) from exc

        prev_f_c = cmd.thrust * R[:, 2]
        prev_tau_c = tau_b_cmd

        d = dist.sample(alpha, dt_c)

        # instrumentation against the simulation ground truth
        B_true, _ = b_and_c_matrices(state.zeta, state.zeta_dot, j_plant)
        tau_res = T.T @ (d.tau_d_b - tau_hat_b)
        V, V_dot = lyapunov_eval(cmd.delta1, cmd.delta2, cmd.sat1, cmd.sat2,
                                 ctrl.state.m_hat, ctrl.state.b_hat,
                                 m_plant, j_plant, B_true,
                                 d.f_d - f_hat, tau_res, config.gains)
        ctrl.state.V, ctrl.state.V_dot = V, V_dot
        if __debug__:
            lhs = cmd.Y @ j_plant
            rhs = (B_true @ cmd.zeta_accel_r
                   + b_and_c_matrices(state.zeta, state.zeta_dot,
                                      j_plant)[1] @ cmd.zeta_rate_r)
            assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(
                1.0, float(np.max(np.abs(rhs)))), "regressor inconsistency"

        lines.append(_format_row((
            t,
            *state.p, *sp.p_d,
            *state.zeta, *cmd.zeta_d,
            *state.v, *omega,
            *cmd.force, *cmd.tau_zeta,
            *obs.f_hat, *obs.tau_hat_b,
            *d.f_d, *d.tau_d_b,
            *cmd.s1, *cmd.s2,
            *cmd.delta1, *cmd.delta2,
            ctrl.state.m_hat, *ctrl.state.b_hat,
            V, V_dot, alpha, float(saturated))))

        if k == n_ticks:
            break

        try:
            for j in range(substeps):
                t_sub = t + j * dt_p
                servo.advance(t_sub, dt_p)
                payload.advance(t_sub + dt_p)
                alpha_sub = min(geom.k_servo * servo.servo, geom.alpha_max)
                morph_sub = morphs.get(alpha_sub)
                m_sub, j_sub = _effective_mass_inertia(morph_sub, base_mass,
                                                       payload)
                sub_plant = replace(plant, m=m_sub, J=j_sub)
                morph_eff = replace(morph_sub, J=j_sub)
                state = step_dynamics(state, morph_eff, sub_plant,
                                      f_applied, tau_zeta_applied, d, dt_p)
        except (DivergenceError, SingularAttitudeError) as exc:
            raise SimulationDiverged(k, t, exc) from exc

    log_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    metrics = metrics_from_log(log_path)
    return RunResult(log_path=str(log_path), metrics=metrics,
                     negative_gain_ticks=ctrl.negative_gain_ticks)
