"""Sliding surfaces, control laws, adaptation and instrumentation."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.spatial.transform import Rotation

from helpers import random_attitude
from morphquad import (CascadeController, ControllerGains,
                       InfeasibleAttitudeError, Setpoint, adaptive_update,
                       attitude_control, attitude_setpoint, b_and_c_matrices,
                       boundary_layer_delta, lyapunov_eval, position_control,
                       regressor, sliding_surfaces)

GAINS = ControllerGains()
G = np.array([0.0, 0.0, 9.81])


class TestSlidingSurfaces:
    def test_zero_error(self):
        s, rate_r, accel_r = sliding_surfaces(np.zeros(3), np.zeros(3),
                                              GAINS.lambda1, np.zeros(3),
                                              np.zeros(3))
        assert_allclose(s, 0.0)
        assert_allclose(rate_r, 0.0)
        assert_allclose(accel_r, 0.0)

    def test_definition(self):
        lam = np.full(3, 2.0)
        s, _, _ = sliding_surfaces(np.array([1.0, 0, 0]), np.zeros(3), lam,
                                   np.zeros(3), np.zeros(3))
        assert_allclose(s, [2.0, 0.0, 0.0])

    def test_both_identities_agree(self):
        # s = e_dot + lam e  must equal  x_dot - x_dot_r
        rng = np.random.default_rng(0)
        for _ in range(300):
            lam = rng.uniform(0.5, 5.0, 3)
            x_dot = rng.normal(size=3)
            x_dot_d = rng.normal(size=3)
            e = rng.normal(size=3)
            e_dot = x_dot - x_dot_d
            s, rate_r, _ = sliding_surfaces(e, e_dot, lam, x_dot_d,
                                            rng.normal(size=3))
            assert np.abs(s - (x_dot - rate_r)).max() < 1e-14


class TestBoundaryLayer:
    def test_inside_layer_delta_zero(self):
        s = np.array([0.01, -0.02, 0.015])
        delta, sat = boundary_layer_delta(s, 0.02)
        assert_allclose(delta, 0.0)
        assert_allclose(sat, s / 0.02)

    def test_double_width_point(self):
        delta, sat = boundary_layer_delta(np.array([0.04, 0, 0]), 0.02)
        assert_allclose(delta, [0.02, 0.0, 0.0])
        assert sat[0] == 1.0

    def test_delta_dot_sat_is_l1_norm(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            sigma = rng.uniform(0.01, 1.0)
            s = rng.normal(scale=2.0 * sigma, size=3)
            delta, sat = boundary_layer_delta(s, sigma)
            assert abs(float(delta @ sat) - np.abs(delta).sum()) < 1e-14


class TestRegressor:
    def test_level_rest_is_diagonal(self):
        accel_r = np.array([1.0, -2.0, 0.5])
        Y = regressor(np.zeros(3), np.zeros(3), np.zeros(3), accel_r)
        assert_allclose(Y, np.diag(accel_r))

    def test_matches_dynamics_for_any_inertia(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            zeta, zeta_dot = random_attitude(rng)
            rate_r = rng.normal(size=3)
            accel_r = rng.normal(size=3)
            b = rng.uniform(1e-4, 5e-2, 3)
            Y = regressor(zeta, zeta_dot, rate_r, accel_r)
            B, C = b_and_c_matrices(zeta, zeta_dot, b)
            assert np.abs(Y @ b - (B @ accel_r + C @ rate_r)).max() < 1e-12

    def test_joint_linearity_in_references(self):
        rng = np.random.default_rng(3)
        zeta, zeta_dot = random_attitude(rng)
        rate_r = rng.normal(size=3)
        accel_r = rng.normal(size=3)
        b = rng.uniform(1e-4, 5e-2, 3)
        a = 3.7
        Y1 = regressor(zeta, zeta_dot, rate_r, accel_r)
        Y2 = regressor(zeta, zeta_dot, a * rate_r, a * accel_r)
        assert_allclose(Y2 @ b, a * (Y1 @ b), rtol=1e-12)


class TestPositionControl:
    def test_hover_feedforward(self):
        f = position_control(np.zeros(3), 0.8, np.zeros(3), np.zeros(3),
                             np.zeros(3), GAINS, G)
        assert_allclose(f, [0.0, 0.0, 0.8 * 9.81])

    def test_disturbance_feedforward_subtracts(self):
        base = position_control(np.zeros(3), 0.8, np.zeros(3), np.zeros(3),
                                np.zeros(3), GAINS, G)
        with_hat = position_control(np.zeros(3), 0.8, np.zeros(3),
                                    np.zeros(3), np.array([0.5, 0, 0]),
                                    GAINS, G)
        assert_allclose(base - with_hat, [0.5, 0.0, 0.0])

    def test_term_by_term_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            accel_r = rng.normal(size=3)
            m_hat = rng.uniform(0.3, 1.5)
            delta = rng.normal(size=3)
            sat = rng.uniform(-1, 1, 3)
            f_hat = rng.normal(size=3)
            got = position_control(accel_r, m_hat, delta, sat, f_hat, GAINS, G)
            expect = (m_hat * (G + accel_r) - GAINS.k_p1 * delta
                      - GAINS.k_p2 * sat - f_hat)
            assert_allclose(got, expect, atol=1e-15)


class TestAttitudeSetpoint:
    def test_hover(self):
        phi, theta, thrust = attitude_setpoint(np.array([0, 0, 7.9]), 0.0)
        assert phi == 0.0 and theta == 0.0
        assert_allclose(thrust, 7.9)

    def test_pitch_only_tilt(self):
        f = 8.0 * np.array([math.sin(math.radians(10)), 0.0,
                            math.cos(math.radians(10))])
        phi, theta, thrust = attitude_setpoint(f, 0.0)
        assert abs(phi) < 1e-12
        assert_allclose(math.degrees(theta), 10.0, atol=1e-12)
        assert_allclose(thrust, 8.0)

    def test_downward_demand_rejected(self):
        with pytest.raises(InfeasibleAttitudeError):
            attitude_setpoint(np.array([0.0, 0.0, -1.0]), 0.0)

    def test_rotate_back_alignment(self):
        # body z axis at the returned attitude must point along f
        rng = np.random.default_rng(5)
        for _ in range(200):
            f = rng.normal(size=3) * np.array([2.0, 2.0, 1.0])
            f[2] = abs(f[2]) + 3.0
            psi = rng.uniform(-math.pi, math.pi)
            phi, theta, thrust = attitude_setpoint(f, psi)
            R = Rotation.from_euler("ZYX", [psi, theta, phi]).as_matrix()
            assert_allclose(thrust * (R @ [0.0, 0.0, 1.0]), f, atol=1e-9)


class TestAttitudeControl:
    def test_zero_error_at_rest_cancels_estimate(self):
        tau_hat = np.array([0.01, -0.02, 0.005])
        Y = regressor(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))
        tau = attitude_control(Y, np.array([5e-3, 5e-3, 9e-3]), np.zeros(3),
                               np.zeros(3), np.zeros((3, 3)), tau_hat, GAINS)
        assert_allclose(tau, -tau_hat)

    def test_tiny_layer_recovers_sign_structure(self):
        import dataclasses
        gains = dataclasses.replace(GAINS, sigma2=1e-9)
        s2 = np.array([0.5, -0.2, 0.0])
        delta2, sat2 = boundary_layer_delta(s2, gains.sigma2)
        tau = attitude_control(np.zeros((3, 3)), np.zeros(3), delta2, sat2,
                               np.zeros((3, 3)), np.zeros(3), gains)
        switching = -gains.k_z1 * delta2 - gains.k_z2 * np.sign(s2)
        assert_allclose(tau, switching, rtol=1e-6)

    def test_term_by_term_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            Y = rng.normal(size=(3, 3)) * 1e-2
            b_hat = rng.uniform(1e-4, 2e-2, 3)
            delta2 = rng.normal(size=3)
            sat2 = rng.uniform(-1, 1, 3)
            C = rng.normal(size=(3, 3)) * 1e-3
            tau_hat = rng.normal(size=3) * 0.02
            got = attitude_control(Y, b_hat, delta2, sat2, C, tau_hat, GAINS)
            expect = (Y @ b_hat - GAINS.k_z1 * delta2
                      - (np.diag(GAINS.k_z2) - GAINS.sigma2 * C) @ sat2
                      - tau_hat)
            assert_allclose(got, expect, atol=1e-15)


class TestAdaptiveUpdate:
    def test_frozen_inside_boundary_layer(self):
        m, b = adaptive_update(0.7, np.array([1e-3, 2e-3, 3e-3]),
                               np.zeros(3), np.zeros(3), G,
                               np.eye(3), GAINS, 0.002)
        assert m == 0.7
        assert_allclose(b, [1e-3, 2e-3, 3e-3])

    def test_sinking_below_setpoint_raises_mass_estimate(self):
        # below and sinking: delta1_z < 0 while g + accel_r points up
        delta1 = np.array([0.0, 0.0, -0.1])
        m, _ = adaptive_update(0.7, np.full(3, 1e-3), delta1, np.zeros(3),
                               G, np.zeros((3, 3)), GAINS, 0.002)
        assert m > 0.7

    def test_formula_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            m0 = rng.uniform(0.3, 1.5)
            b0 = rng.uniform(1e-4, 2e-2, 3)
            d1 = rng.normal(size=3)
            d2 = rng.normal(size=3)
            gpa = rng.normal(size=3)
            Y = rng.normal(size=(3, 3))
            dt = 0.002
            m1, b1 = adaptive_update(m0, b0, d1, d2, gpa, Y, GAINS, dt)
            m_exp = max(m0 - dt * float(gpa @ d1) / GAINS.gamma1,
                        GAINS.m_floor)
            b_exp = np.maximum(b0 - dt * (Y.T @ d2) / GAINS.gamma2,
                               GAINS.b_floor)
            assert abs(m1 - m_exp) < 1e-14
            assert_allclose(b1, b_exp, atol=1e-14)

    def test_projection_floors(self):
        m, b = adaptive_update(GAINS.m_floor, np.full(3, GAINS.b_floor),
                               np.array([0, 0, 1e3]), np.zeros(3), G,
                               np.zeros((3, 3)), GAINS, 0.002)
        assert m >= GAINS.m_floor
        assert np.all(b >= GAINS.b_floor)


class TestLyapunovEval:
    def test_zero_at_perfect_state(self):
        B = np.diag([5e-3, 5e-3, 9e-3])
        V, _ = lyapunov_eval(np.zeros(3), np.zeros(3), np.zeros(3),
                             np.zeros(3), 0.8, np.diag(B).copy(), 0.8,
                             np.diag(B).copy(), B, np.zeros(3), np.zeros(3),
                             GAINS)
        assert V == 0.0

    def test_nonnegative(self):
        rng = np.random.default_rng(8)
        for _ in range(300):
            d1 = rng.normal(size=3)
            d2 = rng.normal(size=3)
            m_t = rng.uniform(0.3, 1.5)
            b_t = rng.uniform(1e-4, 2e-2, 3)
            B, _ = b_and_c_matrices(*random_attitude(rng), b_t)
            V, _ = lyapunov_eval(d1, d2, np.clip(d1, -1, 1),
                                 np.clip(d2, -1, 1), rng.uniform(0.3, 1.5),
                                 rng.uniform(1e-4, 2e-2, 3), m_t, b_t, B,
                                 rng.normal(size=3), rng.normal(size=3),
                                 GAINS)
            assert V >= 0.0

    def test_rate_formula_signs(self):
        # without residuals every term is dissipative
        rng = np.random.default_rng(9)
        for _ in range(300):
            sigma = GAINS.sigma1
            s1 = rng.normal(scale=3 * sigma, size=3)
            s2 = rng.normal(scale=3 * GAINS.sigma2, size=3)
            d1, sat1 = boundary_layer_delta(s1, GAINS.sigma1)
            d2, sat2 = boundary_layer_delta(s2, GAINS.sigma2)
            _, V_dot = lyapunov_eval(d1, d2, sat1, sat2, 0.7, np.full(3, 5e-3),
                                     0.8, np.full(3, 6e-3), np.eye(3) * 5e-3,
                                     np.zeros(3), np.zeros(3), GAINS)
            assert V_dot <= 1e-15


class TestCascadeController:
    def make_controller(self):
        return CascadeController(GAINS, m_init=0.72,
                                 b_init=np.array([5e-3, 5e-3, 9e-3]))

    def hover_setpoint(self):
        return Setpoint(p_d=np.array([0.0, 0.0, 1.0]), v_d=np.zeros(3),
                        a_d=np.zeros(3))

    def test_equilibrium_commands(self):
        ctrl = self.make_controller()
        sp = self.hover_setpoint()
        cmd = ctrl.update(sp, sp.p_d, np.zeros(3), np.zeros(3), np.zeros(3),
                          np.zeros(3), np.zeros(3), 0.002)
        assert_allclose(cmd.force, [0.0, 0.0, 0.72 * 9.81])
        assert_allclose(cmd.zeta_d, 0.0)
        assert_allclose(cmd.tau_zeta, 0.0, atol=1e-15)

    def test_deadzone_halts_adaptation(self):
        ctrl = self.make_controller()
        sp = self.hover_setpoint()
        # small offset: every surface stays inside its boundary layer
        p = sp.p_d + np.array([0.0, 0.0, 0.004])
        m0 = ctrl.state.m_hat
        b0 = ctrl.state.b_hat.copy()
        for _ in range(10):
            cmd = ctrl.update(sp, p, np.zeros(3), np.zeros(3), np.zeros(3),
                              np.zeros(3), np.zeros(3), 0.002)
            assert np.abs(cmd.delta1).max() == 0.0
        assert ctrl.state.m_hat == m0
        assert_allclose(ctrl.state.b_hat, b0)

    def test_outside_layer_adapts(self):
        ctrl = self.make_controller()
        sp = self.hover_setpoint()
        p = sp.p_d + np.array([0.0, 0.0, -0.1])
        m0 = ctrl.state.m_hat
        ctrl.update(sp, p, np.array([0.0, 0.0, -0.2]), np.zeros(3),
                    np.zeros(3), np.zeros(3), np.zeros(3), 0.002)
        assert ctrl.state.m_hat > m0

    def test_robustness_bound_check(self):
        assert GAINS.meets_robustness_bounds(0.1, 0.01)
        assert not GAINS.meets_robustness_bounds(5.0, 0.01)

    def test_gain_validation(self):
        with pytest.raises(ValueError):
            ControllerGains(sigma1=0.0)
        with pytest.raises(ValueError):
            ControllerGains(k_p2=np.array([0.1, -0.1, 0.1]))
