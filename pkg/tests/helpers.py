"""Independent oracles shared across the test modules.

Everything here deliberately avoids the library's own assembly paths:
inertia checks walk explicit point clouds, rotation checks go through
scipy, and the rotational-dynamics cross-checks integrate the body-frame
equations directly.
"""

import numpy as np

from morphquad import MassSet, MorphGeometry, arm_rotation, module_positions
from morphquad.rotations import skew


def _grid(n: int) -> np.ndarray:
    # cell centres of n equal slices of [-0.5, 0.5]
    return (np.arange(n) + 0.5) / n - 0.5


def cuboid_cloud(dims, counts) -> np.ndarray:
    axes = [_grid(n) * d for d, n in zip(dims, counts)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)


def cylinder_cloud(radius, height, n_xy, n_z) -> np.ndarray:
    pts = cuboid_cloud((2 * radius, 2 * radius, height), (n_xy, n_xy, n_z))
    keep = pts[:, 0] ** 2 + pts[:, 1] ** 2 <= radius ** 2
    return pts[keep]


def point_cloud_inertia(alpha: float, geom: MorphGeometry, masses: MassSet):
    """Brute-force composite inertia from >=10^4 point masses per module.

    Returns (diagonal, full matrix, cloud CoG).
    """
    clouds = [cuboid_cloud((geom.l_b, geom.l_b, geom.h_b), (22, 22, 22))]
    cloud_masses = [masses.m_b]

    arms, bases, rotors = module_positions(alpha, geom)
    for i in range(4):
        R_arm = arm_rotation(alpha, i + 1, geom.fold_down)
        R_az = arm_rotation(0.0, i + 1, geom.fold_down)  # azimuth only
        arm_pts = cuboid_cloud((geom.l_a, geom.w_a, geom.h_a),
                               (50, 15, 15)) @ R_arm.T + arms[i]
        base_pts = cuboid_cloud((geom.l_m, geom.w_m, geom.h_m),
                                (30, 20, 20)) @ R_az.T + bases[i]
        rotor_pts = cylinder_cloud(geom.r_r, geom.h_r, 40, 10) + rotors[i]
        clouds += [arm_pts, base_pts, rotor_pts]
        cloud_masses += [masses.m_a, masses.m_m, masses.m_r]

    assert all(len(c) >= 10_000 for c in clouds)

    total = sum(cloud_masses)
    cog = sum(m * c.mean(axis=0) for m, c in zip(cloud_masses, clouds)) / total
    J = np.zeros((3, 3))
    for m, c in zip(cloud_masses, clouds):
        d = c - cog
        J += (m / len(c)) * (np.sum(d * d) * np.eye(3) - d.T @ d)
    return np.diag(J).copy(), J, cog


def body_form_omega_derivative(omega, J, tau_b) -> np.ndarray:
    """omega_dot of the body-frame rotational equations, diagonal J."""
    return (tau_b - skew(omega) @ (J * omega)) / J


def integrate_body_omega(omega0, J, steps, dt, tau_b=None) -> np.ndarray:
    """RK4 trajectory of the body-frame angular velocity (torque ZOH)."""
    tau = np.zeros(3) if tau_b is None else np.asarray(tau_b, dtype=float)
    omega = np.asarray(omega0, dtype=float).copy()
    out = np.empty((steps + 1, 3))
    out[0] = omega
    for k in range(steps):
        k1 = body_form_omega_derivative(omega, J, tau)
        k2 = body_form_omega_derivative(omega + 0.5 * dt * k1, J, tau)
        k3 = body_form_omega_derivative(omega + 0.5 * dt * k2, J, tau)
        k4 = body_form_omega_derivative(omega + dt * k3, J, tau)
        omega = omega + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = omega
    return out


def random_attitude(rng, max_angle=1.0):
    """Random non-singular Euler state (pitch kept away from +-pi/2)."""
    zeta = rng.uniform(-max_angle, max_angle, 3)
    zeta[1] = rng.uniform(-1.2, 1.2)
    zeta_dot = rng.uniform(-2.0, 2.0, 3)
    return zeta, zeta_dot
