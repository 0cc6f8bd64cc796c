"""Fold-angle dependent geometry and mass properties of the folding airframe.

The vehicle is a central body with four arms in an X layout.  Each arm
hinges vertically by the fold angle ``alpha`` (0 = fully stretched) while a
parallelogram linkage keeps the motor base and rotor at the arm tip level,
so the thrust direction never changes.  Folding pulls the motor bases
inward and (by default) downward, which shortens the frame, shifts the
centre of gravity along z and shrinks the moment of inertia.

Everything in this module is a pure function of the fold angle plus static
shape/mass parameters, so the plant can re-evaluate mass properties at
every simulation step while the arms move.  The centre frame sits at the
geometric centre of the hinge plane, z up, SI units throughout.

Arm ``i`` (1..4) points along the diagonal azimuth 45 + 90*(i-1) degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rotations import rot_y

_SQH = math.sqrt(0.5)

# Exact +-sqrt(1/2) components keep the four-fold symmetry cancellations
# bit-exact instead of leaving 1-ulp trig residue in the assembled inertia.
ARM_DIRECTIONS = (
    np.array([_SQH, _SQH, 0.0]),
    np.array([-_SQH, _SQH, 0.0]),
    np.array([-_SQH, -_SQH, 0.0]),
    np.array([_SQH, -_SQH, 0.0]),
)

_EZ = np.array([0.0, 0.0, 1.0])


class GeometryError(ValueError):
    """An input left the geometric domain (negative length, bad angle...)."""


class InertiaError(RuntimeError):
    """The assembled inertia matrix failed an internal consistency check."""


@dataclass(frozen=True)
class MorphGeometry:
    """Static shape parameters [m] plus the servo-to-fold-angle mapping.

    The body is a square-footprint box, arms and motor bases are cuboids,
    rotors are flat cylinders.  ``prop_extent`` is the blade overhang per
    side beyond the motor-base tips, used only for clearance checks.
    """

    l_b: float = 0.122           # central body length
    l_a: float = 0.090           # arm link length
    l_m: float = 0.040           # motor base length
    h_b: float = 0.040           # body height
    h_r: float = 0.010           # rotor disc height
    r_r: float = 0.0635          # rotor disc radius
    h_a: float = 0.010           # arm cross-section height
    w_a: float = 0.010           # arm cross-section width
    h_m: float = 0.030           # motor base height
    w_m: float = 0.030           # motor base width
    c_r: float = 0.020           # rotor plane height above the base centre
    rotor_offset: float = 0.020  # rotor axis inset from the arm/base joint
    prop_extent: float = 0.070   # blade overhang per side
    alpha_max: float = math.radians(70.0)
    k_servo: float = 1.4         # fold angle per servo angle
    fold_down: bool = True       # arms fold toward -z

    def __post_init__(self):
        for name in ("l_b", "l_a", "l_m", "h_b", "h_r", "r_r", "h_a",
                     "w_a", "h_m", "w_m", "c_r", "prop_extent"):
            if not getattr(self, name) > 0.0:
                raise GeometryError(f"{name} must be strictly positive")
        if not 0.0 < self.alpha_max <= math.pi / 2:
            raise GeometryError("alpha_max must lie in (0, pi/2]")
        if not self.k_servo > 0.0:
            raise GeometryError("k_servo must be strictly positive")
        if self.rotor_offset < 0.0:
            raise GeometryError("rotor_offset must be non-negative")


@dataclass(frozen=True)
class MassSet:
    """Per-module masses [kg]; arms/bases/rotors are each counted 4x."""

    m_b: float = 0.485
    m_a: float = 0.020
    m_m: float = 0.030
    m_r: float = 0.030

    def __post_init__(self):
        for name in ("m_b", "m_a", "m_m", "m_r"):
            if getattr(self, name) < 0.0:
                raise GeometryError(f"{name} must be non-negative")

    @property
    def total(self) -> float:
        return self.m_b + 4.0 * (self.m_a + self.m_m + self.m_r)

    def check_total(self, expected: float, tol: float = 1e-9) -> None:
        if abs(self.total - expected) > tol:
            raise GeometryError(
                f"mass split sums to {self.total:.9f} kg, expected "
                f"{expected:.9f} kg")


@dataclass(frozen=True)
class MorphState:
    """Fold-angle snapshot of the physical model.

    alpha/gamma in rad, L in m, r_cog a 3-vector in the centre frame [m],
    J the diagonal of the composite inertia about the CoG [kg m^2].
    """

    alpha: float
    gamma: float
    L: float
    r_cog: np.ndarray
    J: np.ndarray


def fold_angle_from_servo(gamma: float, geom: MorphGeometry) -> float:
    """Fold angle for a servo angle; proportional map, clamped at alpha_max."""
    if gamma < 0.0:
        raise GeometryError("servo angle must be non-negative")
    return min(geom.k_servo * gamma, geom.alpha_max)


def _check_alpha(alpha: float) -> None:
    # Mathematical domain of the geometry; the operational range is
    # narrower (alpha_max) and is enforced by the servo mapping.
    if not 0.0 <= alpha <= math.pi / 2 + 1e-12:
        raise GeometryError(f"fold angle {alpha!r} outside [0, pi/2]")


def tip_to_tip_length(alpha: float, geom: MorphGeometry) -> float:
    """Diagonal span between opposite motor-base tips [m]."""
    _check_alpha(alpha)
    return geom.l_b + 2.0 * geom.l_a * math.cos(alpha) + 2.0 * geom.l_m


def frame_length(alpha: float, geom: MorphGeometry) -> float:
    """Distance between two adjacent motor bases (X layout) [m]."""
    return tip_to_tip_length(alpha, geom) / math.sqrt(2.0)


def module_positions(alpha: float, geom: MorphGeometry):
    """CoG positions of arms, motor bases and rotors in the centre frame.

    Returns three (4, 3) arrays.  Arm CoGs sit at mid-arm on the folded
    link; motor bases keep their orientation and extend half their length
    beyond the arm tip; rotors sit ``rotor_offset`` inward of the base tip
    and ``c_r`` above it.
    """
    _check_alpha(alpha)
    z_sign = -1.0 if geom.fold_down else 1.0
    ca, sa = math.cos(alpha), math.sin(alpha)
    arms = np.empty((4, 3))
    bases = np.empty((4, 3))
    rotors = np.empty((4, 3))
    for i, u in enumerate(ARM_DIRECTIONS):
        link = ca * u + z_sign * sa * _EZ  # unit vector along the folded arm
        hinge = 0.5 * geom.l_b * u
        tip = hinge + geom.l_a * link
        arms[i] = hinge + 0.5 * geom.l_a * link
        bases[i] = tip + 0.5 * geom.l_m * u
        rotors[i] = tip + geom.rotor_offset * u + geom.c_r * _EZ
    return arms, bases, rotors


def cog_offset(alpha: float, geom: MorphGeometry, masses: MassSet) -> np.ndarray:
    """Centre-of-gravity offset from the geometric centre [m, 3-vector].

    The body's own CoG defines the centre-frame origin, so only the moving
    modules contribute to the numerator while the full mass divides.
    """
    total = masses.total
    if total <= 0.0:
        raise GeometryError("total mass must be strictly positive")
    arms, bases, rotors = module_positions(alpha, geom)
    num = (masses.m_a * arms.sum(axis=0)
           + masses.m_m * bases.sum(axis=0)
           + masses.m_r * rotors.sum(axis=0))
    return num / total


def primitive_inertia(shape: str, mass: float, dims) -> np.ndarray:
    """Principal inertia diagonal of a primitive shape [kg m^2].

    shape "box": dims = (side, height), square footprint.
    shape "cylinder": dims = (radius, height), axis along z.
    shape "cuboid": dims = (lx, ly, lz).
    """
    if mass < 0.0:
        raise GeometryError("mass must be non-negative")
    d = [float(x) for x in dims]
    if any(x <= 0.0 for x in d):
        raise GeometryError("dimensions must be strictly positive")
    k = mass / 12.0
    if shape == "box":
        l, h = d
        return k * np.array([l * l + h * h, l * l + h * h, 2.0 * l * l])
    if shape == "cylinder":
        r, h = d
        return k * np.array([3.0 * r * r + h * h,
                             3.0 * r * r + h * h,
                             6.0 * r * r])
    if shape == "cuboid":
        lx, ly, lz = d
        return k * np.array([ly * ly + lz * lz,
                             lx * lx + lz * lz,
                             lx * lx + ly * ly])
    raise GeometryError(f"unknown primitive shape {shape!r}")


def _azimuth_rotation(u: np.ndarray) -> np.ndarray:
    # Rotation about z taking local x to the arm direction u.
    return np.array([[u[0], -u[1], 0.0],
                     [u[1], u[0], 0.0],
                     [0.0, 0.0, 1.0]])


def arm_rotation(alpha: float, arm_index: int, fold_down: bool = True) -> np.ndarray:
    """Full orientation of arm ``arm_index`` (1..4) at fold angle alpha.

    Local x points along the arm; the azimuth turn about z is followed by
    the fold about the local (horizontal, tangential) y axis.
    """
    if arm_index not in (1, 2, 3, 4):
        raise GeometryError("arm_index must be in 1..4")
    _check_alpha(alpha)
    beta = alpha if fold_down else -alpha
    return _azimuth_rotation(ARM_DIRECTIONS[arm_index - 1]) @ rot_y(beta)


def fold_axis_rotation(alpha: float, arm_index: int,
                       fold_down: bool = True) -> np.ndarray:
    """Rotation of arm ``arm_index`` away from its stretched pose.

    The axis is the arm's hinge line: horizontal, perpendicular to the
    arm's radial direction.  At alpha = 0 this is the identity.
    """
    if arm_index not in (1, 2, 3, 4):
        raise GeometryError("arm_index must be in 1..4")
    _check_alpha(alpha)
    beta = alpha if fold_down else -alpha
    R_az = _azimuth_rotation(ARM_DIRECTIONS[arm_index - 1])
    return R_az @ rot_y(beta) @ R_az.T


def rotate_arm_inertia(J_a: np.ndarray, alpha: float, arm_index: int,
                       fold_down: bool = True) -> np.ndarray:
    """Arm inertia under the fold rotation: R J R^T similarity.

    ``J_a`` is the diagonal of the arm's inertia in the stretched pose;
    the result is the same tensor after hinging down by ``alpha``.
    """
    R = fold_axis_rotation(alpha, arm_index, fold_down)
    return R @ np.diag(np.asarray(J_a, dtype=float)) @ R.T


def parallel_axis_term(mass: float, offset: np.ndarray) -> np.ndarray:
    """Inertia added by moving a module of ``mass`` by ``offset``."""
    d = np.asarray(offset, dtype=float)
    return mass * (float(d @ d) * np.eye(3) - np.outer(d, d))


def composite_inertia(inertias, masses, positions, ref: np.ndarray) -> np.ndarray:
    """Sum of module inertia matrices transported to the reference point."""
    J = np.zeros((3, 3))
    for J_m, m, r in zip(inertias, masses, positions):
        J += J_m + parallel_axis_term(m, np.asarray(r, dtype=float) - ref)
    return J


def total_inertia(alpha: float, geom: MorphGeometry, masses: MassSet,
                  return_matrix: bool = False):
    """Composite inertia diagonal about the vehicle CoG [kg m^2].

    Assembles body, rotated arms, motor bases and rotors with their
    parallel-axis terms.  The four-fold symmetric layout must produce a
    diagonal matrix; a non-diagonal or non-positive result raises
    InertiaError.
    """
    arms, bases, rotors = module_positions(alpha, geom)
    r_cog = cog_offset(alpha, geom, masses)

    J_body = np.diag(primitive_inertia("box", masses.m_b, (geom.l_b, geom.h_b)))
    J_arm_local = primitive_inertia(
        "cuboid", masses.m_a, (geom.l_a, geom.w_a, geom.h_a))
    J_base_local = primitive_inertia(
        "cuboid", masses.m_m, (geom.l_m, geom.w_m, geom.h_m))
    J_rotor = np.diag(primitive_inertia("cylinder", masses.m_r, (geom.r_r, geom.h_r)))

    inertias = [J_body]
    module_masses = [masses.m_b]
    positions = [np.zeros(3)]
    for i in range(4):
        R_az = _azimuth_rotation(ARM_DIRECTIONS[i])
        R_arm = arm_rotation(alpha, i + 1, geom.fold_down)
        inertias.append(R_arm @ np.diag(J_arm_local) @ R_arm.T)
        module_masses.append(masses.m_a)
        positions.append(arms[i])
        inertias.append(R_az @ np.diag(J_base_local) @ R_az.T)
        module_masses.append(masses.m_m)
        positions.append(bases[i])
        inertias.append(J_rotor)
        module_masses.append(masses.m_r)
        positions.append(rotors[i])

    J = composite_inertia(inertias, module_masses, positions, r_cog)

    diag = np.diag(J).copy()
    off = J - np.diag(diag)
    limit = 1e-12 * max(diag.max(), 1e-30)
    if np.abs(off).max() > limit:
        raise InertiaError(
            f"assembled inertia is not diagonal (max off-diagonal "
            f"{np.abs(off).max():.3e})")
    if not np.all(diag > 0.0):
        raise InertiaError("assembled inertia is not positive definite")
    if return_matrix:
        return diag, J
    return diag


def morph_state(alpha: float, geom: MorphGeometry, masses: MassSet,
                gamma: float | None = None) -> MorphState:
    """Bundle every fold-angle dependent quantity for one configuration."""
    _check_alpha(alpha)
    if alpha > geom.alpha_max + 1e-12:
        raise GeometryError(
            f"fold angle {alpha:.4f} exceeds alpha_max {geom.alpha_max:.4f}")
    if gamma is None:
        gamma = alpha / geom.k_servo
    r_cog = cog_offset(alpha, geom, masses)
    if max(abs(r_cog[0]), abs(r_cog[1])) >= 1e-12:
        raise InertiaError("CoG left the vertical axis in a symmetric layout")
    return MorphState(
        alpha=float(alpha),
        gamma=float(gamma),
        L=tip_to_tip_length(alpha, geom),
        r_cog=r_cog,
        J=total_inertia(alpha, geom, masses),
    )
