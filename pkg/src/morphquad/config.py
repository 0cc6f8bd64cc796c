"""Scenario configuration: YAML ingestion, unit handling, validation.

Configs are plain YAML.  Numeric values are SI; strings may carry an
explicit unit suffix ("12.2 cm", "77 g", "50 deg") and are converted on
load.  Servo angles in the morph schedule use the ``servo_deg`` key and
are always degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .controller import ControllerGains
from .dynamics import DisturbanceParams, PlantParams
from .morphology import GeometryError, MassSet, MorphGeometry
from .trajectories import CirclePath, HoverPath, WaypointPath

CONTROL_DT = 0.002   # controller/logging interval [s]
PLANT_DT = 0.001     # plant integration step [s]
SERVO_RATE = math.radians(200.0)  # servo slew limit [rad/s]


class ConfigError(ValueError):
    """Configuration could not be parsed or violates an invariant."""


_UNIT_FACTORS = {
    "length": {"m": 1.0, "cm": 0.01, "mm": 0.001},
    "mass": {"kg": 1.0, "g": 0.001},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
    "time": {"s": 1.0, "ms": 0.001},
    "force": {"N": 1.0},
    "torque": {"N*m": 1.0, "Nm": 1.0},
    "plain": {},
}


def parse_quantity(value, kind: str, where: str = "") -> float:
    """Convert a config scalar (number or 'value unit' string) to SI."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        parts = value.split()
        try:
            mag = float(parts[0])
        except (ValueError, IndexError):
            raise ConfigError(f"{where}: cannot parse quantity {value!r}") from None
        if len(parts) == 1:
            return mag
        unit = parts[1]
        factors = _UNIT_FACTORS.get(kind, {})
        if unit not in factors:
            raise ConfigError(
                f"{where}: unit {unit!r} not valid for a {kind} quantity")
        return mag * factors[unit]
    raise ConfigError(f"{where}: expected a number or quantity string")


def _parse_vector(value, kind: str, where: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{where}: expected a 3-element list")
    return np.array([parse_quantity(v, kind, f"{where}[{i}]")
                     for i, v in enumerate(value)])


@dataclass(frozen=True)
class MorphEvent:
    time: float       # [s]
    servo: float      # target servo angle [rad]


@dataclass(frozen=True)
class PayloadEvent:
    time: float       # [s]
    mass: float       # [kg]
    action: str       # "attach" | "release"
    offset: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 0.0, -0.19]))


@dataclass(frozen=True)
class GapSpec:
    width: float      # [m]
    margin: float = 0.03


@dataclass
class ScenarioConfig:
    """Fully resolved, SI-unit scenario description."""

    name: str
    duration: float
    trajectory: object                      # HoverPath | CirclePath | WaypointPath
    morph_schedule: list = field(default_factory=list)
    payload_events: list = field(default_factory=list)
    observer_on: bool = True
    seed: int = 0
    output: str | None = None
    disturbance: DisturbanceParams = field(default_factory=DisturbanceParams)
    geometry: MorphGeometry = field(default_factory=MorphGeometry)
    masses: MassSet = field(default_factory=MassSet)
    plant: PlantParams = field(default_factory=PlantParams)
    gains: ControllerGains = field(default_factory=ControllerGains)
    observer_k: float = 8.0                 # bandwidth of both channels [1/s]
    mhat_init_factor: float = 0.9           # m_hat(0) as a fraction of the true mass
    setpoint_filter_tau: float = 0.02
    control_dt: float = CONTROL_DT
    plant_dt: float = PLANT_DT
    servo_rate: float = SERVO_RATE
    gap: GapSpec | None = None

    def with_overrides(self, observer: bool | None = None,
                       seed: int | None = None) -> "ScenarioConfig":
        cfg = self
        if observer is not None:
            cfg = replace(cfg, observer_on=observer)
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        return cfg


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ConfigError(f"{where}: missing required field '{key}'")
    return data[key]


def _build_trajectory(data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: trajectory must be a mapping")
    kind = _require(data, "type", where)
    yaw = parse_quantity(data.get("yaw", 0.0), "angle", f"{where}.yaw")
    if kind == "hover":
        pos = _parse_vector(_require(data, "position", where), "length",
                            f"{where}.position")
        return HoverPath(position=pos, yaw=yaw)
    if kind == "circle":
        center = data.get("center", [0.0, 0.0])
        if not isinstance(center, (list, tuple)) or len(center) != 2:
            raise ConfigError(f"{where}.center: expected a 2-element list")
        return CirclePath(
            radius=parse_quantity(_require(data, "radius", where), "length",
                                  f"{where}.radius"),
            center=np.array([parse_quantity(c, "length", f"{where}.center")
                             for c in center]),
            altitude=parse_quantity(_require(data, "altitude", where),
                                    "length", f"{where}.altitude"),
            period=parse_quantity(_require(data, "period", where), "time",
                                  f"{where}.period"),
            spin_up=parse_quantity(data.get("spin_up", 2.0), "time",
                                   f"{where}.spin_up"),
            yaw=yaw)
    if kind == "waypoints":
        raw = _require(data, "points", where)
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{where}.points: expected a non-empty list")
        times, points = [], []
        for i, entry in enumerate(raw):
            w = f"{where}.points[{i}]"
            times.append(parse_quantity(_require(entry, "time", w), "time",
                                        f"{w}.time"))
            points.append(_parse_vector(_require(entry, "position", w),
                                        "length", f"{w}.position"))
        try:
            return WaypointPath(times=np.array(times), points=np.array(points),
                                yaw=yaw)
        except ValueError as exc:
            raise ConfigError(f"{where}.points: {exc}") from exc
    raise ConfigError(f"{where}.type: unknown trajectory type {kind!r}")


def _build_morph_schedule(raw, duration: float, geometry: MorphGeometry):
    if raw is None:
        return []
    schedule = []
    servo_max = geometry.alpha_max / geometry.k_servo
    last_t = -math.inf
    for i, entry in enumerate(raw):
        where = f"morph_schedule[{i}]"
        t = parse_quantity(_require(entry, "time", where), "time",
                           f"{where}.time")
        if "servo_deg" in entry:
            servo = math.radians(parse_quantity(entry["servo_deg"], "plain",
                                                f"{where}.servo_deg"))
        elif "servo" in entry:
            servo = parse_quantity(entry["servo"], "angle", f"{where}.servo")
        else:
            raise ConfigError(f"{where}: missing required field 'servo_deg'")
        if t <= last_t:
            raise ConfigError(f"{where}.time: schedule times must be "
                              "strictly increasing")
        if not 0.0 <= t <= duration:
            raise ConfigError(f"{where}.time: outside [0, duration]")
        if not -1e-12 <= servo <= servo_max + 1e-9:
            raise ConfigError(
                f"{where}: servo angle {math.degrees(servo):.2f} deg outside "
                f"[0, {math.degrees(servo_max):.2f}] deg")
        schedule.append(MorphEvent(time=t, servo=max(servo, 0.0)))
        last_t = t
    return schedule


def _build_payload_events(raw, duration: float):
    if raw is None:
        return []
    events = []
    last_t = -math.inf
    for i, entry in enumerate(raw):
        where = f"payload_events[{i}]"
        t = parse_quantity(_require(entry, "time", where), "time",
                           f"{where}.time")
        mass = parse_quantity(_require(entry, "mass", where), "mass",
                              f"{where}.mass")
        action = _require(entry, "action", where)
        if action not in ("attach", "release"):
            raise ConfigError(f"{where}.action: must be 'attach' or 'release'")
        if t <= last_t:
            raise ConfigError(f"{where}.time: event times must be "
                              "strictly increasing")
        if not 0.0 <= t <= duration:
            raise ConfigError(f"{where}.time: outside [0, duration]")
        if mass < 0.0:
            raise ConfigError(f"{where}.mass: must be non-negative")
        offset = np.array([0.0, 0.0, -0.19])
        if "offset" in entry:
            offset = _parse_vector(entry["offset"], "length", f"{where}.offset")
        events.append(PayloadEvent(time=t, mass=mass, action=action,
                                   offset=offset))
        last_t = t
    return events


_GEOMETRY_KINDS = {
    "l_b": "length", "l_a": "length", "l_m": "length", "h_b": "length",
    "h_r": "length", "r_r": "length", "h_a": "length", "w_a": "length",
    "h_m": "length", "w_m": "length", "c_r": "length",
    "rotor_offset": "length", "prop_extent": "length",
    "alpha_max": "angle", "k_servo": "plain",
}


def _build_geometry(raw) -> MorphGeometry:
    if raw is None:
        return MorphGeometry()
    kwargs = {}
    for key, value in raw.items():
        where = f"geometry.{key}"
        if key == "fold_down":
            if not isinstance(value, bool):
                raise ConfigError(f"{where}: expected a boolean")
            kwargs[key] = value
        elif key in _GEOMETRY_KINDS:
            kwargs[key] = parse_quantity(value, _GEOMETRY_KINDS[key], where)
        else:
            raise ConfigError(f"{where}: unknown geometry field")
    try:
        return MorphGeometry(**kwargs)
    except GeometryError as exc:
        raise ConfigError(f"geometry: {exc}") from exc


def _build_masses(raw) -> MassSet:
    if raw is None:
        return MassSet()
    expected_total = None
    kwargs = {}
    for key, value in raw.items():
        where = f"masses.{key}"
        if key == "total":
            expected_total = parse_quantity(value, "mass", where)
        elif key in ("m_b", "m_a", "m_m", "m_r"):
            kwargs[key] = parse_quantity(value, "mass", where)
        else:
            raise ConfigError(f"{where}: unknown mass field")
    try:
        masses = MassSet(**kwargs)
        if expected_total is not None:
            masses.check_total(expected_total)
    except GeometryError as exc:
        raise ConfigError(f"masses: {exc}") from exc
    return masses


def _build_disturbance(raw) -> DisturbanceParams:
    if raw is None:
        return DisturbanceParams()
    kinds = {
        "force_bias": ("vector", "force"), "torque_bias": ("vector", "torque"),
        "force_noise": ("scalar", "force"), "torque_noise": ("scalar", "torque"),
        "correlation_time": ("scalar", "time"), "f_max": ("scalar", "force"),
        "tau_max": ("scalar", "torque"), "fold_gain": ("scalar", "plain"),
    }
    kwargs = {}
    for key, value in raw.items():
        where = f"disturbance.{key}"
        if key not in kinds:
            raise ConfigError(f"{where}: unknown disturbance field")
        shape, kind = kinds[key]
        if shape == "vector":
            kwargs[key] = _parse_vector(value, kind, where)
        else:
            kwargs[key] = parse_quantity(value, kind, where)
    try:
        return DisturbanceParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"disturbance: {exc}") from exc


def _build_plant(raw) -> PlantParams:
    if raw is None:
        return PlantParams()
    kwargs = {}
    for key in ("k_f", "k_m", "w_max"):
        if key in raw:
            kwargs[key] = parse_quantity(raw[key], "plain", f"plant.{key}")
    unknown = set(raw) - {"k_f", "k_m", "w_max"}
    if unknown:
        raise ConfigError(f"plant: unknown fields {sorted(unknown)}")
    return PlantParams(**kwargs)


_GAIN_VECTOR_FIELDS = ("lambda1", "lambda2", "k_p1", "k_p2", "k_z1", "k_z2",
                       "gamma2")
_GAIN_SCALAR_FIELDS = ("sigma1", "sigma2", "gamma1", "m_floor", "b_floor")


def _build_gains(raw) -> ControllerGains:
    if raw is None:
        return ControllerGains()
    kwargs = {}
    for key, value in raw.items():
        where = f"controller.gains.{key}"
        if key in _GAIN_VECTOR_FIELDS:
            if isinstance(value, (list, tuple)):
                kwargs[key] = _parse_vector(value, "plain", where)
            else:
                kwargs[key] = np.full(3, parse_quantity(value, "plain", where))
        elif key in _GAIN_SCALAR_FIELDS:
            kwargs[key] = parse_quantity(value, "plain", where)
        else:
            raise ConfigError(f"{where}: unknown gain field")
    try:
        return ControllerGains(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"controller.gains: {exc}") from exc


def config_from_dict(data: dict, source: str = "<dict>") -> ScenarioConfig:
    """Validate a raw mapping and resolve it into a ScenarioConfig."""
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    known = {"name", "duration", "seed", "observer", "output", "trajectory",
             "morph_schedule", "payload_events", "disturbance", "geometry",
             "masses", "plant", "controller", "observer_gain", "gap"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{source}: unknown top-level fields "
                          f"{sorted(unknown)}")

    name = data.get("name", Path(source).stem)
    duration = parse_quantity(_require(data, "duration", source), "time",
                              "duration")
    if duration <= 0.0:
        raise ConfigError("duration: must be strictly positive")

    geometry = _build_geometry(data.get("geometry"))
    masses = _build_masses(data.get("masses"))
    trajectory = _build_trajectory(_require(data, "trajectory", source),
                                   "trajectory")

    observer_raw = data.get("observer", True)
    if isinstance(observer_raw, str):
        if observer_raw.lower() not in ("on", "off"):
            raise ConfigError("observer: must be on/off")
        observer_on = observer_raw.lower() == "on"
    elif isinstance(observer_raw, bool):
        observer_on = observer_raw
    else:
        raise ConfigError("observer: must be on/off")

    controller_raw = data.get("controller") or {}
    if not isinstance(controller_raw, dict):
        raise ConfigError("controller: must be a mapping")
    unknown = set(controller_raw) - {"gains", "mhat_init_factor",
                                     "setpoint_filter_tau"}
    if unknown:
        raise ConfigError(f"controller: unknown fields {sorted(unknown)}")
    gains = _build_gains(controller_raw.get("gains"))
    mhat_factor = parse_quantity(controller_raw.get("mhat_init_factor", 0.9),
                                 "plain", "controller.mhat_init_factor")
    filter_tau = parse_quantity(controller_raw.get("setpoint_filter_tau", 0.02),
                                "time", "controller.setpoint_filter_tau")
    if mhat_factor <= 0.0:
        raise ConfigError("controller.mhat_init_factor: must be positive")

    observer_k = parse_quantity(data.get("observer_gain", 8.0), "plain",
                                "observer_gain")
    if observer_k <= 0.0:
        raise ConfigError("observer_gain: must be strictly positive")

    gap = None
    if "gap" in data and data["gap"] is not None:
        raw_gap = data["gap"]
        gap = GapSpec(
            width=parse_quantity(_require(raw_gap, "width", "gap"), "length",
                                 "gap.width"),
            margin=parse_quantity(raw_gap.get("margin", 0.03), "length",
                                  "gap.margin"))

    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed: must be an integer")

    return ScenarioConfig(
        name=str(name),
        duration=duration,
        trajectory=trajectory,
        morph_schedule=_build_morph_schedule(data.get("morph_schedule"),
                                             duration, geometry),
        payload_events=_build_payload_events(data.get("payload_events"),
                                             duration),
        observer_on=observer_on,
        seed=seed,
        output=data.get("output"),
        disturbance=_build_disturbance(data.get("disturbance")),
        geometry=geometry,
        masses=masses,
        plant=_build_plant(data.get("plant")),
        gains=gains,
        observer_k=observer_k,
        mhat_init_factor=mhat_factor,
        setpoint_filter_tau=filter_tau,
        gap=gap,
    )


def load_config(path) -> ScenarioConfig:
    """Load and validate one scenario YAML file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: YAML parse error{line}: {exc}") from exc
    return config_from_dict(data, source=str(path))


def bundled_config_path(name: str) -> Path:
    """Path of a scenario config shipped with the package."""
    root = resources.files("morphquad").joinpath("configs")
    candidate = root.joinpath(f"{name}.yaml")
    if not candidate.is_file():
        available = sorted(p.stem for p in root.iterdir()
                           if p.name.endswith(".yaml"))
        raise ConfigError(
            f"no bundled scenario {name!r}; available: {available}")
    return Path(str(candidate))


def resolve_config(name_or_path: str) -> ScenarioConfig:
    """Accept either a filesystem path or a bundled scenario name."""
    p = Path(name_or_path)
    if p.exists():
        return load_config(p)
    return load_config(bundled_config_path(name_or_path))
