"""Simulation and control library for a quadrotor that folds its arms."""

from .config import (ConfigError, ScenarioConfig, bundled_config_path,
                     config_from_dict, load_config, resolve_config)
from .controller import (CascadeController, ControlCommand, ControllerGains,
                         ControllerState, InfeasibleAttitudeError, Setpoint,
                         adaptive_update, attitude_control, attitude_setpoint,
                         boundary_layer_delta, lyapunov_eval,
                         position_control, regressor, sliding_surfaces)
from .dynamics import (DisturbanceModel, DisturbanceParams,
                       DisturbanceSample, DivergenceError, PlantParams,
                       RigidBodyState, SingularAttitudeError,
                       allocation_matrix, apply_rotor_limits,
                       b_and_c_matrices, euler_rate_matrix,
                       euler_rate_matrix_dot, omega_from_euler_rates,
                       step_dynamics)
from .engine import (GapClearance, RunResult, SimulationDiverged,
                     gap_clearance, run_scenario)
from .metrics import (Comparison, ComparisonError, LOG_COLUMNS, RunMetrics,
                      compare_runs, load_log, metrics_from_log)
from .morphology import (GeometryError, InertiaError, MassSet, MorphGeometry,
                         MorphState, arm_rotation, cog_offset,
                         composite_inertia, fold_angle_from_servo,
                         fold_axis_rotation, frame_length, module_positions,
                         morph_state, primitive_inertia, rotate_arm_inertia,
                         tip_to_tip_length, total_inertia)
from .observer import (ObserverError, ObserverGains, ObserverState,
                       observer_update, torque_estimate_to_inertial)
from .trajectories import CirclePath, HoverPath, WaypointPath

__version__ = "0.1.0"
