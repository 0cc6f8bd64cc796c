"""Session-wide scenario runs shared by the harness and acceptance tests."""

import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from morphquad import resolve_config, run_scenario  # noqa: E402
from morphquad.config import config_from_dict  # noqa: E402


@pytest.fixture(scope="session")
def runs_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("runs")


@pytest.fixture(scope="session")
def circle_run(runs_dir):
    """Bundled circle_morph with default gains and the observer on."""
    config = resolve_config("circle_morph")
    start = time.perf_counter()
    result = run_scenario(config, runs_dir / "circle_on")
    elapsed = time.perf_counter() - start
    return result, elapsed


@pytest.fixture(scope="session")
def circle_run_clean(runs_dir):
    """circle_morph with the disturbance zeroed and the observer off."""
    config = resolve_config("circle_morph")
    data = {
        "name": "circle_clean",
        "duration": 25.0,
        "seed": 11,
        "observer": "off",
        "trajectory": {"type": "circle", "radius": 0.6, "center": [0.0, 0.6],
                       "altitude": 1.2, "period": 5.0, "spin_up": 2.0},
        "morph_schedule": [
            {"time": 7.7, "servo_deg": 50},
            {"time": 12.7, "servo_deg": 0},
            {"time": 16.7, "servo_deg": 50},
        ],
        "disturbance": {"force_bias": [0, 0, 0], "force_noise": 0.0,
                        "torque_bias": [0, 0, 0], "torque_noise": 0.0},
    }
    assert config.duration == 25.0  # keep the clean variant in sync
    return run_scenario(config_from_dict(data), runs_dir / "circle_clean")


@pytest.fixture(scope="session")
def hover_pair(runs_dir):
    """Bundled hover_morph with the observer on and off, same seed."""
    config = resolve_config("hover_morph")
    on = run_scenario(config, runs_dir / "hover_on", observer=True)
    off = run_scenario(config, runs_dir / "hover_off", observer=False)
    return on, off


@pytest.fixture(scope="session")
def grasp_run(runs_dir):
    return run_scenario(resolve_config("grasp_transport"),
                        runs_dir / "grasp")
