import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from robust_vlc.channel import OpticalParams
from robust_vlc.quantizer import DynamicRange, cached_calibrate
from robust_vlc.scenario import RoomConfig, place_leds

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance criterion lines, filled by test_acceptance and echoed at the end
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("calibration")


@pytest.fixture(scope="session")
def dynamic_range(cache_dir) -> DynamicRange:
    """Quantizer range of the default setup from 10^6 draws."""
    return cached_calibrate(RoomConfig(), OpticalParams(), 10**6, 0,
                            place_leds(RoomConfig(), 6), cache_dir=cache_dir)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
