import math

import pytest
from hypothesis import HealthCheck, settings

from trajqual.geodesy import GeoPoint, Trajectory

settings.register_profile(
    "trajqual", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("trajqual")

A_WGS84 = 6378137.0
# One degree of longitude along the equator, which is itself a geodesic.
EQ_DEGREE_M = A_WGS84 * math.pi / 180.0


def line(coords, tid="t"):
    return Trajectory(tid, tuple(GeoPoint(lat, lon) for lat, lon in coords))


@pytest.fixture
def equator_line():
    return line([(0.0, 0.0), (0.0, 0.5), (0.0, 1.0)], "eq")


# Acceptance verdicts, one line per criterion, echoed after the run.
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line_ in ACCEPTANCE:
            terminalreporter.write_line(line_)
