"""Shared, session-cached physics fixtures (calibration and spectrum are expensive)."""

import pytest

from cdt_sim.geometry import WaveguideGeometry
from cdt_sim.scenarios import SpectrumCache
from cdt_sim.spectrum import calibrate_ns, two_level

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def calibration():
    return calibrate_ns(WaveguideGeometry())


@pytest.fixture(scope="session")
def geom(calibration):
    return WaveguideGeometry(n_s=calibration.n_s)


@pytest.fixture(scope="session")
def cache(geom):
    c = SpectrumCache(geom)
    c.get()
    return c


@pytest.fixture(scope="session")
def potential(cache):
    return cache.get()[0]


@pytest.fixture(scope="session")
def states(cache):
    return cache.get()[1]


@pytest.fixture(scope="session")
def tls(states, geom):
    return two_level(states, geom)


@pytest.fixture(scope="session")
def uncalibrated():
    """Spectrum of the uncalibrated default device (n_s = 1.52); cheap to build."""
    geom = WaveguideGeometry()
    c = SpectrumCache(geom)
    c.get()
    return geom, c


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
