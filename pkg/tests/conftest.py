import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def disc_polar_256():
    from hankelab.domains import UnitDisc, build_quadrature
    return build_quadrature(UnitDisc(), 256)


@pytest.fixture(scope="session")
def disc_polar_128():
    from hankelab.domains import UnitDisc, build_quadrature
    return build_quadrature(UnitDisc(), 128)


@pytest.fixture(scope="session")
def disc_grid_128():
    from hankelab.domains import UnitDisc, build_quadrature
    return build_quadrature(UnitDisc(), 128, scheme="grid")


@pytest.fixture(scope="session")
def disc_basis_20(disc_polar_256):
    from hankelab.bergman import orthonormal_basis
    from hankelab.domains import UnitDisc
    return orthonormal_basis(UnitDisc(), 20, disc_polar_256)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line; printed now and again in the terminal summary."""
    def _report(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
