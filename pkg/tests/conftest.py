import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from yode.drivers import fbm_samples, weierstrass_series
from yode.paths import DiscretePath, Grid

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def fbm_path(H, seed, n=1025, stream=0, T=1.0):
    grid = Grid(0.0, T, n)
    return DiscretePath(grid, fbm_samples(grid, H, seed, [stream])[0])


def linear_path(n=101, T=1.0):
    grid = Grid(0.0, T, n)
    return DiscretePath(grid, grid.times)


def weierstrass_path(a, b, n=1025):
    grid = Grid(0.0, 1.0, n)
    return DiscretePath(grid, weierstrass_series(grid.times, a, b))


@pytest.fixture
def fbm075():
    return fbm_path(0.75, 1, 513)


@pytest.fixture
def linear():
    return linear_path()


# -- acceptance summary -----------------------------------------------------------

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """``acceptance(label, ok, detail)`` records one criterion line for the session summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(label: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'} {label}" + (f": {detail}" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
