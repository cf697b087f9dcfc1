import pytest

from bayestherm import ProbeConfig, PriorSpec, build_grid, build_prior


@pytest.fixture(scope="session")
def full_grid():
    return build_grid(0.01, 200.0, step=1e-3)


@pytest.fixture(scope="session")
def eq200():
    return ProbeConfig(200)


@pytest.fixture(scope="session")
def jeffreys200(full_grid, eq200):
    return build_prior(PriorSpec("jeffreys"), eq200, full_grid)


@pytest.fixture(scope="session")
def coarse_grid():
    """Cheap grid for tests that only need qualitative behaviour."""
    return build_grid(0.01, 200.0, step=1e-2)
