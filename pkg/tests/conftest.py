import numpy as np
import pytest

from lrvlasov import PeriodicGrid, Scenario, initialize_from_function


@pytest.fixture(scope="session")
def grids_128():
    return PeriodicGrid(0.0, 10.0 * np.pi, 128), PeriodicGrid(-9.0, 9.0, 128)


@pytest.fixture(scope="session")
def scenario():
    return Scenario()


@pytest.fixture()
def two_stream_state(grids_128, scenario):
    gx, gv = grids_128
    return initialize_from_function(scenario.f0, gx, gv, 10)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
