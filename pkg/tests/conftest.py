import numpy as np
import pytest

from prefshape.belief import McmcConfig
from prefshape.dynamics import ScenarioConfig
from prefshape.querygen import QueryGenConfig


@pytest.fixture
def scenario():
    return ScenarioConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# light settings so unit tests stay fast; defaults are exercised separately
FAST_MCMC = McmcConfig(chain_length=4000, burn_in=1000, adapt_start=500)
FAST_QUERYGEN = QueryGenConfig(n_samples=50, restarts=3, max_iter=40, mcmc=FAST_MCMC)
