import pytest

from perpetualput import (
    MarketParams,
    SolverConfig,
    VolatilityModel,
    solve_free_boundary,
    solve_free_boundary_general,
)

# Benchmark market throughout: r = 0.1, E = 100, sigma0 = 0.3.
R, STRIKE, SIGMA0 = 0.1, 100.0, 0.3


@pytest.fixture(scope="session")
def params():
    return MarketParams(r=R, E=STRIKE)


@pytest.fixture(scope="session")
def cfg():
    return SolverConfig()


@pytest.fixture(scope="session")
def constant_model():
    return VolatilityModel.constant(SIGMA0)


@pytest.fixture(scope="session")
def rapm_unit():
    return VolatilityModel.rapm(SIGMA0, 1.0)


@pytest.fixture(scope="session")
def constant_solution(constant_model, params, cfg):
    return solve_free_boundary_general(constant_model, params, cfg)


@pytest.fixture(scope="session")
def rapm_unit_solution(rapm_unit, params, cfg):
    return solve_free_boundary(rapm_unit, params, cfg)
