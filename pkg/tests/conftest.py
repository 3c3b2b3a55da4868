import pytest
import pytest_asyncio
from httpx import AsyncClient, ASGITransport

from app.main import app
from app.services import fixtures
from app.services.solvers import HarmonicSolverService

PERIOD = 1.0


@pytest.fixture(scope="session")
def plant():
    return fixtures.plant_matrix(PERIOD)


@pytest.fixture(scope="session")
def lqr_data(plant):
    return {
        "a": plant,
        "b": fixtures.input_matrix(),
        "q": fixtures.state_weight(),
        "r": fixtures.input_weight(),
        "k0": fixtures.initial_gain(),
    }


@pytest.fixture(scope="session")
def riccati_solution(lqr_data):
    solver = HarmonicSolverService()
    return solver.riccati_kleinman(
        **lqr_data,
        period=PERIOD,
        h_trunc=6,
        h_max=500,
        auto_update_h=True,
        residual_threshold=1e-6,
    )


@pytest.fixture(scope="session")
def closed_loop(lqr_data, riccati_solution):
    gain = riccati_solution[0]
    return lqr_data["a"] - lqr_data["b"] @ gain


@pytest_asyncio.fixture(scope="function")
async def client():
    async with AsyncClient(transport=ASGITransport(app=app), base_url="http://test") as ac:
        yield ac
