
import pytest

from regionest.evaluation import Scenario
from regionest.grid import GridSpec
from regionest.toa import NoiseModel, Point2, TowerArray
from regionest.weighting import defined_weights, risk_cost

PAPER_TOWERS = ((5, 2), (1, 10), (15, 7))
COLLINEAR_TOWERS = ((2, 10), (8, 10.1), (14, 9.9))


@pytest.fixture
def towers():
    return TowerArray.of(*PAPER_TOWERS)


@pytest.fixture
def collinear():
    return TowerArray.of(*COLLINEAR_TOWERS)


@pytest.fixture
def paper_grid():
    return GridSpec(Point2(0, 0), 20, 20, 200, 200)


@pytest.fixture
def coarse_grid():
    return GridSpec(Point2(0, 0), 20, 20, 40, 40)


@pytest.fixture
def paper_scenario(paper_grid, towers):
    return Scenario(paper_grid, towers, NoiseModel(0.5), defined_weights(), risk_cost(), seed=11)


# acceptance criteria register their verdicts here; printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {name}: {detail}")
