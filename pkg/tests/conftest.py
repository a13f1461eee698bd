from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from convoys.convoy import Convoy
from convoys.trajectory import Trajectory, load_trajectories

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load_fixture(name: str) -> dict[str, Trajectory]:
    with open(FIXTURES / name, encoding="utf-8") as fh:
        return load_trajectories(fh)


def traj(obj_id: str, pts) -> Trajectory:
    """Trajectory from ``(x, y, t)`` tuples."""
    return Trajectory.from_points(obj_id, pts)


def convoy(ids: str, start: int, end: int) -> Convoy:
    return Convoy(frozenset(ids.split(",")), start, end)


def random_walk(rng: np.random.Generator, n: int, obj_id: str = "o", step: float = 1.0, t0: int = 0) -> Trajectory:
    xy = np.cumsum(rng.normal(0.0, step, size=(n, 2)), axis=0)
    return Trajectory(obj_id, np.arange(t0, t0 + n), xy)


@pytest.fixture
def pair_convoy():
    return load_fixture("pair_convoy.csv")


@pytest.fixture
def cluster_trace():
    return load_fixture("cluster_trace.csv")


# -- acceptance reporting ------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, name = marker.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        status = "PASS" if rep.passed else "FAIL"
        _CRITERIA[number] = (name, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        name, status, detail = _CRITERIA[number]
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"criterion {number} {name}: {status}{suffix}")
