import numpy as np
import pytest

from core.config import RunConfig
from domain.metrics import penetration, success
from domain.scenarios import DOOR_PATH_Y, DOOR_TARGET_X
from services.episode_service import EpisodeService, Suite


@pytest.fixture(scope="module")
def service():
    return EpisodeService(RunConfig())


def _run(service, suite: Suite, count: int, regulation: bool = True):
    return [service.run_job(job) for job in service.jobs_from_suite(suite, count, regulation=regulation)]


def test_door_is_crossed_without_penetrating_the_wings(service):
    results = _run(service, Suite.DOOR, 20)
    for result in results:
        assert result.penetrations().max() <= 50, result.name
    reached = [success(result) for result in results]
    assert sum(r.success for r in reached) >= 16
    assert all(r.time <= 20.0 for r in reached if r.success)
    # the goal lies past the far side of the door
    final = [result.root_positions()[-1] for result, r in zip(results, reached) if r.success]
    assert np.all(np.array(final)[:, 0] > DOOR_TARGET_X - 0.3)
    assert np.allclose(np.array(final)[:, 1], DOOR_PATH_Y, atol=0.3)


@pytest.mark.parametrize("suite", [Suite.WALL, Suite.CORRIDOR])
def test_regulation_lowers_penetration(service, suite):
    on = np.mean([penetration(result) for result in _run(service, suite, 10)])
    off = np.mean([penetration(result) for result in _run(service, suite, 10, regulation=False)])
    assert on < off


def test_open_ground_targets_are_reached(service):
    results = _run(service, Suite.OPEN, 100)
    reached = [success(result) for result in results]
    assert sum(r.success for r in reached) >= 95
    assert all(r.time <= 10.0 for r in reached if r.success)
