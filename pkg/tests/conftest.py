import numpy as np
import pytest

from expertrec.domain import Video
from expertrec.harness.config import load_config
from expertrec.irl import Discretizer

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def disc():
    return Discretizer()


@pytest.fixture
def tiny_config():
    """Small enough to run the whole pipeline in a few seconds."""
    return load_config(profile="desk", overrides={
        "catalog_size": 2000, "n_experts": 3, "trajectories_per_expert": 10, "irl_iterations": 50,
        "sessions": 6, "user_budget": 30.0})


def make_video(i, topic=0, q=0.0, evaluated=None, length=4.0):
    if evaluated is None:
        return Video(i, topic, length, q)
    return Video(i, topic, length, q, True, evaluated)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# unit outcomes seen in this session, consumed by the acceptance suite
UNIT_OUTCOMES = {}
ACCEPTANCE_FILE = "test_acceptance.py"


def pytest_collection_modifyitems(session, config, items):
    # acceptance runs last so it can read the unit results of the same session
    items.sort(key=lambda item: item.nodeid.split("::")[0].endswith(ACCEPTANCE_FILE))


def pytest_runtest_logreport(report):
    if ACCEPTANCE_FILE in report.nodeid:
        return
    if report.when == "call" or report.failed or report.skipped:
        ok = report.passed or (report.skipped and report.when == "setup")
        UNIT_OUTCOMES[report.nodeid] = UNIT_OUTCOMES.get(report.nodeid, True) and ok
