from __future__ import annotations

import random

import numpy as np
import pytest

from anderson_lab.settings import num_workers_to_use

TEST_SEED = 123


@pytest.fixture()
def seed():
    random.seed(TEST_SEED)
    np.random.seed(TEST_SEED)
    yield TEST_SEED


def pytest_xdist_auto_num_workers(config):
    """Return the number of workers to spawn when ``--numprocesses=auto`` is given in the command-
    line."""
    return num_workers_to_use()


@pytest.fixture(autouse=True)
def lab_env(monkeypatch: pytest.MonkeyPatch):
    """Keeps the `ANDERSON_LAB_*` variables of the user's shell out of the tests."""
    for name in ("ANDERSON_LAB_OUT", "ANDERSON_LAB_WORKERS", "ANDERSON_LAB_MAX_MEMORY_GB"):
        monkeypatch.delenv(name, raising=False)
    yield


def pytest_addoption(parser: pytest.Parser):
    parser.addoption(
        "--slow", action="store_true", default=False, help="Also run the tests marked as slow."
    )


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]):
    if config.getoption("--slow"):
        return
    skip_slow = pytest.mark.skip(reason="Slow test: pass --slow to run it.")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
