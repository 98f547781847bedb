import os

import numpy as np
import pytest

from paretoprune import kernels

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DESK_DIR = os.path.join(ROOT, "data", "mnist-desk")


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run the test once per kernel backend, restoring the default afterwards."""
    previous = kernels.BACKEND
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
