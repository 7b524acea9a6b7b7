import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from helpers import binary

settings.register_profile(
    "infocost",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("infocost")


@pytest.fixture
def sym_binary():
    """The {0.1, 0.9} structure at prior one half."""
    return binary((0.5, 0.1), (0.5, 0.9))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_verdicts = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Print and record one PASS/FAIL line; returns the verdict for asserting."""
    lines = request.config.stash.setdefault(_verdicts, [])

    def record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
        print(line)
        lines.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_verdicts, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
