import numpy as np
import pytest

from rayrepair.model import HybridSample, HybridScheme, extract_hybrid_sample

from reference import BEARINGS, SCHEME_T


@pytest.fixture(scope="session")
def bearings():
    return np.array(BEARINGS)


def bearing_sample(scheme_id):
    return extract_hybrid_sample(BEARINGS, HybridScheme(23, 20, SCHEME_T[scheme_id]))


@pytest.fixture(scope="session")
def scheme1():
    return bearing_sample(1)


@pytest.fixture(scope="session")
def scheme2():
    return bearing_sample(2)


@pytest.fixture
def toy():
    """Two failures out of three units, stopped at the second failure."""
    return HybridSample(np.array([1.0, 2.0]), HybridScheme(3, 2, 2.5), 2, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
