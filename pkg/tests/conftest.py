import numpy as np
import pytest

from awilab.experiments import constant_media_scenario
from awilab.signal import TimeAxis, WaveletKind, make_mother_wavelet, scale_wavelet

DT = 1e-3


@pytest.fixture(scope="session")
def ricker1():
    return make_mother_wavelet(WaveletKind.RICKER, DT)


@pytest.fixture(scope="session")
def gdw1():
    return make_mother_wavelet(WaveletKind.GAUSSIAN_DERIVATIVE, DT)


@pytest.fixture(scope="session")
def axis24():
    return TimeAxis.spanning(DT, 24.0)


@pytest.fixture(scope="session")
def scenario():
    return constant_media_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def wavelet(w1, lam):
    return scale_wavelet(w1, lam)


# ------------------------------------------------------------- acceptance log

_ACCEPTANCE = []


@pytest.fixture
def accept():
    """Record one acceptance line: ``accept(number, title, ok, detail, seconds, budget)``."""
    def record(number, title, ok, detail, seconds, budget):
        ok = bool(ok) and seconds < budget
        line = "criterion %2d %s  %-32s %s  [%.1fs < %gs]" % (
            number, "PASS" if ok else "FAIL", title, detail, seconds, budget)
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
