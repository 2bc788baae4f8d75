import numpy as np
import pytest

from kboost import _accel

BACKENDS = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    previous = _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_psd(rng, n, top=1.0):
    """Random PSD matrix with largest eigenvalue ``top``."""
    A = rng.standard_normal((n, n))
    S = A @ A.T
    S = (S + S.T) / 2
    return S * (top / np.linalg.eigvalsh(S).max())


ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    """Store and print one acceptance line; the summary hook repeats them all."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
