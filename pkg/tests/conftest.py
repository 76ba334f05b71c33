import itertools
from math import comb, prod

import numpy as np
import pytest

from warpcheck import _kernels


def brute_pm(x, m):
    """Normalized elementary symmetric polynomial by subset enumeration."""
    n = len(x)
    if m == 0:
        return 1.0
    if m > n:
        return 0.0
    return sum(prod(s) for s in itertools.combinations(x, m)) / comb(n, m)


@pytest.fixture(params=["python", "cython"])
def kernel_backend(request, monkeypatch):
    """Run a test once per kernel implementation."""
    if request.param == "cython":
        if _kernels.compiled is None:
            pytest.skip("compiled kernels not built")
        impl = _kernels.compiled
    else:
        impl = _kernels.pure
    for name in ("esym", "esym_grad", "pencil_eig"):
        monkeypatch.setattr(_kernels, name, getattr(impl, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request, capsys):
    """Record one PASS/FAIL line for an acceptance criterion and fail the test on FAIL."""
    lines = request.config.stash[_ACCEPTANCE]

    def report(number, title, failures):
        status = "PASS" if not failures else "FAIL"
        line = f"criterion {number} {status}: {title}"
        if failures:
            line += " | " + "; ".join(failures[:5])
        lines.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        assert not failures, line

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
