from math import comb

import mpmath
import numpy as np
import pytest


def fd_partial(f, x, y, i, j, h=1e-3):
    """Central-difference estimate of the (i, j) partial of ``f`` at ``(x, y)``.

    ``f`` takes mpmath numbers; 40 digits keep cancellation out of the
    fourth differences so only the O(h^2) truncation error remains.
    """
    with mpmath.workdps(40):
        x, y, h = mpmath.mpf(x), mpmath.mpf(y), mpmath.mpf(h)
        total = mpmath.mpf(0)
        for a in range(i + 1):
            for b in range(j + 1):
                w = (-1) ** (a + b) * comb(i, a) * comb(j, b)
                total += w * f(x + (mpmath.mpf(i) / 2 - a) * h, y + (mpmath.mpf(j) / 2 - b) * h)
        return float(total / h ** (i + j))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
