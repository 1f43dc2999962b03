import itertools

import numpy as np
import pytest


def brute_prefix(field):
    """Reference S_n = sum_{k <= n} f_k by direct enumeration."""
    out = np.zeros(field.shape, dtype=np.result_type(field, np.int64))
    for n in np.ndindex(field.shape):
        out[n] = field[tuple(slice(0, c + 1) for c in n)].sum()
    return out


def brute_increment(field):
    """Reference Delta[f] by the 2^r-term alternating sum with zero extension."""
    r = field.ndim
    out = np.zeros(field.shape, dtype=np.result_type(field, np.int64))
    for n in np.ndindex(field.shape):
        total = 0
        for m in itertools.product((0, 1), repeat=r):
            k = tuple(c - d for c, d in zip(n, m))
            if min(k) < 0:
                continue
            total += (-1) ** sum(m) * field[k]
        out[n] = total
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# criterion number -> "PASS ..." / "FAIL ..." line, filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
