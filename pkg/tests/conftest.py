import itertools

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def loop_normal_curvature_norm2(A):
    """|R_perp|^2 by explicit index loops over a single (n, n, m) array."""
    n, _, m = A.shape
    total = 0.0
    for i, j, a, b in itertools.product(range(n), range(n), range(m), range(m)):
        r = sum(A[i, k, a] * A[j, k, b] - A[j, k, a] * A[i, k, b] for k in range(n))
        total += r * r
    return total


def loop_reaction_lhs(A, c0):
    """c0 |<A,H>|^2 - |<A,A>|^2 - |R_perp|^2 with nested loops."""
    n, _, m = A.shape
    H = [sum(A[i, i, a] for i in range(n)) for a in range(m)]
    AH = sum(
        sum(A[i, j, a] * H[a] for a in range(m)) ** 2
        for i, j in itertools.product(range(n), range(n))
    )
    AA = sum(
        sum(A[i, j, a] * A[k, l, a] for a in range(m)) ** 2
        for i, j, k, l in itertools.product(range(n), repeat=4)
    )
    return c0 * AH - AA - loop_normal_curvature_norm2(A)


# ------------------------------------------------------- acceptance reporting

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, [title, True])
    entry[1] = entry[1] and not rep.failed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}")
