import itertools
import math

import numpy as np
import pytest

from conclab.streams import make_stream


@pytest.fixture
def rng(request):
    # one fixed stream per test, keyed by the test's name
    return make_stream(20261015, request.node.name)


def brute_force_selection_pmf(sums, eta):
    """The selection law straight from its definition, no log-space tricks."""
    w = [math.exp(0.5 * eta * s) for s in sums]
    c = sum(w)
    return [x / c for x in w]


def enumerate_bernoulli_matrices(n, m, p):
    """Yield (matrix, probability) for every n x m 0/1 matrix."""
    for bits in itertools.product((0, 1), repeat=n * m):
        x = np.array(bits, dtype=float).reshape(n, m)
        k = sum(bits)
        yield x, p**k * (1 - p) ** (n * m - k)


def binom_pmf_exact(n, k, p):
    return math.comb(n, k) * p**k * (1 - p) ** (n - k)


# -- acceptance summary ---------------------------------------------------------

ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: [int(t) if t.isdigit() else t for t in k.replace(".", " ").split()]):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
