import math

import hypothesis
import numpy as np
import pytest

np.seterr(all="warn")

hypothesis.settings.register_profile("ci", max_examples=40, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile("ci")


def richardson(g, t, h):
    """Fourth-order central difference of g at t."""
    d1 = (g(t + h) - g(t - h)) / (2 * h)
    d2 = (g(t + h / 2) - g(t - h / 2)) / h
    return (4 * d2 - d1) / 3


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE = {}


def record(key, ok, text):
    line = f"[{'PASS' if ok else 'FAIL'}] {key}: {text}"
    ACCEPTANCE[key] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
