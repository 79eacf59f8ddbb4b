import numpy as np
import pytest

from riskeygen.params import TABLE1, validate


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def table1():
    return TABLE1


def three_sigma(mean, expected, std, n):
    """|mean - expected| within three standard errors."""
    return abs(mean - expected) <= 3 * std / np.sqrt(n)


def derived_of(params):
    return validate(params)


def excess_kurtosis(x):
    x = np.asarray(x) - np.mean(x)
    return np.mean(x**4) / np.mean(x**2) ** 2 - 3.0


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance check; returns the verdict."""

    def record(name, passed, detail):
        _ACCEPTANCE.append((name, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
