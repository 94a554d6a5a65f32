"""Shared oracles for the test suite."""

from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest


def brute_nvg(y) -> set[tuple[int, int]]:
    """Natural visibility by the direct criterion in exact rational arithmetic."""
    v = [Fraction(float(x)) for x in y]
    edges = set()
    for a, b in combinations(range(len(v)), 2):
        if all(v[c] < v[b] + (v[a] - v[b]) * Fraction(b - c, b - a) for c in range(a + 1, b)):
            edges.add((a, b))
    return edges


def brute_hvg(y) -> set[tuple[int, int]]:
    edges = set()
    for a, b in combinations(range(len(y)), 2):
        if all(y[c] < min(y[a], y[b]) for c in range(a + 1, b)):
            edges.add((a, b))
    return edges


def random_walk(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.cumsum(rng.standard_normal(n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
