import numpy as np
import pytest

from lpsobolev.harness import random_pwa, random_polytope


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def polygon(rng):
    return random_polytope(2, rng)


@pytest.fixture
def polytope3(rng):
    return random_polytope(3, rng)


@pytest.fixture
def pwa2(rng):
    return random_pwa(2, rng)


ACCEPTANCE = {}


@pytest.fixture
def acceptance(request):
    """Record ``(ok, detail)`` for an acceptance criterion of the calling test."""

    def record(number, title, ok, detail):
        ACCEPTANCE[number] = (title, bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}: {detail}")
