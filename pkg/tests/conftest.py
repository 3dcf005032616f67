import numpy as np
import pytest

from lindblad_egorov.phase_space import make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def grid64():
    return make_grid(64, 0.0, 4.0, 0.0, 1 / 16)


@pytest.fixture
def wide_grid():
    """Grid whose momentum window comfortably contains localized test symbols."""
    return make_grid(128, 0.0, 5.0, 0.0, 1 / 16)


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion and return the verdict."""
    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
