import numpy as np
import pytest

from qgreg.littlewood_paley import build_decomposition
from qgreg.spectral import get_grid, to_spectral


@pytest.fixture(scope="session")
def grid64():
    return get_grid(64)


@pytest.fixture(scope="session")
def grid128():
    return get_grid(128)


@pytest.fixture(scope="session")
def decomp128(grid128):
    return build_decomposition(grid128)


@pytest.fixture(scope="session")
def decomp256():
    return build_decomposition(get_grid(256))


def sample(grid, func):
    """Spectral field from a callable of the two coordinate arrays."""
    x1, x2 = grid.coords
    return to_spectral(func(x1, x2), grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line per acceptance criterion and assert it."""

    def record(number: int, title: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} :: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
