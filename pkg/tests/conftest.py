from pathlib import Path

import numpy as np
import pytest

from mobnet.netcore import CountryRegistry


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_registry():
    return CountryRegistry.from_rows([
        ("FR", 67_000_000, 46.6, 2.2),
        ("DE", 83_000_000, 51.1, 10.4),
        ("IT", 59_000_000, 42.8, 12.6),
        ("US", 330_000_000, 39.8, -98.6),
        ("MX", 126_000_000, 23.6, -102.5),
        ("GB", 67_000_000, 54.0, -2.0),
        ("IN", 1_380_000_000, 21.0, 78.0),
        ("CN", 1_400_000_000, 35.0, 103.0),
    ])


def write_lines(path: Path, rows) -> Path:
    path.write_text("".join(",".join(str(x) for x in row) + "\n" for row in rows), encoding="utf-8")
    return path


# acceptance criteria report one verdict line each; collected here and printed
# in the terminal summary so they survive output capturing
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
