import numpy as np
import pytest

from lexforest.model import CoordinateDistribution, DataModel


def random_coordinate(rng: np.random.Generator, b: int, agree: tuple[float, float] = (0.3, 0.95)) -> CoordinateDistribution:
    """Random coordinate with ``p_j`` a random fraction of a random marginal."""
    marg = rng.dirichlet(np.full(b, 2.0))
    frac = rng.uniform(*agree, size=b)
    diag = marg * frac
    return CoordinateDistribution(tuple(diag), tuple(marg))


def random_model(rng: np.random.Generator, d: int, b=2, n0: int = 64, n1: int | None = None) -> DataModel:
    sizes = [b] * d if np.isscalar(b) else list(b)
    return DataModel(tuple(random_coordinate(rng, k) for k in sizes), n0, n0 if n1 is None else n1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion; the line is echoed in the summary."""

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
