import numpy as np
import pytest

from pseudopost.experiments import oracle_model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def lg_model():
    return oracle_model(hetero=0.3)


ACCEPTANCE_RESULTS: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_RESULTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
