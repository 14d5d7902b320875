import numpy as np
import pytest

from crt_armor.modular import validate_system


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def system_w():
    """N=1, delta=1, Gamma=4, M=[3,5,7,11], K=2."""
    return validate_system(1, 1, [3, 5, 7, 11], 2)


@pytest.fixture
def system_n2():
    """The N=2, K=4, L=6 protocol system with a folding range small enough for uniqueness."""
    return validate_system(2, 4, [3, 5, 7, 11, 13, 17], 4, q_range=60)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion and assert it."""
    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
