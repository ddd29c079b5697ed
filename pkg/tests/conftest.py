import numpy as np
import pytest

from gasnet_wft import PressureLaw

# one line per acceptance criterion, repeated in the terminal summary
_ACCEPTANCE: list[str] = []


@pytest.fixture
def law():
    return PressureLaw(1.0, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance():
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        _ACCEPTANCE.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
