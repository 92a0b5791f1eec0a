import pytest

from ququart_med import canonical_ensemble, default_calibration, paper_params

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def ens():
    return canonical_ensemble()


@pytest.fixture(scope="session")
def ideal():
    return default_calibration()


@pytest.fixture(scope="session")
def paper():
    return paper_params()


@pytest.fixture
def record():
    def _record(number, ok, detail):
        ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(ACCEPTANCE_LINES), key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
