import numpy as np
import pytest

# pass/fail registry filled by the acceptance suite and echoed at the end
# of the pytest run, one line per criterion
_ACCEPTANCE_LINES = []


def record_acceptance(criterion: str, passed: bool, detail: str = ""):
    _ACCEPTANCE_LINES.append((criterion, bool(passed), detail))


@pytest.fixture
def acceptance():
    def check(criterion, passed, detail=""):
        record_acceptance(criterion, passed, detail)
        assert passed, f"{criterion}: {detail}"
    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE_LINES:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {criterion}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250808)
