from contextlib import contextmanager
from pathlib import Path

import pytest

from dualstore.history import load_history

DATA = Path(__file__).parent / "data"

_acceptance = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_acceptance] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_acceptance, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


class _Outcome:
    detail = ""


@pytest.fixture
def criterion(request):
    """Context manager that logs one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash[_acceptance]

    @contextmanager
    def check(number, title):
        outcome = _Outcome()
        try:
            yield outcome
        except BaseException as exc:
            reason = outcome.detail or f"{type(exc).__name__}: {exc}".splitlines()[0]
            line = f"[{number}] FAIL {title}: {reason}"
            lines.append(line)
            print(line)
            raise
        line = f"[{number}] PASS {title}" + (f": {outcome.detail}" if outcome.detail else "")
        lines.append(line)
        print(line)

    return check


@pytest.fixture
def worked():
    return load_history(DATA / "worked.jsonl")


@pytest.fixture
def worked_ct5():
    return load_history(DATA / "worked_ct5.jsonl")
