import numpy as np
import pytest

from confcal import LabeledSequence

_CRITERIA: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record an acceptance criterion's outcome for the terminal summary."""

    def record(name: str, ok: bool, detail: str = "") -> None:
        _CRITERIA[name] = (bool(ok), detail)
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda s: int(s.split()[0][2:])):
        ok, detail = _CRITERIA[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20181)


def seq(*pairs):
    return LabeledSequence.from_pairs(list(pairs))
