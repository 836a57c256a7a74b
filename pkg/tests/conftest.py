import pytest

from slowfast.analysis.crossings import crossing_sequences, simulate_strip

STRIP_EPS = 0.01
STRIP_CROSSINGS = 20


@pytest.fixture(scope="session")
def strip_run():
    """Strip orbit from (0.5, 0) at eps = 0.01, twenty x = 0 crossings."""
    return simulate_strip(0.5, 0.0, STRIP_EPS, n_crossings=STRIP_CROSSINGS)


@pytest.fixture(scope="session")
def strip_report(strip_run):
    return crossing_sequences(strip_run, STRIP_EPS)


@pytest.fixture(scope="session")
def mirror_report():
    traj = simulate_strip(-0.5, 0.0, STRIP_EPS, n_crossings=STRIP_CROSSINGS)
    return crossing_sequences(traj, STRIP_EPS)


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; returns the flag."""

    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {title}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
