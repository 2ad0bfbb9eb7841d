import pytest

from heatpert.numerics import RngStream


@pytest.fixture
def rng():
    return RngStream(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion."""
    def record(number, passed, runtime, detail):
        line = f"acceptance {number:>2}: {'PASS' if passed else 'FAIL'} ({runtime:.2f} s) {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
