import pytest

from childq.scoring import Battery


@pytest.fixture(scope="session")
def battery():
    return Battery.load()


@pytest.fixture(scope="session")
def scene(battery):
    return battery.scene


def pytest_terminal_summary(terminalreporter):
    from .report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
