"""Shared pytest wiring: the acceptance-criteria summary section."""

# verdict lines appended by tests/test_acceptance.py, one per criterion
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
