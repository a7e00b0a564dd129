"""Shared pytest wiring.

The acceptance suite registers one verdict line per criterion; printing
them from the terminal-summary hook keeps them visible even though pytest
captures stdout of passing tests.
"""

acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not acceptance_lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in acceptance_lines:
        terminalreporter.write_line(line)
