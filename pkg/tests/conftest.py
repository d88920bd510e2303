"""Shared pytest wiring: a recorder for the acceptance checklist."""

_acceptance_lines: list[str] = []


def record_criterion(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance checklist")
        for line in _acceptance_lines:
            terminalreporter.line(line)
