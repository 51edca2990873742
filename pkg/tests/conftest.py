"""Shared pytest plumbing: surfaces acceptance verdict lines.

Default capture swallows test stdout, so the acceptance tests record
their PASS/FAIL lines here and a terminal-summary hook prints them once
the run finishes, where they are always visible.
"""

_VERDICTS: list[str] = []


def record_verdict(line: str) -> None:
    _VERDICTS.append(line)


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
