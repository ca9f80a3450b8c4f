"""Shared pytest plumbing: the acceptance report printed after the run."""

ACCEPTANCE_LINES = []


def record_acceptance(number, label, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    ACCEPTANCE_LINES.append((number, f"[{status}] criterion {number}: "
                                     f"{label}{suffix}"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
