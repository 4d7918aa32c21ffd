import contextlib
import time

import pytest

# one (criterion, status, detail) per acceptance check, printed at the end
ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Context manager that records a pass/fail line for an acceptance check."""

    @contextlib.contextmanager
    def record(number, title):
        t0 = time.perf_counter()
        details = []
        try:
            yield details
        except BaseException as exc:
            msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            ACCEPTANCE_LINES.append((number, "FAIL", title, f"{msg} [{time.perf_counter() - t0:.1f}s]"))
            raise
        detail = "; ".join(details)
        ACCEPTANCE_LINES.append((number, "PASS", title, f"{detail} [{time.perf_counter() - t0:.1f}s]"))

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, title, detail in sorted(ACCEPTANCE_LINES, key=lambda r: (r[0], r[2])):
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} -- {detail}")
