import contextlib
import time

import pytest

ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion's outcome for the terminal summary."""

    @contextlib.contextmanager
    def record(name):
        start = time.perf_counter()
        try:
            yield
        except BaseException:
            ACCEPTANCE.append((name, False, time.perf_counter() - start))
            raise
        ACCEPTANCE.append((name, True, time.perf_counter() - start))

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, elapsed in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  ({elapsed:.1f}s)")
