import contextlib
import time

import numpy as np
import pytest

_VERDICTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class _Criterion:
    def __init__(self, number):
        self.number = number
        self.failures = []
        self.notes = []

    def check(self, ok, msg):
        if not ok:
            self.failures.append(msg)
        return ok

    def note(self, msg):
        self.notes.append(msg)


@contextlib.contextmanager
def criterion(number):
    """Collect checks for one acceptance criterion and print a single verdict line."""
    c = _Criterion(number)
    t0 = time.perf_counter()
    err = None
    try:
        yield c
    except Exception as exc:  # reported as FAIL, then re-raised
        err = exc
        c.failures.append(f"{type(exc).__name__}: {exc}")
    elapsed = time.perf_counter() - t0
    ok = not c.failures
    detail = "; ".join(c.failures[:5] if not ok else c.notes)
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f} s) {detail}".rstrip()
    _VERDICTS.append(line)
    print(line)
    if err is not None:
        raise err
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
