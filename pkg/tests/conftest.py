import time
from dataclasses import dataclass

import pytest

_LINES: list[str] = []


@dataclass
class Criterion:
    """Records one acceptance criterion's outcome and wall time."""

    label: str
    tolerance: str
    runtime_bound_s: float | None = None

    def __enter__(self):
        self._t0 = time.perf_counter()
        self.detail = ""
        self.passed = False
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.perf_counter() - self._t0
        ok = self.passed and exc_type is None
        if self.runtime_bound_s is not None:
            ok = ok and self.elapsed < self.runtime_bound_s
            bound = f" (runtime {self.elapsed:.2f} s, bound {self.runtime_bound_s:g} s)"
        else:
            bound = f" (runtime {self.elapsed:.2f} s)"
        line = f"{'PASS' if ok else 'FAIL'}  {self.label}: {self.detail}; tolerance {self.tolerance}{bound}"
        _LINES.append(line)
        print("\n" + line)
        self.ok = ok
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
