import os
import time
from contextlib import contextmanager

import hypothesis
import pytest

hypothesis.settings.register_profile("ci", deadline=None, max_examples=100)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def criterion(request):
    """Context manager that records one PASS/FAIL line per acceptance criterion."""
    lines = request.config._acceptance_lines

    @contextmanager
    def check(number, title):
        rec = {"detail": ""}
        t0 = time.perf_counter()
        try:
            yield rec
        except BaseException as exc:
            msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            line = f"criterion {number} FAIL  {title}: {msg} ({time.perf_counter() - t0:.2f}s)"
            lines.append(line)
            print(line)
            raise
        line = f"criterion {number} PASS  {title}: {rec['detail']} ({time.perf_counter() - t0:.2f}s)"
        lines.append(line)
        print(line)
    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
