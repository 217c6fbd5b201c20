import contextlib
import os
import sys
import time

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the tracing kernels once so timed tests measure steady-state speed."""
    from truchet.dynamics import State, trace
    from truchet.montecarlo import MeasureSpec, closure_periods, estimate_p4_joint
    from truchet.sequences import Sequence

    trace(State(Sequence.constant(), Sequence.constant(), (1, 0)), 4)
    closure_periods(MeasureSpec(), 8, 4, 0)
    estimate_p4_joint(0.5, 0.5, 4, 0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """``with criterion(n, title) as notes:`` records one PASS/FAIL line for an acceptance criterion."""

    @contextlib.contextmanager
    def run(number: int, title: str):
        notes: list[str] = []
        start = time.perf_counter()
        try:
            yield notes
        except BaseException as exc:
            status, notes = "FAIL", notes + [f"{type(exc).__name__}: {exc}".splitlines()[0]]
            raise
        else:
            status = "PASS"
        finally:
            took = time.perf_counter() - start
            line = f"criterion {number}: {status} {title} ({took:.1f} s) " + "; ".join(notes)
            ACCEPTANCE_LINES.append(line.rstrip())
            print(line)

    return run
