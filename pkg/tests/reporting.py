"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

import time
from contextlib import contextmanager

RESULTS = {}


@contextmanager
def criterion(number, title, limit_seconds=None):
    """Time the block and record its outcome; a runtime over ``limit_seconds`` fails it."""
    notes = []
    start = time.perf_counter()
    status, error = "PASS", None
    try:
        yield notes
        elapsed = time.perf_counter() - start
        if limit_seconds is not None and elapsed >= limit_seconds:
            raise AssertionError(f"took {elapsed:.2f} s, limit {limit_seconds} s")
    except BaseException as exc:
        status, error = "FAIL", exc
        raise
    finally:
        elapsed = time.perf_counter() - start
        budget = f" (limit {limit_seconds} s)" if limit_seconds is not None else ""
        detail = "; ".join(notes)
        if error is not None:
            detail = f"{detail}; {type(error).__name__}: {error}".lstrip("; ")
        line = f"{status} [{number:>2}] {title}: {elapsed:.2f} s{budget}" + (f" | {detail}" if detail else "")
        RESULTS[number] = line
        print(line)
