"""Shared sink for acceptance verdict lines.

test_acceptance.py records one line per criterion; conftest.py replays
them in the terminal summary so they are visible in a default pytest run.
"""

LINES = []


def record(line: str) -> None:
    LINES.append(line)
