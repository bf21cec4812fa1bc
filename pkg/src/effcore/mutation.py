"""Deliberate breakage switches, used only by the harness self-test.

Each name disables one piece of one semantics so the conformance runner can
show that it notices.  Nothing outside the test-suite should turn these on.
"""

from contextlib import contextmanager

KNOWN = ("handle-op-lookup", "let-graft", "cps-op")

_active = set()


def active(name) -> bool:
    return name in _active


@contextmanager
def mutate(name):
    if name not in KNOWN:
        raise ValueError(f"unknown mutation {name!r}")
    _active.add(name)
    try:
        yield
    finally:
        _active.discard(name)
