import pytest
from hypothesis import settings

from climbsim.core import CacheState

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def seeded(policy, slots, **counters):
    """Replace a policy's cache contents (full capacity) and set counters."""
    policy.state = CacheState(policy.capacity, slots)
    for name, value in counters.items():
        setattr(policy, name, value)
    return policy


@pytest.fixture
def letters():
    return list("ABCDEFGH")


# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: (int(c.rstrip("ab")), c)):
        ok, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"criterion {cid:>3}: {'PASS' if ok else 'FAIL'}  {detail}")
