"""AdaptiveClimb: promotion distance driven by a single hit/miss counter."""

from __future__ import annotations

from ..core import Policy, PolicyName, PolicyOutcome


class AdaptiveClimb(Policy):
    """Cache whose promotion distance ``jump`` tracks recent hits and misses.

    ``jump`` starts at K.  Each hit lowers it by one (floor 1) before the hit
    item is moved up ``jump`` slots; each miss raises it by one (cap K)
    before the new key is inserted at position ``K - jump + 1``.  With
    ``jump == K`` the policy behaves like LRU, with ``jump == 1`` like
    CLIMB.

    A hit target above the top is clamped to position 1.

    >>> ac = AdaptiveClimb(3)
    >>> [ac.access(k).hit for k in "abca"]
    [False, False, False, True]
    >>> ac.slots, ac.jump
    (['a', 'c', 'b'], 2)
    """

    name = PolicyName.ADAPTIVE_CLIMB

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.jump = capacity

    def access(self, key) -> PolicyOutcome:
        state = self.state
        slots = state.slots
        if key in state._resident:
            return self.on_hit(slots.index(key) + 1)
        return self.on_miss(key)

    def on_hit(self, i: int) -> PolicyOutcome:
        if self.jump > 1:
            self.jump -= 1
        shifts = 0
        if i > 1:
            target = i - self.jump
            if target < 1:
                target = 1
            shifts = self.state.move(i, target)
        return PolicyOutcome(True, i, None, shifts, {"jump": self.jump})

    def on_miss(self, key) -> PolicyOutcome:
        state = self.state
        k = state.capacity
        if self.jump < k:
            self.jump += 1
        evicted = state.evict_last() if len(state.slots) >= k else None
        shifts = state.insert(key, k - self.jump + 1)
        return PolicyOutcome(False, None, evicted, shifts, {"jump": self.jump})

    def telemetry(self):
        return {"jump": self.jump}

    def check(self) -> None:
        super().check()
        assert 1 <= self.jump <= self.capacity, self.jump
