"""DynamicAdaptiveClimb: AdaptiveClimb plus capacity doubling and halving."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ..core import Policy, PolicyName, PolicyOutcome


@dataclass(frozen=True)
class ResizeEvent:
    step: int
    kind: str  # "grow", "shrink", "grow-suppressed", "shrink-suppressed"
    old_capacity: int
    new_capacity: int
    dropped: int = 0


class DynamicAdaptiveClimb(Policy):
    """AdaptiveClimb with an unbounded-above ``jump`` and a resizable cache.

    ``jump`` may fall to ``-(K // 2)`` and rise without limit; reaching
    ``2 * K`` doubles the cache.  ``jump_prime`` (floor ``-(K // 2)``, cap 0)
    goes down on top-half hits and up on bottom-half hits and on misses.
    When ``jump`` sits at its floor and ``jump_prime`` has reached
    ``-ceil((K // 2) * epsilon)`` the cache halves, keeping its top half.

    Thresholds are tested with ``>=``/``<=`` so a counter that lands past the
    exact trigger value after a resize still fires.  A trigger that would
    leave ``[k_min, k_max]``, or halve an odd capacity, is suppressed and
    logged in :attr:`events`.
    """

    name = PolicyName.DYNAMIC_ADAPTIVE_CLIMB

    def __init__(self, capacity: int, epsilon=Fraction(1, 2), k_min: int | None = None,
                 k_max: int | None = None):
        super().__init__(capacity)
        epsilon = Fraction(epsilon)
        if not 0 < epsilon <= 1:
            raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
        k_min = max(2, capacity) if k_min is None else k_min
        k_max = 8 * capacity if k_max is None else k_max
        if not 2 <= k_min <= capacity <= k_max:
            raise ValueError(f"need 2 <= k_min <= capacity <= k_max, got "
                             f"{k_min}, {capacity}, {k_max}")
        self.initial_capacity = capacity
        self.epsilon = epsilon
        self.k_min = k_min
        self.k_max = k_max
        self.jump = capacity
        self.jump_prime = 0
        self.shrink_evictions = 0
        self.events: list[ResizeEvent] = []
        self.steps = 0
        self._last_suppressed: str | None = None
        self._thresholds: dict[int, int] = {}

    def shrink_threshold(self, capacity: int | None = None) -> int:
        """Value ``jump_prime`` must reach (or pass) for a halving."""
        k = self.state.capacity if capacity is None else capacity
        t = self._thresholds.get(k)
        if t is None:
            t = self._thresholds[k] = -math.ceil((k // 2) * self.epsilon)
        return t

    def access(self, key) -> PolicyOutcome:
        state = self.state
        self.steps += 1
        if key in state._resident:
            return self.on_hit(state.slots.index(key) + 1)
        return self.on_miss(key)

    def on_hit(self, i: int) -> PolicyOutcome:
        half = self.state.capacity // 2
        if self.jump > -half:
            self.jump -= 1
        if i <= half:
            if self.jump_prime > -half:
                self.jump_prime -= 1
        elif self.jump_prime < 0:
            self.jump_prime += 1
        shifts = 0
        if i > 1:
            actual = min(self.jump, i - 1)
            if actual < 1:
                actual = 1
            shifts = self.state.move(i, i - actual)
        self._resize_check()
        return PolicyOutcome(True, i, None, shifts, self.telemetry())

    def on_miss(self, key) -> PolicyOutcome:
        state = self.state
        k = state.capacity
        self.jump += 1
        if self.jump_prime < 0:
            self.jump_prime += 1
        evicted = state.evict_last() if len(state.slots) >= k else None
        actual = min(k - 1, self.jump)
        if actual < 1:
            actual = 1
        shifts = state.insert(key, k - actual + 1)
        self._resize_check()
        return PolicyOutcome(False, None, evicted, shifts, self.telemetry())

    def _resize_check(self) -> None:
        if self.jump == 0:
            self.jump_prime = 0
        k = self.state.capacity
        if self.jump >= 2 * k:
            if 2 * k <= self.k_max:
                self.state.capacity = 2 * k
                self.events.append(ResizeEvent(self.steps, "grow", k, 2 * k))
                self._last_suppressed = None
                k = 2 * k
            else:
                self._suppressed("grow-suppressed", k)
        half = k // 2
        if self.jump <= -half and self.jump_prime <= self.shrink_threshold(k):
            new_k = k // 2
            if k % 2 == 0 and new_k >= self.k_min:
                dropped = self.state.truncate(new_k)
                self.shrink_evictions += len(dropped)
                self.events.append(ResizeEvent(self.steps, "shrink", k, new_k, len(dropped)))
                self.jump = -(new_k // 2)
                self.jump_prime = 0
                self._last_suppressed = None
            else:
                self._suppressed("shrink-suppressed", k)

    def _suppressed(self, kind: str, k: int) -> None:
        # log a suppressed trigger once per run of identical triggers
        if self._last_suppressed != kind:
            self.events.append(ResizeEvent(self.steps, kind, k, k))
            self._last_suppressed = kind

    @property
    def resizes(self) -> list[ResizeEvent]:
        return [e for e in self.events if e.kind in ("grow", "shrink")]

    def telemetry(self):
        return {"jump": self.jump, "jump_prime": self.jump_prime,
                "capacity": self.state.capacity}

    def check(self) -> None:
        super().check()
        half = self.capacity // 2
        assert -half <= self.jump_prime <= 0, (self.jump_prime, half)
        assert self.jump >= -half, (self.jump, half)
        assert self.k_min <= self.capacity <= self.k_max
        ratio = Fraction(self.capacity, self.initial_capacity)
        assert ratio.numerator & (ratio.numerator - 1) == 0
        assert ratio.denominator & (ratio.denominator - 1) == 0
