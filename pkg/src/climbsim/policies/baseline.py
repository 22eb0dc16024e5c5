"""Classical reference policies: FIFO, LRU, CLIMB, LFU, CLOCK and SIEVE.

FIFO and LRU insert at position 1 and evict from position K.  CLIMB
inserts at position K and promotes by one slot per hit.  LFU and CLOCK
keep slot positions fixed and overwrite the victim in place.  SIEVE keeps
a queue (newest at position 1) and a hand that walks from the tail toward
the head.
"""

from __future__ import annotations

import heapq

from ..core import CacheState, Policy, PolicyName, PolicyOutcome


class FIFO(Policy):
    name = PolicyName.FIFO

    def __init__(self, capacity: int):
        super().__init__(capacity)
        # position of a key = inserts since it went in; evictions only
        # ever take the oldest key, so this stays exact.
        self._seq: dict = {}
        self._inserted = 0

    def access(self, key) -> PolicyOutcome:
        state = self.state
        if key in state._resident:
            return PolicyOutcome(True, self._inserted - self._seq[key])
        evicted = None
        if len(state.slots) >= state.capacity:
            evicted = state.evict_last()
            del self._seq[evicted]
        shifts = state.insert(key, 1)
        self._seq[key] = self._inserted
        self._inserted += 1
        return PolicyOutcome(False, None, evicted, shifts)


class LRU(Policy):
    name = PolicyName.LRU

    def access(self, key) -> PolicyOutcome:
        state = self.state
        slots = state.slots
        if key in state._resident:
            i = slots.index(key)
            if i:
                del slots[i]
                slots.insert(0, key)
            return PolicyOutcome(True, i + 1, None, i)
        evicted = state.evict_last() if len(slots) >= state.capacity else None
        shifts = state.insert(key, 1)
        return PolicyOutcome(False, None, evicted, shifts)


class CLIMB(Policy):
    name = PolicyName.CLIMB

    def access(self, key) -> PolicyOutcome:
        state = self.state
        slots = state.slots
        if key in state._resident:
            i = slots.index(key)
            if i:
                slots[i - 1], slots[i] = slots[i], slots[i - 1]
                return PolicyOutcome(True, i + 1, None, 1)
            return PolicyOutcome(True, 1)
        if len(slots) >= state.capacity:
            evicted = state.replace_at(len(slots), key)
            return PolicyOutcome(False, None, evicted, 0)
        state.insert(key, len(slots) + 1)
        return PolicyOutcome(False)


class LFU(Policy):
    """Evicts the resident key with the fewest requests.

    Ties go to the key inserted longest ago.  A binary heap with lazy
    deletion keeps victim selection at O(log K) amortised.
    """

    name = PolicyName.LFU

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.counts: dict = {}
        self._born: dict = {}
        self._pos: dict = {}
        self._heap: list = []
        self._clock = 0

    def access(self, key) -> PolicyOutcome:
        state = self.state
        counts = self.counts
        if key in counts:
            c = counts[key] + 1
            counts[key] = c
            heapq.heappush(self._heap, (c, self._born[key], key))
            if len(self._heap) > 4 * state.capacity + 64:
                self._compact()
            return PolicyOutcome(True, self._pos[key])
        self._clock += 1
        evicted = None
        if len(state.slots) >= state.capacity:
            evicted = self._pop_victim()
            pos = self._pos.pop(evicted)
            del counts[evicted], self._born[evicted]
            state.replace_at(pos, key)
        else:
            state.insert(key, len(state.slots) + 1)
            pos = len(state.slots)
        counts[key] = 1
        self._born[key] = self._clock
        self._pos[key] = pos
        heapq.heappush(self._heap, (1, self._clock, key))
        return PolicyOutcome(False, None, evicted, 0)

    def _pop_victim(self):
        heap = self._heap
        counts, born = self.counts, self._born
        while True:
            c, b, key = heapq.heappop(heap)
            if counts.get(key) == c and born[key] == b:
                return key

    def _compact(self):
        self._heap = [(c, self._born[k], k) for k, c in self.counts.items()]
        heapq.heapify(self._heap)

    def check(self) -> None:
        super().check()
        assert set(self.counts) == set(self.state.slots)
        assert all(c >= 1 for c in self.counts.values())
        assert all(self.state.key_at(p) == k for k, p in self._pos.items())


class CLOCK(Policy):
    """Second-chance clock over a fixed ring of K slots."""

    name = PolicyName.CLOCK

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.visited: list[bool] = []
        self.hand = 0
        self._pos: dict = {}

    def access(self, key) -> PolicyOutcome:
        state = self.state
        pos = self._pos.get(key)
        if pos is not None:
            self.visited[pos - 1] = True
            return PolicyOutcome(True, pos)
        slots = state.slots
        if len(slots) < state.capacity:
            state.insert(key, len(slots) + 1)
            self.visited.append(False)
            self._pos[key] = len(slots)
            return PolicyOutcome(False)
        visited = self.visited
        hand = self.hand
        k = state.capacity
        while visited[hand]:
            visited[hand] = False
            hand = (hand + 1) % k
        evicted = state.replace_at(hand + 1, key)
        del self._pos[evicted]
        self._pos[key] = hand + 1
        self.hand = (hand + 1) % k
        return PolicyOutcome(False, None, evicted, 0)

    def check(self) -> None:
        super().check()
        assert len(self.visited) == len(self.state.slots)
        if self.state.slots:
            assert 0 <= self.hand < len(self.state.slots)


class SIEVE(Policy):
    """SIEVE: lazy promotion via a visited bit, eviction by a moving hand.

    Slot order is the insertion queue: position 1 is the newest object.
    The hand starts at the tail and moves toward the head; it remembers
    its place between evictions.
    """

    name = PolicyName.SIEVE

    def __init__(self, capacity: int):
        super().__init__(capacity)
        self.visited: dict = {}
        self.hand: int | None = None  # 0-based slot index, None = tail

    def access(self, key) -> PolicyOutcome:
        state = self.state
        visited = self.visited
        if key in visited:
            visited[key] = True
            return PolicyOutcome(True, state.slots.index(key) + 1)
        slots = state.slots
        evicted = None
        shifts = 0
        if len(slots) >= state.capacity:
            h = len(slots) - 1 if self.hand is None else self.hand
            while visited[slots[h]]:
                visited[slots[h]] = False
                h = h - 1 if h > 0 else len(slots) - 1
            evicted = state.remove_at(h + 1)
            del visited[evicted]
            shifts = len(slots) - h
            self.hand = h - 1 if h > 0 else None
        shifts += state.insert(key, 1)
        visited[key] = False
        if self.hand is not None:
            self.hand += 1
        return PolicyOutcome(False, None, evicted, shifts)

    def check(self) -> None:
        super().check()
        assert set(self.visited) == set(self.state.slots)
        if self.hand is not None:
            assert 0 <= self.hand < len(self.state.slots)
