"""Shared domain types and the policy contract.

Positions are 1-based everywhere in the public API: position 1 is the top
of the cache.  Internally slots live in a plain Python list, so slot
``i`` is ``slots[i - 1]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Hashable, Iterable, Mapping

U32_MAX = 2**32 - 1
U64_MAX = 2**64 - 1

NO_TELEMETRY: Mapping[str, int] = MappingProxyType({})


@dataclass(frozen=True, slots=True)
class RequestRecord:
    """One trace event."""

    timestamp: int
    key: int
    size: int = 1

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be non-negative, got {self.timestamp}")
        if not 0 <= self.key <= U64_MAX:
            raise ValueError(f"key out of unsigned 64-bit range: {self.key}")
        if not 1 <= self.size <= U32_MAX:
            raise ValueError(f"size must be in [1, 2**32 - 1], got {self.size}")


class CacheState:
    """Ordered slot list with membership lookup.

    ``slots[0]`` is position 1.  Positions are recovered with a C-level
    list scan instead of a maintained key->position dict: keeping a dict in
    sync costs one Python-level update per displaced item, which dominates
    the run time of LRU-style moves on large caches.
    """

    __slots__ = ("slots", "capacity", "_resident")

    def __init__(self, capacity: int, slots: Iterable[Hashable] = ()):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.slots: list = list(slots)
        self._resident = set(self.slots)
        if len(self._resident) != len(self.slots):
            raise ValueError("duplicate keys in initial slots")
        if len(self.slots) > capacity:
            raise ValueError("more initial slots than capacity")

    @property
    def occupancy(self) -> int:
        return len(self.slots)

    @property
    def full(self) -> bool:
        return len(self.slots) >= self.capacity

    def __contains__(self, key) -> bool:
        return key in self._resident

    def __len__(self) -> int:
        return len(self.slots)

    def __iter__(self):
        return iter(self.slots)

    def __repr__(self) -> str:
        return f"CacheState(capacity={self.capacity}, slots={self.slots!r})"

    def position(self, key) -> int:
        """1-based position of a resident key; ``KeyError`` if absent."""
        if key not in self._resident:
            raise KeyError(key)
        return self.slots.index(key) + 1

    @property
    def index(self) -> dict:
        """Key -> position map built from the current slot order."""
        return {k: i for i, k in enumerate(self.slots, start=1)}

    def key_at(self, position: int):
        return self.slots[position - 1]

    # -- mutation helpers; callers keep ``slots`` and ``_resident`` in sync --

    def move(self, src: int, dst: int) -> int:
        """Move the item at ``src`` up to ``dst`` (dst <= src).

        Items in [dst, src - 1] shift down one slot.  Returns the number of
        displaced items.
        """
        if dst >= src:
            return 0
        slots = self.slots
        slots.insert(dst - 1, slots.pop(src - 1))
        return src - dst

    def evict_last(self):
        key = self.slots.pop()
        self._resident.discard(key)
        return key

    def remove_at(self, position: int):
        key = self.slots.pop(position - 1)
        self._resident.discard(key)
        return key

    def insert(self, key, position: int) -> int:
        """Insert ``key`` at ``position``, clamped to occupancy + 1.

        Returns the number of items shifted down to make room.
        """
        n = len(self.slots)
        if position > n + 1:
            position = n + 1
        self.slots.insert(position - 1, key)
        self._resident.add(key)
        return n - position + 1

    def replace_at(self, position: int, key):
        old = self.slots[position - 1]
        self._resident.discard(old)
        self.slots[position - 1] = key
        self._resident.add(key)
        return old

    def truncate(self, new_capacity: int) -> list:
        """Shrink capacity, dropping everything below ``new_capacity``."""
        dropped = self.slots[new_capacity:]
        del self.slots[new_capacity:]
        self._resident.difference_update(dropped)
        self.capacity = new_capacity
        return dropped

    def check(self) -> None:
        """Raise ``AssertionError`` if any structural invariant is broken."""
        assert len(set(self.slots)) == len(self.slots), "duplicate keys"
        assert set(self.slots) == self._resident, "membership out of sync"
        assert len(self.slots) <= self.capacity, "occupancy exceeds capacity"
        index = self.index
        for pos, key in enumerate(self.slots, start=1):
            assert index[key] == pos


class PolicyOutcome:
    """Result of serving one request."""

    __slots__ = ("hit", "position", "evicted", "shifts", "telemetry")

    def __init__(self, hit: bool, position: int | None = None, evicted=None,
                 shifts: int = 0, telemetry: Mapping[str, int] = NO_TELEMETRY):
        self.hit = hit
        self.position = position
        self.evicted = evicted
        self.shifts = shifts
        self.telemetry = telemetry

    def __eq__(self, other):
        if not isinstance(other, PolicyOutcome):
            return NotImplemented
        return self.as_tuple() == other.as_tuple()

    def __hash__(self):
        return hash(self.as_tuple())

    def as_tuple(self):
        return (self.hit, self.position, self.evicted, self.shifts,
                tuple(sorted(self.telemetry.items())))

    def __repr__(self) -> str:
        parts = [f"hit={self.hit}"]
        if self.position is not None:
            parts.append(f"position={self.position}")
        if self.evicted is not None:
            parts.append(f"evicted={self.evicted!r}")
        parts.append(f"shifts={self.shifts}")
        if self.telemetry:
            parts.append(f"telemetry={dict(self.telemetry)}")
        return f"PolicyOutcome({', '.join(parts)})"


class PolicyName(str, enum.Enum):
    FIFO = "FIFO"
    LRU = "LRU"
    CLIMB = "CLIMB"
    LFU = "LFU"
    CLOCK = "CLOCK"
    SIEVE = "SIEVE"
    ADAPTIVE_CLIMB = "AdaptiveClimb"
    DYNAMIC_ADAPTIVE_CLIMB = "DynamicAdaptiveClimb"

    @classmethod
    def parse(cls, text: str) -> "PolicyName":
        wanted = text.replace("-", "").replace("_", "").lower()
        for member in cls:
            if member.value.lower() == wanted:
                return member
        aliases = {"ac": cls.ADAPTIVE_CLIMB, "dac": cls.DYNAMIC_ADAPTIVE_CLIMB}
        if wanted in aliases:
            return aliases[wanted]
        raise ValueError(f"unknown policy {text!r}; choose from "
                         + ", ".join(m.value for m in cls))

    def __str__(self) -> str:
        return self.value


DEFAULT_EPSILON = Fraction(1, 2)


@dataclass(frozen=True)
class PolicyConfig:
    """Which policy to run and with what parameters.

    ``epsilon``, ``k_min`` and ``k_max`` only apply to DynamicAdaptiveClimb.
    When left as ``None`` they resolve to 1/2, ``K`` and ``8 * K``: by
    default the configured capacity is a floor the cache may grow from but
    never shrink below.  Pass ``k_min`` explicitly to allow halving.
    """

    policy: PolicyName
    capacity: int
    epsilon: Fraction | None = None
    k_min: int | None = None
    k_max: int | None = None

    def __post_init__(self):
        if not isinstance(self.policy, PolicyName):
            object.__setattr__(self, "policy", PolicyName.parse(self.policy))
        if self.capacity < 1:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        dynamic = self.policy is PolicyName.DYNAMIC_ADAPTIVE_CLIMB
        if not dynamic:
            if any(v is not None for v in (self.epsilon, self.k_min, self.k_max)):
                raise ValueError(f"epsilon/k_min/k_max are only valid for "
                                 f"{PolicyName.DYNAMIC_ADAPTIVE_CLIMB}, not {self.policy}")
            return
        eps = Fraction(DEFAULT_EPSILON if self.epsilon is None else self.epsilon).limit_denominator(10**6)
        if not 0 < eps <= 1:
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")
        k_min = max(2, self.capacity) if self.k_min is None else self.k_min
        k_max = 8 * self.capacity if self.k_max is None else self.k_max
        if k_min < 2:
            raise ValueError(f"k_min must be >= 2, got {k_min}")
        if not k_min <= self.capacity <= k_max:
            raise ValueError(f"need k_min <= capacity <= k_max, got "
                             f"{k_min} <= {self.capacity} <= {k_max}")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "k_min", k_min)
        object.__setattr__(self, "k_max", k_max)

    def as_dict(self) -> dict:
        out = {"policy": self.policy.value, "capacity": self.capacity}
        if self.policy is PolicyName.DYNAMIC_ADAPTIVE_CLIMB:
            out.update(epsilon=str(self.epsilon), k_min=self.k_min, k_max=self.k_max)
        return out


class Policy:
    """Base class for eviction policies.

    Subclasses implement :meth:`access`.  A policy instance owns its
    :class:`CacheState` and any private counters; it is not thread-safe.
    """

    name: PolicyName

    def __init__(self, capacity: int):
        self.state = CacheState(capacity)

    @property
    def capacity(self) -> int:
        return self.state.capacity

    def access(self, key) -> PolicyOutcome:
        raise NotImplementedError

    def on_request(self, request: RequestRecord) -> PolicyOutcome:
        return self.access(request.key)

    def telemetry(self) -> Mapping[str, int]:
        return NO_TELEMETRY

    def check(self) -> None:
        self.state.check()

    def __contains__(self, key) -> bool:
        return key in self.state

    @property
    def slots(self) -> list:
        return list(self.state.slots)
