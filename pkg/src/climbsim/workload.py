"""Synthetic request streams.

All generators draw from ``numpy.random.Generator(PCG64(seed))``; a stream
is a pure function of its spec, so replays are bit-identical on any
platform numpy supports.  Item keys are 1-based popularity ranks unless a
phase permutes or offsets them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .core import RequestRecord

DEFAULT_SEED = 20190603


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def zipf_probabilities(n: int, alpha: float) -> np.ndarray:
    """``p_i`` proportional to ``i ** -alpha`` for ranks ``1..n``."""
    if n < 2:
        raise ValueError(f"need at least 2 items, got {n}")
    if not alpha >= 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    w = np.arange(1, n + 1, dtype=float) ** -float(alpha)
    return w / w.sum()


@dataclass
class Trace:
    """Columnar request stream.

    ``phase_starts`` holds the 0-based request index at which each phase
    begins (empty for single-phase streams).
    """

    timestamps: np.ndarray
    keys: np.ndarray
    sizes: np.ndarray
    phase_starts: tuple[int, ...] = ()

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.uint64)
        self.keys = np.asarray(self.keys, dtype=np.uint64)
        self.sizes = np.asarray(self.sizes, dtype=np.uint64)
        if not len(self.timestamps) == len(self.keys) == len(self.sizes):
            raise ValueError("trace columns differ in length")
        if len(self.sizes) and int(self.sizes.min()) < 1:
            raise ValueError("object sizes must be >= 1")

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self) -> Iterator[RequestRecord]:
        for t, k, s in zip(self.timestamps.tolist(), self.keys.tolist(), self.sizes.tolist()):
            yield RequestRecord(t, k, s)

    def __getitem__(self, i: int) -> RequestRecord:
        return RequestRecord(int(self.timestamps[i]), int(self.keys[i]), int(self.sizes[i]))

    @classmethod
    def from_records(cls, records) -> "Trace":
        rows = [(r.timestamp, r.key, r.size) for r in records]
        if not rows:
            return cls(np.zeros(0), np.zeros(0), np.zeros(0))
        t, k, s = zip(*rows)
        return cls(np.array(t, dtype=np.uint64), np.array(k, dtype=np.uint64),
                   np.array(s, dtype=np.uint64))

    def distinct_keys(self) -> int:
        return int(np.unique(self.keys).size)

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.keys, other.keys)
                and np.array_equal(self.sizes, other.sizes)
                and self.phase_starts == other.phase_starts)


@dataclass(frozen=True)
class ZipfSpec:
    """Independent Zipf requests over ``n`` items.

    ``size`` is either a constant byte count or an inclusive ``(lo, hi)``
    range; with a range each item gets one log-uniform size for the whole
    stream.
    """

    n: int
    alpha: float
    length: int
    seed: int = DEFAULT_SEED
    size: int | tuple[int, int] = 1

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")
        if isinstance(self.size, tuple):
            lo, hi = self.size
            if not 1 <= lo <= hi:
                raise ValueError(f"bad size range {self.size}")
        elif self.size < 1:
            raise ValueError(f"size must be >= 1, got {self.size}")


def _item_sizes(spec: ZipfSpec, rng: np.random.Generator) -> np.ndarray:
    if not isinstance(spec.size, tuple):
        return np.full(spec.n, spec.size, dtype=np.uint64)
    lo, hi = spec.size
    draw = np.exp(rng.uniform(np.log(lo), np.log(hi + 1), size=spec.n))
    return np.clip(np.floor(draw), lo, hi).astype(np.uint64)


def sample_ranks(spec: ZipfSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """i.i.d. 0-based popularity ranks for ``spec``."""
    rng = rng_for(spec.seed) if rng is None else rng
    return rng.choice(spec.n, size=spec.length, p=zipf_probabilities(spec.n, spec.alpha))


def generate_ir_stream(spec: ZipfSpec) -> Trace:
    """Independent requests; keys are ranks ``1..n``, timestamps ``1..length``."""
    rng = rng_for(spec.seed)
    ranks = sample_ranks(spec, rng)
    sizes = _item_sizes(spec, rng)[ranks]
    return Trace(np.arange(1, spec.length + 1, dtype=np.uint64),
                 ranks.astype(np.uint64) + 1, sizes)


@dataclass(frozen=True)
class Phase:
    """One phase of a :class:`PhasePlan`.

    ``permutation_seed`` reshuffles which items own which popularity rank
    (``None`` keeps the identity); ``key_offset`` is added to every key so
    phases can use disjoint key ranges.
    """

    spec: ZipfSpec
    permutation_seed: int | None = None
    key_offset: int = 0


@dataclass(frozen=True)
class PhasePlan:
    phases: tuple[Phase, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        if not self.phases:
            raise ValueError("a phase plan needs at least one phase")

    @classmethod
    def repeated(cls, spec: ZipfSpec, count: int, *, disjoint: bool = False,
                 permute: bool = True) -> "PhasePlan":
        """``count`` phases sharing ``spec`` with per-phase seeds.

        Phase ``i`` draws with seed ``spec.seed + i``.  ``disjoint`` gives
        each phase its own key range; otherwise ranks are permuted.
        """
        phases = []
        for i in range(count):
            s = ZipfSpec(spec.n, spec.alpha, spec.length, spec.seed + i, spec.size)
            perm = (spec.seed + 7919 * (i + 1)) if permute and i > 0 and not disjoint else None
            phases.append(Phase(s, perm, i * spec.n if disjoint else 0))
        return cls(tuple(phases))


def generate_phase_stream(plan: PhasePlan) -> Trace:
    """Concatenate per-phase IR streams; timestamps run on across phases."""
    keys, sizes, starts = [], [], []
    offset = 0
    for phase in plan.phases:
        part = generate_ir_stream(phase.spec)
        k = part.keys.astype(np.int64) - 1
        if phase.permutation_seed is not None:
            perm = rng_for(phase.permutation_seed).permutation(phase.spec.n)
            k = perm[k]
        keys.append(k.astype(np.uint64) + 1 + np.uint64(phase.key_offset))
        sizes.append(part.sizes)
        starts.append(offset)
        offset += len(part)
    return Trace(np.arange(1, offset + 1, dtype=np.uint64), np.concatenate(keys),
                 np.concatenate(sizes), tuple(starts) if len(starts) > 1 else ())


def generate_loop_stream(n_keys: int, length: int, start_key: int = 1) -> Trace:
    """Cyclic scan over ``n_keys`` distinct keys; defeats any cache smaller
    than the loop."""
    if n_keys < 1 or length < 1:
        raise ValueError("n_keys and length must be positive")
    keys = (np.arange(length, dtype=np.uint64) % np.uint64(n_keys)) + np.uint64(start_key)
    return Trace(np.arange(1, length + 1, dtype=np.uint64), keys,
                 np.ones(length, dtype=np.uint64))


def generate_hot_cold_stream(hot: int, hot_mass: float, cold: int, length: int,
                             seed: int = DEFAULT_SEED) -> Trace:
    """Uniform hot set carrying ``hot_mass`` plus a uniform cold tail.

    Hot keys are ``1..hot``, cold keys ``hot+1..hot+cold``.
    """
    if not 0 < hot_mass <= 1 or hot < 1 or cold < 0 or length < 1:
        raise ValueError("bad hot/cold parameters")
    p = np.empty(hot + cold)
    p[:hot] = hot_mass / hot
    if cold:
        p[hot:] = (1 - hot_mass) / cold
    p /= p.sum()
    keys = rng_for(seed).choice(hot + cold, size=length, p=p).astype(np.uint64) + 1
    return Trace(np.arange(1, length + 1, dtype=np.uint64), keys,
                 np.ones(length, dtype=np.uint64))


def concat(traces: Sequence[Trace]) -> Trace:
    """Join traces end to end, recording where each one starts."""
    starts, offset = [], 0
    for t in traces:
        starts.append(offset)
        offset += len(t)
    return Trace(np.arange(1, offset + 1, dtype=np.uint64),
                 np.concatenate([t.keys for t in traces]),
                 np.concatenate([t.sizes for t in traces]),
                 tuple(starts) if len(starts) > 1 else ())
