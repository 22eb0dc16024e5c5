"""Simulation driver and metrics.

:func:`simulate` replays a workload through one policy and returns a
:class:`RunReport`.  :func:`sweep` runs a grid of policies over a
capacity or skew axis, always including FIFO so every row can carry its
miss-ratio reduction (MRR) against FIFO.  :func:`emit_report` renders a
collection as an aligned text table, CSV rows or JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import PolicyConfig, PolicyName, PolicyOutcome, RequestRecord
from .policies import DynamicAdaptiveClimb, Policy, ResizeEvent, make_policy
from .workload import Trace, ZipfSpec, generate_ir_stream

TRAJECTORY_POINTS = 10_000
RECOVERY_WINDOW = 10_000


class UndefinedMRRError(ValueError):
    pass


@dataclass
class RunReport:
    config: PolicyConfig
    workload: dict
    requests: int = 0
    hits: int = 0
    misses: int = 0
    bytes_requested: int = 0
    bytes_missed: int = 0
    total_shifts: int = 0
    shrink_evictions: int = 0
    final_capacity: int = 0
    sample_every: int = 1
    trajectory: dict[str, list[int]] = field(default_factory=dict)
    resize_events: list[ResizeEvent] = field(default_factory=list)
    hit_series: np.ndarray | None = field(default=None, repr=False)
    jump_series: np.ndarray | None = field(default=None, repr=False)

    @property
    def miss_ratio(self) -> float:
        return self.misses / self.requests if self.requests else 0.0

    @property
    def hit_ratio(self) -> float:
        return self.hits / self.requests if self.requests else 0.0

    @property
    def byte_miss_ratio(self) -> float:
        return self.bytes_missed / self.bytes_requested if self.bytes_requested else 0.0

    @property
    def shifts_per_request(self) -> float:
        return self.total_shifts / self.requests if self.requests else 0.0

    @property
    def policy(self) -> PolicyName:
        return self.config.policy

    def check(self) -> None:
        assert self.hits + self.misses == self.requests
        assert self.bytes_missed <= self.bytes_requested

    def to_dict(self) -> dict:
        return {
            "config": self.config.as_dict(),
            "workload": self.workload,
            "requests": self.requests,
            "hits": self.hits,
            "misses": self.misses,
            "bytes_requested": self.bytes_requested,
            "bytes_missed": self.bytes_missed,
            "miss_ratio": self.miss_ratio,
            "hit_ratio": self.hit_ratio,
            "byte_miss_ratio": self.byte_miss_ratio,
            "total_shifts": self.total_shifts,
            "shifts_per_request": self.shifts_per_request,
            "shrink_evictions": self.shrink_evictions,
            "final_capacity": self.final_capacity,
            "sample_every": self.sample_every,
            "trajectory": self.trajectory,
            "resize_events": [vars(e) for e in self.resize_events],
        }


Observer = Callable[[int, Policy, PolicyOutcome], None]


def _as_trace(workload) -> Trace:
    if isinstance(workload, Trace):
        return workload
    if isinstance(workload, ZipfSpec):
        return generate_ir_stream(workload)
    return Trace.from_records(workload)


def describe(workload) -> dict:
    if isinstance(workload, ZipfSpec):
        return {"kind": "zipf", "n": workload.n, "alpha": workload.alpha,
                "length": workload.length, "seed": workload.seed,
                "size": list(workload.size) if isinstance(workload.size, tuple) else workload.size}
    return {"kind": "trace"}


def simulate(config: PolicyConfig, workload: Trace | ZipfSpec | Iterable[RequestRecord], *,
             workload_info: dict | None = None, observer: Observer | None = None,
             keep_series: bool = False, check: bool = False) -> RunReport:
    """Replay ``workload`` through a fresh policy built from ``config``.

    ``observer`` is called after every request with the 0-based step, the
    policy and the outcome.  ``keep_series`` stores the per-request hit
    flags (and ``jump`` values for the climb policies) on the report;
    ``check`` verifies policy invariants after every request (slow).
    """
    trace = _as_trace(workload)
    n = len(trace)
    if n < 1:
        raise ValueError("workload is empty")
    policy = make_policy(config)
    report = RunReport(config, workload_info if workload_info is not None else describe(workload))
    every = max(1, n // TRAJECTORY_POINTS)
    report.sample_every = every
    names = list(policy.telemetry())
    traj: dict[str, list[int]] = {"step": []} if names else {}
    for name in names:
        traj[name] = []
    hits_arr = np.zeros(n, dtype=bool) if keep_series else None
    jumps_arr = np.zeros(n, dtype=np.int64) if keep_series and "jump" in names else None

    access = policy.access
    hits = shifts = bytes_total = bytes_missed = 0
    keys = trace.keys.tolist()
    sizes = trace.sizes.tolist()
    dynamic = isinstance(policy, DynamicAdaptiveClimb)
    for step, (key, size) in enumerate(zip(keys, sizes)):
        out = access(key)
        bytes_total += size
        if out.hit:
            hits += 1
        else:
            bytes_missed += size
        shifts += out.shifts
        if keep_series:
            hits_arr[step] = out.hit
            if jumps_arr is not None:
                jumps_arr[step] = policy.jump
        if observer is not None:
            observer(step, policy, out)
        if check:
            policy.check()
        if names and (step + 1) % every == 0:
            traj["step"].append(step + 1)
            tel = out.telemetry
            for name in names:
                traj[name].append(tel[name])
            if dynamic:
                assert len(policy.state.slots) <= policy.state.capacity

    report.requests = n
    report.hits = hits
    report.misses = n - hits
    report.bytes_requested = bytes_total
    report.bytes_missed = bytes_missed
    report.total_shifts = shifts
    report.final_capacity = policy.capacity
    report.trajectory = traj
    if dynamic:
        report.shrink_evictions = policy.shrink_evictions
        report.resize_events = list(policy.events)
    report.hit_series = hits_arr
    report.jump_series = jumps_arr
    report.check()
    return report


# -- MRR ---------------------------------------------------------------------

@dataclass(frozen=True)
class MrrResult:
    mr_algo: float
    mr_fifo: float
    mrr: float


def compute_mrr(mr_algo: float, mr_fifo: float) -> MrrResult:
    """Miss-ratio reduction relative to FIFO.

    Divides by FIFO's miss ratio when the algorithm does at least as well,
    and by the algorithm's own miss ratio otherwise, so the value stays in
    [-1, 1].
    """
    for name, v in (("mr_algo", mr_algo), ("mr_fifo", mr_fifo)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {v}")
    denom = mr_fifo if mr_algo <= mr_fifo else mr_algo
    if denom == 0:
        raise UndefinedMRRError("MRR undefined: both miss ratios are zero")
    return MrrResult(mr_algo, mr_fifo, (mr_fifo - mr_algo) / denom)


# -- sweeps --------------------------------------------------------------

@dataclass
class SweepRow:
    axis: str
    point: float | int | str
    alpha: float
    capacity: int
    report: RunReport
    mrr: float | None = None

    @property
    def policy(self) -> PolicyName:
        return self.report.policy


def resolve_capacity(value: int | str, distinct: int) -> int:
    """Absolute slot count from ``int`` or a percentage string like ``"5%"``."""
    if isinstance(value, str):
        text = value.strip()
        if text.endswith("%"):
            pct = float(text[:-1])
            if not pct > 0:
                raise ValueError(f"capacity percentage must be positive: {value!r}")
            return max(1, round(distinct * pct / 100))
        value = int(text)
    if value < 1:
        raise ValueError(f"capacity must be positive, got {value}")
    return int(value)


def _dedupe(policies: Sequence[PolicyName | str]) -> list[PolicyName]:
    seen: list[PolicyName] = []
    for p in policies:
        name = p if isinstance(p, PolicyName) else PolicyName.parse(p)
        if name in seen:
            warnings.warn(f"duplicate policy {name} dropped from sweep", stacklevel=3)
            continue
        seen.append(name)
    if PolicyName.FIFO not in seen:
        seen.insert(0, PolicyName.FIFO)
    return seen


def _config_for(name: PolicyName, capacity: int, dynamic_opts: dict) -> PolicyConfig:
    if name is PolicyName.DYNAMIC_ADAPTIVE_CLIMB:
        return PolicyConfig(name, capacity, **dynamic_opts)
    return PolicyConfig(name, capacity)


def sweep(policies: Sequence[PolicyName | str], *, spec: ZipfSpec | None = None,
          trace: Trace | None = None, capacities: Sequence[int | str] | None = None,
          alphas: Sequence[float] | None = None, capacity: int | str | None = None,
          epsilon=None, k_min: int | None = None, k_max: int | None = None,
          jobs: int = 1) -> list[SweepRow]:
    """Run every policy at every point of one axis.

    Exactly one of ``capacities`` and ``alphas`` is the swept axis.  A
    capacity sweep runs over ``trace`` or the stream generated from
    ``spec``; percentages resolve against its distinct-key count.  An alpha
    sweep regenerates ``spec`` at each alpha and uses the single
    ``capacity`` (percentages resolve against ``spec.n``).  FIFO is always
    added.
    """
    if (capacities is None) == (alphas is None):
        raise ValueError("give exactly one of capacities or alphas")
    axis_values = list(capacities if capacities is not None else alphas)
    if not axis_values:
        raise ValueError("sweep axis is empty")
    if not policies:
        raise ValueError("no policies given")
    names = _dedupe(policies)
    dyn = {k: v for k, v in (("epsilon", epsilon), ("k_min", k_min), ("k_max", k_max))
           if v is not None}

    points = []  # (axis, point, alpha, capacity, spec-or-None, trace-or-None)
    if capacities is not None:
        if trace is None and spec is None:
            raise ValueError("capacity sweep needs a spec or a trace")
        workload = trace if trace is not None else generate_ir_stream(spec)
        distinct = workload.distinct_keys()
        alpha = spec.alpha if spec is not None else math.nan
        for point in axis_values:
            points.append(("capacity", point, alpha, resolve_capacity(point, distinct),
                           spec, workload))
    else:
        if spec is None or capacity is None:
            raise ValueError("alpha sweep needs a spec and a capacity")
        if len(axis_values) != len(set(axis_values)):
            raise ValueError("duplicate alpha values")
        cap = resolve_capacity(capacity, spec.n)
        for a in axis_values:
            points.append(("alpha", a, float(a), cap,
                           ZipfSpec(spec.n, float(a), spec.length, spec.seed, spec.size), None))

    jobs_list = []
    for axis, point, alpha, cap, s, t in points:
        info = describe(s) if s is not None else {"kind": "trace"}
        for name in names:
            jobs_list.append((_config_for(name, cap, dyn), s, t, info))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_job, jobs_list))
    else:
        reports = []
        current_key, current = None, None
        for cfg, s, t, info in jobs_list:
            if t is None:
                key = (s.n, s.alpha, s.length, s.seed, s.size)
                if key != current_key:
                    current_key, current = key, generate_ir_stream(s)
                t = current
            reports.append(simulate(cfg, t, workload_info=info))

    rows = []
    it = iter(reports)
    for axis, point, alpha, cap, _, _ in points:
        for _ in names:
            rows.append(SweepRow(axis, point, alpha, cap, next(it)))
    fifo = {row.point: row.report.miss_ratio for row in rows if row.policy is PolicyName.FIFO}
    for row in rows:
        if row.policy is not PolicyName.FIFO:
            try:
                row.mrr = compute_mrr(row.report.miss_ratio, fifo[row.point]).mrr
            except UndefinedMRRError:
                row.mrr = None
    return rows


def _run_job(job):
    config, spec, trace, info = job
    return simulate(config, trace if trace is not None else generate_ir_stream(spec),
                    workload_info=info)


# -- reports -------------------------------------------------------------

REPORT_COLUMNS = (
    "axis", "point", "policy", "capacity", "final_capacity", "alpha", "requests",
    "hits", "misses", "miss_ratio", "hit_ratio", "byte_miss_ratio",
    "shifts_per_request", "shrink_evictions", "resizes", "mrr_vs_fifo",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6f}"
    return str(v)


def _row_values(row: SweepRow | RunReport) -> dict:
    if isinstance(row, RunReport):
        row = SweepRow("single", "", row.workload.get("alpha", math.nan),
                       row.config.capacity, row)
    r = row.report
    return {
        "axis": row.axis,
        "point": row.point,
        "policy": r.policy.value,
        "capacity": row.capacity,
        "final_capacity": r.final_capacity,
        "alpha": float(row.alpha),
        "requests": r.requests,
        "hits": r.hits,
        "misses": r.misses,
        "miss_ratio": r.miss_ratio,
        "hit_ratio": r.hit_ratio,
        "byte_miss_ratio": r.byte_miss_ratio,
        "shifts_per_request": r.shifts_per_request,
        "shrink_evictions": r.shrink_evictions,
        "resizes": sum(e.kind in ("grow", "shrink") for e in r.resize_events),
        "mrr_vs_fifo": row.mrr,
    }


def emit_report(rows: Sequence[SweepRow | RunReport], fmt: str = "table") -> bytes:
    """Render rows as ``"table"``, ``"csv"`` or ``"json"``.

    CSV and JSON keep input order and the :data:`REPORT_COLUMNS` schema.
    The table groups by sweep point and lists policies by ascending miss
    ratio.  Output is byte-for-byte reproducible for identical input.
    """
    if not rows:
        raise ValueError("nothing to report")
    values = [_row_values(r) for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for v in values:
            w.writerow([_fmt(v[c]) for c in REPORT_COLUMNS])
        return buf.getvalue().encode()
    if fmt == "json":
        out = []
        for v, r in zip(values, rows):
            rep = r if isinstance(r, RunReport) else r.report
            d = {c: (None if isinstance(v[c], float) and math.isnan(v[c]) else v[c])
                 for c in REPORT_COLUMNS}
            d["config"] = rep.config.as_dict()
            d["workload"] = rep.workload
            d["trajectory"] = rep.trajectory
            d["resize_events"] = [vars(e) for e in rep.resize_events]
            out.append(d)
        return (json.dumps(out, indent=1, sort_keys=False) + "\n").encode()
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")
    order = {}
    for v in values:
        order.setdefault((v["axis"], str(v["point"])), len(order))
    values = sorted(values, key=lambda v: (order[(v["axis"], str(v["point"]))],
                                           v["miss_ratio"], v["policy"]))
    cols = ("point", "policy", "capacity", "final_capacity", "miss_ratio",
            "byte_miss_ratio", "shifts_per_request", "mrr_vs_fifo")
    cells = [[_fmt(v[c]) for c in cols] for v in values]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(x.ljust(w) for x, w in zip(row, widths)).rstrip() for row in cells]
    return ("\n".join(lines) + "\n").encode()


# -- adaptation ----------------------------------------------------------

def rolling_hit_ratio(hits: np.ndarray, window: int = RECOVERY_WINDOW) -> np.ndarray:
    """Hit ratio of the ``window`` requests ending at each index (NaN before
    the first full window)."""
    h = np.asarray(hits, dtype=np.int64)
    c = np.concatenate(([0], np.cumsum(h)))
    out = np.full(h.size, np.nan)
    if h.size >= window:
        out[window - 1:] = (c[window:] - c[:-window]) / window
    return out


def recovery_time(hits: np.ndarray, boundary: int, window: int = RECOVERY_WINDOW,
                  fraction: float = 0.9) -> float:
    """Requests after ``boundary`` until the rolling hit ratio recovers.

    The reference is the rolling ratio over the ``window`` requests just
    before ``boundary``.  Recovery is the first index at or after the
    post-boundary trough at which the rolling ratio is back at ``fraction``
    of the reference.  Measuring from the trough rather than the first dip
    keeps noise around the threshold from counting as a recovery.  Returns
    0 if the ratio never dips below the target and ``inf`` if it never
    recovers.
    """
    if boundary < window:
        raise ValueError("need a full window before the boundary")
    roll = rolling_hit_ratio(hits, window)
    target = fraction * roll[boundary - 1]
    after = roll[boundary:]
    if after.size == 0 or after.min() >= target:
        return 0.0
    trough = int(np.argmin(after))
    back = np.flatnonzero(after[trough:] >= target)
    if back.size == 0:
        return math.inf
    return float(trough + back[0] + 1)
