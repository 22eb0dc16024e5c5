"""Acceptance criteria, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict, printed in the terminal
summary.  Runs are memoised per session because several criteria share
the same simulations (10^6 requests each).
"""

import math
import time
from collections import Counter

import numpy as np
import pytest

from climbsim.analytics import (climb_stationary, lru_stationary, markov_stationary, pi_climb,
                                pi_lru, total_variation)
from climbsim.core import PolicyConfig, PolicyName
from climbsim.harness import compute_mrr, recovery_time, simulate
from climbsim.traceio import load_trace, read_binary_trace, save_trace, TraceFormatError
from climbsim.workload import (DEFAULT_SEED, PhasePlan, ZipfSpec, generate_hot_cold_stream,
                               generate_ir_stream, generate_loop_stream, generate_phase_stream)

from conftest import ACCEPTANCE

pytestmark = pytest.mark.slow

N = 10_000
LENGTH = 10**6
TAIL = 10**5
ALL_POLICIES = list(PolicyName)

_traces: dict = {}
_runs: dict = {}


def zipf_trace(alpha):
    if alpha not in _traces:
        _traces[alpha] = generate_ir_stream(ZipfSpec(N, alpha, LENGTH, DEFAULT_SEED))
    return _traces[alpha]


def run(policy, alpha, k, series=False):
    key = (PolicyName.parse(policy) if isinstance(policy, str) else policy, alpha, k)
    cached = _runs.get(key)
    if cached is None or (series and cached.hit_series is None):
        cached = _runs[key] = simulate(PolicyConfig(key[0], k), zipf_trace(alpha), keep_series=series)
    return cached


def verdict(cid, ok, detail):
    ACCEPTANCE[cid] = (bool(ok), detail)
    print(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_c01_closed_forms_match_oracle():
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.PCG64(DEFAULT_SEED))
    worst_err = worst_norm = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, min(3, n - 1) + 1))
        p = rng.dirichlet(np.ones(n))
        p = p / math.fsum(p)
        for model, closed in (("lru", lru_stationary), ("climb", climb_stationary)):
            exact = closed(p, k)
            oracle = markov_stationary(model, p, k)
            worst_err = max(worst_err, max(abs(oracle[s] - exact[s]) for s in exact))
            worst_norm = max(worst_norm, abs(math.fsum(exact.values()) - 1))
    elapsed = time.perf_counter() - t0
    verdict("1", worst_err < 1e-9 and worst_norm < 1e-9 and elapsed < 60,
            f"max |oracle - closed form| = {worst_err:.2e}, max |sum - 1| = {worst_norm:.2e}, "
            f"{elapsed:.2f}s")


def test_c02_simulator_matches_stationary_distribution():
    n, k = 4, 2
    spec = ZipfSpec(n, 1.0, LENGTH, seed=DEFAULT_SEED)
    p = np.arange(1, n + 1, dtype=float) ** -1.0
    p /= p.sum()
    results = []
    for name, closed in ((PolicyName.LRU, pi_lru), (PolicyName.CLIMB, pi_climb)):
        freq = Counter()

        def observe(step, policy, outcome):
            if policy.state.full:
                freq[tuple(policy.state.slots)] += 1

        simulate(PolicyConfig(name, k), spec, observer=observe)
        total = sum(freq.values())
        empirical = {s: c / total for s, c in freq.items()}
        analytic = {s: closed(p, s) for s in lru_stationary(p, k)}
        results.append((name.value, total_variation(empirical, analytic)))
    verdict("2", all(tv < 0.02 for _, tv in results),
            ", ".join(f"{name} TV = {tv:.4f}" for name, tv in results) + " (limit 0.02)")


def test_c03_climb_at_least_lru_and_adaptive_tracks_climb():
    climb = run("CLIMB", 1.0, 100, series=True)
    lru = run("LRU", 1.0, 100)
    ac = run("AdaptiveClimb", 1.0, 100, series=True)
    ac_tail = ac.hit_series[-TAIL:].mean()
    climb_tail = climb.hit_series[-TAIL:].mean()
    gap = abs(ac_tail - climb_tail) * 100
    verdict("3", climb.hit_ratio >= lru.hit_ratio and gap <= 1.0,
            f"hit ratio CLIMB {climb.hit_ratio:.4f} vs LRU {lru.hit_ratio:.4f}; final 10^5: "
            f"AdaptiveClimb {ac_tail:.4f} vs CLIMB {climb_tail:.4f} ({gap:.2f} pp, limit 1)")


def test_c04_jump_converges():
    ac = run("AdaptiveClimb", 1.0, 100, series=True)
    median = float(np.median(ac.jump_series[-TAIL:]))
    verdict("4", median <= 2, f"median jump over final 10^5 requests = {median:g} (limit 2)")


def test_c05_adaptive_recovers_faster_than_climb():
    wins, details = 0, []
    for seed in range(5):
        spec = ZipfSpec(1000, 1.0, 500_000, seed=DEFAULT_SEED + 100 * seed)
        trace = generate_phase_stream(PhasePlan.repeated(spec, 2, disjoint=True))
        boundary = trace.phase_starts[1]
        times = {}
        for name in ("AdaptiveClimb", "CLIMB"):
            rep = simulate(PolicyConfig(name, 100), trace, keep_series=True)
            times[name] = recovery_time(rep.hit_series, boundary)
        wins += times["AdaptiveClimb"] < times["CLIMB"]
        details.append(f"{times['AdaptiveClimb']:g}/{times['CLIMB']:g}")
    verdict("5", wins == 5, f"AdaptiveClimb faster {wins}/5 (recovery AC/CLIMB: "
                             + ", ".join(details) + ")")


def _counter_guard(bad):
    def observe(step, policy, outcome):
        half = policy.capacity // 2
        if not (-half <= policy.jump_prime <= 0 and policy.jump >= -half
                and policy.k_min <= policy.capacity <= policy.k_max):
            bad.append(step)
    return observe


def test_c06a_doubling_on_oversized_working_set():
    k0 = 64
    working_set = 8 * k0
    bad = []
    rep = simulate(PolicyConfig("dac", k0), generate_loop_stream(working_set, LENGTH),
                   observer=_counter_guard(bad))
    k_max = rep.config.k_max
    target = min(working_set, k_max)
    reached = next((e.step for e in rep.resize_events
                    if e.kind == "grow" and e.new_capacity >= target), None)
    verdict("6a", reached is not None and reached <= LENGTH and not bad,
            f"K {k0} -> {target} at request {reached}; counter violations: {len(bad)}")


def test_c06b_halving_on_small_hot_set():
    k0, k_min, hot = 256, 2, 32
    bad = []
    trace = generate_hot_cold_stream(hot, 0.96, 10_000, LENGTH, seed=DEFAULT_SEED)
    rep = simulate(PolicyConfig("dac", k0, k_min=k_min), trace, observer=_counter_guard(bad))
    cover = k_min
    while cover < hot:
        cover *= 2
    halvings = sum(e.kind == "shrink" for e in rep.resize_events)
    final = rep.final_capacity
    ok = halvings >= 1 and cover / 2 <= final <= cover * 2 and not bad
    verdict("6b", ok, f"{halvings} halvings, final K = {final} (target {cover}, "
                      f"allowed [{cover // 2}, {cover * 2}]); counter violations: {len(bad)}")


def test_c07_miss_ratio_falls_with_skew():
    alphas = (0.2, 0.6, 1.0, 1.4)
    offenders, rows = [], []
    for name in ALL_POLICIES:
        mrs = [run(name, a, 100).miss_ratio for a in alphas]
        rows.append(f"{name.value} " + "/".join(f"{m:.3f}" for m in mrs))
        if not all(b < a for a, b in zip(mrs, mrs[1:])):
            offenders.append(name.value)
    verdict("7", not offenders, "strictly decreasing for all policies" if not offenders
            else "not decreasing: " + ", ".join(offenders))


def test_c08_capacity_sweep_shape():
    caps = (100, 200, 500, 1000)
    names = ("FIFO", "LRU", "LFU", "AdaptiveClimb", "DynamicAdaptiveClimb")
    mr = {n: [run(n, 1.0, k).miss_ratio for k in caps] for n in names}
    dac, lru, lfu = mr["DynamicAdaptiveClimb"], mr["LRU"], mr["LFU"]
    beats_lru = all(d <= l for d, l in zip(dac, lru))
    beats_lfu = all(dac[i] <= lfu[i] for i in (2, 3))
    monotone = [n for n in names if any(b > a + 0.005 for a, b in zip(mr[n], mr[n][1:]))]
    detail = (f"DAC {'/'.join(f'{x:.3f}' for x in dac)}; LRU {'/'.join(f'{x:.3f}' for x in lru)}; "
              f"LFU {'/'.join(f'{x:.3f}' for x in lfu)}; DAC<=LRU everywhere: {beats_lru}; "
              f"DAC<=LFU at 5%,10%: {beats_lfu}; non-monotone: {monotone or 'none'}")
    verdict("8", beats_lru and beats_lfu and not monotone, detail)


def test_c09_mrr_formula():
    examples = [((0.355, 0.5), 0.29), ((0.5, 0.5), 0.0), ((0.4, 0.2), -0.5)]
    ok = all(abs(compute_mrr(*args).mrr - want) < 1e-12 for args, want in examples)
    rng = np.random.Generator(np.random.PCG64(DEFAULT_SEED))
    violations = 0
    for algo, fifo in rng.uniform(0, 1, size=(10_000, 2)):
        r = compute_mrr(algo, fifo)
        violations += np.sign(r.mrr) != np.sign(fifo - algo) or not -1 <= r.mrr <= 1
    verdict("9", ok and violations == 0,
            f"examples {'ok' if ok else 'wrong'}; {violations} sign/bound violations in 10^4 draws")


def test_c10_fewer_shifts_than_lru():
    failures, cells = [], []
    for alpha in (0.8, 1.2):
        for k in (100, 1000):
            lru = run("LRU", alpha, k).shifts_per_request
            for name in ("AdaptiveClimb", "DynamicAdaptiveClimb"):
                s = run(name, alpha, k).shifts_per_request
                cells.append(f"{name[:3] if name[0] == 'A' else 'DAC'}@a{alpha},K{k}: {s:.2f} vs {lru:.2f}")
                if not s < lru:
                    failures.append(cells[-1])
    verdict("10", not failures, "; ".join(failures) if failures else "; ".join(cells))


def test_c11_format_fidelity(tmp_path):
    rng = np.random.Generator(np.random.PCG64(DEFAULT_SEED))
    from climbsim.workload import Trace
    n = 10**5
    trace = Trace(rng.integers(0, 2**32 - 1, n, endpoint=True, dtype=np.uint64),
                  rng.integers(0, 2**64 - 1, n, endpoint=True, dtype=np.uint64),
                  rng.integers(1, 2**32 - 1, n, endpoint=True, dtype=np.uint64))
    ok_bin = ok_csv = True
    for fmt in ("bin", "csv"):
        path = tmp_path / f"t.{fmt}"
        save_trace(trace, path)
        same = load_trace(path) == trace
        if fmt == "bin":
            with open(path, "rb") as fh:
                same = same and sum(1 for _ in read_binary_trace(fh)) == n
            ok_bin = same
        else:
            ok_csv = same
    raw = (tmp_path / "t.bin").read_bytes()
    corrupt = {
        "bad magic": b"XCT1" + raw[4:],
        "bad version": raw[:4] + b"\x02\x00" + raw[6:],
        "truncated": raw[:-7],
        "trailing": raw + b"\x00",
        "reserved": raw[:-1] + b"\x01",
    }
    caught = []
    for label, data in corrupt.items():
        path = tmp_path / "bad.bin"
        path.write_bytes(data)
        try:
            load_trace(path)
        except TraceFormatError:
            caught.append(label)
    (tmp_path / "bad.csv").write_text("1,42,0\n")
    try:
        load_trace(tmp_path / "bad.csv")
    except TraceFormatError as e:
        if e.line == 1:
            caught.append("zero size")
    verdict("11", ok_bin and ok_csv and len(caught) == 6,
            f"binary round trip {ok_bin}, CSV round trip {ok_csv}, "
            f"{len(caught)}/6 corrupt inputs rejected")
