"""``climbsim`` command line.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from fractions import Fraction
from pathlib import Path

from . import __version__
from .analytics import (MAX_ORACLE_K, MAX_ORACLE_N, ConvergenceError, climb_stationary,
                        expected_hit_ratio, lru_stationary, markov_stationary)
from .core import PolicyConfig, PolicyName
from .harness import emit_report, resolve_capacity, simulate, sweep
from .traceio import TraceFormatError, atomic_write, detect_format, load_trace, save_trace
from .workload import (DEFAULT_SEED, PhasePlan, ZipfSpec, generate_ir_stream,
                       generate_phase_stream, zipf_probabilities)

ORACLE_TOL = 1e-9
MAX_ENUMERATED_CONFIGS = 200_000


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _alpha(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"alpha must be non-negative: {text}")
    return v


def _epsilon(text: str) -> Fraction:
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"epsilon must be in (0, 1]: {text}")
    return v


def _size(text: str):
    if ":" in text:
        lo, hi = (int(x) for x in text.split(":", 1))
        return (lo, hi)
    return int(text)


def _csv_list(text: str) -> list[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return items


def _add_zipf_flags(p: argparse.ArgumentParser, required: bool = False) -> None:
    g = p.add_argument_group("synthetic workload")
    g.add_argument("--zipf-n", type=_positive_int, required=required, default=None if required else 10_000,
                   help="number of distinct items (default 10000)")
    g.add_argument("--alpha", type=_alpha, default=1.0, help="Zipf skew (default 1.0)")
    g.add_argument("--length", type=_positive_int, default=1_000_000,
                   help="requests per phase (default 1000000)")
    g.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    g.add_argument("--size", type=_size, default=1,
                   help="object size in bytes, or LO:HI for per-item log-uniform sizes")


def _add_dynamic_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("DynamicAdaptiveClimb")
    g.add_argument("--epsilon", type=_epsilon, help="halving sensitivity in (0, 1] (default 1/2)")
    g.add_argument("--kmin", type=_positive_int, help="capacity floor (default: the capacity)")
    g.add_argument("--kmax", type=_positive_int, help="capacity ceiling (default: 8x capacity)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="climbsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic trace")
    _add_zipf_flags(g)
    g.add_argument("--phases", type=_positive_int, default=1,
                   help="number of phases; each re-draws which items are popular")
    g.add_argument("--disjoint-phases", action="store_true",
                   help="give each phase its own key range instead of permuting ranks")
    g.add_argument("--out", required=True)
    g.add_argument("--format", choices=("csv", "bin"))

    s = sub.add_parser("simulate", help="run one policy over one workload")
    s.add_argument("--policy", required=True)
    s.add_argument("--capacity", required=True, help="slots, or a percentage like 5%%")
    _add_dynamic_flags(s)
    s.add_argument("--trace", help="trace file (.csv or .bin); overrides the synthetic flags")
    s.add_argument("--trace-format", choices=("csv", "bin"))
    _add_zipf_flags(s)
    s.add_argument("--report", help="write the report (.json, .csv or table text)")

    w = sub.add_parser("sweep", help="run several policies over a capacity or alpha axis")
    w.add_argument("--policies", type=_csv_list, required=True)
    axis = w.add_mutually_exclusive_group(required=True)
    axis.add_argument("--capacities", type=_csv_list)
    axis.add_argument("--alphas", type=_csv_list)
    w.add_argument("--capacity", help="capacity for an alpha sweep (slots or percent of N)")
    _add_dynamic_flags(w)
    w.add_argument("--trace", help="trace file for a capacity sweep")
    w.add_argument("--trace-format", choices=("csv", "bin"))
    _add_zipf_flags(w)
    w.add_argument("--jobs", type=_positive_int, default=1)
    w.add_argument("--report", help="write rows (.csv, .json or table text)")

    a = sub.add_parser("analyze", help="IR-model stationary distribution")
    a.add_argument("--model", choices=("lru", "climb"), required=True)
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--probs", help="file of probabilities (comma or newline separated)")
    src.add_argument("--zipf-n", type=_positive_int)
    a.add_argument("--alpha", type=_alpha, default=1.0)
    a.add_argument("--k", type=_positive_int, required=True)
    a.add_argument("--oracle", action="store_true",
                   help="cross-check the closed form against the exact Markov chain")

    c = sub.add_parser("convert", help="convert between CSV and binary traces")
    c.add_argument("--in", dest="src", required=True)
    c.add_argument("--out", dest="dst", required=True)
    c.add_argument("--from", dest="src_format", choices=("csv", "bin"))
    c.add_argument("--to", dest="dst_format", choices=("csv", "bin"))
    return parser


def _spec(args, alpha=None) -> ZipfSpec:
    try:
        return ZipfSpec(args.zipf_n, args.alpha if alpha is None else alpha, args.length,
                        args.seed, args.size)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _dynamic_opts(args, policies) -> dict:
    opts = {"epsilon": args.epsilon, "k_min": args.kmin, "k_max": args.kmax}
    given = [f"--{n}" for n, v in (("epsilon", args.epsilon), ("kmin", args.kmin), ("kmax", args.kmax))
             if v is not None]
    if given and PolicyName.DYNAMIC_ADAPTIVE_CLIMB not in policies:
        raise UsageError(f"{', '.join(given)} valid only with {PolicyName.DYNAMIC_ADAPTIVE_CLIMB.value}")
    return opts


def _report_format(path: str) -> str:
    suffix = Path(path).suffix.lower()
    return {".json": "json", ".csv": "csv"}.get(suffix, "table")


def cmd_generate(args) -> int:
    spec = _spec(args)
    fmt = args.format or _guess_format(args.out)
    if args.phases > 1:
        trace = generate_phase_stream(PhasePlan.repeated(spec, args.phases, disjoint=args.disjoint_phases))
    else:
        trace = generate_ir_stream(spec)
    save_trace(trace, args.out, fmt)
    print(f"wrote {len(trace)} records to {args.out} ({fmt})")
    return 0


def _guess_format(path: str) -> str:
    try:
        return detect_format(path)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _load_workload(args):
    if args.trace:
        return load_trace(args.trace, args.trace_format), {"kind": "trace", "path": args.trace}
    spec = _spec(args)
    return generate_ir_stream(spec), {"kind": "zipf", "n": spec.n, "alpha": spec.alpha,
                                      "length": spec.length, "seed": spec.seed,
                                      "size": list(spec.size) if isinstance(spec.size, tuple) else spec.size}


def cmd_simulate(args) -> int:
    try:
        policy = PolicyName.parse(args.policy)
    except ValueError as e:
        raise UsageError(str(e)) from None
    opts = _dynamic_opts(args, [policy])
    trace, info = _load_workload(args)
    try:
        capacity = resolve_capacity(args.capacity, trace.distinct_keys())
        config = PolicyConfig(policy, capacity, **opts) if policy is PolicyName.DYNAMIC_ADAPTIVE_CLIMB \
            else PolicyConfig(policy, capacity)
    except ValueError as e:
        raise UsageError(str(e)) from None
    report = simulate(config, trace, workload_info=info)
    print(f"policy={policy.value} capacity={capacity} requests={report.requests} "
          f"miss_ratio={report.miss_ratio:.6f} byte_miss_ratio={report.byte_miss_ratio:.6f} "
          f"final_capacity={report.final_capacity}")
    if args.report:
        fmt = _report_format(args.report)
        if fmt == "json":
            data = (json.dumps(report.to_dict(), indent=1) + "\n").encode()
        else:
            data = emit_report([report], fmt)
        atomic_write(args.report, data)
    return 0


def cmd_sweep(args) -> int:
    try:
        policies = [PolicyName.parse(p) for p in args.policies]
    except ValueError as e:
        raise UsageError(str(e)) from None
    opts = _dynamic_opts(args, policies)
    kwargs = dict(policies=policies, jobs=args.jobs, **opts)
    try:
        if args.alphas:
            if args.trace:
                raise UsageError("an alpha sweep needs a synthetic workload, not --trace")
            if not args.capacity:
                raise UsageError("--alphas needs --capacity")
            alphas = [_alpha(a) for a in args.alphas]
            rows = sweep(spec=_spec(args), alphas=alphas, capacity=args.capacity, **kwargs)
        else:
            if args.capacity:
                raise UsageError("--capacity is for alpha sweeps; use --capacities")
            if args.trace:
                rows = sweep(trace=load_trace(args.trace, args.trace_format),
                             capacities=args.capacities, **kwargs)
            else:
                rows = sweep(spec=_spec(args), capacities=args.capacities, **kwargs)
    except (ValueError, argparse.ArgumentTypeError) as e:
        if isinstance(e, TraceFormatError):
            raise
        raise UsageError(str(e)) from None
    sys.stdout.write(emit_report(rows, "table").decode())
    if args.report:
        atomic_write(args.report, emit_report(rows, _report_format(args.report)))
    return 0


def _read_probs(path: str) -> list[float]:
    text = Path(path).read_text()
    return [float(t) for t in text.replace("\n", ",").split(",") if t.strip()]


def cmd_analyze(args) -> int:
    if args.probs:
        try:
            p = _read_probs(args.probs)
        except ValueError as e:
            raise UsageError(f"bad probability file: {e}") from None
    else:
        if args.zipf_n < 2:
            raise UsageError("--zipf-n must be at least 2")
        p = zipf_probabilities(args.zipf_n, args.alpha).tolist()
    n, k = len(p), args.k
    if k >= n:
        raise UsageError(f"--k must be smaller than the number of items ({n})")
    if args.oracle and (n > MAX_ORACLE_N or k > MAX_ORACLE_K):
        raise UsageError(f"--oracle limited to N <= {MAX_ORACLE_N}, K <= {MAX_ORACLE_K}")
    count = 1
    for i in range(k):
        count *= n - i
    if count > MAX_ENUMERATED_CONFIGS:
        raise UsageError(f"{count} configurations is too many to enumerate")
    try:
        dist = (lru_stationary if args.model == "lru" else climb_stationary)(p, k)
    except ValueError as e:
        raise UsageError(str(e)) from None
    print("configuration\tprobability")
    for sigma, prob in dist.items():
        print(f"{','.join(map(str, sigma))}\t{prob:.12f}")
    print(f"expected_hit_ratio\t{expected_hit_ratio(dist, p):.12f}")
    if args.oracle:
        oracle = markov_stationary(args.model, p, k)
        dev = max(abs(oracle[s] - dist[s]) for s in dist)
        print(f"oracle_max_abs_deviation\t{dev:.3e}")
        if not dev < ORACLE_TOL:
            print(f"error: closed form and Markov oracle differ by {dev:.3e}", file=sys.stderr)
            return 1
    return 0


def cmd_convert(args) -> int:
    try:
        src_fmt = detect_format(args.src, args.src_format)
        dst_fmt = detect_format(args.dst, args.dst_format)
    except ValueError as e:
        raise UsageError(str(e)) from None
    trace = load_trace(args.src, src_fmt)
    save_trace(trace, args.dst, dst_fmt)
    print(f"converted {len(trace)} records {src_fmt} -> {dst_fmt}")
    return 0


COMMANDS = {"generate": cmd_generate, "simulate": cmd_simulate, "sweep": cmd_sweep,
            "analyze": cmd_analyze, "convert": cmd_convert}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda msg, *a, **k: print(f"warning: {msg}", file=sys.stderr)
            return COMMANDS[args.command](args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"climbsim {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (TraceFormatError, OSError, ConvergenceError, ValueError) as e:
        print(f"climbsim {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
