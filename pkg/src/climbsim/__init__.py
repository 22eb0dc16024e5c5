"""Cache replacement simulation: AdaptiveClimb, DynamicAdaptiveClimb and
classical baselines, with IR-model analytics and a trace-driven harness."""

__version__ = "0.1.0"

from .core import CacheState, PolicyConfig, PolicyName, PolicyOutcome, RequestRecord
from .harness import RunReport, compute_mrr, emit_report, simulate, sweep
from .policies import make_policy
from .workload import Trace, ZipfSpec, generate_ir_stream, zipf_probabilities

__all__ = [
    "CacheState", "PolicyConfig", "PolicyName", "PolicyOutcome", "RequestRecord",
    "RunReport", "Trace", "ZipfSpec", "compute_mrr", "emit_report", "generate_ir_stream",
    "make_policy", "simulate", "sweep", "zipf_probabilities",
]
