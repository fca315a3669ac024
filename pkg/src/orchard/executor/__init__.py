"""Plan execution with per-step verification, recovery, and evidence."""

from orchard.executor.engine import ExecutionPolicy, execute_plan, hub_runner
from orchard.executor.evidence import EvidenceBundle, aggregate_evidence
from orchard.executor.verify import verify_step

__all__ = [
    "EvidenceBundle",
    "ExecutionPolicy",
    "aggregate_evidence",
    "execute_plan",
    "hub_runner",
    "verify_step",
]
