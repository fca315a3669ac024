"""Evidence aggregation along dependency paths.

For every claim field of the deliverable (an output of a completed terminal
node), this reconstructs which steps contributed to it and emits one entry
per dependency path from a root contributor down to the claiming step. The
sourcing rule mirrors input binding exactly: a consumed field comes from the
latest completed ancestor (in topological order) that produced it, falling
back to the task context.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from orchard.core.types import EvidenceEntry, ExecutionTrace, PlanSpec, TaskEnvelope
from orchard.core.validation import topological_order
from orchard.errors import OrphanClaim


@dataclass(frozen=True)
class EvidenceBundle:
    entries: tuple[EvidenceEntry, ...]

    def for_claim(self, claim_field: str) -> list[EvidenceEntry]:
        return [e for e in self.entries if e.claim_field == claim_field]

    def claim_fields(self) -> set[str]:
        return {e.claim_field for e in self.entries}

    def to_dict(self) -> dict[str, Any]:
        return {"entries": [e.to_dict() for e in self.entries]}


def _contribution_graph(
    trace: ExecutionTrace, plan: PlanSpec, task: TaskEnvelope | None
) -> tuple[dict[str, Any], dict[str, list[str]], dict[str, list[str]]]:
    """Reconstruct, per completed node, where each consumed field came from.

    Returns (successful step per node, contributing parent nodes per node,
    context keys consumed per node).
    """
    ok_steps = {step.node_id: step for step in trace.steps if step.ok}
    order = [n for n in topological_order(plan) if n in ok_steps]
    position = {n: i for i, n in enumerate(order)}
    node_map = plan.node_map()
    context_keys = set(task.context_map()) if task is not None else set()

    parents: dict[str, list[str]] = {}
    context_used: dict[str, list[str]] = {}
    for node_id in order:
        node = node_map[node_id]
        completed_ancestors = [a for a in plan.ancestors(node_id) if a in ok_steps]
        completed_ancestors.sort(key=lambda a: position[a])
        node_parents: list[str] = []
        node_context: list[str] = []
        for field in node.inputs.fields:
            producer = None
            for ancestor in completed_ancestors:  # later position overrides
                if field.name in ok_steps[ancestor].output_map():
                    producer = ancestor
            if producer is not None:
                if producer not in node_parents:
                    node_parents.append(producer)
            elif field.name in context_keys:
                node_context.append(field.name)
        parents[node_id] = node_parents
        context_used[node_id] = node_context
    return ok_steps, parents, context_used


def _paths_to(node_id: str, parents: dict[str, list[str]]) -> list[list[str]]:
    """All root-to-node paths through the contribution graph, deterministic order."""
    incoming = parents.get(node_id, [])
    if not incoming:
        return [[node_id]]
    paths: list[list[str]] = []
    for parent in sorted(incoming):
        for path in _paths_to(parent, parents):
            paths.append(path + [node_id])
    return paths


def aggregate_evidence(
    trace: ExecutionTrace,
    plan: PlanSpec,
    task: TaskEnvelope | None = None,
) -> EvidenceBundle:
    """One entry per (claim field, contribution path); raises OrphanClaim
    when a terminal output field has no producing step in the trace."""
    ok_steps, parents, context_used = _contribution_graph(trace, plan, task)
    node_map = plan.node_map()
    entries: list[EvidenceEntry] = []
    for terminal_id in sorted(plan.terminal_ids()):
        if terminal_id not in ok_steps:
            continue
        step = ok_steps[terminal_id]
        produced = step.output_map()
        for field in node_map[terminal_id].outputs.fields:
            if field.name not in produced:
                if field.required:
                    raise OrphanClaim(
                        f"claim field {field.name!r} of node {terminal_id!r} has no producing step"
                    )
                continue
            for path in _paths_to(terminal_id, parents):
                sources: list[str] = []
                for node_id in path:
                    tool = f"tool:{ok_steps[node_id].tool_id}"
                    if tool not in sources:
                        sources.append(tool)
                    for key in context_used[node_id]:
                        ctx = f"context:{key}"
                        if ctx not in sources:
                            sources.append(ctx)
                entries.append(
                    EvidenceEntry(
                        claim_field=field.name,
                        step_ids=tuple(ok_steps[n].step_id for n in path),
                        sources=tuple(sources),
                    )
                )
    return EvidenceBundle(tuple(entries))
