"""Structural plan validation and deterministic topological ordering."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Any

from orchard.core.compat import types_compatible
from orchard.core.types import PlanSpec, TaskEnvelope
from orchard.errors import CyclicPlan


@dataclass(frozen=True)
class Violation:
    """One violated plan invariant, naming the offending element."""

    kind: str  # duplicate-id | dangling-edge | cycle | schema-closure-gap | empty-outputs | constraint-field | evidence-field
    subject: str
    detail: str

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "subject": self.subject, "detail": self.detail}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def valid(self) -> bool:
        return not self.violations

    def by_kind(self, kind: str) -> list[Violation]:
        return [v for v in self.violations if v.kind == kind]

    def to_dict(self) -> dict[str, Any]:
        return {"valid": self.valid, "violations": [v.to_dict() for v in self.violations]}


def validate_plan(plan: PlanSpec, task: TaskEnvelope | None = None) -> ValidationReport:
    """Report every violated plan invariant; an empty report means valid.

    Checks duplicate node ids, dangling edges, cycles, empty node outputs,
    constraint/evidence fields that reference nothing, and schema closure:
    every required input field of every node must be supplied by some
    ancestor's output field of a compatible type, or by a task context key
    of the same name.
    """
    violations: list[Violation] = []

    seen: set[str] = set()
    for node in plan.nodes:
        if node.id in seen:
            violations.append(Violation("duplicate-id", node.id, f"node id {node.id!r} appears more than once"))
        seen.add(node.id)

    known = {n.id for n in plan.nodes}
    ok_edges: list[tuple[str, str]] = []
    for u, v in plan.edges:
        if u not in known or v not in known:
            violations.append(Violation("dangling-edge", f"{u}->{v}", "edge endpoint is not a plan node"))
        else:
            ok_edges.append((u, v))

    violations.extend(_cycle_violations(known, ok_edges))

    node_map = plan.node_map()
    for node in plan.nodes:
        if node.outputs.is_empty():
            violations.append(Violation("empty-outputs", node.id, "node declares no outputs"))
        own_fields = {f.name for f in node.inputs.fields} | {f.name for f in node.outputs.fields}
        for constraint in node.constraints:
            if constraint.field is not None and constraint.field not in own_fields:
                violations.append(
                    Violation("constraint-field", node.id, f"constraint references unknown field {constraint.field!r}")
                )
        out_fields = {f.name for f in node.outputs.fields}
        for req in node.evidence_reqs:
            if req.claim_field not in out_fields:
                violations.append(
                    Violation("evidence-field", node.id, f"evidence requirement names unknown field {req.claim_field!r}")
                )

    # Schema closure is only meaningful on a graph without cycles or dangling
    # edges; ancestor sets are ill-defined otherwise.
    if not any(v.kind in ("cycle", "dangling-edge", "duplicate-id") for v in violations):
        context_keys = set(task.context_map()) if task is not None else set()
        for node in plan.nodes:
            supplied: dict[str, list] = {}
            for ancestor_id in plan.ancestors(node.id):
                # Only guaranteed (required) outputs count as suppliers;
                # optional outputs may be absent at runtime.
                for f in node_map[ancestor_id].outputs.required_fields():
                    supplied.setdefault(f.name, []).append(f.type)
            for want in node.inputs.required_fields():
                if want.name in context_keys:
                    continue
                offered = supplied.get(want.name, [])
                if not any(types_compatible(t, want.type) for t in offered):
                    violations.append(
                        Violation(
                            "schema-closure-gap",
                            node.id,
                            f"required input {want.name!r} is not supplied by any ancestor or context key",
                        )
                    )

    return ValidationReport(tuple(violations))


def _cycle_violations(nodes: set[str], edges: list[tuple[str, str]]) -> list[Violation]:
    """Report each strongly-connected cycle component once, naming its members."""
    order = _kahn_order(nodes, edges)
    leftover = nodes - set(order)
    if not leftover:
        return []
    # Group the leftover (cyclic) nodes into connected components for readable
    # reporting; one violation per component.
    adj: dict[str, set[str]] = {n: set() for n in leftover}
    for u, v in edges:
        if u in leftover and v in leftover:
            adj[u].add(v)
            adj[v].add(u)
    violations = []
    unvisited = set(leftover)
    while unvisited:
        start = min(unvisited)
        component = {start}
        frontier = [start]
        while frontier:
            current = frontier.pop()
            for nxt in adj[current]:
                if nxt not in component:
                    component.add(nxt)
                    frontier.append(nxt)
        unvisited -= component
        members = ",".join(sorted(component))
        violations.append(Violation("cycle", members, f"nodes {{{members}}} form a dependency cycle"))
    return violations


def _kahn_order(nodes: set[str], edges: list[tuple[str, str]]) -> list[str]:
    indegree = {n: 0 for n in nodes}
    out: dict[str, list[str]] = {n: [] for n in nodes}
    for u, v in edges:
        indegree[v] += 1
        out[u].append(v)
    ready = [n for n, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        current = heapq.heappop(ready)
        order.append(current)
        for nxt in sorted(out[current]):
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                heapq.heappush(ready, nxt)
    return order


def topological_order(plan: PlanSpec) -> list[str]:
    """Dependency-respecting node order, ties broken by ascending node id.

    Raises CyclicPlan when no such order exists: the plan has a cycle, a
    dangling edge, or duplicate node ids.
    """
    ids = plan.node_ids()
    known = set(ids)
    if len(ids) != len(known):
        raise CyclicPlan("plan has duplicate node ids; ordering is ill-defined")
    for u, v in plan.edges:
        if u not in known or v not in known:
            raise CyclicPlan(f"edge {u}->{v} references a node outside the plan")
    order = _kahn_order(known, list(plan.edges))
    if len(order) != len(known):
        stuck = ",".join(sorted(known - set(order)))
        raise CyclicPlan(f"plan has a dependency cycle among {{{stuck}}}")
    return order
