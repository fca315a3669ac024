"""The plan edit calculus: insert, replace, wrap, remove, atomically verified.

An edit either yields a plan that passes full validation or is rejected
whole; the input plan is never mutated (plans are immutable values), so a
rejected edit simply leaves the caller holding the original.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

from orchard.core.types import PlanNode, PlanSpec, TaskEnvelope
from orchard.core.validation import validate_plan
from orchard.errors import EditRejected


@dataclass(frozen=True)
class InsertEdit:
    node: PlanNode
    incoming: tuple[str, ...] = ()
    outgoing: tuple[str, ...] = ()
    issue_ref: str = ""


@dataclass(frozen=True)
class ReplaceEdit:
    node_id: str
    new_node: PlanNode
    issue_ref: str = ""


@dataclass(frozen=True)
class WrapEdit:
    """Interpose nodes around a target: all former predecessors are redirected
    into `before`, and/or all former successors are fed from `after`."""

    node_id: str
    before: PlanNode | None = None
    after: PlanNode | None = None
    issue_ref: str = ""

    def __post_init__(self) -> None:
        if self.before is None and self.after is None:
            raise ValueError("wrap needs a before node, an after node, or both")


@dataclass(frozen=True)
class RemoveEdit:
    node_id: str
    reconnect: bool = True
    issue_ref: str = ""


Edit = Union[InsertEdit, ReplaceEdit, WrapEdit, RemoveEdit]


def _dedupe(edges: list[tuple[str, str]]) -> tuple[tuple[str, str], ...]:
    seen: set[tuple[str, str]] = set()
    out: list[tuple[str, str]] = []
    for edge in edges:
        if edge not in seen:
            seen.add(edge)
            out.append(edge)
    return tuple(out)


def apply_edit(plan: PlanSpec, edit: Edit, task: TaskEnvelope | None = None) -> PlanSpec:
    """Apply one structural edit and revalidate; reject atomically on violation."""
    if isinstance(edit, InsertEdit):
        nodes = plan.nodes + (edit.node,)
        edges = list(plan.edges)
        edges.extend((src, edit.node.id) for src in edit.incoming)
        edges.extend((edit.node.id, dst) for dst in edit.outgoing)
    elif isinstance(edit, ReplaceEdit):
        if edit.node_id not in plan.node_map():
            raise EditRejected(f"replace target {edit.node_id!r} is not in the plan")
        nodes = tuple(edit.new_node if n.id == edit.node_id else n for n in plan.nodes)
        edges = [
            (
                edit.new_node.id if u == edit.node_id else u,
                edit.new_node.id if v == edit.node_id else v,
            )
            for u, v in plan.edges
        ]
    elif isinstance(edit, WrapEdit):
        if edit.node_id not in plan.node_map():
            raise EditRejected(f"wrap target {edit.node_id!r} is not in the plan")
        nodes = plan.nodes
        edges = list(plan.edges)
        if edit.before is not None:
            nodes = nodes + (edit.before,)
            edges = [
                (u, edit.before.id) if v == edit.node_id else (u, v) for u, v in edges
            ]
            edges.append((edit.before.id, edit.node_id))
        if edit.after is not None:
            nodes = nodes + (edit.after,)
            edges = [(edit.after.id, v) if u == edit.node_id else (u, v) for u, v in edges]
            edges.append((edit.node_id, edit.after.id))
    elif isinstance(edit, RemoveEdit):
        if edit.node_id not in plan.node_map():
            raise EditRejected(f"remove target {edit.node_id!r} is not in the plan")
        nodes = tuple(n for n in plan.nodes if n.id != edit.node_id)
        predecessors = plan.predecessors(edit.node_id)
        successors = plan.successors(edit.node_id)
        edges = [(u, v) for u, v in plan.edges if edit.node_id not in (u, v)]
        if edit.reconnect:
            edges.extend((p, s) for p in predecessors for s in successors)
    else:
        raise EditRejected(f"unknown edit type {type(edit).__name__}")

    candidate = PlanSpec(nodes=nodes, edges=_dedupe(edges), task_ref=plan.task_ref)
    report = validate_plan(candidate, task)
    if not report.valid:
        reasons = "; ".join(f"{v.kind}:{v.subject}" for v in report.violations)
        raise EditRejected(f"edit would invalidate the plan ({reasons})")
    return candidate


def edit_to_dict(edit: Edit) -> dict[str, Any]:
    if isinstance(edit, InsertEdit):
        return {
            "op": "insert",
            "node": edit.node.to_dict(),
            "incoming": list(edit.incoming),
            "outgoing": list(edit.outgoing),
            "issue_ref": edit.issue_ref,
        }
    if isinstance(edit, ReplaceEdit):
        return {
            "op": "replace",
            "node_id": edit.node_id,
            "new_node": edit.new_node.to_dict(),
            "issue_ref": edit.issue_ref,
        }
    if isinstance(edit, WrapEdit):
        return {
            "op": "wrap",
            "node_id": edit.node_id,
            "before": edit.before.to_dict() if edit.before else None,
            "after": edit.after.to_dict() if edit.after else None,
            "issue_ref": edit.issue_ref,
        }
    return {
        "op": "remove",
        "node_id": edit.node_id,
        "reconnect": edit.reconnect,
        "issue_ref": edit.issue_ref,
    }


def edit_from_dict(doc: dict[str, Any]) -> Edit:
    op = doc["op"]
    if op == "insert":
        return InsertEdit(
            node=PlanNode.from_dict(doc["node"]),
            incoming=tuple(doc.get("incoming", ())),
            outgoing=tuple(doc.get("outgoing", ())),
            issue_ref=doc.get("issue_ref", ""),
        )
    if op == "replace":
        return ReplaceEdit(doc["node_id"], PlanNode.from_dict(doc["new_node"]), doc.get("issue_ref", ""))
    if op == "wrap":
        return WrapEdit(
            node_id=doc["node_id"],
            before=PlanNode.from_dict(doc["before"]) if doc.get("before") else None,
            after=PlanNode.from_dict(doc["after"]) if doc.get("after") else None,
            issue_ref=doc.get("issue_ref", ""),
        )
    if op == "remove":
        return RemoveEdit(doc["node_id"], bool(doc.get("reconnect", True)), doc.get("issue_ref", ""))
    raise ValueError(f"unknown edit op {op!r}")
