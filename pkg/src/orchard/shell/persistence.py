"""On-disk documents: plans, tool cards, contracts, traces, deliverables.

Every document is canonical JSON (sorted keys, compact separators) so a
rerun that produces the same values produces the same bytes. Traces and
debate logs are append-only: one record per line.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from orchard.core.types import (
    Deliverable,
    ExecutionTrace,
    NeedContract,
    PlanSpec,
    StepRecord,
    TaskEnvelope,
    ToolCard,
    canonical_json,
)


def save_doc(path: str | Path, doc: Any) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    temporary = target.with_name(target.name + ".tmp")
    temporary.write_text(canonical_json(doc) + "\n", encoding="utf-8")
    temporary.replace(target)


def load_doc(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def append_record(path: str | Path, record: Any) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("a", encoding="utf-8") as handle:
        handle.write(canonical_json(record) + "\n")


def read_records(path: str | Path) -> list[Any]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]


# --- typed wrappers ----------------------------------------------------------


def save_plan(path: str | Path, plan: PlanSpec) -> None:
    save_doc(path, plan.to_dict())


def load_plan(path: str | Path) -> PlanSpec:
    return PlanSpec.from_dict(load_doc(path))


def save_task(path: str | Path, task: TaskEnvelope) -> None:
    save_doc(path, task.to_dict())


def load_task(path: str | Path) -> TaskEnvelope:
    return TaskEnvelope.from_dict(load_doc(path))


def save_tool_card(path: str | Path, card: ToolCard) -> None:
    save_doc(path, card.to_dict())


def load_tool_card(path: str | Path) -> ToolCard:
    return ToolCard.from_dict(load_doc(path))


def load_contracts(path: str | Path) -> dict[str, NeedContract]:
    doc = load_doc(path)
    return {node_id: NeedContract.from_dict(item) for node_id, item in doc.items()}


def save_contracts(path: str | Path, contracts: dict[str, NeedContract]) -> None:
    save_doc(path, {node_id: c.to_dict() for node_id, c in contracts.items()})


def save_deliverable(path: str | Path, deliverable: Deliverable) -> None:
    save_doc(path, deliverable.to_dict())


def load_deliverable(path: str | Path) -> Deliverable:
    return Deliverable.from_dict(load_doc(path))


def write_debate_log(path: str | Path, logs) -> None:
    """One record per issue, resolution, and edit, in round order."""
    for round_index, log in enumerate(logs):
        doc = log.to_dict()
        for issue in doc["issues"]:
            append_record(path, {"type": "issue", "round": round_index, **issue})
        for resolution in doc["resolutions"]:
            append_record(path, {"type": "resolution", "round": round_index, **resolution})
        for edit in doc["applied_edits"]:
            append_record(path, {"type": "edit", "round": round_index, "applied": True, "edit": edit})
        for rejected in doc["rejected_edits"]:
            append_record(
                path,
                {"type": "edit", "round": round_index, "applied": False, **rejected},
            )


def write_trace(path: str | Path, trace: ExecutionTrace) -> None:
    """One step record per line, then a final status record."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    lines = [canonical_json({"type": "step", **step.to_dict()}) for step in trace.steps]
    lines.append(canonical_json({"type": "status", "status": trace.status}))
    temporary = target.with_name(target.name + ".tmp")
    temporary.write_text("\n".join(lines) + "\n", encoding="utf-8")
    temporary.replace(target)


def read_trace(path: str | Path) -> ExecutionTrace:
    steps: list[StepRecord] = []
    status = "failed"
    for record in read_records(path):
        if record.get("type") == "step":
            record = {k: v for k, v in record.items() if k != "type"}
            steps.append(StepRecord.from_dict(record))
        elif record.get("type") == "status":
            status = record["status"]
    return ExecutionTrace(steps=tuple(steps), status=status)
