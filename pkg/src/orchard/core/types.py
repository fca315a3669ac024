"""Immutable domain types for tasks, schemas, plans, contracts, tools, and traces.

Every type is a frozen dataclass with a canonical JSON representation
(`to_dict` / `from_dict`), so documents round-trip bit-for-bit through the
on-disk stores. Structural invariants that make an object meaningless are
enforced at construction; graph-level invariants (cycles, dangling edges,
schema closure) are the validator's job so that malformed plans can still be
represented, inspected, and repaired.
"""

from __future__ import annotations

import json
import math
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any

_MAX_LIST_NESTING = 3

_KINDS_SCALAR = frozenset(
    {"text", "number", "boolean", "date-range", "geo-region", "image-ref", "audio-ref", "record", "table"}
)

_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


def canonical_json(value: Any) -> str:
    """Serialize to the canonical form used for digests and golden files."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValueError(message)


# ---------------------------------------------------------------------------
# Semantic types and schemas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemanticType:
    """A field type: scalar kind, `list-of` a nested type, or `enum-of` a value set.

    Numbers may carry a unit tag; two number types are only interchangeable
    when their units agree.
    """

    kind: str
    unit: str | None = None
    element: "SemanticType | None" = None
    values: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "list-of":
            _require(self.element is not None, "list-of requires an element type")
            _require(self._depth() <= _MAX_LIST_NESTING, "list-of nesting deeper than 3")
        elif self.kind == "enum-of":
            _require(len(self.values) > 0, "enum-of requires a non-empty value set")
        else:
            _require(self.kind in _KINDS_SCALAR, f"unknown type kind {self.kind!r}")
        if self.unit is not None:
            _require(self.kind == "number", "only number types carry a unit")

    def _depth(self) -> int:
        if self.kind == "list-of":
            assert self.element is not None
            return 1 + self.element._depth()
        return 0

    # Constructors keep call sites readable.
    @classmethod
    def text(cls) -> "SemanticType":
        return cls("text")

    @classmethod
    def number(cls, unit: str | None = None) -> "SemanticType":
        return cls("number", unit=unit)

    @classmethod
    def boolean(cls) -> "SemanticType":
        return cls("boolean")

    @classmethod
    def date_range(cls) -> "SemanticType":
        return cls("date-range")

    @classmethod
    def geo_region(cls) -> "SemanticType":
        return cls("geo-region")

    @classmethod
    def image_ref(cls) -> "SemanticType":
        return cls("image-ref")

    @classmethod
    def audio_ref(cls) -> "SemanticType":
        return cls("audio-ref")

    @classmethod
    def record(cls) -> "SemanticType":
        return cls("record")

    @classmethod
    def table(cls) -> "SemanticType":
        return cls("table")

    @classmethod
    def list_of(cls, element: "SemanticType") -> "SemanticType":
        return cls("list-of", element=element)

    @classmethod
    def enum_of(cls, values: Sequence[str]) -> "SemanticType":
        return cls("enum-of", values=tuple(values))

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"kind": self.kind}
        if self.unit is not None:
            doc["unit"] = self.unit
        if self.element is not None:
            doc["element"] = self.element.to_dict()
        if self.values:
            doc["values"] = list(self.values)
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SemanticType":
        element = doc.get("element")
        return cls(
            kind=doc["kind"],
            unit=doc.get("unit"),
            element=cls.from_dict(element) if element is not None else None,
            values=tuple(doc.get("values", ())),
        )


@dataclass(frozen=True)
class SchemaField:
    name: str
    type: SemanticType
    required: bool = True

    def __post_init__(self) -> None:
        _require(bool(self.name), "field name must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "type": self.type.to_dict(), "required": self.required}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "SchemaField":
        return cls(doc["name"], SemanticType.from_dict(doc["type"]), bool(doc.get("required", True)))


@dataclass(frozen=True)
class Schema:
    """An ordered list of uniquely named typed fields."""

    fields: tuple[SchemaField, ...] = ()

    def __post_init__(self) -> None:
        names = [f.name for f in self.fields]
        _require(len(names) == len(set(names)), "duplicate field names in schema")

    @classmethod
    def of(cls, *fields: SchemaField) -> "Schema":
        return cls(tuple(fields))

    def field_map(self) -> dict[str, SchemaField]:
        return {f.name: f for f in self.fields}

    def required_fields(self) -> tuple[SchemaField, ...]:
        return tuple(f for f in self.fields if f.required)

    def is_empty(self) -> bool:
        return not self.fields

    def conformance_issues(self, record: Mapping[str, Any]) -> list[str]:
        """Why `record` does not conform to this schema; empty means it does."""
        issues: list[str] = []
        for f in self.fields:
            if f.name not in record or record[f.name] is None:
                if f.required:
                    issues.append(f"missing required field {f.name!r}")
                continue
            if not value_conforms(record[f.name], f.type):
                issues.append(f"field {f.name!r} does not conform to {f.type.kind}")
        return issues

    def to_dict(self) -> dict[str, Any]:
        return {"fields": [f.to_dict() for f in self.fields]}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "Schema":
        return cls(tuple(SchemaField.from_dict(f) for f in doc["fields"]))


def value_conforms(value: Any, stype: SemanticType) -> bool:
    """Structural conformance of a concrete value to a semantic type."""
    kind = stype.kind
    if kind == "text":
        return isinstance(value, str)
    if kind == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
    if kind == "boolean":
        return isinstance(value, bool)
    if kind == "date-range":
        return (
            isinstance(value, Sequence)
            and not isinstance(value, str)
            and len(value) == 2
            and all(isinstance(v, str) and _DATE_RE.match(v) for v in value)
        )
    if kind in ("geo-region", "image-ref", "audio-ref"):
        return isinstance(value, str) and bool(value)
    if kind == "record":
        return isinstance(value, Mapping)
    if kind == "table":
        return isinstance(value, Sequence) and not isinstance(value, str) and all(
            isinstance(row, Mapping) for row in value
        )
    if kind == "list-of":
        assert stype.element is not None
        return isinstance(value, Sequence) and not isinstance(value, str) and all(
            value_conforms(v, stype.element) for v in value
        )
    if kind == "enum-of":
        return value in stype.values
    return False


# ---------------------------------------------------------------------------
# Constraints and quality criteria
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstraintExpr:
    """A machine-checkable execution constraint.

    Kinds: ``range(field, lo, hi)``, ``enum-member(field, values)``,
    ``format(field, pattern)``, and ``policy(rule_id)``. Policy constraints
    are governance markers; they are discharged by citation rather than by
    inspecting a value record.
    """

    kind: str
    description: str = ""
    field: str | None = None
    lo: float | None = None
    hi: float | None = None
    values: tuple[str, ...] = ()
    pattern: str | None = None
    rule_id: str | None = None

    def __post_init__(self) -> None:
        _require(self.kind in ("range", "enum-member", "format", "policy"), f"unknown constraint kind {self.kind!r}")
        if self.kind == "policy":
            _require(bool(self.rule_id), "policy constraint requires a rule id")
        else:
            _require(bool(self.field), f"{self.kind} constraint requires a field")
        if self.kind == "range":
            _require(self.lo is not None and self.hi is not None, "range constraint requires lo and hi")

    @classmethod
    def range_of(cls, fname: str, lo: float, hi: float, description: str = "") -> "ConstraintExpr":
        return cls("range", description=description, field=fname, lo=lo, hi=hi)

    @classmethod
    def enum_member(cls, fname: str, values: Sequence[str], description: str = "") -> "ConstraintExpr":
        return cls("enum-member", description=description, field=fname, values=tuple(values))

    @classmethod
    def format_of(cls, fname: str, pattern: str, description: str = "") -> "ConstraintExpr":
        return cls("format", description=description, field=fname, pattern=pattern)

    @classmethod
    def policy(cls, rule_id: str, description: str = "") -> "ConstraintExpr":
        return cls("policy", description=description, rule_id=rule_id)

    def label(self) -> str:
        if self.kind == "policy":
            return f"policy({self.rule_id})"
        if self.kind == "range":
            return f"range({self.field},{self.lo},{self.hi})"
        if self.kind == "enum-member":
            return f"enum-member({self.field})"
        return f"format({self.field})"

    def evaluate(self, record: Mapping[str, Any], citations: Sequence[str] = ()) -> str:
        """Evaluate against a value record: ``pass``, ``fail``, or ``not-evaluable``."""
        if self.kind == "policy":
            return "pass" if self.rule_id in citations else "fail"
        assert self.field is not None
        if self.field not in record or record[self.field] is None:
            return "not-evaluable"
        value = record[self.field]
        if self.kind == "range":
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                return "fail"
            assert self.lo is not None and self.hi is not None
            return "pass" if self.lo <= value <= self.hi else "fail"
        if self.kind == "enum-member":
            return "pass" if value in self.values else "fail"
        assert self.pattern is not None
        if not isinstance(value, str):
            return "fail"
        return "pass" if re.fullmatch(self.pattern, value) else "fail"

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"kind": self.kind, "description": self.description}
        if self.field is not None:
            doc["field"] = self.field
        if self.lo is not None:
            doc["lo"] = self.lo
        if self.hi is not None:
            doc["hi"] = self.hi
        if self.values:
            doc["values"] = list(self.values)
        if self.pattern is not None:
            doc["pattern"] = self.pattern
        if self.rule_id is not None:
            doc["rule_id"] = self.rule_id
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ConstraintExpr":
        return cls(
            kind=doc["kind"],
            description=doc.get("description", ""),
            field=doc.get("field"),
            lo=doc.get("lo"),
            hi=doc.get("hi"),
            values=tuple(doc.get("values", ())),
            pattern=doc.get("pattern"),
            rule_id=doc.get("rule_id"),
        )


@dataclass(frozen=True)
class QualityCriterion:
    """A success criterion checkable against a produced value record."""

    kind: str
    field: str | None = None
    lo: float | None = None
    hi: float | None = None
    pattern: str | None = None
    rule_id: str | None = None

    def __post_init__(self) -> None:
        _require(
            self.kind in ("field-present", "value-in-range", "matches-format", "cited-rule"),
            f"unknown criterion kind {self.kind!r}",
        )
        if self.kind == "cited-rule":
            _require(bool(self.rule_id), "cited-rule requires a rule id")
        else:
            _require(bool(self.field), f"{self.kind} requires a field")
        if self.kind == "value-in-range":
            _require(self.lo is not None and self.hi is not None, "value-in-range requires lo and hi")

    @classmethod
    def field_present(cls, fname: str) -> "QualityCriterion":
        return cls("field-present", field=fname)

    @classmethod
    def value_in_range(cls, fname: str, lo: float, hi: float) -> "QualityCriterion":
        return cls("value-in-range", field=fname, lo=lo, hi=hi)

    @classmethod
    def matches_format(cls, fname: str, pattern: str) -> "QualityCriterion":
        return cls("matches-format", field=fname, pattern=pattern)

    @classmethod
    def cited_rule(cls, rule_id: str) -> "QualityCriterion":
        return cls("cited-rule", rule_id=rule_id)

    def label(self) -> str:
        if self.kind == "cited-rule":
            return f"cited-rule({self.rule_id})"
        if self.kind == "value-in-range":
            return f"value-in-range({self.field},{self.lo},{self.hi})"
        return f"{self.kind}({self.field})"

    def evaluate(self, record: Mapping[str, Any], citations: Sequence[str] = ()) -> str:
        if self.kind == "cited-rule":
            return "pass" if self.rule_id in citations else "fail"
        assert self.field is not None
        present = self.field in record and record[self.field] is not None
        if self.kind == "field-present":
            return "pass" if present else "fail"
        if not present:
            return "not-evaluable"
        value = record[self.field]
        if self.kind == "value-in-range":
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                return "fail"
            assert self.lo is not None and self.hi is not None
            return "pass" if self.lo <= value <= self.hi else "fail"
        assert self.pattern is not None
        if not isinstance(value, str):
            return "fail"
        return "pass" if re.fullmatch(self.pattern, value) else "fail"

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"kind": self.kind}
        for key in ("field", "lo", "hi", "pattern", "rule_id"):
            value = getattr(self, key)
            if value is not None:
                doc[key] = value
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "QualityCriterion":
        return cls(
            kind=doc["kind"],
            field=doc.get("field"),
            lo=doc.get("lo"),
            hi=doc.get("hi"),
            pattern=doc.get("pattern"),
            rule_id=doc.get("rule_id"),
        )


@dataclass(frozen=True)
class EvidenceReq:
    """Requires a claim field to be backed by at least `min_sources` sources."""

    claim_field: str
    min_sources: int = 1

    def __post_init__(self) -> None:
        _require(self.min_sources >= 1, "min_sources must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {"claim_field": self.claim_field, "min_sources": self.min_sources}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "EvidenceReq":
        return cls(doc["claim_field"], int(doc.get("min_sources", 1)))


# ---------------------------------------------------------------------------
# Tasks, plans, contracts
# ---------------------------------------------------------------------------


def _freeze_context(context: Mapping[str, Any]) -> tuple[tuple[str, Any], ...]:
    return tuple(sorted(context.items()))


@dataclass(frozen=True)
class TaskEnvelope:
    """A user task: instruction plus context, knowledge refs, and a state ref.

    Context keys cover things like crop type, geographic region, temporal
    scope, resource constraints, and policy conditions.
    """

    id: str
    instruction: str
    context: tuple[tuple[str, Any], ...] = ()
    knowledge_refs: tuple[str, ...] = ()
    state_ref: str | None = None

    def __post_init__(self) -> None:
        _require(bool(self.instruction.strip()), "instruction must be non-empty")
        keys = [k for k, _ in self.context]
        _require(len(keys) == len(set(keys)), "duplicate context keys")

    @classmethod
    def new(
        cls,
        instruction: str,
        context: Mapping[str, Any] | None = None,
        knowledge_refs: Sequence[str] = (),
        state_ref: str | None = None,
        task_id: str = "task-0",
    ) -> "TaskEnvelope":
        return cls(
            id=task_id,
            instruction=instruction,
            context=_freeze_context(context or {}),
            knowledge_refs=tuple(knowledge_refs),
            state_ref=state_ref,
        )

    def context_map(self) -> dict[str, Any]:
        return dict(self.context)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "instruction": self.instruction,
            "context": {k: v for k, v in self.context},
            "knowledge_refs": list(self.knowledge_refs),
            "state_ref": self.state_ref,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "TaskEnvelope":
        return cls.new(
            instruction=doc["instruction"],
            context=doc.get("context", {}),
            knowledge_refs=doc.get("knowledge_refs", ()),
            state_ref=doc.get("state_ref"),
            task_id=doc.get("id", "task-0"),
        )


@dataclass(frozen=True)
class PlanNode:
    """An atomic execution unit: goal, typed I/O, constraints, evidence needs."""

    id: str
    goal: str
    inputs: Schema = Schema()
    outputs: Schema = Schema()
    constraints: tuple[ConstraintExpr, ...] = ()
    evidence_reqs: tuple[EvidenceReq, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "goal": self.goal,
            "inputs": self.inputs.to_dict(),
            "outputs": self.outputs.to_dict(),
            "constraints": [c.to_dict() for c in self.constraints],
            "evidence_reqs": [e.to_dict() for e in self.evidence_reqs],
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "PlanNode":
        return cls(
            id=doc["id"],
            goal=doc.get("goal", ""),
            inputs=Schema.from_dict(doc.get("inputs", {"fields": []})),
            outputs=Schema.from_dict(doc.get("outputs", {"fields": []})),
            constraints=tuple(ConstraintExpr.from_dict(c) for c in doc.get("constraints", ())),
            evidence_reqs=tuple(EvidenceReq.from_dict(e) for e in doc.get("evidence_reqs", ())),
        )


@dataclass(frozen=True)
class PlanSpec:
    """A DAG of plan nodes; edges are (from, to) dependencies."""

    nodes: tuple[PlanNode, ...]
    edges: tuple[tuple[str, str], ...] = ()
    task_ref: str = ""

    def node_map(self) -> dict[str, PlanNode]:
        return {n.id: n for n in self.nodes}

    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def predecessors(self, node_id: str) -> list[str]:
        return [u for u, v in self.edges if v == node_id]

    def successors(self, node_id: str) -> list[str]:
        return [v for u, v in self.edges if u == node_id]

    def terminal_ids(self) -> list[str]:
        with_out = {u for u, _ in self.edges}
        return [n.id for n in self.nodes if n.id not in with_out]

    def ancestors(self, node_id: str) -> set[str]:
        """All transitive predecessors of `node_id` (excluding itself)."""
        seen: set[str] = set()
        frontier = list(self.predecessors(node_id))
        while frontier:
            current = frontier.pop()
            if current in seen:
                continue
            seen.add(current)
            frontier.extend(self.predecessors(current))
        return seen

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": [n.to_dict() for n in self.nodes],
            "edges": [{"from": u, "to": v} for u, v in self.edges],
            "task_ref": self.task_ref,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "PlanSpec":
        return cls(
            nodes=tuple(PlanNode.from_dict(n) for n in doc["nodes"]),
            edges=tuple((e["from"], e["to"]) for e in doc.get("edges", ())),
            task_ref=doc.get("task_ref", ""),
        )


@dataclass(frozen=True)
class NeedContract:
    """A capability-level requirement attached to a plan node.

    Declares what is required (capability, schemas, preconditions,
    constraints, quality criteria) without naming any concrete tool.
    """

    node_id: str
    capability_tag: str
    capability_description: str
    input_schema: Schema = Schema()
    output_schema: Schema = Schema()
    preconditions: tuple[ConstraintExpr, ...] = ()
    constraints: tuple[ConstraintExpr, ...] = ()
    quality: tuple[QualityCriterion, ...] = ()

    def __post_init__(self) -> None:
        _require(bool(self.capability_tag), "capability tag must be non-empty")
        _require(not self.output_schema.is_empty(), "output schema must be non-empty")

    @property
    def id(self) -> str:
        return f"contract:{self.node_id}:{self.capability_tag}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_id": self.node_id,
            "capability": {"tag": self.capability_tag, "description": self.capability_description},
            "input_schema": self.input_schema.to_dict(),
            "output_schema": self.output_schema.to_dict(),
            "preconditions": [c.to_dict() for c in self.preconditions],
            "constraints": [c.to_dict() for c in self.constraints],
            "quality": [q.to_dict() for q in self.quality],
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "NeedContract":
        cap = doc["capability"]
        return cls(
            node_id=doc["node_id"],
            capability_tag=cap["tag"],
            capability_description=cap.get("description", ""),
            input_schema=Schema.from_dict(doc.get("input_schema", {"fields": []})),
            output_schema=Schema.from_dict(doc["output_schema"]),
            preconditions=tuple(ConstraintExpr.from_dict(c) for c in doc.get("preconditions", ())),
            constraints=tuple(ConstraintExpr.from_dict(c) for c in doc.get("constraints", ())),
            quality=tuple(QualityCriterion.from_dict(q) for q in doc.get("quality", ())),
        )


# ---------------------------------------------------------------------------
# Tool cards
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Reliability:
    attempts: int = 0
    successes: int = 0

    def __post_init__(self) -> None:
        _require(self.attempts >= 0 and self.successes >= 0, "counters must be non-negative")
        _require(self.successes <= self.attempts, "successes cannot exceed attempts")

    @property
    def rate(self) -> float:
        # A tool with no history is not penalized for it.
        return self.successes / self.attempts if self.attempts else 1.0

    def bump(self, success: bool) -> "Reliability":
        return Reliability(self.attempts + 1, self.successes + (1 if success else 0))

    def to_dict(self) -> dict[str, Any]:
        return {"attempts": self.attempts, "successes": self.successes}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "Reliability":
        return cls(int(doc.get("attempts", 0)), int(doc.get("successes", 0)))


@dataclass(frozen=True)
class Provenance:
    origin: str = "builtin"
    version: str = "0"
    registered_at: str = ""

    def __post_init__(self) -> None:
        _require(self.origin in ("builtin", "third-party", "toolmaker"), f"unknown origin {self.origin!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"origin": self.origin, "version": self.version, "registered_at": self.registered_at}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "Provenance":
        return cls(doc.get("origin", "builtin"), doc.get("version", "0"), doc.get("registered_at", ""))


@dataclass(frozen=True)
class ToolCard:
    """A registered tool's capabilities, schemas, constraints, and history."""

    id: str
    name: str
    capabilities: tuple[tuple[str, str], ...]
    input_schema: Schema = Schema()
    output_schema: Schema = Schema()
    preconditions: tuple[ConstraintExpr, ...] = ()
    constraints: tuple[ConstraintExpr, ...] = ()
    reliability: Reliability = Reliability()
    provenance: Provenance = Provenance()

    def __post_init__(self) -> None:
        _require(bool(self.id), "tool id must be non-empty")
        _require(len(self.capabilities) >= 1, "a tool card needs at least one capability")

    def capability_text(self) -> str:
        return " ".join(f"{tag} {desc}" for tag, desc in self.capabilities)

    def with_reliability(self, reliability: Reliability) -> "ToolCard":
        return ToolCard(
            id=self.id,
            name=self.name,
            capabilities=self.capabilities,
            input_schema=self.input_schema,
            output_schema=self.output_schema,
            preconditions=self.preconditions,
            constraints=self.constraints,
            reliability=reliability,
            provenance=self.provenance,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "name": self.name,
            "capabilities": [{"tag": t, "description": d} for t, d in self.capabilities],
            "input_schema": self.input_schema.to_dict(),
            "output_schema": self.output_schema.to_dict(),
            "preconditions": [c.to_dict() for c in self.preconditions],
            "constraints": [c.to_dict() for c in self.constraints],
            "reliability": self.reliability.to_dict(),
            "provenance": self.provenance.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ToolCard":
        return cls(
            id=doc["id"],
            name=doc.get("name", doc["id"]),
            capabilities=tuple((c["tag"], c.get("description", "")) for c in doc["capabilities"]),
            input_schema=Schema.from_dict(doc.get("input_schema", {"fields": []})),
            output_schema=Schema.from_dict(doc.get("output_schema", {"fields": []})),
            preconditions=tuple(ConstraintExpr.from_dict(c) for c in doc.get("preconditions", ())),
            constraints=tuple(ConstraintExpr.from_dict(c) for c in doc.get("constraints", ())),
            reliability=Reliability.from_dict(doc.get("reliability", {})),
            provenance=Provenance.from_dict(doc.get("provenance", {})),
        )


# ---------------------------------------------------------------------------
# Traces and deliverables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named check: pass, fail, or not-evaluable."""

    check: str
    status: str

    def __post_init__(self) -> None:
        _require(self.status in ("pass", "fail", "not-evaluable"), f"bad status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict[str, Any]:
        return {"check": self.check, "status": self.status}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "CheckResult":
        return cls(doc["check"], doc["status"])


@dataclass(frozen=True)
class StepRecord:
    """One attempted tool invocation for one plan node."""

    step_id: str
    node_id: str
    contract_id: str
    tool_id: str
    input_digest: str
    output_record: tuple[tuple[str, Any], ...]
    validation: tuple[CheckResult, ...]
    started_at: float
    ended_at: float
    attempt_index: int
    ok: bool

    def output_map(self) -> dict[str, Any]:
        return dict(self.output_record)

    def to_dict(self) -> dict[str, Any]:
        return {
            "step_id": self.step_id,
            "node_id": self.node_id,
            "contract_id": self.contract_id,
            "tool_id": self.tool_id,
            "input_digest": self.input_digest,
            "output_record": {k: v for k, v in self.output_record},
            "validation": [c.to_dict() for c in self.validation],
            "started_at": self.started_at,
            "ended_at": self.ended_at,
            "attempt_index": self.attempt_index,
            "ok": self.ok,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "StepRecord":
        return cls(
            step_id=doc["step_id"],
            node_id=doc["node_id"],
            contract_id=doc["contract_id"],
            tool_id=doc["tool_id"],
            input_digest=doc["input_digest"],
            output_record=tuple(sorted(doc.get("output_record", {}).items())),
            validation=tuple(CheckResult.from_dict(c) for c in doc.get("validation", ())),
            started_at=doc["started_at"],
            ended_at=doc["ended_at"],
            attempt_index=int(doc["attempt_index"]),
            ok=bool(doc["ok"]),
        )


@dataclass(frozen=True)
class ExecutionTrace:
    """Ordered step records plus an overall status."""

    steps: tuple[StepRecord, ...]
    status: str

    def __post_init__(self) -> None:
        _require(self.status in ("complete", "partial", "failed"), f"bad trace status {self.status!r}")

    def step_ids(self) -> set[str]:
        return {s.step_id for s in self.steps}

    def to_dict(self) -> dict[str, Any]:
        return {"steps": [s.to_dict() for s in self.steps], "status": self.status}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ExecutionTrace":
        return cls(tuple(StepRecord.from_dict(s) for s in doc["steps"]), doc["status"])


@dataclass(frozen=True)
class EvidenceEntry:
    """Links one claim field to the steps and sources that back it."""

    claim_field: str
    step_ids: tuple[str, ...]
    sources: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "claim_field": self.claim_field,
            "step_ids": list(self.step_ids),
            "sources": list(self.sources),
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "EvidenceEntry":
        return cls(doc["claim_field"], tuple(doc["step_ids"]), tuple(doc.get("sources", ())))


@dataclass(frozen=True)
class Deliverable:
    """Final structured output with its provenance bundle."""

    answer: str
    structured: tuple[tuple[str, Any], ...]
    evidence: tuple[EvidenceEntry, ...] = ()
    rule_citations: tuple[str, ...] = ()

    @classmethod
    def new(
        cls,
        answer: str,
        structured: Mapping[str, Any] | None = None,
        evidence: Sequence[EvidenceEntry] = (),
        rule_citations: Sequence[str] = (),
    ) -> "Deliverable":
        return cls(
            answer=answer,
            structured=tuple(sorted((structured or {}).items())),
            evidence=tuple(evidence),
            rule_citations=tuple(rule_citations),
        )

    def structured_map(self) -> dict[str, Any]:
        return dict(self.structured)

    def to_dict(self) -> dict[str, Any]:
        return {
            "answer": self.answer,
            "structured": {k: v for k, v in self.structured},
            "evidence": [e.to_dict() for e in self.evidence],
            "rule_citations": list(self.rule_citations),
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "Deliverable":
        return cls.new(
            answer=doc.get("answer", ""),
            structured=doc.get("structured", {}),
            evidence=[EvidenceEntry.from_dict(e) for e in doc.get("evidence", ())],
            rule_citations=doc.get("rule_citations", ()),
        )
