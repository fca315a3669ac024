"""The four deterministic evaluation metrics over final execution results.

Each metric is a plain fraction: satisfied items over required items,
computed with exact integer counts. An empty requirement set scores 1.0 and
is flagged vacuous so reports can distinguish earned success from absence of
requirements. LLM-judged metrics are out of band: a judge is a pluggable
callable, none is bundled.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any, Protocol

from orchard.core.types import (
    ConstraintExpr,
    Deliverable,
    ExecutionTrace,
    NeedContract,
    TaskEnvelope,
    value_conforms,
)


@dataclass(frozen=True)
class MetricScore:
    name: str
    satisfied: int
    required: int
    breakdown: tuple[tuple[str, bool], ...]

    @property
    def value(self) -> float:
        return self.satisfied / self.required if self.required else 1.0

    @property
    def vacuous(self) -> bool:
        return self.required == 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "satisfied": self.satisfied,
            "required": self.required,
            "vacuous": self.vacuous,
            "breakdown": [{"item": item, "satisfied": ok} for item, ok in self.breakdown],
        }


@dataclass(frozen=True)
class MetricReport:
    presence_coverage: MetricScore
    rule_citation: MetricScore
    evidence_presence: MetricScore
    normalization: MetricScore

    def to_dict(self) -> dict[str, Any]:
        return {
            "presence_coverage": self.presence_coverage.to_dict(),
            "rule_citation": self.rule_citation.to_dict(),
            "evidence_presence": self.evidence_presence.to_dict(),
            "normalization": self.normalization.to_dict(),
        }

    def row(self) -> dict[str, float]:
        """The compact report row: one value per metric column."""
        return {
            "presence_coverage": self.presence_coverage.value,
            "rule_citation": self.rule_citation.value,
            "evidence_presence": self.evidence_presence.value,
            "normalization": self.normalization.value,
        }


def _score(name: str, items: Sequence[tuple[str, bool]]) -> MetricScore:
    return MetricScore(
        name=name,
        satisfied=sum(1 for _, ok in items if ok),
        required=len(items),
        breakdown=tuple(items),
    )


def presence_coverage(deliverable: Deliverable, contracts: Sequence[NeedContract]) -> MetricScore:
    """Required contract output fields instantiated (non-null, type-conformant)."""
    structured = deliverable.structured_map()
    items: list[tuple[str, bool]] = []
    for contract in contracts:
        for field in contract.output_schema.required_fields():
            value = structured.get(field.name)
            ok = value is not None and value_conforms(value, field.type)
            items.append((f"{contract.node_id}.{field.name}", ok))
    return _score("presence_coverage", items)


def rule_citation(deliverable: Deliverable, required_rules: Sequence[str]) -> MetricScore:
    """Required rule ids explicitly present in the structured citation list.

    Free-text mentions do not count; the structural field is authoritative.
    """
    cited = set(deliverable.rule_citations)
    items = [(rule, rule in cited) for rule in required_rules]
    return _score("rule_citation", items)


def evidence_presence(deliverable: Deliverable, trace: ExecutionTrace) -> MetricScore:
    """Claim fields backed by a non-empty evidence entry resolvable in the trace."""
    known_steps = trace.step_ids()
    backed: dict[str, bool] = {}
    for entry in deliverable.evidence:
        resolvable = bool(entry.step_ids) and all(s in known_steps for s in entry.step_ids)
        backed[entry.claim_field] = backed.get(entry.claim_field, False) or resolvable
    items = [
        (claim, backed.get(claim, False))
        for claim, _ in deliverable.structured
    ]
    return _score("evidence_presence", items)


def normalization_check(deliverable: Deliverable, norm_rules: Sequence[ConstraintExpr]) -> MetricScore:
    """Applicable normalization rules satisfied by the structured deliverable.

    A field rule is applicable when its field is present; policy rules are
    always applicable and are discharged by citation.
    """
    structured = deliverable.structured_map()
    citations = deliverable.rule_citations
    items: list[tuple[str, bool]] = []
    for rule in norm_rules:
        verdict = rule.evaluate(structured, citations)
        if verdict == "not-evaluable":
            continue  # field absent: the rule does not apply
        items.append((rule.label(), verdict == "pass"))
    return _score("normalization", items)


def compute_report(
    deliverable: Deliverable,
    contracts: Sequence[NeedContract],
    trace: ExecutionTrace,
    required_rules: Sequence[str] = (),
    norm_rules: Sequence[ConstraintExpr] = (),
) -> MetricReport:
    return MetricReport(
        presence_coverage=presence_coverage(deliverable, contracts),
        rule_citation=rule_citation(deliverable, required_rules),
        evidence_presence=evidence_presence(deliverable, trace),
        normalization=normalization_check(deliverable, norm_rules),
    )


class Judge(Protocol):
    """Interface for model-based scoring; none is bundled."""

    def score(
        self,
        task: TaskEnvelope,
        deliverable: Deliverable,
        trace: ExecutionTrace,
    ) -> Mapping[str, float]: ...
