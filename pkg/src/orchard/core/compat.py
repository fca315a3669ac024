"""Schema compatibility: can a producer's output feed a consumer's input?

Compatibility is deliberately strict: a consumer field is matched only by a
producer field with the identical name and a type-compatible kind. Kinds must
be exactly equal, except that ``list-of`` is covariant in its element type.
There is no numeric widening and no field aliasing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from orchard.core.types import Schema, SemanticType


def types_compatible(producer: SemanticType, consumer: SemanticType) -> bool:
    """Exact kind equality, with list-of covariant in its element type."""
    if producer.kind != consumer.kind:
        return False
    if producer.kind == "list-of":
        assert producer.element is not None and consumer.element is not None
        return types_compatible(producer.element, consumer.element)
    if producer.kind == "enum-of":
        return set(producer.values) == set(consumer.values)
    if producer.kind == "number":
        return producer.unit == consumer.unit
    return True


@dataclass(frozen=True)
class FieldMatch:
    """How one consumer field was (or was not) matched against the producer."""

    consumer_field: str
    producer_field: str | None
    required: bool
    status: str  # matched | missing | type-mismatch | unguaranteed

    def to_dict(self) -> dict[str, Any]:
        return {
            "consumer_field": self.consumer_field,
            "producer_field": self.producer_field,
            "required": self.required,
            "status": self.status,
        }


@dataclass(frozen=True)
class CompatReport:
    satisfied: bool
    matches: tuple[FieldMatch, ...]
    warnings: tuple[str, ...] = ()

    def missing_required(self) -> list[str]:
        return [m.consumer_field for m in self.matches if m.required and m.status != "matched"]

    def to_dict(self) -> dict[str, Any]:
        return {
            "satisfied": self.satisfied,
            "matches": [m.to_dict() for m in self.matches],
            "warnings": list(self.warnings),
        }


def schema_compatible(producer: Schema, consumer: Schema) -> CompatReport:
    """Check that every required consumer field is supplied by the producer.

    A required consumer field is only satisfied by a *required* producer
    field: an optional producer field may be absent at runtime, so counting
    it would make chained compatibility unsound (and break transitivity).
    Unmatched optional consumer fields are reported as warnings, never as
    failures.
    """
    produced = producer.field_map()
    matches: list[FieldMatch] = []
    warnings: list[str] = []
    satisfied = True
    for want in consumer.fields:
        have = produced.get(want.name)
        if have is None:
            status = "missing"
            producer_field = None
        elif not types_compatible(have.type, want.type):
            status = "type-mismatch"
            producer_field = have.name
        elif want.required and not have.required:
            status = "unguaranteed"
            producer_field = have.name
        else:
            status = "matched"
            producer_field = have.name
        matches.append(FieldMatch(want.name, producer_field, want.required, status))
        if status != "matched":
            if want.required:
                satisfied = False
            else:
                warnings.append(f"optional field {want.name!r} is {status}")
    return CompatReport(satisfied=satisfied, matches=tuple(matches), warnings=tuple(warnings))
