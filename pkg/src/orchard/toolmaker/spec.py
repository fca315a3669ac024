"""Deriving a testable tool specification from an unmet need contract."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from orchard.core.types import NeedContract, QualityCriterion, Schema, SemanticType
from orchard.errors import UnsynthesizableCriterion


@dataclass(frozen=True)
class ResourceLimits:
    wall_time_s: float = 2.0
    memory_mb: int = 256

    def to_dict(self) -> dict[str, Any]:
        return {"wall_time_s": self.wall_time_s, "memory_mb": self.memory_mb}


@dataclass(frozen=True)
class ToolTestCase:
    input_record: tuple[tuple[str, Any], ...]
    checks: tuple[QualityCriterion, ...]
    label: str

    def input_map(self) -> dict[str, Any]:
        return dict(self.input_record)

    def to_dict(self) -> dict[str, Any]:
        return {
            "input_record": {k: v for k, v in self.input_record},
            "checks": [c.to_dict() for c in self.checks],
            "label": self.label,
        }


@dataclass(frozen=True)
class ToolSpec:
    """What the generated tool must do, with acceptance cases baked in."""

    contract_id: str
    name: str
    capability_tag: str
    capability_description: str
    input_schema: Schema
    output_schema: Schema
    test_cases: tuple[ToolTestCase, ...]
    resource_limits: ResourceLimits = ResourceLimits()

    def __post_init__(self) -> None:
        if not self.test_cases:
            raise ValueError("a tool spec needs at least one test case")

    @property
    def id(self) -> str:
        return f"spec:{self.contract_id}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "contract_id": self.contract_id,
            "name": self.name,
            "capability_tag": self.capability_tag,
            "capability_description": self.capability_description,
            "input_schema": self.input_schema.to_dict(),
            "output_schema": self.output_schema.to_dict(),
            "test_cases": [c.to_dict() for c in self.test_cases],
            "resource_limits": self.resource_limits.to_dict(),
        }


def sample_value(stype: SemanticType) -> Any:
    """A deterministic value conforming to the type; used to seed test inputs."""
    kind = stype.kind
    if kind == "text":
        return "sample-0001"
    if kind == "number":
        return 1.0
    if kind == "boolean":
        return True
    if kind == "date-range":
        return ["2026-01-01", "2026-01-31"]
    if kind == "geo-region":
        return "region-1"
    if kind == "image-ref":
        return "img://sample"
    if kind == "audio-ref":
        return "audio://sample"
    if kind == "record":
        return {}
    if kind == "table":
        return []
    if kind == "list-of":
        assert stype.element is not None
        return [sample_value(stype.element)]
    return stype.values[0]  # enum-of


def _base_input(schema: Schema) -> dict[str, Any]:
    return {f.name: sample_value(f.type) for f in schema.fields}


def derive_spec(contract: NeedContract, limits: ResourceLimits = ResourceLimits()) -> ToolSpec:
    """Turn quality criteria into concrete test cases, deterministically.

    field-present and matches-format each yield one case; value-in-range
    yields two (the lower boundary and the interval midpoint, steered through
    the input record when the field is also an input). Criterion kinds with
    no case generator raise UnsynthesizableCriterion. A contract with no
    criteria still gets one smoke case; schema conformance is checked on
    every case regardless.
    """
    input_fields = {f.name for f in contract.input_schema.fields}
    cases: list[ToolTestCase] = []
    for criterion in contract.quality:
        base = _base_input(contract.input_schema)
        if criterion.kind == "field-present":
            cases.append(ToolTestCase(tuple(sorted(base.items())), (criterion,), f"present:{criterion.field}"))
        elif criterion.kind == "value-in-range":
            assert criterion.lo is not None and criterion.hi is not None
            boundary = dict(base)
            if criterion.field in input_fields:
                boundary[criterion.field] = criterion.lo
            cases.append(
                ToolTestCase(tuple(sorted(boundary.items())), (criterion,), f"range-boundary:{criterion.field}")
            )
            interior = dict(base)
            if criterion.field in input_fields:
                interior[criterion.field] = (criterion.lo + criterion.hi) / 2.0
            cases.append(
                ToolTestCase(tuple(sorted(interior.items())), (criterion,), f"range-interior:{criterion.field}")
            )
        elif criterion.kind == "matches-format":
            cases.append(ToolTestCase(tuple(sorted(base.items())), (criterion,), f"format:{criterion.field}"))
        else:
            raise UnsynthesizableCriterion(f"no case generator for criterion kind {criterion.kind!r}")
    if not cases:
        cases.append(ToolTestCase(tuple(sorted(_base_input(contract.input_schema).items())), (), "smoke"))
    return ToolSpec(
        contract_id=contract.id,
        name=f"made-{contract.capability_tag}",
        capability_tag=contract.capability_tag,
        capability_description=contract.capability_description,
        input_schema=contract.input_schema,
        output_schema=contract.output_schema,
        test_cases=tuple(cases),
        resource_limits=limits,
    )
