"""Domain types, plan validation, and the schema-compatibility algebra."""

from orchard.core.compat import CompatReport, FieldMatch, schema_compatible, types_compatible
from orchard.core.types import (
    CheckResult,
    ConstraintExpr,
    Deliverable,
    EvidenceEntry,
    EvidenceReq,
    ExecutionTrace,
    NeedContract,
    PlanNode,
    PlanSpec,
    Provenance,
    QualityCriterion,
    Reliability,
    Schema,
    SchemaField,
    SemanticType,
    StepRecord,
    TaskEnvelope,
    ToolCard,
    canonical_json,
    value_conforms,
)
from orchard.core.validation import (
    ValidationReport,
    Violation,
    topological_order,
    validate_plan,
)

__all__ = [
    "CheckResult",
    "CompatReport",
    "ConstraintExpr",
    "Deliverable",
    "EvidenceEntry",
    "EvidenceReq",
    "ExecutionTrace",
    "FieldMatch",
    "NeedContract",
    "PlanNode",
    "PlanSpec",
    "Provenance",
    "QualityCriterion",
    "Reliability",
    "Schema",
    "SchemaField",
    "SemanticType",
    "StepRecord",
    "TaskEnvelope",
    "ToolCard",
    "ValidationReport",
    "Violation",
    "canonical_json",
    "schema_compatible",
    "topological_order",
    "types_compatible",
    "validate_plan",
    "value_conforms",
]
