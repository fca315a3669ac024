"""Type invariants, value conformance, and JSON round-trips."""

from __future__ import annotations

import pytest

from orchard.core import (
    CheckResult,
    ConstraintExpr,
    Deliverable,
    EvidenceEntry,
    ExecutionTrace,
    NeedContract,
    PlanSpec,
    QualityCriterion,
    Reliability,
    Schema,
    SchemaField,
    SemanticType,
    StepRecord,
    TaskEnvelope,
    ToolCard,
    value_conforms,
)

from .conftest import mk_contract, mk_node


class TestSemanticType:
    def test_nesting_limit(self):
        three = SemanticType.list_of(SemanticType.list_of(SemanticType.list_of(SemanticType.text())))
        assert three.kind == "list-of"
        with pytest.raises(ValueError):
            SemanticType.list_of(three)

    def test_enum_requires_values(self):
        with pytest.raises(ValueError):
            SemanticType.enum_of([])

    def test_unit_only_on_numbers(self):
        with pytest.raises(ValueError):
            SemanticType("text", unit="kg")

    @pytest.mark.parametrize(
        "value,stype,ok",
        [
            ("hello", SemanticType.text(), True),
            (3.5, SemanticType.number(), True),
            (True, SemanticType.number(), False),
            (float("inf"), SemanticType.number(), False),
            (True, SemanticType.boolean(), True),
            (["2026-01-01", "2026-02-01"], SemanticType.date_range(), True),
            (["2026-01-01"], SemanticType.date_range(), False),
            ("plot-7", SemanticType.geo_region(), True),
            ("", SemanticType.geo_region(), False),
            ([1, 2, 3], SemanticType.list_of(SemanticType.number()), True),
            ([1, "x"], SemanticType.list_of(SemanticType.number()), False),
            ("low", SemanticType.enum_of(["low", "high"]), True),
            ("mid", SemanticType.enum_of(["low", "high"]), False),
            ({"k": 1}, SemanticType.record(), True),
            ([{"k": 1}], SemanticType.table(), True),
        ],
    )
    def test_value_conformance(self, value, stype, ok):
        assert value_conforms(value, stype) is ok


class TestConstraints:
    def test_range_evaluation(self):
        c = ConstraintExpr.range_of("x", 0, 100)
        assert c.evaluate({"x": 50}) == "pass"
        assert c.evaluate({"x": 150}) == "fail"
        assert c.evaluate({}) == "not-evaluable"

    def test_format_evaluation(self):
        c = ConstraintExpr.format_of("when", r"\d{4}-\d{2}-\d{2}")
        assert c.evaluate({"when": "2026-08-01"}) == "pass"
        assert c.evaluate({"when": "August 1"}) == "fail"

    def test_policy_checked_against_citations(self):
        c = ConstraintExpr.policy("water-quota-3")
        assert c.evaluate({}, citations=["water-quota-3"]) == "pass"
        assert c.evaluate({}, citations=[]) == "fail"

    def test_quality_criterion_kinds(self):
        assert QualityCriterion.field_present("q").evaluate({"q": 1}) == "pass"
        assert QualityCriterion.field_present("q").evaluate({}) == "fail"
        assert QualityCriterion.value_in_range("x", 0, 10).evaluate({"x": 0}) == "pass"
        assert QualityCriterion.value_in_range("x", 0, 10).evaluate({}) == "not-evaluable"
        assert QualityCriterion.matches_format("s", "[a-z]+").evaluate({"s": "abc"}) == "pass"
        assert QualityCriterion.cited_rule("r1").evaluate({}, citations=["r1"]) == "pass"


class TestInvariants:
    def test_task_requires_instruction(self):
        with pytest.raises(ValueError):
            TaskEnvelope.new("   ")

    def test_contract_requires_outputs(self):
        with pytest.raises(ValueError):
            mk_contract(output_schema=Schema())

    def test_reliability_counters(self):
        with pytest.raises(ValueError):
            Reliability(attempts=1, successes=2)
        assert Reliability(4, 3).rate == 0.75
        assert Reliability().rate == 1.0

    def test_tool_card_needs_capability(self):
        with pytest.raises(ValueError):
            ToolCard(id="t", name="t", capabilities=())


class TestSerde:
    def test_plan_round_trip(self):
        node = mk_node(
            "a",
            inputs=Schema.of(SchemaField("q", SemanticType.text())),
            outputs=Schema.of(SchemaField("r", SemanticType.number(unit="kg"))),
            constraints=(ConstraintExpr.range_of("r", 0, 10),),
        )
        plan = PlanSpec(nodes=(node,), edges=(), task_ref="task-1")
        assert PlanSpec.from_dict(plan.to_dict()) == plan

    def test_contract_round_trip(self):
        contract = mk_contract(
            preconditions=(ConstraintExpr.range_of("result", 0, 1, description="unit interval"),),
            quality=(QualityCriterion.field_present("result"), QualityCriterion.cited_rule("r9")),
        )
        assert NeedContract.from_dict(contract.to_dict()) == contract

    def test_tool_card_round_trip(self):
        card = ToolCard(
            id="t1",
            name="moisture probe",
            capabilities=(("measure-moisture", "read soil moisture for a plot"),),
            output_schema=Schema.of(SchemaField("moisture", SemanticType.number(unit="mm"))),
            reliability=Reliability(10, 9),
        )
        assert ToolCard.from_dict(card.to_dict()) == card

    def test_trace_round_trip(self):
        step = StepRecord(
            step_id="s1",
            node_id="a",
            contract_id="contract:a:x",
            tool_id="t1",
            input_digest="00" * 32,
            output_record=(("r", 0.5),),
            validation=(CheckResult("schema:r", "pass"),),
            started_at=1.0,
            ended_at=2.0,
            attempt_index=0,
            ok=True,
        )
        trace = ExecutionTrace(steps=(step,), status="complete")
        assert ExecutionTrace.from_dict(trace.to_dict()) == trace

    def test_deliverable_round_trip(self):
        deliverable = Deliverable.new(
            answer="irrigate 12mm",
            structured={"volume": 12},
            evidence=[EvidenceEntry("volume", ("s1",), ("tool:t1",))],
            rule_citations=["water-quota-3"],
        )
        assert Deliverable.from_dict(deliverable.to_dict()) == deliverable
