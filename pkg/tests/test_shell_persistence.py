"""Document round-trips and append-only record files."""

from __future__ import annotations

from orchard.core import CheckResult, Deliverable, ExecutionTrace, StepRecord
from orchard.shell.persistence import (
    append_record,
    load_deliverable,
    load_plan,
    read_records,
    read_trace,
    save_deliverable,
    save_plan,
    write_trace,
)

from .conftest import mk_plan


def test_plan_round_trip(tmp_path):
    plan = mk_plan("A", "B", edges=[("A", "B")])
    path = tmp_path / "plan.json"
    save_plan(path, plan)
    assert load_plan(path) == plan


def test_deliverable_round_trip(tmp_path):
    deliverable = Deliverable.new("answer", {"x": 1}, rule_citations=["r1"])
    path = tmp_path / "out.json"
    save_deliverable(path, deliverable)
    assert load_deliverable(path) == deliverable


def test_trace_one_record_per_line(tmp_path):
    step = StepRecord(
        step_id="s0001",
        node_id="a",
        contract_id="contract:a:x",
        tool_id="t",
        input_digest="0" * 64,
        output_record=(("r", 1),),
        validation=(CheckResult("schema:r", "pass"),),
        started_at=0.0,
        ended_at=1.0,
        attempt_index=0,
        ok=True,
    )
    trace = ExecutionTrace(steps=(step, step), status="complete")
    path = tmp_path / "trace.jsonl"
    write_trace(path, trace)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 3  # two steps + one status record
    loaded = read_trace(path)
    assert loaded.status == "complete"
    assert len(loaded.steps) == 2
    assert loaded.steps[0].step_id == "s0001"


def test_append_record_is_cumulative(tmp_path):
    path = tmp_path / "log.jsonl"
    append_record(path, {"seq": 0})
    append_record(path, {"seq": 1})
    assert read_records(path) == [{"seq": 0}, {"seq": 1}]


def test_identical_saves_are_byte_identical(tmp_path):
    plan = mk_plan("A", "B", edges=[("A", "B")])
    first = tmp_path / "one.json"
    second = tmp_path / "two.json"
    save_plan(first, plan)
    save_plan(second, plan)
    assert first.read_bytes() == second.read_bytes()
