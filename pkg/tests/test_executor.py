"""Engine execution: recovery ladder, trace completeness, evidence, verification."""

from __future__ import annotations

import random
import threading
import time

import pytest

from orchard.core import (
    ConstraintExpr,
    NeedContract,
    PlanNode,
    PlanSpec,
    QualityCriterion,
    Schema,
    SchemaField,
    SemanticType,
    TaskEnvelope,
)
from orchard.errors import OrphanClaim, PlanFailed
from orchard.executor import ExecutionPolicy, aggregate_evidence, execute_plan, verify_step
from orchard.shell import HashEmbedder, TickClock
from orchard.toolhub import ToolHub
from orchard.toolmaker import InProcessSandbox, TemplateMaker, ToolMaker

from .conftest import mk_contract


def text_field(name: str) -> SchemaField:
    return SchemaField(name, SemanticType.text())


def node(node_id: str, inputs: list[str], outputs: list[str]) -> PlanNode:
    return PlanNode(
        id=node_id,
        goal=f"produce {','.join(outputs)}",
        inputs=Schema(tuple(text_field(f) for f in inputs)),
        outputs=Schema(tuple(text_field(f) for f in outputs)),
    )


def transform_tool(tool_id: str, tag: str, inputs: list[str], outputs: list[str], description: str | None = None):
    from orchard.core import ToolCard
    card = ToolCard(
        id=tool_id,
        name=tool_id,
        capabilities=((tag, description or f"derive {' '.join(outputs)} from {' '.join(inputs)}"),),
        input_schema=Schema(tuple(text_field(f) for f in inputs)),
        output_schema=Schema(tuple(text_field(f) for f in outputs)),
    )

    def impl(record):
        return {out: f"{out}({','.join(str(record[i]) for i in sorted(record))})" for out in outputs}

    return card, impl


def contracts_for(plan: PlanSpec, tags: dict[str, str]) -> dict[str, NeedContract]:
    out = {}
    for n in plan.nodes:
        out[n.id] = NeedContract(
            node_id=n.id,
            capability_tag=tags[n.id],
            capability_description=f"capability {tags[n.id]}",
            input_schema=n.inputs,
            output_schema=n.outputs,
        )
    return out


def fresh_hub() -> ToolHub:
    return ToolHub(embedder=HashEmbedder(dim=64), clock=TickClock())


class TestExecutePlan:
    def test_single_node_echo_roundtrip(self):
        task = TaskEnvelope.new("run one step", context={"q": "hello"})
        plan = PlanSpec(nodes=(node("a", ["q"], ["r"]),), edges=(), task_ref=task.id)
        hub = fresh_hub()
        card, impl = transform_tool("t-emit", "emit-r", ["q"], ["r"], "capability emit-r")
        hub.register(card, impl=impl)
        contracts = contracts_for(plan, {"a": "emit-r"})
        deliverable, trace = execute_plan(plan, contracts, hub, task=task, clock=TickClock())
        assert trace.status == "complete"
        assert len(trace.steps) == 1 and trace.steps[0].ok
        assert deliverable.structured_map() == {"r": "r(hello)"}
        assert deliverable.evidence[0].claim_field == "r"

    def test_failing_only_tool_cascades_and_skips(self):
        task = TaskEnvelope.new("doomed", context={"q": "x"})
        plan = PlanSpec(
            nodes=(node("a", ["q"], ["x"]), node("b", ["x"], ["y"])),
            edges=(("a", "b"),),
            task_ref=task.id,
        )
        hub = fresh_hub()
        card, _ = transform_tool("t-bad", "make-x", ["q"], ["x"], "capability make-x")
        hub.register(card, impl=lambda record: (_ for _ in ()).throw(RuntimeError("kaput")))
        card_b, impl_b = transform_tool("t-b", "make-y", ["x"], ["y"], "capability make-y")
        hub.register(card_b, impl=impl_b)
        contracts = contracts_for(plan, {"a": "make-x", "b": "make-y"})
        policy = ExecutionPolicy(max_retries_per_node=2, allow_toolmaker=False)
        with pytest.raises(PlanFailed) as err:
            execute_plan(plan, contracts, hub, policy=policy, task=task, clock=TickClock())
        assert err.value.failed_nodes == {"a"}
        assert err.value.skipped_nodes == {"b"}
        trace = err.value.trace
        assert trace.status == "failed"
        # 1 + max_retries attempts, all against the same tool, all recorded.
        assert [s.tool_id for s in trace.steps] == ["t-bad"] * 3
        assert [s.attempt_index for s in trace.steps] == [0, 1, 2]
        assert all(not s.ok for s in trace.steps)

    def test_candidate_switch_after_retries(self):
        task = TaskEnvelope.new("switch", context={"q": "x"})
        plan = PlanSpec(nodes=(node("a", ["q"], ["r"]),), edges=(), task_ref=task.id)
        hub = fresh_hub()
        # The flaky tool matches the contract text exactly, so it ranks first.
        flaky, _ = transform_tool("t-flaky", "emit-r", ["q"], ["r"], "capability emit-r")
        backup, backup_impl = transform_tool("t-backup", "emit-r-alt", ["q"], ["r"], "fallback emit")
        hub.register(flaky, impl=lambda record: (_ for _ in ()).throw(RuntimeError("flaky")))
        hub.register(backup, impl=backup_impl)
        contracts = contracts_for(plan, {"a": "emit-r"})
        policy = ExecutionPolicy(max_retries_per_node=1, allow_toolmaker=False)
        deliverable, trace = execute_plan(plan, contracts, hub, policy=policy, task=task, clock=TickClock())
        assert [s.tool_id for s in trace.steps] == ["t-flaky", "t-flaky", "t-backup"]
        assert [s.ok for s in trace.steps] == [False, False, True]
        assert deliverable.structured_map()["r"] == "r(x)"

    def test_capability_gap_goes_to_maker(self):
        task = TaskEnvelope.new("gap", context={"result": "seed"})
        gap_node = PlanNode(
            id="a",
            goal="produce result",
            inputs=Schema.of(text_field("result")),
            outputs=Schema.of(text_field("result")),
        )
        plan = PlanSpec(nodes=(gap_node,), edges=(), task_ref=task.id)
        hub = fresh_hub()
        contracts = {
            "a": NeedContract(
                node_id="a",
                capability_tag="echo-gap",
                capability_description="echo the result",
                input_schema=gap_node.inputs,
                output_schema=gap_node.outputs,
            )
        }
        maker = ToolMaker(hub, TemplateMaker(), sandbox=InProcessSandbox())
        deliverable, trace = execute_plan(
            plan, contracts, hub, task=task, maker=maker, clock=TickClock()
        )
        assert trace.status == "complete"
        assert trace.steps[-1].tool_id == "made-a"
        assert maker.report().succeeded == 1

    def test_retry_then_maker_then_success(self):
        task = TaskEnvelope.new("ladder", context={"result": "seed"})
        plan_node = PlanNode(
            id="a",
            goal="produce result",
            inputs=Schema.of(text_field("result")),
            outputs=Schema.of(text_field("result")),
        )
        plan = PlanSpec(nodes=(plan_node,), edges=(), task_ref=task.id)
        hub = fresh_hub()
        from orchard.core import ToolCard
        broken = ToolCard(
            id="t-broken",
            name="t-broken",
            capabilities=(("echo-need", "echo the result"),),
            input_schema=plan_node.inputs,
            output_schema=plan_node.outputs,
        )
        hub.register(broken, impl=lambda record: (_ for _ in ()).throw(RuntimeError("dead")))
        contracts = {
            "a": NeedContract(
                node_id="a",
                capability_tag="echo-need",
                capability_description="echo the result",
                input_schema=plan_node.inputs,
                output_schema=plan_node.outputs,
            )
        }
        maker = ToolMaker(hub, TemplateMaker(), sandbox=InProcessSandbox())
        policy = ExecutionPolicy(max_retries_per_node=2)
        deliverable, trace = execute_plan(
            plan, contracts, hub, policy=policy, task=task, maker=maker, clock=TickClock()
        )
        tools = [s.tool_id for s in trace.steps]
        # Recovery ordering: retries on the broken tool, then the made tool.
        assert tools == ["t-broken", "t-broken", "t-broken", "made-a"]
        assert [s.ok for s in trace.steps] == [False, False, False, True]

    def test_trace_records_every_invocation_exactly_once(self):
        task = TaskEnvelope.new("count", context={"q": "x"})
        plan = PlanSpec(nodes=(node("a", ["q"], ["r"]),), edges=(), task_ref=task.id)
        hub = fresh_hub()
        calls = []
        card, _ = transform_tool("t-count", "emit-r", ["q"], ["r"], "capability emit-r")

        def counting(record):
            calls.append(1)
            if len(calls) < 3:
                raise RuntimeError("warming up")
            return {"r": "r(x)"}

        hub.register(card, impl=counting)
        contracts = contracts_for(plan, {"a": "emit-r"})
        policy = ExecutionPolicy(max_retries_per_node=3, allow_toolmaker=False)
        _, trace = execute_plan(plan, contracts, hub, policy=policy, task=task, clock=TickClock())
        assert len(trace.steps) == len(calls) == 3

    def test_verification_failure_feeds_ladder(self):
        task = TaskEnvelope.new("verify", context={"q": "x"})
        plan = PlanSpec(nodes=(node("a", ["q"], ["r"]),), edges=(), task_ref=task.id)
        hub = fresh_hub()
        card, _ = transform_tool("t-liar", "emit-r", ["q"], ["r"], "capability emit-r")
        hub.register(card, impl=lambda record: {"r": 42})  # wrong type on purpose
        contracts = contracts_for(plan, {"a": "emit-r"})
        policy = ExecutionPolicy(max_retries_per_node=0, allow_toolmaker=False)
        with pytest.raises(PlanFailed) as err:
            execute_plan(plan, contracts, hub, policy=policy, task=task, clock=TickClock())
        step = err.value.trace.steps[0]
        assert not step.ok
        assert any(c.check == "schema:r" and c.status == "fail" for c in step.validation)


class TestParallel:
    def test_dependency_safety_under_fuzzed_parallel_runs(self):
        rng = random.Random(42)
        for round_index in range(5):
            task = TaskEnvelope.new("parallel", context={"seed": "s"})
            width = rng.randint(3, 6)
            # Two-layer diamond fan: seed -> layer1 -> sink
            layer = [node(f"m{i}", ["seed"], [f"f{i}"]) for i in range(width)]
            sink = node("zz", [f"f{i}" for i in range(width)], ["final"])
            root = node("aa", ["seed"], ["seed2"])
            nodes = (root, *layer, sink)
            edges = tuple(("aa", f"m{i}") for i in range(width)) + tuple(
                (f"m{i}", "zz") for i in range(width)
            )
            plan = PlanSpec(nodes=nodes, edges=edges, task_ref=task.id)
            hub = fresh_hub()
            events: list[tuple[str, str]] = []
            lock = threading.Lock()

            def instrumented(tool_id, outputs):
                def impl(record):
                    with lock:
                        events.append(("start", tool_id))
                    time.sleep(rng.random() * 0.01)
                    with lock:
                        events.append(("end", tool_id))
                    return {out: "v" for out in outputs}
                return impl

            card, _ = transform_tool("tool-aa", "cap-aa", ["seed"], ["seed2"], "capability cap-aa")
            hub.register(card, impl=instrumented("tool-aa", ["seed2"]))
            for i in range(width):
                card, _ = transform_tool(f"tool-m{i}", f"cap-m{i}", ["seed"], [f"f{i}"], f"capability cap-m{i}")
                hub.register(card, impl=instrumented(f"tool-m{i}", [f"f{i}"]))
            card, _ = transform_tool("tool-zz", "cap-zz", [f"f{i}" for i in range(width)], ["final"], "capability cap-zz")
            hub.register(card, impl=instrumented("tool-zz", ["final"]))
            tags = {"aa": "cap-aa", "zz": "cap-zz"}
            tags.update({f"m{i}": f"cap-m{i}" for i in range(width)})
            contracts = contracts_for(plan, tags)
            policy = ExecutionPolicy(parallel=True, allow_toolmaker=False)
            _, trace = execute_plan(plan, contracts, hub, policy=policy, task=task)
            assert trace.status == "complete"
            node_for = {"tool-aa": "aa", "tool-zz": "zz"}
            node_for.update({f"tool-m{i}": f"m{i}" for i in range(width)})
            started = {}
            ended = {}
            for position, (kind, tool) in enumerate(events):
                if kind == "start":
                    started.setdefault(node_for[tool], position)
                else:
                    ended[node_for[tool]] = position
            for u, v in plan.edges:
                assert ended[u] < started[v], f"{v} started before {u} completed"


class TestVerifyStep:
    def test_twelve_pair_fixture_matches_hand_table(self):
        out_schema = Schema.of(
            SchemaField("x", SemanticType.number()),
            SchemaField("tag", SemanticType.text(), required=False),
        )
        base = mk_contract(output_schema=out_schema)
        fixtures = [
            # (contract, output, citations, expected {check: status})
            (base, {"x": 1.0}, (), {"schema:x": "pass", "schema:tag": "pass"}),
            (base, {}, (), {"schema:x": "fail", "schema:tag": "pass"}),
            (base, {"x": "oops"}, (), {"schema:x": "fail", "schema:tag": "pass"}),
            (
                mk_contract(output_schema=out_schema, quality=(QualityCriterion.value_in_range("x", 0, 10),)),
                {"x": 5.0},
                (),
                {"schema:x": "pass", "schema:tag": "pass", "quality:value-in-range(x,0,10)": "pass"},
            ),
            (
                mk_contract(output_schema=out_schema, quality=(QualityCriterion.value_in_range("x", 0, 10),)),
                {"x": 50.0},
                (),
                {"schema:x": "pass", "schema:tag": "pass", "quality:value-in-range(x,0,10)": "fail"},
            ),
            (
                mk_contract(output_schema=out_schema, quality=(QualityCriterion.matches_format("tag", r"v\d+"),)),
                {"x": 1.0, "tag": "v7"},
                (),
                {"schema:x": "pass", "schema:tag": "pass", "quality:matches-format(tag)": "pass"},
            ),
            (
                mk_contract(output_schema=out_schema, quality=(QualityCriterion.matches_format("tag", r"v\d+"),)),
                {"x": 1.0, "tag": "seven"},
                (),
                {"schema:x": "pass", "schema:tag": "pass", "quality:matches-format(tag)": "fail"},
            ),
            (
                mk_contract(output_schema=out_schema, quality=(QualityCriterion.matches_format("tag", r"v\d+"),)),
                {"x": 1.0},
                (),
                {"schema:x": "pass", "schema:tag": "pass", "quality:matches-format(tag)": "not-evaluable"},
            ),
            (
                mk_contract(output_schema=out_schema, quality=(QualityCriterion.cited_rule("rule-9"),)),
                {"x": 1.0},
                ("rule-9",),
                {"schema:x": "pass", "schema:tag": "pass", "quality:cited-rule(rule-9)": "pass"},
            ),
            (
                mk_contract(output_schema=out_schema, quality=(QualityCriterion.cited_rule("rule-9"),)),
                {"x": 1.0},
                (),
                {"schema:x": "pass", "schema:tag": "pass", "quality:cited-rule(rule-9)": "fail"},
            ),
            (
                mk_contract(output_schema=out_schema, constraints=(ConstraintExpr.enum_member("tag", ["a", "b"]),)),
                {"x": 1.0, "tag": "a"},
                (),
                {"schema:x": "pass", "schema:tag": "pass", "constraint:enum-member(tag)": "pass"},
            ),
            (
                mk_contract(output_schema=out_schema, constraints=(ConstraintExpr.policy("water-quota"),)),
                {"x": 1.0},
                ("water-quota",),
                {"schema:x": "pass", "schema:tag": "pass", "constraint:policy(water-quota)": "pass"},
            ),
        ]
        assert len(fixtures) == 12
        for contract, output, citations, expected in fixtures:
            results = {r.check: r.status for r in verify_step(output, contract, citations)}
            assert results == expected, f"mismatch for output {output}"


class TestEvidence:
    def run_chain(self):
        task = TaskEnvelope.new("chain", context={"seed": "s0"})
        plan = PlanSpec(
            nodes=(node("a", ["seed"], ["x"]), node("b", ["x"], ["y"])),
            edges=(("a", "b"),),
            task_ref=task.id,
        )
        hub = fresh_hub()
        for tid, tag, ins, outs in [
            ("t-a", "cap-a", ["seed"], ["x"]),
            ("t-b", "cap-b", ["x"], ["y"]),
        ]:
            card, impl = transform_tool(tid, tag, ins, outs, f"capability {tag}")
            hub.register(card, impl=impl)
        contracts = contracts_for(plan, {"a": "cap-a", "b": "cap-b"})
        _, trace = execute_plan(plan, contracts, hub, task=task, clock=TickClock())
        return task, plan, trace

    def test_linear_lineage_path(self):
        task, plan, trace = self.run_chain()
        bundle = aggregate_evidence(trace, plan, task)
        entries = bundle.for_claim("y")
        assert len(entries) == 1
        step_for = {s.node_id: s.step_id for s in trace.steps}
        assert entries[0].step_ids == (step_for["a"], step_for["b"])
        assert "tool:t-a" in entries[0].sources and "tool:t-b" in entries[0].sources
        assert "context:seed" in entries[0].sources

    def test_context_supplied_claim_single_step_path(self):
        task = TaskEnvelope.new("ctx", context={"q": "raw"})
        plan = PlanSpec(nodes=(node("a", ["q"], ["r"]),), edges=(), task_ref=task.id)
        hub = fresh_hub()
        card, impl = transform_tool("t-a", "cap-a", ["q"], ["r"], "capability cap-a")
        hub.register(card, impl=impl)
        contracts = contracts_for(plan, {"a": "cap-a"})
        _, trace = execute_plan(plan, contracts, hub, task=task, clock=TickClock())
        bundle = aggregate_evidence(trace, plan, task)
        entry = bundle.for_claim("r")[0]
        assert len(entry.step_ids) == 1
        assert "context:q" in entry.sources

    def test_diamond_paths_match_reverse_reachability_oracle(self):
        task = TaskEnvelope.new("diamond", context={"seed": "s"})
        plan = PlanSpec(
            nodes=(
                node("a", ["seed"], ["x"]),
                node("b", ["x"], ["p"]),
                node("c", ["x"], ["q"]),
                node("d", ["p", "q"], ["final"]),
            ),
            edges=(("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")),
            task_ref=task.id,
        )
        hub = fresh_hub()
        for tid, tag, ins, outs in [
            ("t-a", "cap-a", ["seed"], ["x"]),
            ("t-b", "cap-b", ["x"], ["p"]),
            ("t-c", "cap-c", ["x"], ["q"]),
            ("t-d", "cap-d", ["p", "q"], ["final"]),
        ]:
            card, impl = transform_tool(tid, tag, ins, outs, f"capability {tag}")
            hub.register(card, impl=impl)
        contracts = contracts_for(plan, {"a": "cap-a", "b": "cap-b", "c": "cap-c", "d": "cap-d"})
        _, trace = execute_plan(plan, contracts, hub, task=task, clock=TickClock())
        bundle = aggregate_evidence(trace, plan, task)
        entries = bundle.for_claim("final")
        # Two root-to-claim paths: a-b-d and a-c-d.
        step_for = {s.node_id: s.step_id for s in trace.steps}
        got = {e.step_ids for e in entries}
        assert got == {
            (step_for["a"], step_for["b"], step_for["d"]),
            (step_for["a"], step_for["c"], step_for["d"]),
        }
        # Union of path nodes equals the reverse-reachable contributor set.
        reachable = set()
        frontier = ["d"]
        while frontier:
            current = frontier.pop()
            if current in reachable:
                continue
            reachable.add(current)
            frontier.extend(u for u, v in plan.edges if v == current)
        path_nodes = {n for e in entries for n in e.step_ids}
        assert path_nodes == {step_for[n] for n in reachable}

    def test_orphan_claim_detected(self):
        task, plan, trace = self.run_chain()
        # Corrupt the trace: drop the terminal's output record.
        from dataclasses import replace
        steps = tuple(
            replace(s, output_record=()) if s.node_id == "b" else s for s in trace.steps
        )
        from orchard.core import ExecutionTrace
        broken = ExecutionTrace(steps=steps, status=trace.status)
        with pytest.raises(OrphanClaim):
            aggregate_evidence(broken, plan, task)

    def test_evidence_coverage_every_claim_backed(self):
        task, plan, trace = self.run_chain()
        bundle = aggregate_evidence(trace, plan, task)
        assert bundle.claim_fields() == {"y"}
        assert all(bundle.for_claim(field) for field in bundle.claim_fields())
