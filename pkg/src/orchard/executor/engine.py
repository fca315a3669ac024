"""The execution engine: negotiate, invoke, verify, recover, aggregate.

Nodes run in topological order (independent branches concurrently when the
policy allows). Each node walks a deterministic recovery ladder: retry the
same candidate with the same binding, switch to the next ranked candidate,
then hand the gap to the tool maker, and only then fail - skipping every
downstream dependent. Every actual invocation lands in the trace exactly
once, failures and retries included.
"""

from __future__ import annotations

import hashlib
import threading
from collections.abc import Callable, Mapping
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Any

from orchard.core.types import (
    CheckResult,
    Deliverable,
    ExecutionTrace,
    NeedContract,
    PlanSpec,
    StepRecord,
    TaskEnvelope,
    ToolCard,
    canonical_json,
)
from orchard.core.validation import topological_order, validate_plan
from orchard.errors import ContractRejected, ExecutionError, PlanFailed, UnbindableInput
from orchard.executor.evidence import aggregate_evidence
from orchard.executor.verify import all_passed, verify_step
from orchard.negotiation import bind_inputs, confirm_contract, declare_need, execute_confirmed
from orchard.shell.clock import Clock, SystemClock
from orchard.toolhub.hub import ToolHub


@dataclass(frozen=True)
class ExecutionPolicy:
    max_retries_per_node: int = 2
    allow_toolmaker: bool = True
    parallel: bool = False
    candidate_k: int = 5
    workers: int = 4

    def __post_init__(self) -> None:
        if self.max_retries_per_node < 0:
            raise ValueError("max_retries_per_node must be >= 0")


def hub_runner(hub: ToolHub) -> Callable[[ToolCard, Mapping[str, Any]], Mapping[str, Any]]:
    """Default tool runner: dispatch to the implementation attached in the hub."""

    def run(card: ToolCard, inputs: Mapping[str, Any]) -> Mapping[str, Any]:
        impl = hub.implementation(card.id)
        if impl is None:
            raise ExecutionError(f"tool {card.id!r} has no executable implementation")
        return impl(inputs)

    return run


@dataclass
class _Attempt:
    invoked: bool
    ok: bool
    tool_id: str
    output: dict[str, Any]
    checks: tuple[CheckResult, ...]
    binding: dict[str, Any]
    detail: str


class _Run:
    """Mutable state for one plan execution."""

    def __init__(
        self,
        plan: PlanSpec,
        contracts: Mapping[str, NeedContract],
        hub: ToolHub,
        policy: ExecutionPolicy,
        task: TaskEnvelope | None,
        maker,
        runner,
        clock: Clock,
        transcript_sink: Callable[[dict[str, Any]], None] | None = None,
    ) -> None:
        self.plan = plan
        self.contracts = contracts
        self.hub = hub
        self.policy = policy
        self.task = task
        self.maker = maker
        self.runner = runner if runner is not None else hub_runner(hub)
        self.clock = clock
        self.transcript_sink = transcript_sink
        self.context = task.context_map() if task is not None else {}
        self.lock = threading.Lock()
        self.steps: list[StepRecord] = []
        self.completed: dict[str, StepRecord] = {}
        self.failed: set[str] = set()
        self.skipped: set[str] = set()
        self.order = topological_order(plan)
        self.position = {n: i for i, n in enumerate(self.order)}
        self._step_seq = 0
        self._session_seq = 0

    # --- bookkeeping -------------------------------------------------------

    def _next_step_id(self) -> str:
        with self.lock:
            self._step_seq += 1
            return f"s{self._step_seq:04d}"

    def _next_session_id(self, node_id: str) -> str:
        with self.lock:
            self._session_seq += 1
            return f"ng-{node_id}-{self._session_seq:04d}"

    def _merged_ancestor_outputs(self, node_id: str) -> dict[str, Any]:
        with self.lock:
            done = dict(self.completed)
        ancestors = [a for a in self.plan.ancestors(node_id) if a in done]
        ancestors.sort(key=lambda a: self.position[a])
        merged: dict[str, Any] = {}
        for ancestor in ancestors:  # later topological position wins
            merged.update(done[ancestor].output_map())
        return merged

    def _citations_for(self, contract: NeedContract) -> list[str]:
        cited = []
        for expr in contract.preconditions + contract.constraints:
            if expr.kind == "policy" and expr.rule_id not in cited:
                cited.append(expr.rule_id)
        for criterion in contract.quality:
            if criterion.kind == "cited-rule" and criterion.rule_id not in cited:
                cited.append(criterion.rule_id)
        return cited

    def _record_step(self, node_id: str, contract: NeedContract, attempt_index: int, attempt: _Attempt,
                     started: float, ended: float) -> StepRecord:
        step = StepRecord(
            step_id=self._next_step_id(),
            node_id=node_id,
            contract_id=contract.id,
            tool_id=attempt.tool_id,
            input_digest=hashlib.sha256(canonical_json(attempt.binding).encode("utf-8")).hexdigest(),
            output_record=tuple(sorted(attempt.output.items())),
            validation=attempt.checks,
            started_at=started,
            ended_at=ended,
            attempt_index=attempt_index,
            ok=attempt.ok,
        )
        with self.lock:
            self.steps.append(step)
        return step

    # --- the recovery ladder --------------------------------------------------

    def _emit_session(self, session) -> None:
        if self.transcript_sink is not None:
            self.transcript_sink(session.to_dict())

    def _attempt(self, contract: NeedContract, tool_ids: tuple[str, ...],
                 merged: dict[str, Any]) -> _Attempt:
        """One full negotiate-confirm-execute-verify pass pinned to a candidate."""
        session = declare_need(
            contract, self.hub, k=self.policy.candidate_k,
            session_id=self._next_session_id(contract.node_id), clock=self.clock,
        )
        try:
            return self._attempt_on(session, contract, tool_ids, merged)
        finally:
            self._emit_session(session)

    def _attempt_on(self, session, contract: NeedContract, tool_ids: tuple[str, ...],
                    merged: dict[str, Any]) -> _Attempt:
        if session.state != "candidates-proposed":
            return _Attempt(False, False, tool_ids[0], {}, (), {}, "no-candidates")
        index = next(
            (i for i, c in enumerate(session.candidate_set) if c.tool_ids == tool_ids), None
        )
        if index is None:
            return _Attempt(False, False, tool_ids[0], {}, (), {}, "candidate-not-proposed")
        session.select_candidate(index)
        try:
            binding = bind_inputs(session.selected.entry_schema, merged, self.context)
        except UnbindableInput as err:
            return _Attempt(False, False, tool_ids[0], {}, (), {}, f"unbindable: {err}")
        try:
            confirm_contract(session, binding)
        except ContractRejected as err:
            return _Attempt(False, False, tool_ids[0], {}, (), {}, f"rejected: {err}")
        if session.state != "contract-confirmed":
            return _Attempt(False, False, tool_ids[0], {}, (), binding, "inputs-missing")
        execute_confirmed(session, self.runner, self.hub)
        executed_tool = tool_ids[-1]
        if session.state != "completed":
            return _Attempt(True, False, executed_tool, {}, (), binding, session.failure or "execution failed")
        output = dict(session.output_record or {})
        checks = tuple(verify_step(output, contract, citations=self._citations_for(contract)))
        ok = all_passed(checks)
        detail = "ok" if ok else "verification failed"
        return _Attempt(True, ok, executed_tool, output, checks, binding, detail)

    def _try_candidate(self, node_id: str, contract: NeedContract, tool_ids: tuple[str, ...],
                       merged: dict[str, Any], attempt_counter: list[int]) -> StepRecord | None:
        """Retry one candidate up to the budget; returns the successful step or None."""
        for _ in range(1 + self.policy.max_retries_per_node):
            started = self.clock.now()
            attempt = self._attempt(contract, tool_ids, merged)
            ended = self.clock.now()
            if not attempt.invoked:
                return None  # negotiation-level dead end: switch candidates, no invocation to record
            step = self._record_step(node_id, contract, attempt_counter[0], attempt, started, ended)
            attempt_counter[0] += 1
            if step.ok:
                return step
        return None

    def _run_node(self, node_id: str) -> None:
        contract = self.contracts[node_id]
        merged = self._merged_ancestor_outputs(node_id)
        attempt_counter = [0]
        maker_used = False

        session = declare_need(
            contract, self.hub, k=self.policy.candidate_k,
            session_id=self._next_session_id(node_id), clock=self.clock,
        )
        self._emit_session(session)
        ladder = [c.tool_ids for c in session.candidate_set]

        if not ladder and self.policy.allow_toolmaker and self.maker is not None:
            maker_used = True
            made = self.maker.make_and_register(contract)
            if made is not None:
                ladder = [(made,)]

        for tool_ids in ladder:
            step = self._try_candidate(node_id, contract, tool_ids, merged, attempt_counter)
            if step is not None:
                with self.lock:
                    self.completed[node_id] = step
                return

        if not maker_used and self.policy.allow_toolmaker and self.maker is not None:
            made = self.maker.make_and_register(contract)
            if made is not None:
                step = self._try_candidate(node_id, contract, (made,), merged, attempt_counter)
                if step is not None:
                    with self.lock:
                        self.completed[node_id] = step
                    return

        with self.lock:
            self.failed.add(node_id)

    # --- scheduling ---------------------------------------------------------------

    def run(self) -> None:
        if not self.policy.parallel:
            for node_id in self.order:
                if self._blocked(node_id):
                    self.skipped.add(node_id)
                    continue
                self._run_node(node_id)
            return

        pending = set(self.order)
        futures: dict[Any, str] = {}
        with ThreadPoolExecutor(max_workers=self.policy.workers) as pool:
            while pending or futures:
                for node_id in sorted(pending, key=lambda n: self.position[n]):
                    if self._blocked(node_id):
                        pending.discard(node_id)
                        with self.lock:
                            self.skipped.add(node_id)
                    elif self._ready(node_id):
                        pending.discard(node_id)
                        futures[pool.submit(self._run_node, node_id)] = node_id
                if not futures:
                    if pending:
                        continue
                    break
                done, _ = wait(futures, return_when=FIRST_COMPLETED)
                for future in done:
                    futures.pop(future)
                    future.result()

    def _ready(self, node_id: str) -> bool:
        with self.lock:
            return all(p in self.completed for p in self.plan.predecessors(node_id))

    def _blocked(self, node_id: str) -> bool:
        with self.lock:
            return any(p in self.failed or p in self.skipped for p in self.plan.predecessors(node_id))

    # --- assembly ---------------------------------------------------------------

    def deliverable(self) -> Deliverable:
        structured: dict[str, Any] = {}
        terminal_done = [t for t in sorted(self.plan.terminal_ids(), key=lambda n: self.position[n])
                         if t in self.completed]
        for terminal in terminal_done:
            structured.update(self.completed[terminal].output_map())
        citations: list[str] = []
        for node_id in self.order:
            if node_id in self.completed:
                for rule in self._citations_for(self.contracts[node_id]):
                    if rule not in citations:
                        citations.append(rule)
        answer = "; ".join(f"{k}={structured[k]}" for k in sorted(structured)) or "no output produced"
        trace = self.trace()
        evidence = ()
        if terminal_done:
            evidence = aggregate_evidence(trace, self.plan, self.task).entries
        return Deliverable.new(
            answer=answer,
            structured=structured,
            evidence=evidence,
            rule_citations=citations,
        )

    def trace(self) -> ExecutionTrace:
        if not self.failed and not self.skipped:
            status = "complete"
        elif any(t in self.completed for t in self.plan.terminal_ids()):
            status = "partial"
        else:
            status = "failed"
        return ExecutionTrace(steps=tuple(self.steps), status=status)


def execute_plan(
    plan: PlanSpec,
    contracts: Mapping[str, NeedContract],
    hub: ToolHub,
    policy: ExecutionPolicy | None = None,
    task: TaskEnvelope | None = None,
    maker=None,
    runner=None,
    clock: Clock | None = None,
    transcript_sink: Callable[[dict[str, Any]], None] | None = None,
) -> tuple[Deliverable, ExecutionTrace]:
    """Execute a validated plan; on node failure raise PlanFailed carrying the
    partial deliverable and trace. `transcript_sink`, when given, receives
    every negotiation session document for audit."""
    policy = policy if policy is not None else ExecutionPolicy()
    report = validate_plan(plan, task)
    if not report.valid:
        raise ValueError(f"plan must be valid before execution: {[v.detail for v in report.violations]}")
    missing = [n.id for n in plan.nodes if n.id not in contracts]
    if missing:
        raise ValueError(f"nodes without contracts: {missing}")
    run = _Run(plan, contracts, hub, policy, task, maker, runner, clock or SystemClock(), transcript_sink)
    run.run()
    deliverable = run.deliverable()
    trace = run.trace()
    if run.failed:
        raise PlanFailed(set(run.failed), deliverable, trace, skipped_nodes=set(run.skipped))
    return deliverable, trace
