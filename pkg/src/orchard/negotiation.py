"""Employee-hub negotiation: declare a need, receive candidates, confirm, execute.

A session is a strict state machine; a tool is invoked only after the
contract has been confirmed with a complete, precondition-clean binding.
Every transition is appended to the session's audit log, so the central
safety guarantee (no invocation without prior confirmation) is checkable by
scanning transcripts.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from typing import Any

from orchard.core.compat import CompatReport, schema_compatible
from orchard.core.types import NeedContract, Schema, ToolCard, value_conforms
from orchard.errors import (
    ContractRejected,
    EmptyHub,
    ProtocolError,
    UnbindableInput,
)
from orchard.shell.clock import Clock, SystemClock
from orchard.toolhub.hub import ToolHub
from orchard.toolhub.tdi import tdi_query
from orchard.toolhub.toci import toci_compose

STATES = (
    "need-declared",
    "candidates-proposed",
    "inputs-requested",
    "contract-confirmed",
    "executing",
    "completed",
    "failed",
)

# (state, event) -> next state. Anything absent raises ProtocolError.
TRANSITIONS: dict[tuple[str, str], str] = {
    ("need-declared", "propose"): "candidates-proposed",
    ("need-declared", "fail"): "failed",
    ("candidates-proposed", "confirm"): "contract-confirmed",
    ("candidates-proposed", "request-inputs"): "inputs-requested",
    ("candidates-proposed", "fail"): "failed",
    ("inputs-requested", "confirm"): "contract-confirmed",
    ("inputs-requested", "request-inputs"): "inputs-requested",
    ("inputs-requested", "fail"): "failed",
    ("contract-confirmed", "execute"): "executing",
    ("executing", "complete"): "completed",
    ("executing", "fail"): "failed",
}

_session_counter = itertools.count()

ToolRunner = Callable[[ToolCard, Mapping[str, Any]], Mapping[str, Any]]


@dataclass(frozen=True)
class SessionCandidate:
    """A proposed single tool or tool chain, with its input-requirement report.

    `entry_schema` is the first tool's input schema: the candidate's input
    requirements that the confirmation binding must satisfy.
    """

    tool_ids: tuple[str, ...]
    report: CompatReport
    entry_schema: Schema

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool_ids": list(self.tool_ids),
            "report": self.report.to_dict(),
            "entry_schema": self.entry_schema.to_dict(),
        }


class NegotiationSession:
    """Single-owner protocol session; distinct sessions may run concurrently."""

    def __init__(self, session_id: str, contract: NeedContract, clock: Clock | None = None) -> None:
        self.id = session_id
        self.contract = contract
        self.state = "need-declared"
        self.candidate_set: list[SessionCandidate] = []
        self.selected_index = 0
        self.binding: dict[str, Any] = {}
        self.output_record: dict[str, Any] | None = None
        self.failure: str | None = None
        self.log: list[dict[str, Any]] = []
        self._clock = clock if clock is not None else SystemClock()

    def _apply(self, event: str, detail: str = "") -> None:
        key = (self.state, event)
        if key not in TRANSITIONS:
            raise ProtocolError(self.state, event)
        previous = self.state
        self.state = TRANSITIONS[key]
        self.log.append(
            {
                "seq": len(self.log),
                "at": self._clock.now(),
                "event": event,
                "from": previous,
                "to": self.state,
                "detail": detail,
            }
        )

    @property
    def selected(self) -> SessionCandidate:
        if not self.candidate_set:
            raise ProtocolError(self.state, "select")
        return self.candidate_set[self.selected_index]

    def select_candidate(self, index: int) -> None:
        """Employee override of the default top-ranked candidate."""
        if self.state not in ("candidates-proposed", "inputs-requested"):
            raise ProtocolError(self.state, "select")
        if not 0 <= index < len(self.candidate_set):
            raise IndexError(f"candidate index {index} out of range")
        self.selected_index = index

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "contract_id": self.contract.id,
            "state": self.state,
            "candidates": [c.to_dict() for c in self.candidate_set],
            "selected_index": self.selected_index,
            "binding": dict(self.binding),
            "output_record": self.output_record,
            "failure": self.failure,
            "log": list(self.log),
        }


def declare_need(
    contract: NeedContract,
    hub: ToolHub,
    k: int = 5,
    session_id: str | None = None,
    clock: Clock | None = None,
) -> NegotiationSession:
    """Open a session: capability retrieval first, chain composition as fallback.

    The session lands in candidates-proposed, or in failed("no-candidates")
    when neither protocol produces anything that can satisfy the contract's
    output schema.
    """
    sid = session_id if session_id is not None else f"session-{next(_session_counter):06d}"
    session = NegotiationSession(sid, contract, clock=clock)
    try:
        ranked = tdi_query(hub, contract, k=k)
    except EmptyHub:
        session.failure = "no-candidates"
        session._apply("fail", "hub is empty")
        return session

    # A single tool satisfies the contract only if its output covers the
    # need AND its input requirements are coverable from the contract's
    # declared inputs. Output-compatible tools with unreachable inputs are
    # exactly the case chain composition exists for.
    singles = [
        scored.tool_id
        for scored in ranked.ranked
        if schema_compatible(hub.card(scored.tool_id).output_schema, contract.output_schema).satisfied
        and schema_compatible(contract.input_schema, hub.card(scored.tool_id).input_schema).satisfied
    ]
    if singles:
        session.candidate_set = [
            SessionCandidate(
                tool_ids=(tool_id,),
                report=schema_compatible(contract.input_schema, hub.card(tool_id).input_schema),
                entry_schema=hub.card(tool_id).input_schema,
            )
            for tool_id in singles
        ]
        session._apply("propose", f"tdi candidates: {','.join(singles)}")
        return session

    chains = toci_compose(hub.snapshot(), contract, available=contract.input_schema)
    if chains:
        session.candidate_set = [
            SessionCandidate(
                tool_ids=chain.steps,
                report=schema_compatible(contract.input_schema, hub.card(chain.steps[0]).input_schema),
                entry_schema=hub.card(chain.steps[0]).input_schema,
            )
            for chain in chains
        ]
        session._apply("propose", f"toci chains: {len(chains)}")
        return session

    session.failure = "no-candidates"
    session._apply("fail", "tdi and toci both returned empty")
    return session


def bind_inputs(
    input_schema: Schema,
    predecessor_outputs: Mapping[str, Any],
    context: Mapping[str, Any],
) -> dict[str, Any]:
    """Build a binding: predecessor outputs first, then task context.

    Required fields with no source raise UnbindableInput; optional fields
    are bound when a source exists and skipped otherwise.
    """
    binding: dict[str, Any] = {}
    unsourceable: list[str] = []
    for field in input_schema.fields:
        if field.name in predecessor_outputs:
            binding[field.name] = predecessor_outputs[field.name]
        elif field.name in context:
            binding[field.name] = context[field.name]
        elif field.required:
            unsourceable.append(field.name)
    if unsourceable:
        raise UnbindableInput(unsourceable)
    return binding


def confirm_contract(session: NegotiationSession, binding: Mapping[str, Any]) -> NegotiationSession:
    """Validate a binding against the selected tool's inputs and the preconditions.

    Complete and clean -> contract-confirmed. Missing or ill-typed fields ->
    inputs-requested, listing exactly the offending fields. A binding that
    violates a precondition raises ContractRejected naming the constraint.
    """
    if session.state not in ("candidates-proposed", "inputs-requested"):
        raise ProtocolError(session.state, "confirm")

    problems: list[str] = []
    schema = session.selected.entry_schema
    for field in schema.fields:
        if field.name not in binding or binding[field.name] is None:
            if field.required:
                problems.append(f"missing:{field.name}")
            continue
        if not value_conforms(binding[field.name], field.type):
            problems.append(f"ill-typed:{field.name}")
    if problems:
        session._apply("request-inputs", ";".join(problems))
        return session

    violations = [
        expr.label()
        for expr in session.contract.preconditions
        if expr.evaluate(binding) == "fail"
    ]
    if violations:
        session._apply("request-inputs", "precondition violations: " + ";".join(violations))
        raise ContractRejected(violations)

    session.binding = dict(binding)
    session._apply("confirm", f"bound {len(session.binding)} fields")
    return session


def execute_confirmed(
    session: NegotiationSession,
    runner: ToolRunner,
    hub: ToolHub,
) -> NegotiationSession:
    """Run the selected tool (or chain) only from the contract-confirmed state.

    Reliability counters update once per executed tool. Chains feed each
    step's output into the next step's input schema.
    """
    if session.state != "contract-confirmed":
        raise ProtocolError(session.state, "execute")
    session._apply("execute", f"tools {','.join(session.selected.tool_ids)}")
    record: Mapping[str, Any] = dict(session.binding)
    for position, tool_id in enumerate(session.selected.tool_ids):
        card = hub.card(tool_id)
        step_input = {
            field.name: record[field.name]
            for field in card.input_schema.fields
            if field.name in record
        }
        try:
            output = runner(card, step_input)
        except Exception as exc:
            hub.update_reliability(tool_id, success=False)
            session.failure = f"execution-error at {tool_id}: {exc}"
            session._apply("fail", session.failure)
            return session
        hub.update_reliability(tool_id, success=True)
        record = {**step_input, **dict(output)} if position + 1 < len(session.selected.tool_ids) else dict(output)
    session.output_record = dict(record)
    session._apply("complete", f"produced {len(session.output_record)} fields")
    return session
