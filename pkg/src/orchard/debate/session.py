"""Critique-defend-revise rounds over candidate plans.

Supervisors raise issues against a plan; the plan's originator resolves each
one (accept or reject) and maps every accepted issue to explicit edits,
which are applied one at a time through the verified edit calculus. Round
logs are plain documents so debates can be persisted and replayed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Protocol, Sequence

from orchard.core.types import PlanSpec, TaskEnvelope
from orchard.core.validation import validate_plan
from orchard.debate.edits import Edit, apply_edit, edit_from_dict, edit_to_dict
from orchard.errors import EditRejected, NoValidCandidate
from orchard.shell.providers import ChatProvider

ISSUE_KINDS = ("missing-step", "redundant-node", "invalid-dependency", "implicit-assumption")

DEFAULT_MAX_ROUNDS = 3

# Context keys that carry binding task conditions; a plan covers one by
# citing it as a policy constraint on some node.
CONSTRAINT_KEY_MARKERS = ("policy", "quota", "resource", "budget", "regulation")


@dataclass(frozen=True)
class Issue:
    id: str
    kind: str
    target: str  # node id, "edge:u->v", or "absent" for missing steps
    rationale: str
    proposer: str

    def __post_init__(self) -> None:
        if self.kind not in ISSUE_KINDS:
            raise ValueError(f"unknown issue kind {self.kind!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "kind": self.kind, "target": self.target,
                "rationale": self.rationale, "proposer": self.proposer}


@dataclass(frozen=True)
class Resolution:
    issue_ref: str
    verdict: str  # accepted | rejected
    justification: str

    def __post_init__(self) -> None:
        if self.verdict not in ("accepted", "rejected"):
            raise ValueError(f"unknown verdict {self.verdict!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"issue_ref": self.issue_ref, "verdict": self.verdict, "justification": self.justification}


@dataclass
class RoundLog:
    issues: list[Issue] = field(default_factory=list)
    resolutions: list[Resolution] = field(default_factory=list)
    applied_edits: list[Edit] = field(default_factory=list)
    rejected_edits: list[tuple[Edit, str]] = field(default_factory=list)

    def accepted_count(self) -> int:
        return sum(1 for r in self.resolutions if r.verdict == "accepted")

    def to_dict(self) -> dict[str, Any]:
        return {
            "issues": [i.to_dict() for i in self.issues],
            "resolutions": [r.to_dict() for r in self.resolutions],
            "applied_edits": [edit_to_dict(e) for e in self.applied_edits],
            "rejected_edits": [
                {"edit": edit_to_dict(e), "reason": reason} for e, reason in self.rejected_edits
            ],
        }


class Supervisor(Protocol):
    id: str

    def critique(self, plan: PlanSpec, task: TaskEnvelope) -> list[Issue]: ...

    def defend(self, plan: PlanSpec, issues: Sequence[Issue]) -> list[Resolution]: ...

    def revise(self, plan: PlanSpec, accepted: Sequence[Issue]) -> list[Edit]: ...


class ScriptedSupervisor:
    """Fixture supervisor: consumes pre-scripted critiques, verdicts, edits."""

    def __init__(
        self,
        supervisor_id: str,
        critiques: Sequence[Sequence[Issue]] = (),
        verdicts: dict[str, str] | None = None,
        edits: dict[str, Sequence[Edit]] | None = None,
    ) -> None:
        self.id = supervisor_id
        self._critiques = [list(round_issues) for round_issues in critiques]
        self._round = 0
        self._verdicts = dict(verdicts or {})
        self._edits = {k: list(v) for k, v in (edits or {}).items()}

    def critique(self, plan: PlanSpec, task: TaskEnvelope) -> list[Issue]:
        if self._round < len(self._critiques):
            issues = self._critiques[self._round]
            self._round += 1
            return list(issues)
        self._round += 1
        return []

    def defend(self, plan: PlanSpec, issues: Sequence[Issue]) -> list[Resolution]:
        return [
            Resolution(
                issue_ref=issue.id,
                verdict=self._verdicts.get(issue.id, "rejected"),
                justification=f"scripted verdict for {issue.id}",
            )
            for issue in issues
        ]

    def revise(self, plan: PlanSpec, accepted: Sequence[Issue]) -> list[Edit]:
        edits: list[Edit] = []
        for issue in accepted:
            edits.extend(self._edits.get(issue.id, []))
        return edits


class ProviderSupervisor:
    """Chat-backed supervisor; each phase is one call returning JSON."""

    def __init__(self, supervisor_id: str, provider: ChatProvider) -> None:
        self.id = supervisor_id
        self.provider = provider

    def _ask(self, prompt: str) -> Any:
        reply = self.provider.chat(
            [
                {"role": "system", "content": "Respond with JSON only."},
                {"role": "user", "content": prompt},
            ]
        )
        text = reply.strip()
        if text.startswith("```"):
            text = text.strip("`")
            if text.startswith("json"):
                text = text[4:]
        return json.loads(text)

    def critique(self, plan: PlanSpec, task: TaskEnvelope) -> list[Issue]:
        doc = self._ask(
            "List structural issues (missing-step, redundant-node, invalid-dependency, "
            f"implicit-assumption) in this plan as a JSON array.\nTASK: {task.instruction}\n"
            f"PLAN: {json.dumps(plan.to_dict())}"
        )
        return [
            Issue(
                id=item.get("id", f"{self.id}-issue-{index}"),
                kind=item["kind"],
                target=item.get("target", "absent"),
                rationale=item.get("rationale", ""),
                proposer=self.id,
            )
            for index, item in enumerate(doc)
        ]

    def defend(self, plan: PlanSpec, issues: Sequence[Issue]) -> list[Resolution]:
        doc = self._ask(
            "For each issue return {issue_ref, verdict: accepted|rejected, justification} "
            f"as a JSON array.\nISSUES: {json.dumps([i.to_dict() for i in issues])}"
        )
        return [Resolution(item["issue_ref"], item["verdict"], item.get("justification", "")) for item in doc]

    def revise(self, plan: PlanSpec, accepted: Sequence[Issue]) -> list[Edit]:
        doc = self._ask(
            "Return a JSON array of plan edits (op insert|replace|wrap|remove) fixing the "
            f"accepted issues.\nISSUES: {json.dumps([i.to_dict() for i in accepted])}\n"
            f"PLAN: {json.dumps(plan.to_dict())}"
        )
        return [edit_from_dict(item) for item in doc]


def debate_round(
    plan: PlanSpec,
    supervisors: Sequence[Supervisor],
    originator: Supervisor,
    task: TaskEnvelope,
) -> tuple[PlanSpec, RoundLog]:
    """One critique-defend-revise pass; every intermediate plan stays valid."""
    log = RoundLog()
    for supervisor in supervisors:
        log.issues.extend(supervisor.critique(plan, task))

    resolved: dict[str, Resolution] = {}
    if log.issues:
        for resolution in originator.defend(plan, log.issues):
            resolved.setdefault(resolution.issue_ref, resolution)
    for issue in log.issues:
        if issue.id not in resolved:
            resolved[issue.id] = Resolution(issue.id, "rejected", "unaddressed by defense")
    log.resolutions = [resolved[issue.id] for issue in log.issues]

    accepted = [issue for issue in log.issues if resolved[issue.id].verdict == "accepted"]
    current = plan
    if accepted:
        for edit in originator.revise(current, accepted):
            try:
                current = apply_edit(current, edit, task)
                log.applied_edits.append(edit)
            except EditRejected as err:
                log.rejected_edits.append((edit, err.reason))
    return current, log


def constraint_coverage(task: TaskEnvelope, plan: PlanSpec) -> float:
    """Fraction of the task's binding context keys cited by node policy constraints."""
    keys = [
        key
        for key in task.context_map()
        if any(marker in key.lower() for marker in CONSTRAINT_KEY_MARKERS)
    ]
    if not keys:
        return 1.0
    cited = {
        constraint.rule_id
        for node in plan.nodes
        for constraint in node.constraints
        if constraint.kind == "policy"
    }
    return sum(1 for key in keys if key in cited) / len(keys)


class Planner(Protocol):
    def propose(self, task: TaskEnvelope, index: int) -> PlanSpec: ...


class ScriptedPlanner:
    def __init__(self, plans: Sequence[PlanSpec]) -> None:
        self._plans = list(plans)

    def propose(self, task: TaskEnvelope, index: int) -> PlanSpec:
        return self._plans[index % len(self._plans)]


@dataclass
class GenerationResult:
    candidates: list[PlanSpec]
    rejections: list[tuple[int, str]]


def repair_plan(plan: PlanSpec, task: TaskEnvelope | None = None) -> PlanSpec | None:
    """Deterministic repair: drop what cannot be satisfied, keep the rest.

    Dangling edges are dropped, duplicate nodes keep their first occurrence,
    each cycle loses its smallest member, nodes with unsatisfiable inputs or
    no outputs are removed (repeatedly, since removals cascade), and
    constraints or evidence requirements that reference unknown fields are
    stripped. Returns None when no valid plan remains.
    """
    current = plan
    for _ in range(len(plan.nodes) + 2):
        report = validate_plan(current, task)
        if report.valid:
            return current
        nodes = list(current.nodes)
        edges = list(current.edges)

        known = {n.id for n in nodes}
        edges = [(u, v) for u, v in edges if u in known and v in known]

        seen: set[str] = set()
        deduped = []
        for node in nodes:
            if node.id not in seen:
                seen.add(node.id)
                deduped.append(node)
        nodes = deduped

        drop: set[str] = set()
        for violation in report.violations:
            if violation.kind == "cycle":
                drop.add(min(violation.subject.split(",")))
            elif violation.kind in ("schema-closure-gap", "empty-outputs"):
                drop.add(violation.subject)
        if drop:
            nodes = [n for n in nodes if n.id not in drop]
            edges = [(u, v) for u, v in edges if u not in drop and v not in drop]

        bad_constraint = {v.subject for v in report.violations if v.kind == "constraint-field"}
        bad_evidence = {v.subject for v in report.violations if v.kind == "evidence-field"}
        repaired_nodes = []
        for node in nodes:
            if node.id in bad_constraint or node.id in bad_evidence:
                own = {f.name for f in node.inputs.fields} | {f.name for f in node.outputs.fields}
                out_fields = {f.name for f in node.outputs.fields}
                node = replace(
                    node,
                    constraints=tuple(
                        c for c in node.constraints if c.field is None or c.field in own
                    ),
                    evidence_reqs=tuple(e for e in node.evidence_reqs if e.claim_field in out_fields),
                )
            repaired_nodes.append(node)
        nodes = repaired_nodes

        if not nodes:
            return None
        current = PlanSpec(nodes=tuple(nodes), edges=tuple(edges), task_ref=current.task_ref)
    return current if validate_plan(current, task).valid else None


def generate_candidates(
    task: TaskEnvelope,
    n: int,
    planner: Planner,
    repair: bool = True,
) -> GenerationResult:
    """Collect n candidate plans, validating (and optionally repairing) each."""
    if n < 1:
        raise ValueError("n must be >= 1")
    result = GenerationResult(candidates=[], rejections=[])
    for index in range(n):
        candidate = planner.propose(task, index)
        report = validate_plan(candidate, task)
        if report.valid:
            result.candidates.append(candidate)
            continue
        repaired = repair_plan(candidate, task) if repair else None
        if repaired is not None:
            result.candidates.append(repaired)
        else:
            reasons = ";".join(f"{v.kind}:{v.subject}" for v in report.violations)
            result.rejections.append((index, reasons))
    if not result.candidates:
        raise NoValidCandidate(f"all {n} candidates failed validation")
    return result


def refine(
    task: TaskEnvelope,
    candidates: Sequence[PlanSpec],
    supervisors: Sequence[Supervisor],
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    originators: Sequence[Supervisor] | None = None,
) -> tuple[PlanSpec, list[RoundLog]]:
    """Debate each candidate to a fixpoint (or the round budget), then select.

    Selection is lexicographic: validity, then fraction of the task's
    binding constraints covered, then fewer nodes. Merge is selection here;
    cross-candidate grafting is out of scope.
    """
    if not candidates:
        raise NoValidCandidate("no candidates to refine")
    owners = list(originators) if originators is not None else [
        supervisors[i % len(supervisors)] for i in range(len(candidates))
    ]
    logs: list[RoundLog] = []
    finals: list[PlanSpec] = []
    for candidate, owner in zip(candidates, owners):
        current = candidate
        for _ in range(max_rounds):
            current, log = debate_round(current, supervisors, owner, task)
            logs.append(log)
            if log.accepted_count() == 0:
                break
        finals.append(current)

    def score(plan: PlanSpec) -> tuple[int, float, int]:
        valid = 1 if validate_plan(plan, task).valid else 0
        return (valid, constraint_coverage(task, plan), -len(plan.nodes))

    best = max(range(len(finals)), key=lambda i: (score(finals[i]), -i))
    return finals[best], logs
