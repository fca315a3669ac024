"""The maker lifecycle: spec -> implementation -> validation -> registration.

Only artifacts with a passing validation record are ever registered; the
generate-validate loop retries up to the budget and then records a failure.
Report counters are updated atomically so concurrent maker runs stay
consistent.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from orchard.core.types import NeedContract, Provenance, Reliability, ToolCard, canonical_json
from orchard.errors import BackendUnavailable, GenerationRefused, UnsynthesizableCriterion
from orchard.toolmaker.generate import MakerBackend, ToolArtifact, generate_impl
from orchard.toolmaker.sandbox import Sandbox, SubprocessSandbox, ValidationOutcome, validate_impl
from orchard.toolmaker.spec import ResourceLimits, derive_spec

RETRY_BUDGET = 3


@dataclass(frozen=True)
class MakerReport:
    attempts: int
    succeeded: int
    failed: int
    log: tuple[dict[str, Any], ...]

    @property
    def rate(self) -> float:
        return self.succeeded / self.attempts if self.attempts else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "attempts": self.attempts,
            "succeeded": self.succeeded,
            "failed": self.failed,
            "rate": self.rate,
            "log": list(self.log),
        }


class ToolMaker:
    def __init__(
        self,
        hub,
        backend: MakerBackend,
        sandbox: Sandbox | None = None,
        retry_budget: int = RETRY_BUDGET,
        workspace: str | Path | None = None,
        limits: ResourceLimits = ResourceLimits(),
    ) -> None:
        self.hub = hub
        self.backend = backend
        self.sandbox = sandbox if sandbox is not None else SubprocessSandbox()
        self.retry_budget = retry_budget
        self.workspace = Path(workspace) if workspace is not None else None
        self.limits = limits
        self._lock = threading.Lock()
        self._attempts = 0
        self._succeeded = 0
        self._failed = 0
        self._log: list[dict[str, Any]] = []
        self.validation_records: dict[str, ValidationOutcome] = {}

    def report(self) -> MakerReport:
        with self._lock:
            return MakerReport(self._attempts, self._succeeded, self._failed, tuple(self._log))

    def _record(self, success: bool, entry: dict[str, Any]) -> None:
        with self._lock:
            self._attempts += 1
            if success:
                self._succeeded += 1
            else:
                self._failed += 1
            self._log.append(entry)
            if self.workspace is not None:
                self.workspace.mkdir(parents=True, exist_ok=True)
                with (self.workspace / "maker.log.jsonl").open("a", encoding="utf-8") as handle:
                    handle.write(canonical_json(entry) + "\n")

    def _store_artifact(self, artifact: ToolArtifact, outcome: ValidationOutcome) -> None:
        if self.workspace is None:
            return
        self.workspace.mkdir(parents=True, exist_ok=True)
        safe = artifact.spec_ref.replace(":", "_")
        (self.workspace / f"{safe}.py").write_text(artifact.source, encoding="utf-8")
        (self.workspace / f"{safe}.validation.json").write_text(
            canonical_json(outcome.to_dict()), encoding="utf-8"
        )

    def _tool_id_for(self, contract: NeedContract) -> str:
        base = f"made-{contract.node_id}"
        if not self.hub.has(base):
            return base
        suffix = 2
        while self.hub.has(f"{base}-r{suffix}"):
            suffix += 1
        return f"{base}-r{suffix}"

    def make_and_register(self, contract: NeedContract) -> str | None:
        """Fill one capability gap; returns the new tool id or None on failure.

        One call is one maker attempt in the report, regardless of how many
        generate-validate retries it burns internally.
        """
        try:
            spec = derive_spec(contract, self.limits)
        except UnsynthesizableCriterion as err:
            self._record(False, {"contract": contract.id, "stage": "derive", "outcome": f"refused: {err}"})
            return None

        last_detail = ""
        for attempt in range(1, self.retry_budget + 1):
            try:
                artifact = generate_impl(spec, self.backend)
            except GenerationRefused as err:
                # Deterministic backends refuse identically every time; stop early.
                self._record(
                    False,
                    {"contract": contract.id, "stage": "generate", "attempt": attempt, "outcome": f"refused: {err}"},
                )
                return None
            except BackendUnavailable as err:
                last_detail = f"backend unavailable: {err}"
                continue
            outcome = validate_impl(artifact, spec, self.sandbox)
            if outcome.passed:
                tool_id = self._register(contract, artifact, outcome)
                self._record(
                    True,
                    {"contract": contract.id, "stage": "register", "attempt": attempt, "outcome": f"tool {tool_id}"},
                )
                return tool_id
            failed = [c.label for c in outcome.cases if not c.passed]
            last_detail = f"validation failed: {','.join(failed)}"
        self._record(
            False,
            {"contract": contract.id, "stage": "validate", "attempt": self.retry_budget, "outcome": last_detail},
        )
        return None

    def _register(self, contract: NeedContract, artifact: ToolArtifact, outcome: ValidationOutcome) -> str:
        tool_id = self._tool_id_for(contract)
        card = ToolCard(
            id=tool_id,
            name=artifact.name,
            capabilities=((contract.capability_tag, contract.capability_description),),
            input_schema=contract.input_schema,
            output_schema=contract.output_schema,
            preconditions=contract.preconditions,
            constraints=contract.constraints,
            reliability=Reliability(1, 1),
            provenance=Provenance(origin="toolmaker", version="1"),
        )
        sandbox = self.sandbox
        limits = self.limits

        def impl(record):
            return sandbox.run(artifact, record, limits)

        self.hub.register(card, impl=impl)
        self.validation_records[tool_id] = outcome
        self._store_artifact(artifact, outcome)
        return tool_id
