"""Isolated execution of generated artifacts, and validation against specs.

The subprocess sandbox is the default: a fresh interpreter in isolated mode
with an address-space rlimit and a hard wall-clock timeout, no inherited
environment. The in-process sandbox trades isolation for speed (a scrubbed
exec namespace and a wall-clock watchdog, but no memory cap); it exists for
bulk synthetic runs over trusted template output and must not be used for
code from untrusted backends.
"""

from __future__ import annotations

import json
import resource
import subprocess
import sys
import threading
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any, Protocol

from orchard.errors import ExecutionError, SandboxViolation
from orchard.toolmaker.generate import ToolArtifact
from orchard.toolmaker.spec import ResourceLimits, ToolSpec

_HARNESS = """
import json, sys
record = json.loads(sys.stdin.read())
result = run(record)
sys.stdout.write(json.dumps(result))
"""


class Sandbox(Protocol):
    def run(self, artifact: ToolArtifact, record: Mapping[str, Any], limits: ResourceLimits) -> dict[str, Any]: ...


class SubprocessSandbox:
    """Separate interpreter, rlimit-capped memory, wall-time enforced."""

    def run(self, artifact: ToolArtifact, record: Mapping[str, Any], limits: ResourceLimits) -> dict[str, Any]:
        program = artifact.source + "\n" + _HARNESS

        def cap_memory() -> None:
            cap = limits.memory_mb * 1024 * 1024
            resource.setrlimit(resource.RLIMIT_AS, (cap, cap))

        try:
            proc = subprocess.run(
                [sys.executable, "-I", "-c", program],
                input=json.dumps(dict(record)),
                capture_output=True,
                text=True,
                timeout=limits.wall_time_s,
                env={},
                preexec_fn=cap_memory,
            )
        except subprocess.TimeoutExpired as exc:
            raise SandboxViolation(f"wall time limit {limits.wall_time_s}s exceeded") from exc
        if proc.returncode != 0:
            tail = (proc.stderr or "").strip().splitlines()[-1:] or ["no stderr"]
            if "MemoryError" in (proc.stderr or ""):
                raise SandboxViolation(f"memory limit {limits.memory_mb}MB exceeded")
            raise ExecutionError(f"artifact exited {proc.returncode}: {tail[0]}")
        try:
            output = json.loads(proc.stdout)
        except json.JSONDecodeError as exc:
            raise ExecutionError(f"artifact emitted non-JSON output: {exc}") from exc
        if not isinstance(output, dict):
            raise ExecutionError("artifact output is not a record")
        return output


class InProcessSandbox:
    """Fast path for trusted template output: exec + wall-clock watchdog."""

    def run(self, artifact: ToolArtifact, record: Mapping[str, Any], limits: ResourceLimits) -> dict[str, Any]:
        namespace: dict[str, Any] = {"__builtins__": __builtins__}
        try:
            exec(artifact.source, namespace)  # noqa: S102 - template output only
        except Exception as exc:
            raise ExecutionError(f"artifact failed to load: {exc}") from exc
        entry = namespace.get(artifact.entrypoint)
        if not callable(entry):
            raise ExecutionError(f"artifact does not define {artifact.entrypoint}()")

        outcome: dict[str, Any] = {}
        failure: list[BaseException] = []

        def invoke() -> None:
            try:
                outcome["value"] = entry(dict(record))
            except BaseException as exc:  # surfaced below as ExecutionError
                failure.append(exc)

        worker = threading.Thread(target=invoke, daemon=True)
        worker.start()
        worker.join(limits.wall_time_s)
        if worker.is_alive():
            raise SandboxViolation(f"wall time limit {limits.wall_time_s}s exceeded")
        if failure:
            raise ExecutionError(f"artifact raised: {failure[0]}")
        value = outcome.get("value")
        if not isinstance(value, dict):
            raise ExecutionError("artifact output is not a record")
        return value


@dataclass(frozen=True)
class CaseResult:
    label: str
    passed: bool
    detail: str

    def to_dict(self) -> dict[str, Any]:
        return {"label": self.label, "passed": self.passed, "detail": self.detail}


@dataclass(frozen=True)
class ValidationOutcome:
    passed: bool
    cases: tuple[CaseResult, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "cases": [c.to_dict() for c in self.cases]}


def validate_impl(
    artifact: ToolArtifact,
    spec: ToolSpec,
    sandbox: Sandbox | None = None,
) -> ValidationOutcome:
    """Run every spec test case in isolation; pass only if all of them pass.

    A resource-limit breach fails the case (it never crashes the maker), and
    output-schema conformance is enforced on every case in addition to the
    case's own checks.
    """
    runner = sandbox if sandbox is not None else SubprocessSandbox()
    results: list[CaseResult] = []
    for case in spec.test_cases:
        try:
            output = runner.run(artifact, case.input_map(), spec.resource_limits)
        except SandboxViolation as violation:
            results.append(CaseResult(case.label, False, f"sandbox-violation: {violation}"))
            continue
        except ExecutionError as err:
            results.append(CaseResult(case.label, False, f"execution-error: {err}"))
            continue
        issues = spec.output_schema.conformance_issues(output)
        for criterion in case.checks:
            if criterion.evaluate(output) != "pass":
                issues.append(f"criterion failed: {criterion.label()}")
        if issues:
            results.append(CaseResult(case.label, False, "; ".join(issues)))
        else:
            results.append(CaseResult(case.label, True, "ok"))
    return ValidationOutcome(passed=all(r.passed for r in results), cases=tuple(results))
