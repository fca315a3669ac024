"""Exception hierarchy shared across the orchard engine."""

from __future__ import annotations


class OrchardError(Exception):
    """Base class for all engine errors."""


class CyclicPlan(OrchardError):
    """Raised when an ordering is requested for a plan that is not a DAG."""


class ConfigError(OrchardError):
    """Invalid or missing configuration."""


# --- provider layer ---------------------------------------------------------

class BackendUnavailable(OrchardError):
    """A chat/embedding backend could not serve the request."""


class EmbedderFailure(BackendUnavailable):
    """The embedding backend failed for a specific input."""


class ScriptExhausted(OrchardError):
    """A scripted mock provider ran out of canned responses."""


class MatcherMismatch(OrchardError):
    """A scripted mock provider received a request its next matcher rejects."""


class DimensionMismatch(OrchardError):
    """Query and index vectors have different dimensionality."""


# --- retrieval / knowledge store --------------------------------------------

class EmptyCorpus(OrchardError):
    """Retrieval was attempted against an empty document store."""


# --- tool hub ----------------------------------------------------------------

class EmptyHub(OrchardError):
    """A query was issued against a hub with no registered tools."""


class DuplicateId(OrchardError):
    """A tool id is already registered."""


class MalformedCard(OrchardError):
    """A tool card violates its structural invariants."""


class UnknownTool(OrchardError):
    """The referenced tool id is not registered."""


class MissingGold(OrchardError):
    """A benchmark case has no gold label."""


# --- negotiation -------------------------------------------------------------

class ProtocolError(OrchardError):
    """An event was applied to a negotiation session state that does not accept it."""

    def __init__(self, state: str, event: str) -> None:
        super().__init__(f"event {event!r} is not valid in state {state!r}")
        self.state = state
        self.event = event


class NoCandidates(OrchardError):
    """Neither capability retrieval nor chain composition produced a candidate."""


class UnbindableInput(OrchardError):
    """A required input field cannot be supplied from any available source."""

    def __init__(self, fields: list[str]) -> None:
        super().__init__(f"required inputs cannot be sourced: {', '.join(fields)}")
        self.fields = fields


class ContractRejected(OrchardError):
    """A supplied binding violates the contract's preconditions."""

    def __init__(self, violations: list[str]) -> None:
        super().__init__("; ".join(violations))
        self.violations = violations


class ExecutionError(OrchardError):
    """A confirmed tool invocation failed."""


# --- debate ------------------------------------------------------------------

class EditRejected(OrchardError):
    """A plan edit would leave the plan invalid; the plan is untouched."""

    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


class NoValidCandidate(OrchardError):
    """Every candidate plan failed validation after repair."""


# --- tool maker ---------------------------------------------------------------

class UnsynthesizableCriterion(OrchardError):
    """A quality criterion kind has no test-case generator."""


class GenerationRefused(OrchardError):
    """The maker backend declined to produce an implementation."""


class SandboxViolation(OrchardError):
    """A generated tool exceeded its sandbox resource limits."""


# --- executor ------------------------------------------------------------------

class PlanFailed(OrchardError):
    """One or more plan nodes failed terminally.

    Carries the partial deliverable and trace so callers can still inspect
    and persist what did complete; downstream nodes that never ran are in
    `skipped_nodes`.
    """

    def __init__(self, failed_nodes: set[str], deliverable, trace, skipped_nodes: set[str] | None = None) -> None:
        super().__init__(f"plan failed at nodes: {', '.join(sorted(failed_nodes))}")
        self.failed_nodes = failed_nodes
        self.skipped_nodes = skipped_nodes or set()
        self.deliverable = deliverable
        self.trace = trace


class OrphanClaim(OrchardError):
    """A deliverable field has no producing step in the trace."""
