"""Task routing: fast path (system1) vs planned path (system2).

Routing is a deterministic rule table over complexity signals: sequencing
markers, explicit tool requests, multi-source evidence needs, traceability
demands, and resource/policy constraints. A configured classifier backend
may override the rule decision; the override (or its failure and fallback)
is always recorded in the decision rationale. The rules, not the model, are
the authority of last resort.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

from orchard.core.types import TaskEnvelope
from orchard.errors import BackendUnavailable
from orchard.shell.providers import ChatProvider

SIGNAL_NAMES = ("multi-step", "tool-request", "multi-source", "traceability", "resource-policy")

DEFAULT_KEYWORDS: dict[str, tuple[str, ...]] = {
    "multi-step": (
        "plan", "schedule", "step by step", "steps", "then", "after that",
        "followed by", "workflow", "over the next", "sequence of",
    ),
    "tool-request": (
        "use the", "run the", "calculate", "compute", "convert", "execute",
        "invoke", "generate a report", "with the tool",
    ),
    "multi-source": (
        "multiple sources", "combine", "cross-reference", "integrate",
        "evidence from", "compare sources", "from both",
    ),
    "traceability": (
        "show your evidence", "show evidence", "cite", "citation", "provenance",
        "traceable", "verifiable", "verify", "justify", "audit trail",
    ),
    "resource-policy": (
        "quota", "policy", "regulation", "budget", "restriction", "compliance",
        "allowance", "permitted",
    ),
}

# Context keys whose presence indicates binding resource/policy conditions.
DEFAULT_CONTEXT_MARKERS: tuple[str, ...] = ("policy", "quota", "resource", "budget", "regulation")


@dataclass(frozen=True)
class RoutePolicy:
    enabled: tuple[str, ...] = SIGNAL_NAMES
    keywords: Mapping[str, tuple[str, ...]] = field(default_factory=lambda: dict(DEFAULT_KEYWORDS))
    context_markers: tuple[str, ...] = DEFAULT_CONTEXT_MARKERS
    classifier_override: bool = False

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "RoutePolicy":
        keywords = dict(DEFAULT_KEYWORDS)
        for name, words in doc.get("keywords", {}).items():
            keywords[name] = tuple(words)
        return cls(
            enabled=tuple(doc.get("enabled", SIGNAL_NAMES)),
            keywords=keywords,
            context_markers=tuple(doc.get("context_markers", DEFAULT_CONTEXT_MARKERS)),
            classifier_override=bool(doc.get("classifier_override", False)),
        )


@dataclass(frozen=True)
class RouteDecision:
    route: str  # system1 | system2
    signals: tuple[tuple[str, bool], ...]
    rationale: str

    def fired(self) -> list[str]:
        return [name for name, hit in self.signals if hit]

    def to_dict(self) -> dict[str, Any]:
        return {
            "route": self.route,
            "signals": [{"name": n, "fired": f} for n, f in self.signals],
            "rationale": self.rationale,
        }


def evaluate_signals(task: TaskEnvelope, policy: RoutePolicy) -> tuple[tuple[str, bool], ...]:
    text = task.instruction.lower()
    context_keys = [k.lower() for k in task.context_map()]
    results = []
    for name in SIGNAL_NAMES:
        if name not in policy.enabled:
            results.append((name, False))
            continue
        fired = any(_contains(text, kw) for kw in policy.keywords.get(name, ()))
        if name == "resource-policy" and not fired:
            fired = any(marker in key for key in context_keys for marker in policy.context_markers)
        results.append((name, fired))
    return tuple(results)


def _contains(text: str, keyword: str) -> bool:
    # Whole-word match for single keywords, plain substring for phrases.
    if " " in keyword:
        return keyword in text
    return re.search(rf"\b{re.escape(keyword)}\b", text) is not None


def route(
    task: TaskEnvelope,
    policy: RoutePolicy | None = None,
    classifier: ChatProvider | None = None,
) -> RouteDecision:
    """Decide the execution path; any fired signal routes to the planned path."""
    policy = policy or RoutePolicy()
    signals = evaluate_signals(task, policy)
    fired = [name for name, hit in signals if hit]
    rule_route = "system2" if fired else "system1"
    rationale = f"rule: {'+'.join(fired) if fired else 'no signal fired'}"

    if policy.classifier_override and classifier is not None:
        try:
            reply = classifier.chat(
                [
                    {"role": "system", "content": "Answer exactly system1 or system2."},
                    {"role": "user", "content": task.instruction},
                ]
            )
            override = "system2" if "system2" in reply.lower() else "system1"
            if override != rule_route:
                return RouteDecision(override, signals, rationale + f"; classifier override -> {override}")
            rationale += "; classifier agreed"
            return RouteDecision(rule_route, signals, rationale)
        except BackendUnavailable:
            rationale += "; classifier unavailable, fell back to rules"

    return RouteDecision(rule_route, signals, rationale)
