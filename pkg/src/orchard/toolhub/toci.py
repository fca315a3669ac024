"""Schema-compatible chain composition.

A chain is a sequence of distinct tools where the available input schema
satisfies the first tool, every consecutive output--input boundary is
schema-compatible, and the last tool's output satisfies the need. Partially
satisfied boundaries are filtered out, never repaired. The search is an
exhaustive depth-bounded walk (default depth 4) over the static boundary
graph, so at small registry sizes it is provably complete.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from orchard.core.compat import CompatReport, schema_compatible
from orchard.core.types import NeedContract, Schema, ToolCard

DEFAULT_MAX_LEN = 4


@dataclass(frozen=True)
class ToolChain:
    steps: tuple[str, ...]
    boundary_reports: tuple[CompatReport, ...]
    aggregate_reliability: float

    def __post_init__(self) -> None:
        if len(self.steps) < 1:
            raise ValueError("chain must have at least one step")
        if not all(report.satisfied for report in self.boundary_reports):
            raise ValueError("chain has an unsatisfied boundary")

    def to_dict(self) -> dict[str, Any]:
        return {
            "steps": list(self.steps),
            "boundary_reports": [r.to_dict() for r in self.boundary_reports],
            "aggregate_reliability": self.aggregate_reliability,
        }


def toci_compose(
    cards: tuple[ToolCard, ...],
    need: NeedContract,
    available: Schema,
    max_len: int = DEFAULT_MAX_LEN,
) -> list[ToolChain]:
    """All satisfying chains of length <= max_len, best first.

    Ranking: shorter chains first, then higher aggregate reliability, then
    lexicographic step ids. An empty list means composition is impossible.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    by_id = {card.id: card for card in cards}
    ordered_ids = sorted(by_id)

    starters = [
        tid for tid in ordered_ids if schema_compatible(available, by_id[tid].input_schema).satisfied
    ]
    # Static boundary graph: u -> v iff u's output satisfies v's input.
    boundary: dict[str, list[str]] = {
        u: [
            v
            for v in ordered_ids
            if v != u and schema_compatible(by_id[u].output_schema, by_id[v].input_schema).satisfied
        ]
        for u in ordered_ids
    }

    chains: list[ToolChain] = []

    def emit(path: list[str]) -> None:
        reports = [schema_compatible(available, by_id[path[0]].input_schema)]
        reports.extend(
            schema_compatible(by_id[u].output_schema, by_id[v].input_schema)
            for u, v in zip(path, path[1:])
        )
        reliability = 1.0
        for tid in path:
            reliability *= by_id[tid].reliability.rate
        chains.append(ToolChain(tuple(path), tuple(reports), reliability))

    def walk(path: list[str]) -> None:
        tail = path[-1]
        if schema_compatible(by_id[tail].output_schema, need.output_schema).satisfied:
            emit(path)
        if len(path) >= max_len:
            return
        for nxt in boundary[tail]:
            if nxt in path:
                continue
            path.append(nxt)
            walk(path)
            path.pop()

    for start in starters:
        walk([start])

    chains.sort(key=lambda c: (len(c.steps), -c.aggregate_reliability, c.steps))
    return chains
