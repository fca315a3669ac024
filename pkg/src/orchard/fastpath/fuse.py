"""Reciprocal-rank fusion of the three retrieval paths into one shared context."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

from orchard.fastpath.retrieval import EvidenceItem

RRF_CONSTANT = 60.0


@dataclass(frozen=True)
class ConsolidatedEvidence:
    """A fused evidence entry; duplicates are merged but keep all source labels."""

    id: str
    origin_ref: str
    content: str
    sources: tuple[str, ...]
    fused_score: float
    snapshot: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "origin_ref": self.origin_ref,
            "content": self.content,
            "sources": list(self.sources),
            "fused_score": self.fused_score,
            "snapshot": self.snapshot,
        }


def consolidate(
    lists: Sequence[Sequence[EvidenceItem]],
    rrf_constant: float = RRF_CONSTANT,
) -> list[ConsolidatedEvidence]:
    """Fuse ranked evidence lists by reciprocal rank: sum of 1/(c + rank).

    Ranks are 1-based per input list. Items appearing in several lists (same
    origin_ref) are merged, summing their reciprocal contributions and
    keeping every source label. No input item is ever dropped.
    """
    fused: dict[str, float] = {}
    merged: dict[str, dict[str, Any]] = {}
    for ranked in lists:
        for rank, item in enumerate(ranked, start=1):
            fused[item.origin_ref] = fused.get(item.origin_ref, 0.0) + 1.0 / (rrf_constant + rank)
            slot = merged.setdefault(
                item.origin_ref,
                {"content": item.content, "sources": [], "snapshot": item.snapshot},
            )
            if item.source not in slot["sources"]:
                slot["sources"].append(item.source)
    ordered = sorted(fused.items(), key=lambda pair: (-pair[1], pair[0]))
    return [
        ConsolidatedEvidence(
            id=f"ctx:{origin_ref}",
            origin_ref=origin_ref,
            content=merged[origin_ref]["content"],
            sources=tuple(sorted(merged[origin_ref]["sources"])),
            fused_score=score,
            snapshot=merged[origin_ref]["snapshot"],
        )
        for origin_ref, score in ordered
    ]
