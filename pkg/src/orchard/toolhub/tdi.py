"""Capability retrieval: rank tool cards against a need's capability text.

The score is an equal-weight hybrid of dense similarity (embedding of the
need's capability description vs each card capability description, best
capability wins) and lexical relevance (BM25 over the card's full text,
normalized by the best lexical score for the query). Deterministic under a
deterministic embedder; ties break by ascending tool id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from orchard.core.types import NeedContract, ToolCard
from orchard.errors import EmptyHub
from orchard.fastpath.retrieval import Bm25Index
from orchard.fastpath.store import KnowledgeStore
from orchard.shell.providers import EmbeddingProvider, cosine
from orchard.toolhub.hub import ToolHub

HYBRID_ALPHA = 0.5  # weight on the dense component; the rest is lexical


@dataclass(frozen=True)
class ScoredTool:
    tool_id: str
    score: float
    dense: float
    lexical: float

    def to_dict(self) -> dict[str, Any]:
        return {"tool_id": self.tool_id, "score": self.score, "dense": self.dense, "lexical": self.lexical}


@dataclass(frozen=True)
class RetrievalResult:
    ranked: tuple[ScoredTool, ...]

    def ids(self) -> list[str]:
        return [s.tool_id for s in self.ranked]

    def to_dict(self) -> dict[str, Any]:
        return {"ranked": [s.to_dict() for s in self.ranked]}


class _TdiIndex:
    """Per-snapshot cache: capability embeddings plus a BM25 card-text index."""

    def __init__(self, cards: tuple[ToolCard, ...], embedder: EmbeddingProvider) -> None:
        self.cards = cards
        self.cap_vectors = {
            card.id: [embedder.embed(description) for _, description in card.capabilities]
            for card in cards
        }
        corpus = {card.id: f"{card.name} {card.capability_text()}" for card in cards}
        self.bm25 = Bm25Index(KnowledgeStore(corpus))


def _index_for(hub: ToolHub) -> _TdiIndex:
    cached = hub._tdi_cache
    if cached is not None and cached.cards is hub.snapshot():
        return cached
    index = _TdiIndex(hub.snapshot(), hub.embedder)
    hub._tdi_cache = index
    return index


def tdi_query(hub: ToolHub, need: NeedContract, k: int = 5) -> RetrievalResult:
    """Top-k tools by hybrid capability score, with per-tool score breakdowns."""
    cards = hub.snapshot()
    if not cards:
        raise EmptyHub("no tools registered")
    index = _index_for(hub)
    query_text = f"{need.capability_tag} {need.capability_description}"
    need_vec = hub.embedder.embed(need.capability_description)
    lexical_raw = {card.id: index.bm25.score(query_text, card.id) for card in cards}
    best_lexical = max(lexical_raw.values())
    scored: list[ScoredTool] = []
    for card in cards:
        dense = max((cosine(need_vec, vec) for vec in index.cap_vectors[card.id]), default=0.0)
        lexical = lexical_raw[card.id] / best_lexical if best_lexical > 0 else 0.0
        scored.append(
            ScoredTool(
                tool_id=card.id,
                score=HYBRID_ALPHA * dense + (1.0 - HYBRID_ALPHA) * lexical,
                dense=dense,
                lexical=lexical,
            )
        )
    scored.sort(key=lambda s: (-s.score, s.tool_id))
    return RetrievalResult(tuple(scored[:k]))
