"""The three retrieval paths: sparse (Okapi BM25), dense (cosine), graph (paths).

Parameter defaults are the standard literature values: BM25 k1=1.2, b=0.75;
graph hop bound 2. All paths are deterministic: ties break by ascending
document id, and graph paths enumerate in lexicographic order.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Any

import numpy as np

from orchard.errors import DimensionMismatch, EmbedderFailure, EmptyCorpus
from orchard.fastpath.store import KnowledgeStore
from orchard.shell.providers import EmbeddingProvider, cosine

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"\w+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class EvidenceItem:
    """One retrieved piece of evidence with scoring and provenance."""

    id: str
    source: str  # dense | sparse | graph
    content: str
    score: float
    origin_ref: str
    snapshot: str

    def __post_init__(self) -> None:
        if self.source not in ("dense", "sparse", "graph"):
            raise ValueError(f"unknown evidence source {self.source!r}")
        if not math.isfinite(self.score):
            raise ValueError("evidence score must be finite")
        if not self.origin_ref:
            raise ValueError("origin_ref must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "source": self.source,
            "content": self.content,
            "score": self.score,
            "origin_ref": self.origin_ref,
            "snapshot": self.snapshot,
        }


# ---------------------------------------------------------------------------
# Sparse: Okapi BM25
# ---------------------------------------------------------------------------


class Bm25Index:
    """Okapi BM25 with the non-negative idf variant ln(1 + (N-df+0.5)/(df+0.5))."""

    def __init__(self, store: KnowledgeStore, k1: float = 1.2, b: float = 0.75) -> None:
        if store.is_empty():
            raise EmptyCorpus("cannot index an empty corpus")
        self.store = store
        self.k1 = k1
        self.b = b
        self.doc_ids = store.doc_ids()
        docs = store.documents
        self._tokens = {doc_id: tokenize(docs[doc_id]) for doc_id in self.doc_ids}
        self._tf = {doc_id: Counter(toks) for doc_id, toks in self._tokens.items()}
        self._len = {doc_id: len(toks) for doc_id, toks in self._tokens.items()}
        self.avgdl = sum(self._len.values()) / len(self.doc_ids)
        df = Counter()
        for counts in self._tf.values():
            df.update(counts.keys())
        n = len(self.doc_ids)
        self.idf = {term: math.log(1.0 + (n - count + 0.5) / (count + 0.5)) for term, count in df.items()}

    def score(self, query: str, doc_id: str) -> float:
        tf = self._tf[doc_id]
        dl = self._len[doc_id]
        norm = self.k1 * (1.0 - self.b + self.b * dl / self.avgdl)
        total = 0.0
        for term in tokenize(query):
            freq = tf.get(term, 0)
            if freq == 0:
                continue
            total += self.idf[term] * freq * (self.k1 + 1.0) / (freq + norm)
        return total

    def scores(self, query: str) -> dict[str, float]:
        return {doc_id: self.score(query, doc_id) for doc_id in self.doc_ids}


def sparse_retrieve(
    query: str,
    store: KnowledgeStore,
    k: int,
    index: Bm25Index | None = None,
) -> list[EvidenceItem]:
    """Top-k documents by BM25; docs that match no query term are excluded."""
    if store.is_empty():
        raise EmptyCorpus("sparse retrieval over an empty corpus")
    bm25 = index if index is not None else Bm25Index(store)
    scored = [(doc_id, s) for doc_id, s in bm25.scores(query).items() if s > 0.0]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    docs = store.documents
    return [
        EvidenceItem(
            id=f"sparse:{doc_id}",
            source="sparse",
            content=docs[doc_id],
            score=score,
            origin_ref=doc_id,
            snapshot=store.snapshot_id,
        )
        for doc_id, score in scored[:k]
    ]


# ---------------------------------------------------------------------------
# Dense: cosine over embedded corpus
# ---------------------------------------------------------------------------


class DenseIndex:
    """Corpus embeddings; must be built with the same embedder used to query."""

    def __init__(self, store: KnowledgeStore, embedder: EmbeddingProvider) -> None:
        if store.is_empty():
            raise EmptyCorpus("cannot embed an empty corpus")
        self.store = store
        self.embedder = embedder
        self.doc_ids = store.doc_ids()
        docs = store.documents
        try:
            self.vectors = {doc_id: np.asarray(embedder.embed(docs[doc_id]), dtype=np.float64) for doc_id in self.doc_ids}
        except Exception as exc:  # provider-defined failure modes
            raise EmbedderFailure(f"corpus embedding failed: {exc}") from exc


def dense_retrieve(
    query: str,
    store: KnowledgeStore,
    embedder: EmbeddingProvider,
    k: int,
    index: DenseIndex | None = None,
) -> list[EvidenceItem]:
    """Top-k documents by cosine similarity between query and document vectors."""
    if store.is_empty():
        raise EmptyCorpus("dense retrieval over an empty corpus")
    dense = index if index is not None else DenseIndex(store, embedder)
    try:
        query_vec = np.asarray(embedder.embed(query), dtype=np.float64)
    except Exception as exc:
        raise EmbedderFailure(f"query embedding failed: {exc}") from exc
    sample = next(iter(dense.vectors.values()))
    if query_vec.shape != sample.shape:
        raise DimensionMismatch(f"query dim {query_vec.shape} != index dim {sample.shape}")
    scored = [(doc_id, cosine(query_vec, vec)) for doc_id, vec in dense.vectors.items()]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    docs = store.documents
    return [
        EvidenceItem(
            id=f"dense:{doc_id}",
            source="dense",
            content=docs[doc_id],
            score=score,
            origin_ref=doc_id,
            snapshot=store.snapshot_id,
        )
        for doc_id, score in scored[:k]
    ]


# ---------------------------------------------------------------------------
# Graph: bounded path enumeration between query entities
# ---------------------------------------------------------------------------


def _serialize_path(path: list[tuple[str, str | None, str | None]]) -> str:
    """Render a path as ``A --rel--> B`` segments, honoring edge direction."""
    parts = [path[0][0]]
    for node, relation, direction in path[1:]:
        arrow = f"--{relation}-->" if direction == "fwd" else f"<--{relation}--"
        parts.append(f" {arrow} {node}")
    return "".join(parts)


def graph_retrieve(
    entities: list[str],
    store: KnowledgeStore,
    max_hops: int = 2,
) -> list[EvidenceItem]:
    """All simple paths of length <= max_hops connecting pairs of query entities.

    Unresolved entities are skipped with a warning. Each path scores
    1/length. Paths are enumerated once per unordered pair, starting from
    the lexicographically smaller endpoint.
    """
    resolved: list[str] = []
    for entity in entities:
        if store.has_node(entity):
            if entity not in resolved:
                resolved.append(entity)
        else:
            log.warning("graph entity %r not found in knowledge graph; skipped", entity)
    items: list[EvidenceItem] = []
    seen_refs: set[str] = set()
    pairs = sorted({tuple(sorted((a, b))) for i, a in enumerate(resolved) for b in resolved[i + 1 :]})
    for start, goal in pairs:
        for path in _enumerate_paths(store, start, goal, max_hops):
            ref = _serialize_path(path)
            if ref in seen_refs:
                continue
            seen_refs.add(ref)
            hops = len(path) - 1
            items.append(
                EvidenceItem(
                    id=f"graph:{ref}",
                    source="graph",
                    content=ref,
                    score=1.0 / hops,
                    origin_ref=ref,
                    snapshot=store.snapshot_id,
                )
            )
    items.sort(key=lambda item: (-item.score, item.origin_ref))
    return items


def _enumerate_paths(
    store: KnowledgeStore, start: str, goal: str, max_hops: int
) -> list[list[tuple[str, str | None, str | None]]]:
    """Depth-first enumeration of simple paths, lexicographic edge order."""
    paths: list[list[tuple[str, str | None, str | None]]] = []

    def extend(path: list[tuple[str, str | None, str | None]], visited: set[str]) -> None:
        current = path[-1][0]
        if current == goal and len(path) > 1:
            paths.append(list(path))
            return
        if len(path) - 1 >= max_hops:
            return
        for neighbor, relation, direction in store.neighbors(current):
            if neighbor in visited:
                continue
            path.append((neighbor, relation, direction))
            visited.add(neighbor)
            extend(path, visited)
            visited.remove(neighbor)
            path.pop()

    extend([(start, None, None)], {start})
    return paths
