"""Dense retrieval against an exhaustive cosine-scan oracle."""

from __future__ import annotations

import numpy as np
import pytest

from orchard.errors import DimensionMismatch, EmptyCorpus
from orchard.fastpath import KnowledgeStore, dense_retrieve
from orchard.shell import HashEmbedder

EMBEDDER = HashEmbedder(dim=64)


def oracle_ranking(query: str, corpus: dict[str, str], k: int) -> list[tuple[str, float]]:
    """Full pairwise similarity scan, computed from raw vectors."""
    qv = EMBEDDER.embed(query)

    def cos(a, b):
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        return 0.0 if na == 0 or nb == 0 else float(np.dot(a, b) / (na * nb))

    scored = [(doc_id, cos(qv, EMBEDDER.embed(text))) for doc_id, text in corpus.items()]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def test_self_similarity_ranks_first():
    corpus = {
        "a": "maize irrigation schedule for dry plots",
        "b": "wheat rust treatment in humid regions",
        "c": "tomato greenhouse ventilation",
    }
    store = KnowledgeStore(corpus)
    hits = dense_retrieve(corpus["a"], store, EMBEDDER, k=3)
    assert hits[0].origin_ref == "a"
    assert hits[0].score == pytest.approx(1.0, abs=1e-9)


def test_orthogonal_vector_excluded_from_topk():
    # Single-token docs hash into distinct buckets: pairwise orthogonal.
    corpus = {"a": "alpha", "b": "beta", "c": "gamma"}
    store = KnowledgeStore(corpus)
    hits = dense_retrieve("alpha", store, EMBEDDER, k=1)
    assert [h.origin_ref for h in hits] == ["a"]
    all_hits = {h.origin_ref: h.score for h in dense_retrieve("alpha", store, EMBEDDER, k=3)}
    assert all_hits["b"] == pytest.approx(0.0, abs=1e-12)
    assert all_hits["c"] == pytest.approx(0.0, abs=1e-12)


def test_twenty_doc_ranking_matches_oracle():
    words = [
        "maize", "wheat", "tomato", "rust", "blight", "aphid", "drip", "quota",
        "sensor", "moisture", "harvest", "spring", "grain", "plot", "spray",
        "mould", "leaf", "soil", "weather", "yield",
    ]
    corpus = {
        f"doc{i:02d}": " ".join(words[i : i + 4] + words[max(0, i - 2) : i])
        for i in range(20)
    }
    store = KnowledgeStore(corpus)
    for query in ("maize moisture plot", "rust weather", "drip quota sensor"):
        expected = oracle_ranking(query, corpus, k=20)
        hits = dense_retrieve(query, store, EMBEDDER, k=20)
        assert [(h.origin_ref, pytest.approx(h.score, abs=1e-12)) for h in hits] == [
            (d, pytest.approx(s, abs=1e-12)) for d, s in expected
        ]


def test_dimension_mismatch_raises():
    store = KnowledgeStore({"a": "alpha beta"})
    class WrongDim:
        dim = 32
        def embed(self, text):
            return np.zeros(32)
    from orchard.fastpath.retrieval import DenseIndex
    index = DenseIndex(store, EMBEDDER)
    with pytest.raises(DimensionMismatch):
        dense_retrieve("alpha", store, WrongDim(), k=1, index=index)


def test_empty_corpus_raises():
    with pytest.raises(EmptyCorpus):
        dense_retrieve("alpha", KnowledgeStore({}), EMBEDDER, k=1)


def test_embedder_failure_wrapped():
    from orchard.errors import EmbedderFailure

    class Broken:
        dim = 64
        def embed(self, text):
            raise RuntimeError("no embedding service")

    store = KnowledgeStore({"a": "alpha"})
    with pytest.raises(EmbedderFailure):
        dense_retrieve("alpha", store, Broken(), k=1)
