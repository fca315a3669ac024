"""Fast-path multimodal QA: tri-path retrieval, consolidation, synthesis."""

from orchard.fastpath.answer import (
    IntermediateJudgment,
    ModalityAdapter,
    ModalityInput,
    ProviderAdapter,
    ProviderSynthesizer,
    TemplateSynthesizer,
    answer_fast,
    synthesize,
)
from orchard.fastpath.fuse import ConsolidatedEvidence, consolidate
from orchard.fastpath.retrieval import (
    EvidenceItem,
    dense_retrieve,
    graph_retrieve,
    sparse_retrieve,
)
from orchard.fastpath.store import KnowledgeStore

__all__ = [
    "ConsolidatedEvidence",
    "EvidenceItem",
    "IntermediateJudgment",
    "KnowledgeStore",
    "ModalityAdapter",
    "ModalityInput",
    "ProviderAdapter",
    "ProviderSynthesizer",
    "TemplateSynthesizer",
    "answer_fast",
    "consolidate",
    "dense_retrieve",
    "graph_retrieve",
    "sparse_retrieve",
    "synthesize",
]
