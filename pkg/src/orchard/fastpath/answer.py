"""Modality adapters and collaborative answer synthesis.

Each input modality is handled by a specialized adapter (text, vision, omni)
that produces an intermediate judgment grounded in the shared retrieved
context. A single synthesizer call fuses all judgments into the final
deliverable. Model weights live behind the provider layer; the template
synthesizer is the deterministic stand-in used for tests and offline runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

from orchard.core.types import Deliverable, EvidenceEntry, TaskEnvelope
from orchard.fastpath.fuse import ConsolidatedEvidence, consolidate
from orchard.fastpath.retrieval import Bm25Index, DenseIndex, dense_retrieve, graph_retrieve, sparse_retrieve, tokenize
from orchard.fastpath.store import KnowledgeStore
from orchard.shell.providers import ChatProvider, EmbeddingProvider

ADAPTER_NAMES = ("text-expert", "vision-expert", "omni-expert")

_MAX_CITED = 3


@dataclass(frozen=True)
class ModalityInput:
    kind: str  # text | image-ref | audio-ref
    payload: str

    def __post_init__(self) -> None:
        if self.kind not in ("text", "image-ref", "audio-ref"):
            raise ValueError(f"unknown modality {self.kind!r}")


@dataclass(frozen=True)
class IntermediateJudgment:
    source_adapter: str
    judgment: str
    cited_evidence: tuple[str, ...]
    confidence: float

    def __post_init__(self) -> None:
        if self.source_adapter not in ADAPTER_NAMES:
            raise ValueError(f"unknown adapter {self.source_adapter!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")


class ModalityAdapter(Protocol):
    name: str

    def judge(
        self,
        task: TaskEnvelope,
        inputs: Sequence[ModalityInput],
        context: Sequence[ConsolidatedEvidence],
    ) -> IntermediateJudgment: ...


class ProviderAdapter:
    """Adapter backed by a chat provider; payload references pass through opaquely."""

    def __init__(self, name: str, provider: ChatProvider) -> None:
        if name not in ADAPTER_NAMES:
            raise ValueError(f"unknown adapter {name!r}")
        self.name = name
        self.provider = provider

    def judge(
        self,
        task: TaskEnvelope,
        inputs: Sequence[ModalityInput],
        context: Sequence[ConsolidatedEvidence],
    ) -> IntermediateJudgment:
        cited = tuple(item.id for item in context[:_MAX_CITED])
        evidence_block = "\n".join(f"[{item.id}] {item.content}" for item in context)
        payload_block = "\n".join(f"{inp.kind}: {inp.payload}" for inp in inputs)
        messages = [
            {"role": "system", "content": f"You are the {self.name} module."},
            {
                "role": "user",
                "content": (
                    f"QUESTION: {task.instruction}\n"
                    f"INPUTS:\n{payload_block}\n"
                    f"EVIDENCE:\n{evidence_block}\n"
                    "Give your judgment grounded in the evidence."
                ),
            },
        ]
        return IntermediateJudgment(
            source_adapter=self.name,
            judgment=self.provider.chat(messages),
            cited_evidence=cited,
            confidence=1.0,
        )


class Synthesizer(Protocol):
    def fuse(
        self,
        task: TaskEnvelope,
        judgments: Sequence[IntermediateJudgment],
        context: Sequence[ConsolidatedEvidence],
    ) -> str: ...


class TemplateSynthesizer:
    """Deterministic fusion: concatenates judgments in adapter order."""

    def fuse(
        self,
        task: TaskEnvelope,
        judgments: Sequence[IntermediateJudgment],
        context: Sequence[ConsolidatedEvidence],
    ) -> str:
        return "\n\n".join(j.judgment for j in judgments)


class ProviderSynthesizer:
    """Fusion through the omni provider in a single call."""

    def __init__(self, provider: ChatProvider) -> None:
        self.provider = provider

    def fuse(
        self,
        task: TaskEnvelope,
        judgments: Sequence[IntermediateJudgment],
        context: Sequence[ConsolidatedEvidence],
    ) -> str:
        judgment_block = "\n".join(f"{j.source_adapter}: {j.judgment}" for j in judgments)
        evidence_block = "\n".join(f"[{item.id}] {item.content}" for item in context)
        messages = [
            {"role": "system", "content": "Fuse the module judgments into one final answer."},
            {
                "role": "user",
                "content": f"QUESTION: {task.instruction}\nJUDGMENTS:\n{judgment_block}\nEVIDENCE:\n{evidence_block}",
            },
        ]
        return self.provider.chat(messages)


def synthesize(
    task: TaskEnvelope,
    judgments: Sequence[IntermediateJudgment],
    context: Sequence[ConsolidatedEvidence],
    synthesizer: Synthesizer,
) -> Deliverable:
    """Fuse judgments into the final deliverable, linking claims to evidence."""
    if not judgments:
        raise ValueError("synthesis requires at least one judgment")
    known_ids = {item.id for item in context}
    for judgment in judgments:
        unknown = [e for e in judgment.cited_evidence if e not in known_ids]
        if unknown:
            raise ValueError(f"judgment cites evidence outside the shared context: {unknown}")
    answer = synthesizer.fuse(task, judgments, context)
    cited: list[str] = []
    for judgment in judgments:
        for evidence_id in judgment.cited_evidence:
            if evidence_id not in cited:
                cited.append(evidence_id)
    evidence = (
        (EvidenceEntry(claim_field="answer", step_ids=(), sources=tuple(cited)),) if cited else ()
    )
    return Deliverable.new(answer=answer, structured={"answer": answer}, evidence=evidence)


def answer_fast(
    task: TaskEnvelope,
    inputs: Sequence[ModalityInput],
    store: KnowledgeStore,
    adapters: Sequence[ModalityAdapter],
    synthesizer: Synthesizer,
    embedder: EmbeddingProvider,
    k: int = 5,
    max_hops: int = 2,
    sparse_index: Bm25Index | None = None,
    dense_index: DenseIndex | None = None,
) -> Deliverable:
    """One fast-path request: retrieve on all three paths, judge, synthesize."""
    query = task.instruction
    sparse = sparse_retrieve(query, store, k, index=sparse_index) if not store.is_empty() else []
    dense = dense_retrieve(query, store, embedder, k, index=dense_index) if not store.is_empty() else []
    entities = [token for token in tokenize(query) if store.has_node(token)]
    graph = graph_retrieve(entities, store, max_hops=max_hops)
    context = consolidate([dense, sparse, graph])
    modalities_present = {"text"} | {inp.kind for inp in inputs}
    judgments = []
    for adapter in adapters:
        wanted = {
            "text-expert": "text",
            "vision-expert": "image-ref",
            "omni-expert": "audio-ref",
        }[adapter.name]
        if wanted in modalities_present or adapter.name == "omni-expert":
            relevant = [inp for inp in inputs if inp.kind == wanted]
            judgments.append(adapter.judge(task, relevant, context))
    return synthesize(task, judgments, context, synthesizer)
