"""The shared knowledge store: a document corpus plus a knowledge graph.

All three retrieval paths read the same store snapshot; every piece of
evidence carries the snapshot id so one request's provenance is traceable
to a single corpus state. Index building is exclusive, reads are free.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Mapping
from pathlib import Path

from orchard.core.types import canonical_json


class KnowledgeStore:
    def __init__(
        self,
        documents: Mapping[str, str] | None = None,
        triples: Iterable[tuple[str, str, str]] | None = None,
    ) -> None:
        self._documents: dict[str, str] = dict(documents or {})
        self._triples: list[tuple[str, str, str]] = list(triples or [])
        self._neighbors: dict[str, list[tuple[str, str, str]]] = {}
        for subject, relation, obj in self._triples:
            # Connectivity is undirected; the stored triple keeps direction
            # for readable path serialization.
            self._neighbors.setdefault(subject, []).append((obj, relation, "fwd"))
            self._neighbors.setdefault(obj, []).append((subject, relation, "rev"))
        for key in self._neighbors:
            self._neighbors[key].sort()
        self._snapshot = self._fingerprint()

    def _fingerprint(self) -> str:
        payload = canonical_json(
            {"documents": self._documents, "triples": sorted(self._triples)}
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    @property
    def snapshot_id(self) -> str:
        return self._snapshot

    # --- documents ---------------------------------------------------------

    @property
    def documents(self) -> dict[str, str]:
        return dict(self._documents)

    def doc_ids(self) -> list[str]:
        return sorted(self._documents)

    def is_empty(self) -> bool:
        return not self._documents

    # --- graph --------------------------------------------------------------

    def has_node(self, node: str) -> bool:
        return node in self._neighbors

    def nodes(self) -> list[str]:
        return sorted(self._neighbors)

    def neighbors(self, node: str) -> list[tuple[str, str, str]]:
        """(other node, relation, direction) triples touching `node`."""
        return list(self._neighbors.get(node, ()))

    # --- loading -------------------------------------------------------------

    @classmethod
    def load(cls, corpus_dir: str | Path | None = None, graph_file: str | Path | None = None) -> "KnowledgeStore":
        """Load documents from a manifest directory and triples from an edge list.

        The corpus directory holds one text file per document plus a
        ``manifest.json`` mapping document ids to file names. The graph file
        has one ``subject<TAB>relation<TAB>object`` triple per line.
        """
        documents: dict[str, str] = {}
        if corpus_dir is not None:
            corpus = Path(corpus_dir)
            manifest = json.loads((corpus / "manifest.json").read_text(encoding="utf-8"))
            for doc_id, filename in manifest.items():
                documents[doc_id] = (corpus / filename).read_text(encoding="utf-8")
        triples: list[tuple[str, str, str]] = []
        if graph_file is not None:
            for line in Path(graph_file).read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                subject, relation, obj = line.split("\t")
                triples.append((subject, relation, obj))
        return cls(documents, triples)
