"""The tool hub: registration, reliability bookkeeping, and persistence.

Queries and compositions read an immutable snapshot of the registry;
registration and reliability updates serialize through one lock and publish
a fresh snapshot (and, when a persist directory is configured, rewrite the
tool's document atomically).
"""

from __future__ import annotations

import dataclasses
import json
import re
import threading
from collections.abc import Callable, Mapping
from pathlib import Path
from typing import Any

from orchard.core.types import ToolCard, canonical_json
from orchard.errors import DuplicateId, MalformedCard, UnknownTool
from orchard.shell.clock import Clock, SystemClock
from orchard.shell.providers import EmbeddingProvider, HashEmbedder

ToolImpl = Callable[[Mapping[str, Any]], Mapping[str, Any]]

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class ToolHub:
    def __init__(
        self,
        embedder: EmbeddingProvider | None = None,
        persist_dir: str | Path | None = None,
        clock: Clock | None = None,
    ) -> None:
        self.embedder = embedder if embedder is not None else HashEmbedder()
        self.persist_dir = Path(persist_dir) if persist_dir is not None else None
        self.clock = clock if clock is not None else SystemClock()
        self._lock = threading.Lock()
        self._cards: dict[str, ToolCard] = {}
        self._impls: dict[str, ToolImpl] = {}
        self._snapshot: tuple[ToolCard, ...] = ()
        self._tdi_cache: Any = None  # built lazily by tdi_query
        if self.persist_dir is not None and self.persist_dir.exists():
            for path in sorted(self.persist_dir.glob("*.json")):
                card = ToolCard.from_dict(json.loads(path.read_text(encoding="utf-8")))
                self._cards[card.id] = card
            self._snapshot = tuple(self._cards[i] for i in sorted(self._cards))

    # --- reads ---------------------------------------------------------------

    def snapshot(self) -> tuple[ToolCard, ...]:
        """Immutable registry view ordered by tool id."""
        return self._snapshot

    def size(self) -> int:
        return len(self._snapshot)

    def has(self, tool_id: str) -> bool:
        return tool_id in self._cards

    def card(self, tool_id: str) -> ToolCard:
        try:
            return self._cards[tool_id]
        except KeyError:
            raise UnknownTool(f"tool {tool_id!r} is not registered") from None

    def implementation(self, tool_id: str) -> ToolImpl | None:
        return self._impls.get(tool_id)

    # --- writes ----------------------------------------------------------------

    def register(self, card: ToolCard, impl: ToolImpl | None = None) -> str:
        """Register a card (and optionally its implementation); returns the id."""
        if not _ID_RE.match(card.id):
            raise MalformedCard(f"tool id {card.id!r} is not filesystem-safe")
        with self._lock:
            if card.id in self._cards:
                raise DuplicateId(f"tool id {card.id!r} already registered")
            if not card.provenance.registered_at:
                stamped = dataclasses.replace(card.provenance, registered_at=f"{self.clock.now():.6f}")
                card = dataclasses.replace(card, provenance=stamped)
            self._cards[card.id] = card
            if impl is not None:
                self._impls[card.id] = impl
            self._publish()
            self._persist(card)
        return card.id

    def register_doc(self, doc: Mapping[str, Any], impl: ToolImpl | None = None) -> str:
        """Register from a raw document; structural problems raise MalformedCard."""
        try:
            card = ToolCard.from_dict(doc)
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedCard(f"invalid tool card: {exc}") from exc
        return self.register(card, impl)

    def update_reliability(self, tool_id: str, success: bool) -> ToolCard:
        """attempts += 1, successes += success; persisted atomically."""
        with self._lock:
            if tool_id not in self._cards:
                raise UnknownTool(f"tool {tool_id!r} is not registered")
            updated = self._cards[tool_id].with_reliability(self._cards[tool_id].reliability.bump(success))
            self._cards[tool_id] = updated
            self._publish()
            self._persist(updated)
        return updated

    def attach_impl(self, tool_id: str, impl: ToolImpl) -> None:
        with self._lock:
            if tool_id not in self._cards:
                raise UnknownTool(f"tool {tool_id!r} is not registered")
            self._impls[tool_id] = impl

    # --- internals ---------------------------------------------------------------

    def _publish(self) -> None:
        self._snapshot = tuple(self._cards[i] for i in sorted(self._cards))
        self._tdi_cache = None

    def _persist(self, card: ToolCard) -> None:
        if self.persist_dir is None:
            return
        self.persist_dir.mkdir(parents=True, exist_ok=True)
        target = self.persist_dir / f"{card.id}.json"
        temporary = target.with_suffix(".json.tmp")
        temporary.write_text(canonical_json(card.to_dict()), encoding="utf-8")
        temporary.replace(target)
