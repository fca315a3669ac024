"""Chat and embedding backends with deterministic mocks.

All model calls in the engine route through `chat` and `embed`. The real
providers speak the OpenAI-compatible HTTP shape; the mocks are fully
deterministic so end-to-end runs reproduce bit-for-bit. Credentials are
resolved from the environment by reference and never logged.
"""

from __future__ import annotations

import hashlib
import os
import re
import threading
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
import requests

from orchard.errors import BackendUnavailable, EmbedderFailure, MatcherMismatch, ScriptExhausted

Message = Mapping[str, str]  # {"role": ..., "content": ...}

_TOKEN_RE = re.compile(r"\w+")


@dataclass(frozen=True)
class ProviderConfig:
    """Connection settings for one model endpoint."""

    endpoint: str
    model: str
    credential_ref: str = ""  # name of the env var holding the key
    timeout: float = 30.0
    retries: int = 2

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    def credential(self) -> str | None:
        return os.environ.get(self.credential_ref) if self.credential_ref else None


class ChatProvider(Protocol):
    def chat(self, messages: Sequence[Message]) -> str: ...


class EmbeddingProvider(Protocol):
    @property
    def dim(self) -> int: ...

    def embed(self, text: str) -> np.ndarray: ...


def chat(messages: Sequence[Message], provider: ChatProvider) -> str:
    """Single completion round-trip through the given provider."""
    return provider.chat(messages)


def embed(text: str, provider: EmbeddingProvider) -> np.ndarray:
    return provider.embed(text)


# ---------------------------------------------------------------------------
# Real providers (OpenAI-compatible HTTP)
# ---------------------------------------------------------------------------


class HttpChatProvider:
    def __init__(self, config: ProviderConfig) -> None:
        self.config = config

    def chat(self, messages: Sequence[Message]) -> str:
        payload = {"model": self.config.model, "messages": list(messages)}
        headers = {}
        key = self.config.credential()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last_error: Exception | None = None
        for _ in range(self.config.retries + 1):
            try:
                response = requests.post(
                    f"{self.config.endpoint.rstrip('/')}/chat/completions",
                    json=payload,
                    headers=headers,
                    timeout=self.config.timeout,
                )
                response.raise_for_status()
                return response.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
        raise BackendUnavailable(f"chat endpoint {self.config.endpoint} failed: {last_error}")


class HttpEmbeddingProvider:
    def __init__(self, config: ProviderConfig, dim: int = 64) -> None:
        self.config = config
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    def embed(self, text: str) -> np.ndarray:
        payload = {"model": self.config.model, "input": text}
        headers = {}
        key = self.config.credential()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            response = requests.post(
                f"{self.config.endpoint.rstrip('/')}/embeddings",
                json=payload,
                headers=headers,
                timeout=self.config.timeout,
            )
            response.raise_for_status()
            vector = np.asarray(response.json()["data"][0]["embedding"], dtype=np.float64)
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise EmbedderFailure(f"embedding endpoint {self.config.endpoint} failed: {exc}") from exc
        return vector


# ---------------------------------------------------------------------------
# Deterministic mocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScriptEntry:
    """One canned exchange: the response plays only if the matcher accepts."""

    response: str
    matcher: str | None = None  # substring that must appear in the request text

    def accepts(self, request_text: str) -> bool:
        return self.matcher is None or self.matcher in request_text


@dataclass
class MockScript:
    """An ordered, consumable script of canned responses."""

    entries: list[ScriptEntry] = field(default_factory=list)

    @classmethod
    def of(cls, *responses: str) -> "MockScript":
        return cls([ScriptEntry(r) for r in responses])

    @classmethod
    def matched(cls, *pairs: tuple[str | None, str]) -> "MockScript":
        return cls([ScriptEntry(response, matcher) for matcher, response in pairs])


class MockChatProvider:
    """Replays a script in order; exhaustion is an error, never improvisation."""

    def __init__(self, script: MockScript) -> None:
        self._entries = list(script.entries)
        self._cursor = 0
        self._lock = threading.Lock()

    def chat(self, messages: Sequence[Message]) -> str:
        request_text = "\n".join(m.get("content", "") for m in messages)
        with self._lock:
            if self._cursor >= len(self._entries):
                raise ScriptExhausted(f"mock script exhausted after {self._cursor} calls")
            entry = self._entries[self._cursor]
            if not entry.accepts(request_text):
                raise MatcherMismatch(f"request does not contain expected {entry.matcher!r}")
            self._cursor += 1
        return entry.response

    @property
    def remaining(self) -> int:
        return len(self._entries) - self._cursor


class FailingChatProvider:
    """Always raises; used to exercise fallback paths."""

    def chat(self, messages: Sequence[Message]) -> str:
        raise BackendUnavailable("provider configured to fail")


class HashEmbedder:
    """Deterministic hashed bag-of-words embedding, unit-normalized.

    Each token is hashed into one of `dim` buckets with a hash-derived sign,
    so identical texts embed identically and unrelated token sets land in
    (almost surely) different buckets.
    """

    def __init__(self, dim: int = 64) -> None:
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    def embed(self, text: str) -> np.ndarray:
        vector = np.zeros(self._dim, dtype=np.float64)
        for token in _TOKEN_RE.findall(text.lower()):
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:4], "big") % self._dim
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            vector[bucket] += sign
        norm = float(np.linalg.norm(vector))
        if norm > 0:
            vector /= norm
        return vector


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity with a zero-vector guard."""
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
