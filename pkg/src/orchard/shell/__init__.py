"""Provider abstraction, configuration, persistence, and the CLI."""

from orchard.shell.clock import Clock, SystemClock, TickClock
from orchard.shell.providers import (
    ChatProvider,
    EmbeddingProvider,
    FailingChatProvider,
    HashEmbedder,
    HttpChatProvider,
    HttpEmbeddingProvider,
    MockChatProvider,
    MockScript,
    ProviderConfig,
    ScriptEntry,
    chat,
    cosine,
    embed,
)

__all__ = [
    "ChatProvider",
    "Clock",
    "EmbeddingProvider",
    "FailingChatProvider",
    "HashEmbedder",
    "HttpChatProvider",
    "HttpEmbeddingProvider",
    "MockChatProvider",
    "MockScript",
    "ProviderConfig",
    "ScriptEntry",
    "SystemClock",
    "TickClock",
    "chat",
    "cosine",
    "embed",
]
