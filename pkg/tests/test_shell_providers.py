"""Provider mocks: scripted chat, deterministic embeddings, clocks."""

from __future__ import annotations

import random
import string

import numpy as np
import pytest

from orchard.errors import MatcherMismatch, ScriptExhausted
from orchard.shell import (
    HashEmbedder,
    MockChatProvider,
    MockScript,
    ProviderConfig,
    TickClock,
    cosine,
)


class TestMockChat:
    def test_single_canned_response(self):
        provider = MockChatProvider(MockScript.of("the answer"))
        assert provider.chat([{"role": "user", "content": "anything"}]) == "the answer"

    def test_exhaustion_raises(self):
        provider = MockChatProvider(MockScript.of("only one"))
        provider.chat([{"role": "user", "content": "x"}])
        with pytest.raises(ScriptExhausted):
            provider.chat([{"role": "user", "content": "y"}])

    def test_matcher_mismatch_raises(self):
        provider = MockChatProvider(MockScript.matched(("expected-token", "reply")))
        with pytest.raises(MatcherMismatch):
            provider.chat([{"role": "user", "content": "something else"}])

    def test_matcher_accepts_substring(self):
        provider = MockChatProvider(MockScript.matched(("needle", "found")))
        reply = provider.chat([{"role": "user", "content": "hay needle stack"}])
        assert reply == "found"

    def test_replay_is_byte_identical(self):
        script = MockScript.of("alpha", "beta")
        transcript1 = [MockChatProvider(script).chat([{"role": "user", "content": "q"}])]
        transcript2 = [MockChatProvider(script).chat([{"role": "user", "content": "q"}])]
        assert transcript1 == transcript2


class TestHashEmbedder:
    def test_determinism(self):
        embedder = HashEmbedder(dim=64)
        a = embedder.embed("identical text")
        b = embedder.embed("identical text")
        assert np.array_equal(a, b)

    def test_unit_norm(self):
        embedder = HashEmbedder(dim=64)
        rng = random.Random(11)
        for _ in range(100):
            text = " ".join(
                "".join(rng.choices(string.ascii_lowercase, k=rng.randint(2, 8)))
                for _ in range(rng.randint(1, 6))
            )
            assert np.linalg.norm(embedder.embed(text)) == pytest.approx(1.0, abs=1e-9)

    def test_self_cosine_is_one(self):
        embedder = HashEmbedder(dim=64)
        rng = random.Random(12)
        for _ in range(100):
            text = " ".join(
                "".join(rng.choices(string.ascii_lowercase, k=rng.randint(2, 10)))
                for _ in range(rng.randint(1, 5))
            )
            assert cosine(embedder.embed(text), embedder.embed(text)) == pytest.approx(1.0, abs=1e-9)

    def test_empty_text_embeds_to_zero(self):
        embedder = HashEmbedder(dim=64)
        assert np.linalg.norm(embedder.embed("")) == 0.0

    def test_dim_respected(self):
        assert HashEmbedder(dim=32).embed("word").shape == (32,)


class TestConfigAndClock:
    def test_timeout_must_be_positive(self):
        with pytest.raises(ValueError):
            ProviderConfig(endpoint="http://x", model="m", timeout=0)

    def test_credential_resolved_from_env(self, monkeypatch):
        monkeypatch.setenv("MY_KEY_REF", "secret-value")
        config = ProviderConfig(endpoint="http://x", model="m", credential_ref="MY_KEY_REF")
        assert config.credential() == "secret-value"
        assert "secret-value" not in repr(config)

    def test_tick_clock_monotonic(self):
        clock = TickClock(start=5.0, step=0.5)
        assert [clock.now() for _ in range(3)] == [5.0, 5.5, 6.0]


class TestHttpProviders:
    def test_chat_failure_after_retries_raises(self, monkeypatch):
        import requests
        from orchard.errors import BackendUnavailable
        from orchard.shell import HttpChatProvider
        calls = []

        def dead_post(*args, **kwargs):
            calls.append(1)
            raise requests.ConnectionError("refused")

        monkeypatch.setattr("orchard.shell.providers.requests.post", dead_post)
        provider = HttpChatProvider(ProviderConfig(endpoint="http://unreachable", model="m", retries=2))
        with pytest.raises(BackendUnavailable):
            provider.chat([{"role": "user", "content": "q"}])
        assert len(calls) == 3  # initial try plus two retries

    def test_chat_parses_completion_payload(self, monkeypatch):
        from orchard.shell import HttpChatProvider

        class FakeResponse:
            def raise_for_status(self):
                pass
            def json(self):
                return {"choices": [{"message": {"content": "pong"}}]}

        seen = {}

        def fake_post(url, json=None, headers=None, timeout=None):
            seen["url"] = url
            seen["payload"] = json
            seen["headers"] = headers
            return FakeResponse()

        monkeypatch.setattr("orchard.shell.providers.requests.post", fake_post)
        monkeypatch.setenv("KEY_REF", "sk-test")
        provider = HttpChatProvider(
            ProviderConfig(endpoint="http://llm/v1", model="m", credential_ref="KEY_REF")
        )
        assert provider.chat([{"role": "user", "content": "ping"}]) == "pong"
        assert seen["url"] == "http://llm/v1/chat/completions"
        assert seen["payload"]["model"] == "m"
        assert seen["headers"]["Authorization"] == "Bearer sk-test"

    def test_embedding_failure_wrapped(self, monkeypatch):
        import requests
        from orchard.errors import EmbedderFailure
        from orchard.shell import HttpEmbeddingProvider

        def dead_post(*args, **kwargs):
            raise requests.ConnectionError("refused")

        monkeypatch.setattr("orchard.shell.providers.requests.post", dead_post)
        provider = HttpEmbeddingProvider(ProviderConfig(endpoint="http://unreachable", model="m"))
        with pytest.raises(EmbedderFailure):
            provider.embed("text")
