"""Engine configuration: YAML file plus environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from orchard.errors import ConfigError

ENV_PREFIX = "ORCHARD"


@dataclass
class EngineConfig:
    chat_endpoint: str | None = None
    chat_model: str | None = None
    embedding_endpoint: str | None = None
    embedding_model: str | None = None
    credential_ref: str = "ORCHARD_API_KEY"
    embedding_dim: int = 64
    hub_dir: str | None = None
    maker_workspace: str | None = None
    router: dict[str, Any] = field(default_factory=dict)

    @property
    def has_chat_provider(self) -> bool:
        return bool(self.chat_endpoint and self.chat_model)


def load_config(path: str | Path | None = None) -> EngineConfig:
    """Read the YAML config (when given) and apply ORCHARD_* env overrides."""
    doc: dict[str, Any] = {}
    if path is not None:
        target = Path(path)
        if not target.exists():
            raise ConfigError(f"config file not found: {target}")
        try:
            loaded = yaml.safe_load(target.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file is not valid YAML: {exc}") from exc
        if loaded is not None:
            if not isinstance(loaded, dict):
                raise ConfigError("config root must be a mapping")
            doc = loaded

    providers = doc.get("providers", {})
    chat = providers.get("chat", {})
    embedding = providers.get("embedding", {})
    config = EngineConfig(
        chat_endpoint=chat.get("endpoint"),
        chat_model=chat.get("model"),
        embedding_endpoint=embedding.get("endpoint"),
        embedding_model=embedding.get("model"),
        credential_ref=doc.get("credential_ref", "ORCHARD_API_KEY"),
        embedding_dim=int(embedding.get("dim", 64)),
        hub_dir=doc.get("hub_dir"),
        maker_workspace=doc.get("maker_workspace"),
        router=doc.get("router", {}),
    )

    env = os.environ
    config.chat_endpoint = env.get(f"{ENV_PREFIX}_CHAT_ENDPOINT", config.chat_endpoint)
    config.chat_model = env.get(f"{ENV_PREFIX}_CHAT_MODEL", config.chat_model)
    config.embedding_endpoint = env.get(f"{ENV_PREFIX}_EMBEDDING_ENDPOINT", config.embedding_endpoint)
    config.embedding_model = env.get(f"{ENV_PREFIX}_EMBEDDING_MODEL", config.embedding_model)
    config.credential_ref = env.get(f"{ENV_PREFIX}_CREDENTIAL_REF", config.credential_ref)
    config.hub_dir = env.get(f"{ENV_PREFIX}_HUB_DIR", config.hub_dir)
    return config
