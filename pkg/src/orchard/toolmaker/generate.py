"""Implementation generation: provider codegen or the deterministic templates.

The template maker instantiates parameterized implementations for a small
set of synthetic capability families, keyed by the capability tag. It is the
deterministic stand-in for a codegen model: same spec in, same source out.
Unknown families are refused rather than guessed at.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Protocol

from orchard.core.types import canonical_json
from orchard.errors import GenerationRefused
from orchard.shell.providers import ChatProvider
from orchard.toolmaker.spec import ToolSpec, sample_value

_CONVERSION_FACTORS = {
    ("kg", "t"): 0.001,
    ("t", "kg"): 1000.0,
    ("g", "kg"): 0.001,
    ("mm", "cm"): 0.1,
    ("cm", "mm"): 10.0,
    ("ha", "m2"): 10000.0,
}


@dataclass(frozen=True)
class ToolArtifact:
    """An executable implementation: python source exposing run(record)."""

    spec_ref: str
    name: str
    source: str
    language: str = "python"
    entrypoint: str = "run"

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec_ref": self.spec_ref,
            "name": self.name,
            "source": self.source,
            "language": self.language,
            "entrypoint": self.entrypoint,
        }


class MakerBackend(Protocol):
    def make(self, spec: ToolSpec) -> ToolArtifact: ...


def generate_impl(spec: ToolSpec, backend: MakerBackend) -> ToolArtifact:
    """One generation attempt; refusals and backend failures propagate."""
    artifact = backend.make(spec)
    if artifact.spec_ref != spec.id:
        raise GenerationRefused(f"backend returned artifact for {artifact.spec_ref!r}, wanted {spec.id!r}")
    return artifact


def _defaults_for(spec: ToolSpec) -> dict[str, Any]:
    return {f.name: sample_value(f.type) for f in spec.output_schema.fields}


class TemplateMaker:
    """Deterministic template instantiation for synthetic capability families.

    Family dispatch is by capability-tag prefix:

    - ``echo*``: copy matching input fields to outputs, defaulting the rest
    - ``convert-<from>-<to>*``: scale numeric fields by the unit factor
    - ``miswire*``: emit a wrong field name (a planted validation failure)
    - ``sleepy*``: sleep past any sane wall-time limit (sandbox exercise)
    - anything else: GenerationRefused
    """

    def make(self, spec: ToolSpec) -> ToolArtifact:
        tag = spec.capability_tag
        if tag.startswith("echo"):
            source = self._echo_source(spec)
        elif tag.startswith("convert-"):
            source = self._convert_source(spec)
        elif tag.startswith("miswire"):
            source = "def run(record):\n    return {'wrong_field': 1}\n"
        elif tag.startswith("sleepy"):
            source = "import time\n\ndef run(record):\n    time.sleep(30)\n    return {}\n"
        else:
            raise GenerationRefused(f"no template family for capability tag {tag!r}")
        return ToolArtifact(spec_ref=spec.id, name=spec.name, source=source)

    def _echo_source(self, spec: ToolSpec) -> str:
        defaults = canonical_json(_defaults_for(spec))
        return (
            f"DEFAULTS = {defaults!r}\n"
            "import json\n\n"
            "def run(record):\n"
            "    out = json.loads(DEFAULTS)\n"
            "    for name in list(out):\n"
            "        if name in record:\n"
            "            out[name] = record[name]\n"
            "    return out\n"
        )

    def _convert_source(self, spec: ToolSpec) -> str:
        match = re.match(r"convert-([a-z0-9]+)-([a-z0-9]+)", spec.capability_tag)
        if not match:
            raise GenerationRefused(f"malformed conversion tag {spec.capability_tag!r}")
        factor = _CONVERSION_FACTORS.get((match.group(1), match.group(2)))
        if factor is None:
            raise GenerationRefused(f"no conversion factor for {match.group(1)}->{match.group(2)}")
        numeric = [f.name for f in spec.output_schema.fields if f.type.kind == "number"]
        defaults = canonical_json(_defaults_for(spec))
        return (
            f"FACTOR = {factor!r}\n"
            f"NUMERIC = {json.dumps(sorted(numeric))}\n"
            f"DEFAULTS = {defaults!r}\n"
            "import json\n\n"
            "def run(record):\n"
            "    out = json.loads(DEFAULTS)\n"
            "    for name in list(out):\n"
            "        if name in record:\n"
            "            out[name] = record[name]\n"
            "    for name in NUMERIC:\n"
            "        if name in out and isinstance(out[name], (int, float)):\n"
            "            out[name] = out[name] * FACTOR\n"
            "    return out\n"
        )


class ProviderMaker:
    """Codegen through a chat provider; the reply must be a python code block."""

    def __init__(self, provider: ChatProvider) -> None:
        self.provider = provider

    def make(self, spec: ToolSpec) -> ToolArtifact:
        reply = self.provider.chat(
            [
                {
                    "role": "system",
                    "content": "Write a python function run(record: dict) -> dict. Reply with code only.",
                },
                {"role": "user", "content": json.dumps(spec.to_dict())},
            ]
        )
        source = reply.strip()
        if source.startswith("```"):
            source = source.strip("`")
            if source.startswith("python"):
                source = source[len("python"):]
        if "def run(" not in source:
            raise GenerationRefused("backend reply does not define run(record)")
        return ToolArtifact(spec_ref=spec.id, name=spec.name, source=source)
