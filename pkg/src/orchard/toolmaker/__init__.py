"""On-demand tool construction: derive spec, generate, validate, register."""

from orchard.toolmaker.generate import TemplateMaker, ToolArtifact, generate_impl
from orchard.toolmaker.maker import MakerReport, ToolMaker
from orchard.toolmaker.sandbox import (
    InProcessSandbox,
    SubprocessSandbox,
    ValidationOutcome,
    validate_impl,
)
from orchard.toolmaker.spec import ResourceLimits, ToolSpec, ToolTestCase, derive_spec

__all__ = [
    "InProcessSandbox",
    "MakerReport",
    "ResourceLimits",
    "SubprocessSandbox",
    "TemplateMaker",
    "ToolArtifact",
    "ToolMaker",
    "ToolSpec",
    "ToolTestCase",
    "ValidationOutcome",
    "derive_spec",
    "generate_impl",
    "validate_impl",
]
