"""Central tool registry with dual matching protocols and the Hit@k harness."""

from orchard.toolhub.bench import (
    HitCase,
    generate_synthetic_registry,
    hit_at_k,
    prompt_baseline_rankings,
)
from orchard.toolhub.hub import ToolHub
from orchard.toolhub.tdi import RetrievalResult, ScoredTool, tdi_query
from orchard.toolhub.toci import ToolChain, toci_compose

__all__ = [
    "HitCase",
    "RetrievalResult",
    "ScoredTool",
    "ToolChain",
    "ToolHub",
    "generate_synthetic_registry",
    "hit_at_k",
    "prompt_baseline_rankings",
    "tdi_query",
    "toci_compose",
]
