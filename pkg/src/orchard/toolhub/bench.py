"""Hit@k evaluation harness and the synthetic scaling registry.

The synthetic registry gives every tool a unique capability tag and a
distinct description; needs are generated tag-matching, so an ideal
retriever ranks the gold tool first. The simulated all-in-prompt baseline
models a context window: only the first `window` registered tools are even
visible, and the pick among them is (seeded) random.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from orchard.core.types import NeedContract, Schema, SchemaField, SemanticType, ToolCard
from orchard.errors import MissingGold

_WORDS = (
    "soil", "leaf", "yield", "moisture", "pest", "canopy", "root", "grain",
    "spore", "irrigation", "frost", "nitrate", "harvest", "sensor", "plot",
    "drainage", "pollination", "pruning", "silage", "compost", "trellis",
    "graft", "mulch", "aphid", "fungus", "drone", "tractor", "seedbed",
    "furrow", "loam", "stubble", "windbreak",
)


@dataclass(frozen=True)
class HitCase:
    """One evaluation case: gold tool(s) and the ranking produced per step."""

    gold: tuple[str, ...]
    rankings: tuple[tuple[str, ...], ...]
    setting: str  # single | chain

    def __post_init__(self) -> None:
        if self.setting not in ("single", "chain"):
            raise ValueError(f"unknown setting {self.setting!r}")
        if len(self.rankings) != len(self.gold):
            raise ValueError("one ranking per gold element is required")


def hit_at_k(cases: Sequence[HitCase], ks: Sequence[int] = (1, 3, 5)) -> dict[str, dict[int, float]]:
    """Macro-averaged Hit@k per setting.

    Single: hit iff the gold tool is in the top-k. Chain: hit iff every gold
    chain element is in the top-k of its own step's ranking.
    """
    for case in cases:
        if not case.gold or any(not g for g in case.gold):
            raise MissingGold("every case needs a non-empty gold label")
    table: dict[str, dict[int, float]] = {}
    for setting in ("single", "chain"):
        subset = [c for c in cases if c.setting == setting]
        if not subset:
            continue
        table[setting] = {}
        for k in ks:
            hits = sum(
                1
                for case in subset
                if all(gold in ranking[:k] for gold, ranking in zip(case.gold, case.rankings))
            )
            table[setting][k] = hits / len(subset)
    return table


def generate_synthetic_registry(count: int) -> tuple[list[ToolCard], list[NeedContract]]:
    """`count` tools with unique tags, plus one tag-matching need per tool."""
    cards: list[ToolCard] = []
    needs: list[NeedContract] = []
    rng = random.Random(506)
    out_schema = Schema.of(SchemaField("result", SemanticType.text()))
    for i in range(count):
        tag = f"cap-{i:04d}"
        words = rng.sample(_WORDS, 4)
        description = f"{words[0]} {words[1]} handler {i:04d} for {words[2]} {words[3]}"
        cards.append(
            ToolCard(
                id=f"tool-{i:04d}",
                name=f"tool {i:04d}",
                capabilities=((tag, description),),
                input_schema=Schema(),
                output_schema=out_schema,
            )
        )
        needs.append(
            NeedContract(
                node_id=f"case-{i:04d}",
                capability_tag=tag,
                capability_description=description,
                input_schema=Schema(),
                output_schema=out_schema,
            )
        )
    return cards, needs


def prompt_baseline_rankings(
    registry_ids: Sequence[str],
    case_count: int,
    window: int = 64,
    k_out: int = 5,
    seed: int = 17,
) -> list[tuple[str, ...]]:
    """Simulated all-in-prompt selector: random picks among a truncated window.

    Tools past the context window are invisible; within the window the
    selector has no signal, so its ranking is a seeded shuffle.
    """
    rng = random.Random(seed)
    visible = list(registry_ids[:window])
    rankings = []
    for _ in range(case_count):
        picks = rng.sample(visible, min(k_out, len(visible)))
        rankings.append(tuple(picks))
    return rankings
