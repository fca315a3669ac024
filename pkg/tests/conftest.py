"""Shared builders for plans, schemas, and synthetic tool registries."""

from __future__ import annotations

import random

import pytest

from orchard.core import (
    NeedContract,
    PlanNode,
    PlanSpec,
    Schema,
    SchemaField,
    SemanticType,
    TaskEnvelope,
    ToolCard,
)

TYPE_POOL = [
    SemanticType.text(),
    SemanticType.number(),
    SemanticType.number(unit="kg"),
    SemanticType.number(unit="mm"),
    SemanticType.boolean(),
    SemanticType.date_range(),
    SemanticType.geo_region(),
    SemanticType.image_ref(),
    SemanticType.list_of(SemanticType.number()),
    SemanticType.list_of(SemanticType.text()),
    SemanticType.enum_of(["low", "medium", "high"]),
    SemanticType.record(),
]

FIELD_NAMES = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"]


def mk_node(node_id: str, inputs: Schema | None = None, outputs: Schema | None = None, **kw) -> PlanNode:
    return PlanNode(
        id=node_id,
        goal=f"goal for {node_id}",
        inputs=inputs or Schema(),
        outputs=outputs or Schema.of(SchemaField(f"out_{node_id}", SemanticType.text())),
        **kw,
    )


def mk_plan(*node_ids: str, edges: list[tuple[str, str]] | None = None) -> PlanSpec:
    return PlanSpec(nodes=tuple(mk_node(n) for n in node_ids), edges=tuple(edges or ()), task_ref="task-0")


def rand_schema(rng: random.Random, max_fields: int = 5) -> Schema:
    count = rng.randint(0, max_fields)
    names = rng.sample(FIELD_NAMES, count)
    return Schema(
        tuple(
            SchemaField(name, rng.choice(TYPE_POOL), required=rng.random() < 0.7)
            for name in names
        )
    )


def rand_dag(rng: random.Random, n: int, edge_prob: float = 0.3) -> PlanSpec:
    """A random DAG over n nodes; edges only go from lower to higher index."""
    ids = [f"n{i:02d}" for i in range(n)]
    edges = [
        (ids[i], ids[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < edge_prob
    ]
    return PlanSpec(nodes=tuple(mk_node(i) for i in ids), edges=tuple(edges), task_ref="task-0")


def inject_back_edge(rng: random.Random, plan: PlanSpec) -> tuple[PlanSpec, tuple[str, str]]:
    """Add the reverse of an existing edge, guaranteeing a cycle."""
    u, v = rng.choice(list(plan.edges))
    back = (v, u)
    return PlanSpec(nodes=plan.nodes, edges=plan.edges + (back,), task_ref=plan.task_ref), back


def echo_tool(tool_id: str, fields: list[str], tag: str = "echo") -> ToolCard:
    schema = Schema(tuple(SchemaField(f, SemanticType.text()) for f in fields))
    return ToolCard(
        id=tool_id,
        name=tool_id,
        capabilities=((tag, f"echo the fields {' '.join(fields)}"),),
        input_schema=schema,
        output_schema=schema,
    )


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)


@pytest.fixture
def simple_task() -> TaskEnvelope:
    return TaskEnvelope.new(
        "Estimate irrigation volume for the north plot",
        context={"crop": "maize", "region": "plains-7"},
    )


def mk_contract(
    node_id: str = "n1",
    tag: str = "analyze",
    description: str = "analyze field data",
    input_schema: Schema | None = None,
    output_schema: Schema | None = None,
    **kw,
) -> NeedContract:
    return NeedContract(
        node_id=node_id,
        capability_tag=tag,
        capability_description=description,
        input_schema=input_schema or Schema(),
        output_schema=output_schema or Schema.of(SchemaField("result", SemanticType.text())),
        **kw,
    )
