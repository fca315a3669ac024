"""Command-line entry point binding the engine together.

Exit codes: 0 success, 2 plan failed (a partial deliverable was still
emitted), 3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from orchard.core.types import ConstraintExpr, NeedContract, canonical_json
from orchard.core.validation import validate_plan
from orchard.errors import ConfigError, OrchardError, PlanFailed
from orchard.executor import ExecutionPolicy, execute_plan
from orchard.fastpath.store import KnowledgeStore
from orchard.metrics import compute_report
from orchard.router import RoutePolicy, route
from orchard.shell.clock import TickClock
from orchard.shell.config import EngineConfig, load_config
from orchard.shell.persistence import (
    append_record,
    load_contracts,
    load_deliverable,
    load_doc,
    load_plan,
    load_task,
    read_records,
    read_trace,
    save_deliverable,
    write_trace,
)
from orchard.shell.providers import HashEmbedder, HttpChatProvider, ProviderConfig
from orchard.toolhub import HitCase, ToolHub, generate_synthetic_registry, hit_at_k, prompt_baseline_rankings, tdi_query
from orchard.toolmaker import InProcessSandbox, SubprocessSandbox, TemplateMaker, ToolMaker

EXIT_OK = 0
EXIT_PLAN_FAILED = 2
EXIT_CONFIG = 3


def _print(doc) -> None:
    sys.stdout.write(canonical_json(doc) + "\n")


def _open_hub(config: EngineConfig, hub_dir: str | None) -> ToolHub:
    directory = hub_dir or config.hub_dir
    return ToolHub(
        embedder=HashEmbedder(dim=config.embedding_dim),
        persist_dir=directory,
        clock=TickClock(),
    )


def _derived_contracts(plan) -> dict[str, NeedContract]:
    # Default contracts mirror each node; the echo- tag prefix keeps gaps
    # fillable by the template maker in offline runs.
    return {
        node.id: NeedContract(
            node_id=node.id,
            capability_tag=f"echo-{node.id}",
            capability_description=node.goal or f"produce outputs of {node.id}",
            input_schema=node.inputs,
            output_schema=node.outputs,
        )
        for node in plan.nodes
    }


def cmd_route(args: argparse.Namespace, config: EngineConfig) -> int:
    task = load_task(args.task)
    policy = RoutePolicy.from_dict(config.router or {})
    classifier = None
    if policy.classifier_override and config.has_chat_provider:
        classifier = HttpChatProvider(
            ProviderConfig(endpoint=config.chat_endpoint, model=config.chat_model,
                           credential_ref=config.credential_ref)
        )
    decision = route(task, policy, classifier)
    _print(decision.to_dict())
    return EXIT_OK


def cmd_run(args: argparse.Namespace, config: EngineConfig) -> int:
    task = load_task(args.task)
    if args.plan == "auto":
        raise ConfigError("--plan auto needs a configured planner provider; supply a plan file")
    plan = load_plan(args.plan)
    report = validate_plan(plan, task)
    if not report.valid:
        raise ConfigError(f"plan file is invalid: {[v.detail for v in report.violations]}")
    hub = _open_hub(config, args.hub)
    contracts = load_contracts(args.contracts) if args.contracts else _derived_contracts(plan)
    sandbox = InProcessSandbox() if args.fast_sandbox else SubprocessSandbox()
    maker = ToolMaker(hub, TemplateMaker(), sandbox=sandbox, workspace=config.maker_workspace)
    policy = ExecutionPolicy(
        max_retries_per_node=args.max_retries,
        allow_toolmaker=not args.no_toolmaker,
        parallel=args.parallel,
    )
    clock = TickClock()
    sink = None
    if args.sessions_out:
        sink = lambda doc: append_record(args.sessions_out, doc)
    code = EXIT_OK
    try:
        deliverable, trace = execute_plan(
            plan, contracts, hub, policy=policy, task=task, maker=maker, clock=clock,
            transcript_sink=sink,
        )
    except PlanFailed as failure:
        deliverable, trace = failure.deliverable, failure.trace
        sys.stderr.write(
            f"plan failed: nodes {sorted(failure.failed_nodes)} failed, "
            f"{sorted(failure.skipped_nodes)} skipped\n"
        )
        code = EXIT_PLAN_FAILED
    if args.trace_out:
        write_trace(args.trace_out, trace)
    if args.deliverable_out:
        save_deliverable(args.deliverable_out, deliverable)
    _print(deliverable.to_dict())
    return code


def cmd_kb_load(args: argparse.Namespace, config: EngineConfig) -> int:
    store = KnowledgeStore.load(corpus_dir=args.corpus, graph_file=args.graph)
    _print(
        {
            "snapshot": store.snapshot_id,
            "documents": len(store.doc_ids()),
            "graph_nodes": len(store.nodes()),
        }
    )
    return EXIT_OK


def cmd_tools(args: argparse.Namespace, config: EngineConfig) -> int:
    hub = _open_hub(config, args.hub)
    if args.tools_command == "register":
        tool_id = hub.register_doc(load_doc(args.card))
        _print({"registered": tool_id})
    elif args.tools_command == "list":
        _print([{"id": c.id, "name": c.name, "origin": c.provenance.origin} for c in hub.snapshot()])
    else:  # query
        need = NeedContract.from_dict(load_doc(args.need))
        result = tdi_query(hub, need, k=args.k)
        _print(result.to_dict())
    return EXIT_OK


def cmd_bench_hitk(args: argparse.Namespace, config: EngineConfig) -> int:
    cards, needs = generate_synthetic_registry(args.scale)
    hub = ToolHub(embedder=HashEmbedder(dim=config.embedding_dim), clock=TickClock())
    for card in cards:
        hub.register(card)
    single_cases = []
    chain_cases = []
    for index, need in enumerate(needs):
        ranking = tuple(tdi_query(hub, need, k=5).ids())
        single_cases.append(HitCase(gold=(cards[index].id,), rankings=(ranking,), setting="single"))
    for index in range(0, len(needs) - 1, 2):
        gold = (cards[index].id, cards[index + 1].id)
        rankings = (
            tuple(tdi_query(hub, needs[index], k=5).ids()),
            tuple(tdi_query(hub, needs[index + 1], k=5).ids()),
        )
        chain_cases.append(HitCase(gold=gold, rankings=rankings, setting="chain"))
    table = hit_at_k(single_cases + chain_cases)

    baseline = prompt_baseline_rankings([c.id for c in cards], len(needs), window=args.window)
    baseline_cases = [
        HitCase(gold=(cards[i].id,), rankings=(baseline[i],), setting="single")
        for i in range(len(needs))
    ]
    baseline_table = hit_at_k(baseline_cases)
    _print(
        {
            "scale": args.scale,
            "toolhub": {s: {f"hit@{k}": v for k, v in row.items()} for s, row in table.items()},
            "all_in_prompt_baseline": {
                s: {f"hit@{k}": v for k, v in row.items()} for s, row in baseline_table.items()
            },
        }
    )
    return EXIT_OK


def cmd_eval_metrics(args: argparse.Namespace, config: EngineConfig) -> int:
    deliverable = load_deliverable(args.deliverable)
    trace = read_trace(args.trace)
    contracts = list(load_contracts(args.contracts).values())
    required_rules = load_doc(args.rules) if args.rules else []
    norm_rules = (
        [ConstraintExpr.from_dict(doc) for doc in load_doc(args.norm_rules)] if args.norm_rules else []
    )
    report = compute_report(deliverable, contracts, trace, required_rules, norm_rules)
    _print(report.row())
    return EXIT_OK


def cmd_trace_show(args: argparse.Namespace, config: EngineConfig) -> int:
    trace = read_trace(args.trace)
    for step in trace.steps:
        flag = "ok" if step.ok else "FAIL"
        sys.stdout.write(
            f"{step.step_id} {step.node_id} attempt={step.attempt_index} tool={step.tool_id} [{flag}]\n"
        )
    sys.stdout.write(f"status: {trace.status}\n")
    if args.debate:
        debate_path = Path(args.trace).with_suffix(".debate.jsonl")
        if debate_path.exists():
            for record in read_records(debate_path):
                sys.stdout.write(canonical_json(record) + "\n")
        else:
            sys.stdout.write("no debate log\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orchard", description="Contract-driven DAG orchestration engine")
    parser.add_argument("--config", help="YAML config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p_route = sub.add_parser("route", help="decide fast path vs planned path for a task")
    p_route.add_argument("--task", required=True)

    p_run = sub.add_parser("run", help="execute a plan for a task")
    p_run.add_argument("--task", required=True)
    p_run.add_argument("--plan", required=True, help="plan file, or 'auto'")
    p_run.add_argument("--contracts", help="per-node contract file (derived from the plan when omitted)")
    p_run.add_argument("--trace-out", dest="trace_out")
    p_run.add_argument("--deliverable-out", dest="deliverable_out")
    p_run.add_argument("--sessions-out", dest="sessions_out",
                       help="append negotiation session transcripts here")
    p_run.add_argument("--hub", help="tool hub directory")
    p_run.add_argument("--max-retries", type=int, default=2)
    p_run.add_argument("--no-toolmaker", action="store_true")
    p_run.add_argument("--parallel", action="store_true")
    p_run.add_argument("--fast-sandbox", action="store_true",
                       help="run generated tools in-process (trusted templates only)")

    p_kb = sub.add_parser("kb", help="knowledge store operations")
    kb_sub = p_kb.add_subparsers(dest="kb_command", required=True)
    p_kb_load = kb_sub.add_parser("load", help="load corpus and graph, print stats")
    p_kb_load.add_argument("--corpus")
    p_kb_load.add_argument("--graph")

    p_tools = sub.add_parser("tools", help="tool hub operations")
    tools_sub = p_tools.add_subparsers(dest="tools_command", required=True)
    p_reg = tools_sub.add_parser("register")
    p_reg.add_argument("card")
    p_reg.add_argument("--hub")
    p_list = tools_sub.add_parser("list")
    p_list.add_argument("--hub")
    p_query = tools_sub.add_parser("query")
    p_query.add_argument("--need", required=True)
    p_query.add_argument("--k", type=int, default=5)
    p_query.add_argument("--hub")

    p_bench = sub.add_parser("bench", help="benchmarks")
    bench_sub = p_bench.add_subparsers(dest="bench_command", required=True)
    p_hitk = bench_sub.add_parser("hitk", help="tool selection Hit@k at a given registry scale")
    p_hitk.add_argument("--scale", type=int, choices=(24, 48, 506), default=24)
    p_hitk.add_argument("--window", type=int, default=64, help="baseline context window size")

    p_eval = sub.add_parser("eval", help="evaluation")
    eval_sub = p_eval.add_subparsers(dest="eval_command", required=True)
    p_metrics = eval_sub.add_parser("metrics")
    p_metrics.add_argument("--deliverable", required=True)
    p_metrics.add_argument("--trace", required=True)
    p_metrics.add_argument("--contracts", required=True)
    p_metrics.add_argument("--rules")
    p_metrics.add_argument("--norm-rules", dest="norm_rules")

    p_trace = sub.add_parser("trace", help="trace inspection")
    trace_sub = p_trace.add_subparsers(dest="trace_command", required=True)
    p_show = trace_sub.add_parser("show")
    p_show.add_argument("trace")
    p_show.add_argument("--debate", action="store_true")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.command == "route":
            return cmd_route(args, config)
        if args.command == "run":
            return cmd_run(args, config)
        if args.command == "kb":
            return cmd_kb_load(args, config)
        if args.command == "tools":
            return cmd_tools(args, config)
        if args.command == "bench":
            return cmd_bench_hitk(args, config)
        if args.command == "eval":
            return cmd_eval_metrics(args, config)
        if args.command == "trace":
            return cmd_trace_show(args, config)
        parser.error(f"unknown command {args.command}")
    except ConfigError as err:
        sys.stderr.write(f"configuration error: {err}\n")
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError, KeyError, ValueError, OrchardError) as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
