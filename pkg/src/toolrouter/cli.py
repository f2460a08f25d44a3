"""Pipeline orchestration commands.

Every command reads declared inputs and writes declared outputs; with mock
backends and a fixed seed, reruns are byte-identical. Usage errors exit 2,
data errors exit 1 with a diagnostic.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import PipelineConfig, load_config, make_gateway
from .errors import ToolRouterError
from .evaluation import Metrics, PoolSetting, Setting, evaluate, save_results
from .graph import GraphConfig, build_graph, load_graph, save_graph
from .lra import ExecutorBinding, GatewayReasoner, run_episode, save_episode_logs
from .mutation import EvolveConfig, evolve, write_mutation_log
from .registry import CandidatePool, load_bank
from .router import RouterConfig
from .sampler import SamplerConfig, sample_subset
from .supervision import build_dataset, load_dataset
from .synthesis import SynthesisConfig, load_trajectories, save_trajectories, synthesize_batch


def _pipeline_config(config: str | None, seed: int | None, backend: str | None) -> PipelineConfig:
    cfg = load_config(config)
    if seed is not None:
        cfg.seed = seed
    if backend is not None:
        cfg.backend.mode = backend
    cfg.validate()
    return cfg


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


common_options = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None),
    click.option("--seed", type=int, default=None, help="Overrides the config seed."),
    click.option("--backend", type=click.Choice(["mock", "live"]), default=None),
]


def with_common(func):
    for option in reversed(common_options):
        func = option(func)
    return func


@click.group()
def main() -> None:
    """History-aware routing supervision pipeline."""


@main.command("build-graph")
@with_common
@click.option("--bank", "bank_path", type=click.Path(exists=True), required=True)
@click.option("--tau", type=float, default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
def build_graph_cmd(config_path, seed, backend, bank_path, tau, out_path) -> None:
    """Embed a candidate bank and build the similarity graph."""
    cfg = _pipeline_config(config_path, seed, backend)
    try:
        bank = load_bank(bank_path)
        graph_cfg = GraphConfig(
            tau=tau if tau is not None else cfg.tau,
            embedding_model_id=cfg.backend.embed_model,
        )
        graph = build_graph(bank, graph_cfg, make_gateway(cfg))
        save_graph(graph, out_path)
    except ToolRouterError as exc:
        _fail(exc)
    click.echo(f"graph: {len(graph)} nodes, {len(graph.edges)} edges -> {out_path}")


@main.command("mutate")
@with_common
@click.option("--graph", "graph_path", type=click.Path(exists=True), required=True)
@click.option("--rounds", type=int, required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--log", "log_path", type=click.Path(), default=None)
def mutate_cmd(config_path, seed, backend, graph_path, rounds, out_path, log_path) -> None:
    """Expand a graph with self-evolutionary mutations."""
    cfg = _pipeline_config(config_path, seed, backend)
    try:
        graph = load_graph(graph_path)
        evolve_cfg = EvolveConfig(
            rng_seed=cfg.seed if cfg.seed is not None else 0,
            max_retries=cfg.mutation.get("max_retries", 2),
            tool_fraction=cfg.mutation.get("tool_fraction", 1.0),
            temperature=cfg.mutation.get("temperature", 0.8),
            model_id=cfg.backend.chat_model,
        )
        result = evolve(graph, rounds, evolve_cfg, make_gateway(cfg))
        save_graph(result.graph, out_path)
        if log_path:
            write_mutation_log(result.records, log_path)
    except ToolRouterError as exc:
        _fail(exc)
    if result.aborted_error:
        click.echo(f"aborted after partial progress: {result.aborted_error}", err=True)
        sys.exit(1)
    click.echo(
        f"mutation: {result.accepted}/{len(result.records)} accepted, "
        f"{len(result.graph)} nodes -> {out_path}"
    )


@main.command("sample")
@with_common
@click.option("--graph", "graph_path", type=click.Path(exists=True), required=True)
@click.option("--count", type=int, default=1)
@click.option("--out", "out_path", type=click.Path(), required=True)
def sample_cmd(config_path, seed, backend, graph_path, count, out_path) -> None:
    """Draw candidate subsets via DFS-with-restart walks."""
    cfg = _pipeline_config(config_path, seed, backend)
    try:
        graph = load_graph(graph_path)
        sampler = cfg.sampler
        with Path(out_path).open("w", encoding="utf-8") as handle:
            for index in range(count):
                subset = sample_subset(
                    graph,
                    SamplerConfig(
                        num_seeds=sampler.get("num_seeds", 1),
                        target_size=sampler.get("target_size"),
                        target_range=tuple(sampler.get("target_range", (4, 8))),
                        restart_prob=sampler.get("restart_prob", 0.15),
                        rng_seed=(cfg.seed or 0) * 100003 + index,
                    ),
                )
                record = {
                    "members": list(subset.members),
                    "seed_nodes": list(subset.seed_nodes),
                    "walk_trace": [list(t) for t in subset.walk_trace],
                }
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
    except ToolRouterError as exc:
        _fail(exc)
    click.echo(f"sampled {count} subsets -> {out_path}")


@main.command("synthesize")
@with_common
@click.option("--graph", "graph_path", type=click.Path(exists=True), required=True)
@click.option("--count", type=int, default=10)
@click.option("--out", "out_path", type=click.Path(), required=True)
def synthesize_cmd(config_path, seed, backend, graph_path, count, out_path) -> None:
    """Sample subsets, propose tasks, and simulate trajectories."""
    cfg = _pipeline_config(config_path, seed, backend)
    try:
        graph = load_graph(graph_path)
        sampler = cfg.sampler
        synthesis = cfg.synthesis
        trajectories = synthesize_batch(
            graph,
            count,
            SamplerConfig(
                num_seeds=sampler.get("num_seeds", 1),
                target_size=sampler.get("target_size"),
                target_range=tuple(sampler.get("target_range", (4, 8))),
                restart_prob=sampler.get("restart_prob", 0.15),
                rng_seed=cfg.seed or 0,
            ),
            SynthesisConfig(
                rng_seed=cfg.seed or 0,
                max_retries=synthesis.get("max_retries", 2),
                max_turns=synthesis.get("max_turns", 12),
                error_prob=synthesis.get("error_prob", 0.1),
                temperature=synthesis.get("temperature", 0.8),
                model_id=cfg.backend.chat_model,
            ),
            make_gateway(cfg),
        )
        save_trajectories(trajectories, out_path)
    except ToolRouterError as exc:
        _fail(exc)
    click.echo(f"synthesized {len(trajectories)} trajectories -> {out_path}")


@main.command("extract")
@with_common
@click.option("--trajectories", "traj_path", type=click.Path(exists=True), required=True)
@click.option("--graph", "graph_path", type=click.Path(exists=True), required=True)
@click.option("--kind", type=click.Choice(["tool", "agent"]), default="tool")
@click.option("--pool-scope", type=click.Choice(["subset", "graph"]), default="subset")
@click.option("--ablation", is_flag=True, default=False)
@click.option("--out", "out_path", type=click.Path(), required=True)
def extract_cmd(
    config_path, seed, backend, traj_path, graph_path, kind, pool_scope, ablation, out_path
) -> None:
    """Extract history-aware routing instances into a dataset file."""
    _pipeline_config(config_path, seed, backend)
    try:
        trajectories = load_trajectories(traj_path)
        graph = load_graph(graph_path)
        from .registry import CandidateBank

        bank = CandidateBank(
            kind=kind,
            entries=tuple(
                graph.nodes[name].spec for name in graph.names() if graph.nodes[name].spec.kind == kind
            ),
        )
        if pool_scope == "graph":
            pools: list[CandidatePool] | CandidatePool = CandidatePool.whole_bank(bank)
        else:
            pools = [
                CandidatePool(bank=bank, membership=trajectory.subset.members)
                for trajectory in trajectories
            ]
        counts = build_dataset(trajectories, pools, out_path, kind=kind, ablation=ablation)
    except ToolRouterError as exc:
        _fail(exc)
    for file_path, count in counts.items():
        click.echo(f"dataset: {count} samples -> {file_path}")


@main.command("evaluate")
@with_common
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option(
    "--router",
    "variants",
    type=click.Choice(["embedding_q", "embedding_qh", "llm", "oracle", "random"]),
    multiple=True,
    required=True,
)
@click.option("--k", type=int, default=5)
@click.option("--out", "out_path", type=click.Path(), default=None)
def evaluate_cmd(config_path, seed, backend, dataset_path, variants, k, out_path) -> None:
    """Routing-accuracy evaluation (avg@k) on a rendered dataset."""
    cfg = _pipeline_config(config_path, seed, backend)
    try:
        records = load_dataset(dataset_path)
        gateway = make_gateway(cfg)
        setting = PoolSetting(variant=Setting.CLEAN)
        results: dict[str, dict[str, Metrics]] = {}
        for variant in variants:
            router_cfg = RouterConfig(
                variant=variant,
                kind=records[0].kind,
                chat_model_id=cfg.backend.chat_model,
                temperature=cfg.eval.get("temperature", 1.0),
                rng_seed=cfg.seed or 0,
            )
            metrics = evaluate(router_cfg, records, setting, k=k, seed=cfg.seed or 0, gateway=gateway)
            results[variant] = {Setting.CLEAN.value: metrics}
            click.echo(f"{variant}: avg@{k} = {metrics.avg_at_k:.4f} over {metrics.n_instances} instances")
        if out_path:
            save_results(results, out_path)
    except ToolRouterError as exc:
        _fail(exc)


@main.command("lra-run")
@with_common
@click.option("--bank", "bank_path", type=click.Path(exists=True), required=True)
@click.option("--task", type=str, required=True)
@click.option(
    "--router",
    "variant",
    type=click.Choice(["embedding_q", "embedding_qh", "llm", "oracle", "random"]),
    default="llm",
)
@click.option("--budget", type=int, default=8)
@click.option("--out", "out_path", type=click.Path(), default=None)
def lra_run_cmd(config_path, seed, backend, bank_path, task, variant, budget, out_path) -> None:
    """Run one Light Routing Agent episode against a candidate bank."""
    cfg = _pipeline_config(config_path, seed, backend)
    try:
        bank = load_bank(bank_path)
        pool = CandidatePool.whole_bank(bank)
        gateway = make_gateway(cfg)
        router_cfg = RouterConfig(variant=variant, kind=bank.kind, chat_model_id=cfg.backend.chat_model)
        log = run_episode(
            task,
            pool,
            router_cfg,
            ExecutorBinding.mock_for(pool),
            GatewayReasoner(gateway, model_id=cfg.backend.chat_model),
            gateway=gateway,
            budget=budget,
        )
        if out_path:
            save_episode_logs([log], out_path)
    except ToolRouterError as exc:
        _fail(exc)
    click.echo(f"episode outcome: {log.outcome} in {len(log.steps)} steps")


if __name__ == "__main__":
    main()
