"""Locally coherent candidate subsets via seeded DFS-with-restart walks."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import BadConfig, EmptyGraph
from .graph import CandidateGraph


@dataclass(frozen=True)
class SamplerConfig:
    num_seeds: int = 1
    target_size: int | None = None  # None: drawn uniformly from target_range per sample
    target_range: tuple[int, int] = (4, 8)
    restart_prob: float = 0.15
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.num_seeds < 1:
            raise BadConfig("num_seeds must be >= 1")
        if self.target_size is not None and self.target_size < self.num_seeds:
            raise BadConfig("target_size must be >= num_seeds")
        lo, hi = self.target_range
        if not 1 <= lo <= hi:
            raise BadConfig(f"bad target_range: {self.target_range}")
        if not 0 <= self.restart_prob < 1:
            raise BadConfig("restart_prob must be in [0, 1)")


@dataclass(frozen=True)
class CandidateSubset:
    members: tuple[str, ...]  # visit order
    seed_nodes: tuple[str, ...]
    walk_trace: tuple[tuple[str, str, str], ...]  # (from, to, edge kind)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, name: str) -> bool:
        return name in self.members


def sample_subset(graph: CandidateGraph, cfg: SamplerConfig) -> CandidateSubset:
    """Grow a DFS from uniform seed nodes over both edge kinds.

    With probability restart_prob a step backtracks to the previous branch
    point instead of descending. If the walk exhausts its component before
    reaching the target size, an extra uniform seed is drawn from the
    unvisited nodes. Deterministic given (graph, cfg).
    """
    if len(graph) == 0:
        raise EmptyGraph("cannot sample from an empty graph")
    rng = random.Random(cfg.rng_seed)
    target = cfg.target_size if cfg.target_size is not None else rng.randint(*cfg.target_range)
    target = min(target, len(graph))

    all_names = graph.names()
    if cfg.num_seeds > len(all_names):
        raise BadConfig("num_seeds exceeds graph size")
    seeds = rng.sample(all_names, min(cfg.num_seeds, target))

    visited: dict[str, None] = {}  # insertion-ordered member set
    seed_nodes: list[str] = []
    trace: list[tuple[str, str, str]] = []
    stack: list[str] = []

    def admit_seed(name: str) -> None:
        visited[name] = None
        seed_nodes.append(name)
        stack.append(name)

    pending_seeds = list(seeds)
    admit_seed(pending_seeds.pop(0))

    while len(visited) < target:
        if not stack:
            if pending_seeds:
                admit_seed(pending_seeds.pop(0))
                continue
            unvisited = [name for name in all_names if name not in visited]
            if not unvisited:
                break
            admit_seed(rng.choice(unvisited))
            continue
        current = stack[-1]
        frontier = [(other, kind) for other, kind in graph.neighbors(current) if other not in visited]
        if not frontier:
            stack.pop()
            continue
        if len(stack) > 1 and rng.random() < cfg.restart_prob:
            stack.pop()
            continue
        nxt, kind = rng.choice(frontier)
        visited[nxt] = None
        trace.append((current, nxt, kind))
        stack.append(nxt)

    # remaining requested seeds that were never needed still count as seeds
    for name in pending_seeds:
        if len(visited) >= target:
            break
        if name not in visited:
            visited[name] = None
            seed_nodes.append(name)

    return CandidateSubset(
        members=tuple(visited),
        seed_nodes=tuple(seed_nodes),
        walk_trace=tuple(trace),
    )
