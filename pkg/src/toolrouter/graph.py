"""Candidate graph: thresholded cosine-similarity edges plus mutation edges.

Graphs are immutable snapshots; insertion returns a new graph. Similarity
edges use strict ``sim > tau`` (a tie at exactly tau produces no edge).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import (
    DimensionMismatch,
    DuplicateName,
    EmptyBank,
    IoError,
    ParseError,
    UnknownParent,
    ZeroVector,
)
from .gateway import EmbeddingVector, Gateway
from .registry import CandidateBank, CandidateSpec, serialize_phi, validate_spec

DEFAULT_TAU = 0.82


@dataclass(frozen=True)
class GraphConfig:
    tau: float = DEFAULT_TAU
    embedding_model_id: str = "mock-embed-64"

    def __post_init__(self) -> None:
        if not 0 < self.tau < 1:
            raise ValueError(f"tau must be in (0, 1), got {self.tau}")


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    kind: str  # "similarity" | "mutation"
    weight: float | None = None

    def __post_init__(self) -> None:
        if self.a >= self.b:
            raise ValueError("edges must be stored canonically with a < b")

    @staticmethod
    def make(x: str, y: str, kind: str, weight: float | None = None) -> "Edge":
        if x == y:
            raise ValueError("self-edges are not allowed")
        a, b = (x, y) if x < y else (y, x)
        return Edge(a=a, b=b, kind=kind, weight=weight)

    def touches(self, name: str) -> bool:
        return self.a == name or self.b == name

    def other(self, name: str) -> str:
        return self.b if self.a == name else self.a


@dataclass(frozen=True)
class GraphNode:
    spec: CandidateSpec
    embedding: EmbeddingVector


@dataclass(frozen=True)
class CandidateGraph:
    config: GraphConfig
    nodes: dict[str, GraphNode] = field(default_factory=dict)
    edges: frozenset[Edge] = frozenset()

    def __len__(self) -> int:
        return len(self.nodes)

    def names(self) -> list[str]:
        return sorted(self.nodes)

    def names_of_kind(self, kind: str) -> list[str]:
        return sorted(name for name, node in self.nodes.items() if node.spec.kind == kind)

    def neighbors(self, name: str) -> list[tuple[str, str]]:
        """(other name, edge kind) pairs, sorted for determinism."""
        out = [(edge.other(name), edge.kind) for edge in self.edges if edge.touches(name)]
        return sorted(out)

    def mutation_edges(self) -> list[Edge]:
        return sorted((e for e in self.edges if e.kind == "mutation"), key=lambda e: (e.a, e.b))

    def similarity_edges(self) -> list[Edge]:
        return sorted((e for e in self.edges if e.kind == "similarity"), key=lambda e: (e.a, e.b))


def cosine_similarity(h_i: EmbeddingVector, h_j: EmbeddingVector) -> float:
    if h_i.dim != h_j.dim:
        raise DimensionMismatch(f"dims differ: {h_i.dim} vs {h_j.dim}")
    dot = 0.0
    norm_i = 0.0
    norm_j = 0.0
    for x, y in zip(h_i.values, h_j.values):
        dot += x * y
        norm_i += x * x
        norm_j += y * y
    if norm_i == 0.0 or norm_j == 0.0:
        raise ZeroVector("cosine similarity of a zero vector is undefined")
    return dot / (math.sqrt(norm_i) * math.sqrt(norm_j))


def _similarity_edges_for(
    name: str,
    embedding: EmbeddingVector,
    others: Iterable[tuple[str, EmbeddingVector]],
    tau: float,
) -> list[Edge]:
    edges = []
    for other_name, other_embedding in others:
        sim = cosine_similarity(embedding, other_embedding)
        if sim > tau:
            edges.append(Edge.make(name, other_name, "similarity", weight=sim))
    return edges


def build_graph(bank: CandidateBank, cfg: GraphConfig, gateway: Gateway) -> CandidateGraph:
    """Embed every candidate's canonical text and connect pairs above tau."""
    if len(bank) == 0:
        raise EmptyBank("cannot build a graph from an empty bank")
    texts = [serialize_phi(spec) for spec in bank]
    embeddings = gateway.embed_texts(texts)
    nodes = {
        spec.name: GraphNode(spec=spec, embedding=embedding)
        for spec, embedding in zip(bank, embeddings)
    }
    names = list(bank.names())
    edges: set[Edge] = set()
    for i in range(len(names)):
        node_i = nodes[names[i]]
        for j in range(i + 1, len(names)):
            node_j = nodes[names[j]]
            sim = cosine_similarity(node_i.embedding, node_j.embedding)
            if sim > cfg.tau:
                edges.add(Edge.make(names[i], names[j], "similarity", weight=sim))
    return CandidateGraph(config=cfg, nodes=nodes, edges=frozenset(edges))


def add_mutant(
    graph: CandidateGraph,
    parent: str,
    mutant: CandidateSpec,
    embedding: EmbeddingVector,
) -> CandidateGraph:
    """Insert a mutant node with its mutation edge plus fresh similarity edges."""
    if parent not in graph.nodes:
        raise UnknownParent(parent)
    if mutant.name in graph.nodes:
        raise DuplicateName(mutant.name)
    new_edges = set(graph.edges)
    new_edges.add(Edge.make(parent, mutant.name, "mutation"))
    new_edges.update(
        _similarity_edges_for(
            mutant.name,
            embedding,
            ((name, node.embedding) for name, node in graph.nodes.items()),
            graph.config.tau,
        )
    )
    nodes = dict(graph.nodes)
    nodes[mutant.name] = GraphNode(spec=mutant, embedding=embedding)
    return CandidateGraph(config=graph.config, nodes=nodes, edges=frozenset(new_edges))


def save_graph(graph: CandidateGraph, path: str | Path) -> None:
    """Line-oriented snapshot: meta, sorted nodes, sorted edges."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as handle:
            meta = {
                "meta": {
                    "tau": graph.config.tau,
                    "embedding_model_id": graph.config.embedding_model_id,
                }
            }
            handle.write(json.dumps(meta, ensure_ascii=False) + "\n")
            for name in graph.names():
                node = graph.nodes[name]
                record = {
                    "node": {
                        "name": name,
                        "kind": node.spec.kind,
                        "spec": node.spec.to_dict(),
                        "embedding": list(node.embedding.values),
                        "embedding_model_id": node.embedding.model_id,
                    }
                }
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
            for edge in sorted(graph.edges, key=lambda e: (e.a, e.b, e.kind)):
                record = {"edge": {"a": edge.a, "b": edge.b, "kind": edge.kind, "weight": edge.weight}}
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write graph snapshot {path}: {exc}") from exc


def load_graph(path: str | Path) -> CandidateGraph:
    """Load a snapshot without re-embedding."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read graph snapshot {path}: {exc}") from exc

    config: GraphConfig | None = None
    nodes: dict[str, GraphNode] = {}
    edges: set[Edge] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}", exc.msg) from exc
        if "meta" in record:
            config = GraphConfig(
                tau=record["meta"]["tau"],
                embedding_model_id=record["meta"]["embedding_model_id"],
            )
        elif "node" in record:
            raw = record["node"]
            spec = validate_spec(raw["spec"], raw["kind"])
            embedding = EmbeddingVector(
                values=tuple(raw["embedding"]), model_id=raw["embedding_model_id"]
            )
            nodes[raw["name"]] = GraphNode(spec=spec, embedding=embedding)
        elif "edge" in record:
            raw = record["edge"]
            edges.add(Edge(a=raw["a"], b=raw["b"], kind=raw["kind"], weight=raw.get("weight")))
        else:
            raise ParseError(f"{path}:{lineno}", "unknown record type")
    if config is None:
        raise ParseError(str(path), "missing meta record")
    return CandidateGraph(config=config, nodes=nodes, edges=frozenset(edges))
