"""Cosine similarity, thresholded graph construction, insertion, snapshots."""

import math

import pytest

from helpers import make_tool_bank, mock_gateway
from toolrouter.errors import DimensionMismatch, DuplicateName, EmptyBank, UnknownParent, ZeroVector
from toolrouter.gateway import EmbeddingVector, Gateway
from toolrouter.graph import (
    Edge,
    GraphConfig,
    build_graph,
    add_mutant,
    cosine_similarity,
    load_graph,
    save_graph,
)
from toolrouter.registry import as_mutant, serialize_phi, validate_spec


def vec(*values):
    return EmbeddingVector(values=tuple(float(v) for v in values), model_id="test")


def test_cosine_hand_value():
    # dot = 32, norms sqrt(14) and sqrt(77)
    expected = 32 / math.sqrt(14 * 77)
    assert cosine_similarity(vec(1, 2, 3), vec(4, 5, 6)) == pytest.approx(expected, abs=1e-12)


def test_cosine_bounds_and_symmetry():
    a, b = vec(0.3, -1.2, 2.0), vec(1.1, 0.4, -0.5)
    assert cosine_similarity(a, b) == cosine_similarity(b, a)
    assert cosine_similarity(a, a) == pytest.approx(1.0)
    assert cosine_similarity(a, vec(-0.3, 1.2, -2.0)) == pytest.approx(-1.0)


def test_cosine_error_cases():
    with pytest.raises(DimensionMismatch):
        cosine_similarity(vec(1, 2), vec(1, 2, 3))
    with pytest.raises(ZeroVector):
        cosine_similarity(vec(0, 0), vec(1, 1))


def test_edge_canonical_storage():
    edge = Edge.make("zz", "aa", "similarity", weight=0.9)
    assert (edge.a, edge.b) == ("aa", "zz")
    assert edge.other("aa") == "zz" and edge.touches("zz")
    with pytest.raises(ValueError):
        Edge(a="b", b="a", kind="similarity")
    with pytest.raises(ValueError):
        Edge.make("same", "same", "similarity")


def test_graph_config_tau_bounds():
    with pytest.raises(ValueError):
        GraphConfig(tau=0.0)
    with pytest.raises(ValueError):
        GraphConfig(tau=1.0)


def test_build_graph_rejects_empty_bank():
    from toolrouter.registry import CandidateBank

    with pytest.raises(EmptyBank):
        build_graph(CandidateBank(kind="tool"), GraphConfig(), mock_gateway(0))


def test_build_graph_matches_brute_force_oracle():
    bank = make_tool_bank(30)
    gateway = mock_gateway(0)
    cfg = GraphConfig()
    graph = build_graph(bank, cfg, gateway)

    # independent recomputation straight from the embeddings
    vectors = {
        spec.name: gateway.embed_text(serialize_phi(spec)) for spec in bank
    }
    names = sorted(vectors)
    expected = set()
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            if cosine_similarity(vectors[a], vectors[b]) > cfg.tau:
                expected.add((a, b))
    got = {(e.a, e.b) for e in graph.similarity_edges()}
    assert got == expected
    assert not graph.mutation_edges()


def test_strict_threshold_and_monotonicity():
    bank = make_tool_bank(15)
    gateway = mock_gateway(0)
    low = build_graph(bank, GraphConfig(tau=0.30), gateway)
    high = build_graph(bank, GraphConfig(tau=0.60), gateway)
    low_pairs = {(e.a, e.b) for e in low.similarity_edges()}
    high_pairs = {(e.a, e.b) for e in high.similarity_edges()}
    assert high_pairs <= low_pairs
    for edge in low.similarity_edges():
        assert edge.weight > 0.30


def test_add_mutant_edges_and_immutability():
    bank = make_tool_bank(5)
    gateway = mock_gateway(0)
    graph = build_graph(bank, GraphConfig(tau=0.5), gateway)
    parent = bank.names()[0]
    mutant = as_mutant(
        validate_spec(
            {
                "name": "brand_new_tool",
                "description": "A fresh variant.",
                "inputSchema": {"type": "object", "properties": {}},
            },
            "tool",
        ),
        parent=parent,
        operator="Usage Extension",
    )
    embedding = gateway.embed_text(serialize_phi(mutant))
    expanded = add_mutant(graph, parent, mutant, embedding)
    assert len(graph) == 5  # original untouched
    assert len(expanded) == 6
    mutation = expanded.mutation_edges()
    assert len(mutation) == 1
    assert {mutation[0].a, mutation[0].b} == {parent, "brand_new_tool"}
    assert mutation[0].weight is None
    # similarity edges of the mutant all clear tau
    for other, kind in expanded.neighbors("brand_new_tool"):
        if kind == "similarity":
            sim = cosine_similarity(embedding, expanded.nodes[other].embedding)
            assert sim > expanded.config.tau

    with pytest.raises(UnknownParent):
        add_mutant(graph, "nope", mutant, embedding)
    with pytest.raises(DuplicateName):
        add_mutant(expanded, parent, mutant, embedding)


def test_snapshot_roundtrip_and_byte_stability(tmp_path):
    bank = make_tool_bank(8)
    graph = build_graph(bank, GraphConfig(tau=0.5), mock_gateway(0))
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_graph(graph, first)
    loaded = load_graph(first)
    assert loaded.config == graph.config
    assert loaded.names() == graph.names()
    assert loaded.edges == graph.edges
    save_graph(loaded, second)
    assert first.read_bytes() == second.read_bytes()
