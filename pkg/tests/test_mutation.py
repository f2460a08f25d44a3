"""Operator taxonomy, picking, prompt rendering, reply parsing, evolve loop."""

import json
import math

import pytest

from helpers import make_agent_doc, make_tool_bank, make_tool_doc, mock_gateway
from toolrouter.errors import NameEqualsParent, NotParseable, TagMismatch, BadAgentName
from toolrouter.gateway import Gateway, TransientBackendError, user_request
from toolrouter.graph import GraphConfig, build_graph
from toolrouter.mutation import (
    AGENT_OPERATORS,
    TOOL_OPERATORS,
    EvolveConfig,
    MutationOperator,
    evolve,
    parse_mutant,
    pick_mutation,
    render_mutation_prompt,
    strip_code_fence,
    write_mutation_log,
)
from toolrouter.registry import validate_spec


def test_operator_taxonomy():
    assert len(TOOL_OPERATORS) == 5 and len(AGENT_OPERATORS) == 5
    assert {op.value for op in TOOL_OPERATORS} == {
        "Usage Extension",
        "Function Enhancement",
        "Workflow Chain",
        "Helper Tool",
        "Parameter Redesign",
    }
    assert {op.value for op in AGENT_OPERATORS} == {
        "Domain Transfer",
        "Capability Enhancement",
        "Workflow Specialization",
        "Tool Composition",
        "Scenario Adaptation",
    }
    assert all(op.family == "tool" for op in TOOL_OPERATORS)
    assert all(op.family == "agent" for op in AGENT_OPERATORS)


def test_pick_mutation_deterministic():
    graph = build_graph(make_tool_bank(5), GraphConfig(), mock_gateway(0))
    assert pick_mutation(graph, 7) == pick_mutation(graph, 7)
    draws = {pick_mutation(graph, seed) for seed in range(50)}
    assert len(draws) > 10  # seeds actually vary the draw


def test_pick_mutation_approximately_uniform():
    graph = build_graph(make_tool_bank(5), GraphConfig(), mock_gateway(0))
    counts: dict = {}
    n = 10_000
    for seed in range(n):
        key = pick_mutation(graph, seed)
        counts[key] = counts.get(key, 0) + 1
    cells = 5 * 5
    expected = n / cells
    # three-sigma binomial bound per cell
    sigma = math.sqrt(n * (1 / cells) * (1 - 1 / cells))
    assert len(counts) == cells
    for count in counts.values():
        assert abs(count - expected) <= 3.5 * sigma


def test_render_tool_prompt_contents():
    base = validate_spec(make_tool_doc(0), "tool")
    request = render_mutation_prompt(base, MutationOperator.FUNCTION_ENHANCEMENT)
    prompt = request.messages[-1].content
    assert "# Role: Expert Tool Designer" in prompt
    assert "## Mutation Strategy: Function Enhancement" in prompt
    assert base.name in prompt
    assert f"Keep the same domain tags: {json.dumps(list(base.tags))}" in prompt
    assert request.temperature == 0.8


def test_render_agent_prompt_contents():
    base = validate_spec(make_agent_doc(0), "agent")
    prompt = render_mutation_prompt(base, MutationOperator.DOMAIN_TRANSFER).messages[-1].content
    assert "# Role: Expert Agent Architect" in prompt
    assert 'Agent name MUST end with "_agent"' in prompt
    assert f"Agent Name: {base.name}" in prompt
    assert "## Mutation Strategy: Domain Transfer" in prompt


def test_render_prompt_rejects_wrong_family():
    base = validate_spec(make_tool_doc(0), "tool")
    with pytest.raises(ValueError):
        render_mutation_prompt(base, MutationOperator.DOMAIN_TRANSFER)


def test_strip_code_fence():
    assert strip_code_fence('```json\n{"a": 1}\n```') == '{"a": 1}'
    assert strip_code_fence('```\n{"a": 1}\n```') == '{"a": 1}'
    assert strip_code_fence('{"a": 1}') == '{"a": 1}'


def test_parse_mutant_accepts_and_stamps():
    base = validate_spec(make_tool_doc(0), "tool")
    doc = make_tool_doc(0)
    doc["name"] = "different_name"
    reply = f"```json\n{json.dumps(doc)}\n```"
    mutant = parse_mutant(reply, "tool", base, MutationOperator.USAGE_EXTENSION)
    assert mutant.name == "different_name"
    assert mutant.provenance.origin == "mutant"
    assert mutant.provenance.parent_name == base.name
    assert mutant.provenance.operator == "Usage Extension"


def test_parse_mutant_rejections():
    base = validate_spec(make_tool_doc(0), "tool")
    op = MutationOperator.USAGE_EXTENSION
    with pytest.raises(NotParseable):
        parse_mutant("not json at all", "tool", base, op)
    with pytest.raises(NotParseable):
        parse_mutant('["a list"]', "tool", base, op)
    with pytest.raises(NameEqualsParent):
        parse_mutant(json.dumps(make_tool_doc(0)), "tool", base, op)
    changed = make_tool_doc(0)
    changed["name"] = "other_name"
    changed["tags"] = ["swapped"]
    with pytest.raises(TagMismatch):
        parse_mutant(json.dumps(changed), "tool", base, op)

    agent_base = validate_spec(make_agent_doc(0), "agent")
    bad_agent = make_agent_doc(0)
    bad_agent["name"] = "missing_suffix"
    with pytest.raises(BadAgentName):
        parse_mutant(json.dumps(bad_agent), "agent", agent_base, MutationOperator.DOMAIN_TRANSFER)


def test_evolve_zero_rounds_identity():
    graph = build_graph(make_tool_bank(5), GraphConfig(), mock_gateway(0))
    result = evolve(graph, 0, EvolveConfig(rng_seed=1), mock_gateway(0))
    assert result.graph is graph
    assert result.records == [] and result.accepted == 0
    with pytest.raises(ValueError):
        evolve(graph, -1, EvolveConfig(), mock_gateway(0))


def test_evolve_accepts_mock_mutants():
    gateway = mock_gateway(7)
    graph = build_graph(make_tool_bank(10), GraphConfig(), gateway)
    result = evolve(graph, 5, EvolveConfig(rng_seed=3), gateway)
    assert result.aborted_error is None
    assert len(result.records) == 5
    assert result.accepted >= 1
    for record in result.records:
        if record.accepted:
            node = result.graph.nodes[record.mutant_name]
            assert node.spec.provenance.origin == "mutant"
            assert node.spec.provenance.parent_name == record.parent
    assert len(result.graph) == 10 + result.accepted


def test_evolve_gateway_error_aborts_with_partial_result():
    class DeadChat:
        model_id = "dead"

        def complete(self, request):
            raise TransientBackendError("offline")

    gateway = mock_gateway(7)
    graph = build_graph(make_tool_bank(10), GraphConfig(), gateway)
    dead = Gateway(
        chat_backend=DeadChat(),
        embedding_backend=None,
        max_retries=1,
        backoff_s=0.0,
    )
    result = evolve(graph, 3, EvolveConfig(rng_seed=3), dead)
    assert result.aborted_error is not None
    assert len(result.records) == 1 and not result.records[0].accepted
    assert result.graph is graph


def test_mutation_log_roundtrip(tmp_path):
    gateway = mock_gateway(7)
    graph = build_graph(make_tool_bank(10), GraphConfig(), gateway)
    result = evolve(graph, 3, EvolveConfig(rng_seed=3), gateway)
    path = tmp_path / "mutations.jsonl"
    write_mutation_log(result.records, path)
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(lines) == 3
    assert all({"parent", "operator", "accepted"} <= set(line) for line in lines)
