"""Shared fixtures-in-code for the test suite: synthetic banks and gateways."""

from __future__ import annotations

from toolrouter.backends import MockChatBackend, MockEmbeddingBackend
from toolrouter.gateway import Gateway
from toolrouter.registry import CandidateBank, validate_spec

DOMAINS = [
    ("files", "filesystem trees"),
    ("tickets", "support tickets"),
    ("charts", "chart renderings"),
    ("code", "source repositories"),
    ("mail", "email threads"),
    ("geo", "map locations"),
    ("stocks", "market quotes"),
    ("docs", "document archives"),
    ("media", "audio and video assets"),
    ("builds", "continuous integration runs"),
]

VERBS = ["search", "summarize", "validate", "convert", "monitor", "diff", "archive", "tag"]


def make_tool_doc(index: int) -> dict:
    domain, blurb = DOMAINS[index % len(DOMAINS)]
    verb = VERBS[index % len(VERBS)]
    name = f"{verb}_{domain}_{index}"
    return {
        "name": name,
        "description": f"{verb.capitalize()} {blurb} and report a concise outcome.",
        "inputSchema": {
            "type": "object",
            "properties": {
                "target": {"type": "string", "description": f"The {domain} item to {verb}."},
                "limit": {"type": "integer", "description": "Maximum results to return."},
            },
            "required": ["target"],
        },
        "tags": [domain],
    }


def make_tool_bank(size: int) -> CandidateBank:
    entries = tuple(validate_spec(make_tool_doc(i), "tool") for i in range(size))
    return CandidateBank(kind="tool", entries=entries)


def make_agent_doc(index: int) -> dict:
    domain, blurb = DOMAINS[index % len(DOMAINS)]
    return {
        "name": f"{domain}_ops_{index}_agent",
        "description": f"An autonomous agent that manages {blurb} end to end.",
        "tools": [f"{verb}_{domain}" for verb in VERBS[:5]],
        "inputSchema": {
            "type": "object",
            "properties": {
                "instruction": {
                    "type": "string",
                    "description": "Natural-language instruction describing the job.",
                }
            },
        },
        "tags": [f"{domain} agent"],
    }


def make_agent_bank(size: int) -> CandidateBank:
    entries = tuple(validate_spec(make_agent_doc(i), "agent") for i in range(size))
    return CandidateBank(kind="agent", entries=entries)


def mock_gateway(seed: int = 0, **kwargs) -> Gateway:
    return Gateway(
        chat_backend=MockChatBackend(seed=seed),
        embedding_backend=MockEmbeddingBackend(seed=seed),
        backoff_s=0.0,
        **kwargs,
    )
