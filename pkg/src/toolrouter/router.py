"""Router contract and implementations.

Variants: embedding scoring over the query alone or query+history, an
LLM-prompted router using the benchmark sample format, a label oracle for
testing, and a seeded uniform-random baseline. Abstention is an in-band
outcome (never an exception) and counts as incorrect during evaluation.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from typing import Sequence

from .errors import GatewayError
from .gateway import ChatMessage, ChatRequest, Gateway
from .graph import cosine_similarity
from .registry import CandidatePool, serialize_phi
from .supervision import InstanceOrigin, RoutingInstance, render_sample, serialize_history
from .synthesis import Turn

VARIANTS = ("embedding_q", "embedding_qh", "llm", "oracle", "random")


@dataclass(frozen=True)
class RouterDecision:
    chosen: str | None
    ranking: tuple[tuple[str, float], ...] = ()
    rationale: str | None = None
    abstained: bool = False


@dataclass(frozen=True)
class RouterConfig:
    variant: str = "embedding_q"
    kind: str = "tool"  # prompt wording for the llm variant
    chat_model_id: str = "default"
    temperature: float = 1.0
    max_history_chars: int = 8000
    timeout_s: float = 30.0
    rng_seed: int = 0  # random variant only

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown router variant: {self.variant!r}")


def _abstain(reason: str) -> RouterDecision:
    return RouterDecision(chosen=None, rationale=reason, abstained=True)


_THINK_RE = re.compile(r"<think>.*?</think>", re.DOTALL)
_ARRAY_RE = re.compile(r"\[[^\[\]]*\]")


def parse_decision(text: str, pool: CandidatePool) -> str | None:
    """Extract the single routed name from a router reply; None = abstain.

    Strips one optional <think> block, takes the last flat JSON array of
    strings, and requires exactly one pool member. Total: never raises.
    """
    try:
        body = _THINK_RE.sub("", text, count=1)
        chosen = None
        for match in _ARRAY_RE.finditer(body):
            try:
                value = json.loads(match.group(0))
            except json.JSONDecodeError:
                continue
            if isinstance(value, list) and all(isinstance(v, str) for v in value):
                chosen = value
        if chosen is None or len(chosen) != 1:
            return None
        return chosen[0] if chosen[0] in pool.membership else None
    except Exception:
        return None


def _truncate_oldest(text: str, limit: int) -> str:
    return text if len(text) <= limit else text[len(text) - limit :]


def embedding_route(
    gateway: Gateway,
    query: str,
    history: Sequence[Turn],
    pool: CandidatePool,
    mode: str = "q",
    *,
    kind: str = "tool",
    max_history_chars: int = 8000,
) -> RouterDecision:
    """Cosine scoring of the request text against each candidate's phi text.

    mode "q" embeds the query alone; "q_plus_h" prefixes the serialized
    history (truncated from the oldest turn when over the input limit).
    Ties break toward the lexicographically smallest name.
    """
    if mode not in ("q", "q_plus_h"):
        raise ValueError(f"unknown embedding mode: {mode!r}")
    if mode == "q_plus_h" and history:
        history_text = _truncate_oldest(
            serialize_history(history, kind), max(0, max_history_chars - len(query) - 1)
        )
        request_text = f"{history_text}\n{query}"
    else:
        request_text = query
    try:
        vectors = gateway.embed_texts([request_text] + [serialize_phi(s) for s in pool.specs()])
    except GatewayError as exc:
        return _abstain(f"gateway error: {exc}")
    query_vec = vectors[0]
    scores = [
        (name, cosine_similarity(query_vec, vec))
        for name, vec in zip(pool.membership, vectors[1:])
    ]
    ranking = tuple(sorted(scores, key=lambda item: (-item[1], item[0])))
    return RouterDecision(chosen=ranking[0][0], ranking=ranking)


def llm_route(
    gateway: Gateway,
    query: str,
    history: Sequence[Turn],
    pool: CandidatePool,
    cfg: RouterConfig,
) -> RouterDecision:
    """Prompt an LLM with the benchmark sample format and parse its reply."""
    instance = RoutingInstance(
        query=query,
        history=tuple(history),
        pool=pool,
        label=pool.membership[0],  # placeholder; rendering only uses the pool
        origin=InstanceOrigin(trajectory_id="live", step=0),
    )
    rendered = render_sample(instance, cfg.kind)
    request = ChatRequest(
        messages=(ChatMessage("system", rendered.system), ChatMessage("user", rendered.user)),
        temperature=cfg.temperature,
        model_id=cfg.chat_model_id,
    )
    try:
        reply = gateway.chat(request)
    except GatewayError as exc:
        return _abstain(f"gateway error: {exc}")
    chosen = parse_decision(reply, pool)
    if chosen is None:
        return RouterDecision(chosen=None, rationale=reply, abstained=True)
    return RouterDecision(chosen=chosen, ranking=((chosen, 1.0),), rationale=reply)


def route(
    cfg: RouterConfig,
    query: str,
    history: Sequence[Turn],
    pool: CandidatePool,
    gateway: Gateway | None = None,
    *,
    oracle_label: str | None = None,
    rng: random.Random | None = None,
) -> RouterDecision:
    """Dispatch to the configured variant. Gateway failures become abstentions."""
    if len(pool) == 0:
        return _abstain("empty pool")
    try:
        if cfg.variant == "oracle":
            if oracle_label is None or oracle_label not in pool.membership:
                return _abstain("oracle has no planted label for this instance")
            ranking = tuple(
                sorted(
                    ((name, 1.0 if name == oracle_label else 0.0) for name in pool.membership),
                    key=lambda item: (-item[1], item[0]),
                )
            )
            return RouterDecision(chosen=oracle_label, ranking=ranking)
        if cfg.variant == "random":
            chooser = rng if rng is not None else random.Random(cfg.rng_seed)
            return RouterDecision(chosen=chooser.choice(sorted(pool.membership)))
        if gateway is None:
            return _abstain("no gateway configured")
        if cfg.variant == "embedding_q":
            return embedding_route(
                gateway, query, history, pool, "q", kind=cfg.kind, max_history_chars=cfg.max_history_chars
            )
        if cfg.variant == "embedding_qh":
            return embedding_route(
                gateway,
                query,
                history,
                pool,
                "q_plus_h",
                kind=cfg.kind,
                max_history_chars=cfg.max_history_chars,
            )
        return llm_route(gateway, query, history, pool, cfg)
    except GatewayError as exc:
        return _abstain(f"gateway error: {exc}")
