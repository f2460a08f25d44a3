"""Turn trajectories into history-aware routing instances and render them
into the training/benchmark exchange format.

Convention for the first action of a trajectory: query is the initial user
message and the history is empty. For action t > 0, the query is the
observation immediately preceding the action and the history is everything
strictly before that observation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from . import prompts
from .errors import IoError, ParseError, PoolMissingLabel
from .registry import CandidatePool, CandidateSpec
from .synthesis import (
    Action,
    Observation,
    Trajectory,
    Turn,
    turn_from_dict,
    turn_to_dict,
)


@dataclass(frozen=True)
class InstanceOrigin:
    trajectory_id: str
    step: int  # action index within the trajectory
    call_index: int = 0


@dataclass(frozen=True)
class RoutingInstance:
    query: str
    history: tuple[Turn, ...]
    pool: CandidatePool
    label: str
    origin: InstanceOrigin


@dataclass(frozen=True)
class RenderedSample:
    system: str
    user: str
    expected: tuple[str, ...]


def extract_instances(trajectory: Trajectory, pool: CandidatePool) -> list[RoutingInstance]:
    """One routing instance per candidate call, in temporal order.

    Multi-call actions yield instances sharing (query, history) with distinct
    labels in call order.
    """
    instances: list[RoutingInstance] = []
    turns = trajectory.turns
    action_index = 0
    for turn_index, turn in enumerate(turns):
        if not isinstance(turn, Action):
            continue
        preceding = turns[turn_index - 1]
        assert isinstance(preceding, Observation)
        query = preceding.text
        history = tuple(turns[: turn_index - 1])
        for call_index, call in enumerate(turn.calls):
            if call.name not in pool.membership:
                raise PoolMissingLabel(call.name)
            instances.append(
                RoutingInstance(
                    query=query,
                    history=history,
                    pool=pool,
                    label=call.name,
                    origin=InstanceOrigin(
                        trajectory_id=trajectory.trajectory_id,
                        step=action_index,
                        call_index=call_index,
                    ),
                )
            )
        action_index += 1
    return instances


def strip_history(instance: RoutingInstance) -> RoutingInstance:
    """History-stripped ablation twin; idempotent."""
    return replace(instance, history=())


# --- history serialization (transcript style shared with Q+H routing) --------------


def serialize_history(turns: Sequence[Turn], kind: str = "agent") -> str:
    """Render turns in the benchmark transcript style.

    Each turn starts a line with ``User:`` or ``Assistant:``; candidate calls
    appear as <agent_call>/<tool_call> tags followed by ``Tool results:``.
    """
    tag = f"{kind}_call"
    lines: list[str] = []
    for turn in turns:
        if isinstance(turn, Observation):
            lines.append(f"User: {turn.text}")
        else:
            lines.append(f"Assistant: {turn.text}")
            for call in turn.calls:
                arguments = json.dumps(call.arguments, ensure_ascii=False)
                lines.append(f"<{tag}>{call.name}{arguments}</{tag}>")
                lines.append(f"Tool results: {call.simulated_result}")
    return "\n".join(lines)


_HISTORY_BLOCK_RE = re.compile(r"<history>(.*?)</history>", re.DOTALL)
_TURN_LINE_RE = re.compile(r"^(?:User|Assistant): ", re.MULTILINE)


def parse_history_turn_count(user_text: str) -> int:
    """Recover the serialized turn count from a rendered sample's history block."""
    match = _HISTORY_BLOCK_RE.search(user_text)
    if match is None:
        raise ParseError("<user text>", "no <history> block found")
    return len(_TURN_LINE_RE.findall(match.group(1)))


# --- rendering -------------------------------------------------------------------


def _public_spec(spec: CandidateSpec) -> dict:
    doc = spec.to_dict()
    doc.pop("provenance", None)
    return doc


def render_pool_block(pool: CandidatePool) -> str:
    return json.dumps([_public_spec(spec) for spec in pool.specs()], ensure_ascii=False, indent=2)


def render_sample(instance: RoutingInstance, kind: str) -> RenderedSample:
    """Render one instance into the (system, user, expected) exchange format."""
    if kind not in ("tool", "agent"):
        raise ValueError(f"unknown kind: {kind!r}")
    if instance.label not in instance.pool.membership:
        raise PoolMissingLabel(instance.label)
    system = prompts.ROUTER_SYSTEM_AGENT if kind == "agent" else prompts.ROUTER_SYSTEM_TOOL
    history_text = serialize_history(instance.history, kind)
    history_slot = f"\n{history_text}\n" if history_text else ""
    plural = "agents" if kind == "agent" else "tools"
    user = (
        prompts.ROUTER_USER_TEMPLATE.replace("<<HISTORY>>", history_slot)
        .replace("<<QUERY>>", instance.query)
        .replace("<<POOL_JSON>>", render_pool_block(instance.pool))
        .replace("<<PLURAL>>", plural)
        .replace("<<SINGULAR>>", kind)
    )
    return RenderedSample(system=system, user=user, expected=(instance.label,))


# --- dataset file ------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetRecord:
    """Self-contained routing sample: rendered prompt plus structured fields."""

    kind: str
    system: str
    user: str
    query: str
    history: tuple[Turn, ...]
    pool_specs: tuple[dict, ...]
    label: str
    group: str = "all"
    origin: dict | None = None

    @property
    def expected_key(self) -> str:
        return "expected_agent" if self.kind == "agent" else "expected_tool"

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "user": self.user,
            self.expected_key: [self.label],
            "kind": self.kind,
            "query": self.query,
            "history": [turn_to_dict(t) for t in self.history],
            "pool": list(self.pool_specs),
            "label": self.label,
            "group": self.group,
            "origin": self.origin,
        }

    @staticmethod
    def from_dict(document: dict) -> "DatasetRecord":
        return DatasetRecord(
            kind=document["kind"],
            system=document["system"],
            user=document["user"],
            query=document["query"],
            history=tuple(turn_from_dict(t) for t in document.get("history", [])),
            pool_specs=tuple(document["pool"]),
            label=document["label"],
            group=document.get("group", "all"),
            origin=document.get("origin"),
        )


def record_from_instance(instance: RoutingInstance, kind: str, group: str = "all") -> DatasetRecord:
    rendered = render_sample(instance, kind)
    return DatasetRecord(
        kind=kind,
        system=rendered.system,
        user=rendered.user,
        query=instance.query,
        history=instance.history,
        pool_specs=tuple(_public_spec(spec) for spec in instance.pool.specs()),
        label=instance.label,
        group=group,
        origin={
            "trajectory_id": instance.origin.trajectory_id,
            "step": instance.origin.step,
            "call_index": instance.origin.call_index,
        },
    )


def build_dataset(
    trajectories: Sequence[Trajectory],
    pools: CandidatePool | Sequence[CandidatePool],
    path: str | Path,
    *,
    kind: str = "tool",
    group: str = "all",
    ablation: bool = False,
) -> dict[str, int]:
    """Stream rendered samples to a JSONL file.

    With ablation=True a history-stripped twin set is written alongside, to
    ``<path>.nohistory``. Returns sample counts per emitted file.
    """
    path = Path(path)
    if isinstance(pools, CandidatePool):
        pool_list: list[CandidatePool] = [pools] * len(trajectories)
    else:
        pool_list = list(pools)
        if len(pool_list) != len(trajectories):
            raise ValueError("pools must be a single pool or one per trajectory")

    twin_path = path.with_name(path.name + ".nohistory") if ablation else None
    counts = {str(path): 0}
    if twin_path is not None:
        counts[str(twin_path)] = 0
    try:
        main = path.open("w", encoding="utf-8")
        twin = twin_path.open("w", encoding="utf-8") if twin_path is not None else None
        try:
            for trajectory, pool in zip(trajectories, pool_list):
                for instance in extract_instances(trajectory, pool):
                    record = record_from_instance(instance, kind, group)
                    main.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
                    counts[str(path)] += 1
                    if twin is not None:
                        stripped = record_from_instance(strip_history(instance), kind, group)
                        twin.write(json.dumps(stripped.to_dict(), ensure_ascii=False) + "\n")
                        counts[str(twin_path)] += 1
        finally:
            main.close()
            if twin is not None:
                twin.close()
    except OSError as exc:
        raise IoError(f"cannot write dataset {path}: {exc}") from exc
    return counts


def load_dataset(path: str | Path) -> list[DatasetRecord]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read dataset {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(DatasetRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise ParseError(f"{path}:{lineno}", str(exc)) from exc
    return records


def save_dataset(records: Iterable[DatasetRecord], path: str | Path) -> int:
    path = Path(path)
    count = 0
    try:
        with path.open("w", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
                count += 1
    except OSError as exc:
        raise IoError(f"cannot write dataset {path}: {exc}") from exc
    return count
