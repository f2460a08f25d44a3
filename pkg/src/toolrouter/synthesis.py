"""Task proposal and environment-free multi-turn trajectory simulation.

All roles (assistant, user, execution environment) are LLM-simulated via the
gateway; nothing is ever really executed. Invalid simulations are discarded,
not repaired.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from . import prompts
from .errors import (
    Discarded,
    IoError,
    NotParseable,
    OutOfSubsetReference,
    ParseError,
    RetriesExhaustedSynthesis,
)
from .gateway import Gateway, user_request
from .graph import CandidateGraph
from .mutation import strip_code_fence
from .registry import CandidateSpec
from .sampler import CandidateSubset, SamplerConfig, sample_subset

# --- trajectory types ---------------------------------------------------------


@dataclass(frozen=True)
class PlanStep:
    goal: str
    candidate: str


@dataclass(frozen=True)
class TaskPlan:
    task_text: str
    steps: tuple[PlanStep, ...]


@dataclass(frozen=True)
class CandidateCall:
    name: str
    arguments: dict
    simulated_result: str


@dataclass(frozen=True)
class Observation:
    text: str


@dataclass(frozen=True)
class Action:
    text: str
    calls: tuple[CandidateCall, ...] = ()


Turn = Union[Observation, Action]


@dataclass(frozen=True)
class Trajectory:
    trajectory_id: str
    turns: tuple[Turn, ...]
    subset: CandidateSubset
    plan: TaskPlan

    def actions(self) -> list[Action]:
        return [turn for turn in self.turns if isinstance(turn, Action)]

    def call_count(self) -> int:
        return sum(len(action.calls) for action in self.actions())


@dataclass(frozen=True)
class SynthesisConfig:
    rng_seed: int = 0
    max_retries: int = 2
    max_turns: int = 12
    error_prob: float = 0.1  # chance a simulated user reports the last result as wrong
    temperature: float = 0.8
    model_id: str = "default"


# --- helpers ----------------------------------------------------------------------


def _public_spec(spec: CandidateSpec) -> dict:
    doc = spec.to_dict()
    doc.pop("provenance", None)
    return doc


def _parse_json_reply(reply: str) -> dict:
    body = strip_code_fence(reply).strip()
    try:
        value = json.loads(body)
    except json.JSONDecodeError as exc:
        raise NotParseable(f"reply is not valid JSON: {exc.msg}") from exc
    if not isinstance(value, dict):
        raise NotParseable("reply must be a JSON object")
    return value


_JSON_TYPE_CHECKS = {
    "string": lambda v: isinstance(v, str),
    "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "boolean": lambda v: isinstance(v, bool),
    "array": lambda v: isinstance(v, list),
    "object": lambda v: isinstance(v, dict),
}


def check_arguments(arguments: dict, schema: Mapping) -> list[str]:
    """Required-field and basic type conformance; returns violation strings."""
    violations = []
    properties = schema.get("properties", {})
    for required in schema.get("required", []):
        if required not in arguments:
            violations.append(f"missing required argument {required!r}")
    for key, value in arguments.items():
        expected = properties.get(key, {}).get("type")
        check = _JSON_TYPE_CHECKS.get(expected)
        if check is not None and not check(value):
            violations.append(f"argument {key!r} is not of type {expected!r}")
    return violations


def _transcript_text(turns: Sequence[Turn]) -> str:
    lines = []
    for turn in turns:
        if isinstance(turn, Observation):
            lines.append(f"User: {turn.text}")
        else:
            lines.append(f"Assistant: {turn.text}")
            for call in turn.calls:
                lines.append(f"  call {call.name}({json.dumps(call.arguments, ensure_ascii=False)})")
                lines.append(f"  result: {call.simulated_result}")
    return "\n".join(lines) if lines else "(empty)"


# --- operations -----------------------------------------------------------------------


def propose_task(
    subset: CandidateSubset,
    specs: Mapping[str, CandidateSpec],
    gateway: Gateway,
    cfg: SynthesisConfig = SynthesisConfig(),
) -> TaskPlan:
    """LLM-generate a task and coarse plan conditioned on the subset.

    Plans referencing names outside the subset are rejected and retried up to
    cfg.max_retries.
    """
    if not subset.members:
        raise ValueError("subset must be non-empty")
    candidates_json = json.dumps(
        [_public_spec(specs[name]) for name in subset.members], ensure_ascii=False, indent=2
    )
    content = prompts.TASK_PROPOSAL_TEMPLATE.replace("<<CANDIDATES_JSON>>", candidates_json)
    request = user_request(content, temperature=cfg.temperature, model_id=cfg.model_id)

    last_error: Exception | None = None
    for _attempt in range(cfg.max_retries + 1):
        reply = gateway.chat(request)
        try:
            document = _parse_json_reply(reply)
            task_text = document.get("task")
            raw_steps = document.get("steps")
            if not task_text or not raw_steps:
                raise NotParseable("plan reply missing task or steps")
            steps = []
            for raw in raw_steps:
                candidate = raw.get("candidate")
                if candidate not in subset:
                    raise OutOfSubsetReference(str(candidate))
                steps.append(PlanStep(goal=raw.get("goal", ""), candidate=candidate))
            return TaskPlan(task_text=task_text, steps=tuple(steps))
        except (NotParseable, OutOfSubsetReference) as exc:
            last_error = exc
    raise RetriesExhaustedSynthesis(f"could not obtain a valid plan: {last_error}")


def simulate_trajectory(
    plan: TaskPlan,
    subset: CandidateSubset,
    specs: Mapping[str, CandidateSpec],
    gateway: Gateway,
    cfg: SynthesisConfig = SynthesisConfig(),
    trajectory_id: str = "traj-0",
) -> Trajectory:
    """Role-based simulation of one multi-turn trajectory.

    Raises Discarded when the simulation violates any trajectory invariant;
    the caller drops the sample.
    """
    rng = random.Random(
        int(hashlib.sha256(f"{cfg.rng_seed}:{trajectory_id}".encode()).hexdigest()[:16], 16)
    )
    turns: list[Turn] = [Observation(text=plan.task_text)]
    plan_json = json.dumps(
        {"task": plan.task_text, "steps": [{"goal": s.goal, "candidate": s.candidate} for s in plan.steps]},
        ensure_ascii=False,
    )

    def assistant_action(step: PlanStep | None) -> Action:
        if step is None:
            step_section = prompts.PLAN_COMPLETE_SENTENCE
        else:
            step_doc = {
                "goal": step.goal,
                "candidate": step.candidate,
                "spec": _public_spec(specs[step.candidate]),
            }
            step_section = f"{prompts.NEXT_STEP_HEADER}\n{json.dumps(step_doc, ensure_ascii=False)}"
        content = (
            prompts.ASSISTANT_TURN_TEMPLATE.replace("<<TASK>>", plan.task_text)
            .replace("<<PLAN_JSON>>", plan_json)
            .replace("<<TRANSCRIPT>>", _transcript_text(turns))
            .replace("<<STEP_SECTION>>", step_section)
        )
        reply = gateway.chat(user_request(content, temperature=cfg.temperature, model_id=cfg.model_id))
        try:
            document = _parse_json_reply(reply)
        except NotParseable as exc:
            raise Discarded(f"unparseable assistant turn: {exc}") from exc
        raw_calls = document.get("calls", [])
        if len(raw_calls) > 2:
            raise Discarded("assistant action carries more than 2 calls")
        calls = []
        for raw in raw_calls:
            name = raw.get("name")
            if name not in subset:
                raise Discarded(f"out-of-subset call: {name!r}")
            arguments = raw.get("arguments", {})
            violations = check_arguments(arguments, specs[name].input_schema)
            if violations:
                raise Discarded(f"schema-violating arguments for {name}: {violations}")
            calls.append(
                CandidateCall(
                    name=name,
                    arguments=arguments,
                    simulated_result=simulate_result(name, arguments),
                )
            )
        return Action(text=document.get("assistant", ""), calls=tuple(calls))

    def simulate_result(name: str, arguments: dict) -> str:
        content = (
            prompts.RESULT_SIM_TEMPLATE.replace("<<NAME>>", name)
            .replace("<<ARGS_JSON>>", json.dumps(arguments, ensure_ascii=False))
            .replace("<<SPEC_JSON>>", json.dumps(_public_spec(specs[name]), ensure_ascii=False))
        )
        return gateway.chat(user_request(content, temperature=cfg.temperature, model_id=cfg.model_id))

    def user_feedback() -> Observation:
        hint = prompts.ERROR_HINT_SENTENCE if rng.random() < cfg.error_prob else ""
        content = prompts.USER_TURN_TEMPLATE.replace("<<ERROR_HINT>>", hint).replace(
            "<<TRANSCRIPT>>", _transcript_text(turns)
        )
        reply = gateway.chat(user_request(content, temperature=cfg.temperature, model_id=cfg.model_id))
        return Observation(text=reply.strip())

    for step in plan.steps:
        turns.append(assistant_action(step))
        turns.append(user_feedback())
        if len(turns) + 1 > cfg.max_turns:
            raise Discarded("over length")
    turns.append(assistant_action(None))

    trajectory = Trajectory(
        trajectory_id=trajectory_id, turns=tuple(turns), subset=subset, plan=plan
    )
    report = validate_trajectory(trajectory, subset, specs)
    if report.violations:
        raise Discarded("; ".join(report.violations))
    return trajectory


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_trajectory(
    trajectory: Trajectory,
    subset: CandidateSubset,
    specs: Mapping[str, CandidateSpec] | None = None,
) -> ValidationReport:
    """Pure structural check: alternation, membership, argument conformance."""
    report = ValidationReport()
    turns = trajectory.turns
    if len(turns) < 2:
        report.violations.append("trajectory has fewer than 2 turns")
    for index, turn in enumerate(turns):
        expected = Observation if index % 2 == 0 else Action
        if not isinstance(turn, expected):
            report.violations.append(f"alternation violation at turn {index}")
    if turns and not isinstance(turns[-1], Action):
        report.violations.append("trajectory must end with an action")
    for index, turn in enumerate(turns):
        if not isinstance(turn, Action):
            continue
        for call in turn.calls:
            if call.name not in subset:
                report.violations.append(f"out-of-subset call {call.name!r} at turn {index}")
            elif specs is not None:
                for violation in check_arguments(call.arguments, specs[call.name].input_schema):
                    report.violations.append(f"turn {index} call {call.name}: {violation}")
    return report


# --- batch pipeline + dataset file -------------------------------------------------------


def synthesize_batch(
    graph: CandidateGraph,
    count: int,
    sampler_cfg: SamplerConfig,
    synth_cfg: SynthesisConfig,
    gateway: Gateway,
) -> list[Trajectory]:
    """Sample -> propose -> simulate, skipping discarded samples."""
    trajectories: list[Trajectory] = []
    attempts = 0
    max_attempts = count * 3 if count else 0
    specs = {name: node.spec for name, node in graph.nodes.items()}
    while len(trajectories) < count and attempts < max_attempts:
        digest = hashlib.sha256(f"{synth_cfg.rng_seed}:sample:{attempts}".encode()).hexdigest()
        attempts += 1
        subset = sample_subset(
            graph,
            SamplerConfig(
                num_seeds=sampler_cfg.num_seeds,
                target_size=sampler_cfg.target_size,
                target_range=sampler_cfg.target_range,
                restart_prob=sampler_cfg.restart_prob,
                rng_seed=int(digest[:16], 16),
            ),
        )
        trajectory_id = f"traj-{len(trajectories):05d}"
        try:
            plan = propose_task(subset, specs, gateway, synth_cfg)
            trajectories.append(
                simulate_trajectory(plan, subset, specs, gateway, synth_cfg, trajectory_id)
            )
        except (Discarded, RetriesExhaustedSynthesis):
            continue
    return trajectories


def turn_to_dict(turn: Turn) -> dict:
    if isinstance(turn, Observation):
        return {"type": "observation", "text": turn.text}
    return {
        "type": "action",
        "text": turn.text,
        "calls": [
            {"name": c.name, "arguments": c.arguments, "result": c.simulated_result}
            for c in turn.calls
        ],
    }


def turn_from_dict(raw: dict) -> Turn:
    if raw["type"] == "observation":
        return Observation(text=raw["text"])
    calls = tuple(
        CandidateCall(name=c["name"], arguments=c["arguments"], simulated_result=c["result"])
        for c in raw.get("calls", [])
    )
    return Action(text=raw["text"], calls=calls)


def trajectory_to_dict(trajectory: Trajectory) -> dict:
    turns = [turn_to_dict(turn) for turn in trajectory.turns]
    return {
        "trajectory_id": trajectory.trajectory_id,
        "subset": {
            "members": list(trajectory.subset.members),
            "seed_nodes": list(trajectory.subset.seed_nodes),
            "walk_trace": [list(t) for t in trajectory.subset.walk_trace],
        },
        "plan": {
            "task": trajectory.plan.task_text,
            "steps": [{"goal": s.goal, "candidate": s.candidate} for s in trajectory.plan.steps],
        },
        "turns": turns,
    }


def trajectory_from_dict(document: dict) -> Trajectory:
    turns: list[Turn] = [turn_from_dict(raw) for raw in document["turns"]]
    subset_doc = document["subset"]
    subset = CandidateSubset(
        members=tuple(subset_doc["members"]),
        seed_nodes=tuple(subset_doc["seed_nodes"]),
        walk_trace=tuple(tuple(t) for t in subset_doc["walk_trace"]),
    )
    plan_doc = document["plan"]
    plan = TaskPlan(
        task_text=plan_doc["task"],
        steps=tuple(PlanStep(goal=s["goal"], candidate=s["candidate"]) for s in plan_doc["steps"]),
    )
    return Trajectory(
        trajectory_id=document["trajectory_id"], turns=tuple(turns), subset=subset, plan=plan
    )


def save_trajectories(trajectories: Iterable[Trajectory], path: str | Path) -> None:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as handle:
            for trajectory in trajectories:
                handle.write(json.dumps(trajectory_to_dict(trajectory), ensure_ascii=False) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write trajectory file {path}: {exc}") from exc


def load_trajectories(path: str | Path) -> list[Trajectory]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoError(f"cannot read trajectory file {path}: {exc}") from exc
    out = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            out.append(trajectory_from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise ParseError(f"{path}:{lineno}", str(exc)) from exc
    return out
