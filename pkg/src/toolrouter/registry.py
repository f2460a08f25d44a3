"""Candidate specifications (tools and agents), banks, and pools.

Specs follow the exchange format used throughout the pipeline: JSON objects
with fields name / description / inputSchema / tools / tags, plus an optional
provenance block for candidates produced by mutation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Iterator, Union

from .errors import (
    BadAgentName,
    DuplicateToolEntry,
    IoError,
    MissingField,
    ParseError,
    SchemaMalformed,
    ValidationError,
)

AGENT_SUFFIX = "_agent"
MAX_AGENT_TOOLS = 16


@dataclass(frozen=True)
class Provenance:
    origin: str = "seed"  # "seed" | "mutant"
    parent_name: str | None = None
    operator: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"origin": self.origin}
        if self.parent_name is not None:
            out["parent_name"] = self.parent_name
        if self.operator is not None:
            out["operator"] = self.operator
        return out


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    input_schema: dict[str, Any]
    tags: tuple[str, ...] = ()
    provenance: Provenance = field(default_factory=Provenance)

    kind = "tool"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "inputSchema": self.input_schema,
            "tags": list(self.tags),
            "provenance": self.provenance.to_dict(),
        }


@dataclass(frozen=True)
class AgentSpec:
    name: str
    description: str
    tools: tuple[str, ...]
    input_schema: dict[str, Any]
    tags: tuple[str, ...] = ()
    provenance: Provenance = field(default_factory=Provenance)

    kind = "agent"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "tools": list(self.tools),
            "inputSchema": self.input_schema,
            "tags": list(self.tags),
            "provenance": self.provenance.to_dict(),
        }


CandidateSpec = Union[ToolSpec, AgentSpec]


def _check_schema(schema: Any, *, require_property_descriptions: bool) -> dict[str, Any]:
    if not isinstance(schema, dict):
        raise SchemaMalformed("$", "not an object")
    if schema.get("type") != "object":
        raise SchemaMalformed("$.type", "must be 'object'")
    properties = schema.get("properties", {})
    if not isinstance(properties, dict):
        raise SchemaMalformed("$.properties", "not an object")
    for prop_name, prop in properties.items():
        if not isinstance(prop, dict):
            raise SchemaMalformed(f"$.properties.{prop_name}", "not an object")
        if require_property_descriptions and not prop.get("description"):
            raise SchemaMalformed(f"$.properties.{prop_name}.description", "missing description")
    required = schema.get("required", [])
    if not isinstance(required, list):
        raise SchemaMalformed("$.required", "not a list")
    for entry in required:
        if entry not in properties:
            raise SchemaMalformed(f"$.required.{entry}", "names a non-existent property")
    normalized: dict[str, Any] = {"type": "object", "properties": properties}
    if required:
        normalized["required"] = required
    return normalized


def _parse_provenance(document: dict[str, Any]) -> Provenance:
    raw = document.get("provenance")
    if raw is None:
        return Provenance()
    origin = raw.get("origin", "seed")
    if origin not in ("seed", "mutant"):
        raise ValidationError(document.get("name", "?"), f"bad provenance origin {origin!r}")
    parent = raw.get("parent_name")
    operator = raw.get("operator")
    if origin == "mutant":
        if not parent or not operator:
            raise ValidationError(
                document.get("name", "?"), "mutant provenance requires parent_name and operator"
            )
    elif parent or operator:
        raise ValidationError(
            document.get("name", "?"), "seed provenance must not carry parent_name/operator"
        )
    return Provenance(origin=origin, parent_name=parent, operator=operator)


def validate_spec(document: dict[str, Any], kind: str) -> CandidateSpec:
    """Validate a parsed exchange-format document into a spec.

    Normalizes absent tags to an empty tuple (tools only; agents must carry
    at least one tag).
    """
    if kind not in ("tool", "agent"):
        raise ValueError(f"unknown candidate kind: {kind!r}")
    for required_field in ("name", "description", "inputSchema"):
        if not document.get(required_field):
            raise MissingField(required_field)
    name = document["name"]
    if not isinstance(name, str) or not name.strip():
        raise MissingField("name")
    tags = tuple(document.get("tags") or ())
    provenance = _parse_provenance(document)

    if kind == "tool":
        schema = _check_schema(document["inputSchema"], require_property_descriptions=False)
        return ToolSpec(
            name=name,
            description=document["description"],
            input_schema=schema,
            tags=tags,
            provenance=provenance,
        )

    if not name.endswith(AGENT_SUFFIX):
        raise BadAgentName(name)
    tools = document.get("tools")
    if not tools:
        raise MissingField("tools")
    if not 1 <= len(tools) <= MAX_AGENT_TOOLS:
        raise ValidationError(name, f"agents need 1-{MAX_AGENT_TOOLS} tools, got {len(tools)}")
    seen: set[str] = set()
    for tool in tools:
        if tool in seen:
            raise DuplicateToolEntry(tool)
        seen.add(tool)
    if not tags:
        raise MissingField("tags")
    schema = _check_schema(document["inputSchema"], require_property_descriptions=True)
    return AgentSpec(
        name=name,
        description=document["description"],
        tools=tuple(tools),
        input_schema=schema,
        tags=tags,
        provenance=provenance,
    )


def _flatten_schema_lines(schema: dict[str, Any]) -> list[str]:
    properties = schema.get("properties", {})
    required = set(schema.get("required", []))
    lines = []
    for prop_name in sorted(properties):
        prop = properties[prop_name]
        kind = prop.get("type", "any")
        marker = ", required" if prop_name in required else ""
        description = prop.get("description", "")
        line = f"  {prop_name} ({kind}{marker})"
        if description:
            line += f": {description}"
        lines.append(line)
    return lines


def serialize_phi(spec: CandidateSpec) -> str:
    """Canonical text rendering of a candidate used for embedding.

    Deterministic: schema properties in lexicographic order, empty sections
    elided. Agents additionally list their tools.
    """
    lines = [f"{spec.kind}: {spec.name}", f"description: {spec.description}"]
    if isinstance(spec, AgentSpec):
        lines.append(f"tools: {', '.join(spec.tools)}")
    schema_lines = _flatten_schema_lines(spec.input_schema)
    if schema_lines:
        lines.append("parameters:")
        lines.extend(schema_lines)
    if spec.tags:
        lines.append(f"tags: {', '.join(spec.tags)}")
    return "\n".join(lines)


@dataclass(frozen=True)
class CandidateBank:
    """Immutable ordered collection of same-kind candidates with unique names."""

    kind: str
    entries: tuple[CandidateSpec, ...] = ()

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for spec in self.entries:
            if spec.kind != self.kind:
                raise ValidationError(spec.name, f"kind {spec.kind!r} in a {self.kind!r} bank")
            if spec.name in seen:
                raise ValidationError(spec.name, "duplicate name in bank")
            seen.add(spec.name)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[CandidateSpec]:
        return iter(self.entries)

    def names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in self.entries)

    def get(self, name: str) -> CandidateSpec | None:
        for spec in self.entries:
            if spec.name == name:
                return spec
        return None

    def with_entry(self, spec: CandidateSpec) -> "CandidateBank":
        if self.get(spec.name) is not None:
            raise ValidationError(spec.name, "duplicate name in bank")
        return CandidateBank(kind=self.kind, entries=self.entries + (spec,))

    @staticmethod
    def merge(kind: str, banks: Iterable["CandidateBank"]) -> "CandidateBank":
        """Union of banks; later duplicates of an existing name are skipped."""
        entries: list[CandidateSpec] = []
        seen: set[str] = set()
        for bank in banks:
            for spec in bank:
                if spec.name not in seen:
                    entries.append(spec)
                    seen.add(spec.name)
        return CandidateBank(kind=kind, entries=tuple(entries))


@dataclass(frozen=True)
class CandidatePool:
    """A subset of a bank offered at one routing step."""

    bank: CandidateBank
    membership: tuple[str, ...]
    non_callable: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.membership:
            raise ValidationError("<pool>", "pool membership must be non-empty")
        known = set(self.bank.names())
        for name in self.membership:
            if name not in known:
                raise ValidationError(name, "pool member not in bank")

    def __len__(self) -> int:
        return len(self.membership)

    def resolve(self, name: str) -> CandidateSpec:
        spec = self.bank.get(name)
        if spec is None or name not in self.membership:
            from .errors import UnresolvedPoolMember

            raise UnresolvedPoolMember(name)
        return spec

    def specs(self) -> list[CandidateSpec]:
        return [self.resolve(name) for name in self.membership]

    @staticmethod
    def whole_bank(bank: CandidateBank) -> "CandidatePool":
        return CandidatePool(bank=bank, membership=bank.names())


def load_bank(path: str | Path, kind: str | None = None) -> CandidateBank:
    """Load a bank from a JSON array or JSONL file, validating every entry."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read bank file {path}: {exc}") from exc

    documents: list[tuple[str, dict[str, Any]]] = []
    stripped = raw.lstrip()
    if stripped.startswith("["):
        try:
            array = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{exc.lineno}", exc.msg) from exc
        documents = [(f"{path}[{i}]", doc) for i, doc in enumerate(array)]
    else:
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                documents.append((f"{path}:{lineno}", json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}", exc.msg) from exc

    if not documents:
        raise ParseError(str(path), "empty bank file")

    if kind is None:
        kind = "agent" if "tools" in documents[0][1] else "tool"

    entries: list[CandidateSpec] = []
    seen: set[str] = set()
    for location, document in documents:
        spec = validate_spec(document, kind)
        if spec.name in seen:
            raise ValidationError(spec.name, f"duplicate name at {location}")
        seen.add(spec.name)
        entries.append(spec)
    return CandidateBank(kind=kind, entries=tuple(entries))


def save_bank(bank: CandidateBank, path: str | Path) -> None:
    """Write a bank as JSONL, one spec object per line."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8") as handle:
            for spec in bank:
                handle.write(json.dumps(spec.to_dict(), ensure_ascii=False) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write bank file {path}: {exc}") from exc


def as_mutant(spec: CandidateSpec, parent: str, operator: str) -> CandidateSpec:
    """Stamp mutation provenance onto a validated spec."""
    return replace(spec, provenance=Provenance(origin="mutant", parent_name=parent, operator=operator))
