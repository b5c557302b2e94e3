"""Tool schemas, tool calls, corpus samples and call validation."""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

VALUE_TYPES = ("string", "integer", "number", "boolean", "array", "object")
DIALECTS = ("MSA", "Egyptian", "Gulf", "Levantine", "Maghrebi")

LEGACY = "legacy"
NONE_IS_VALID = "none_is_valid"
ENUM_RULES = (LEGACY, NONE_IS_VALID)

VIOLATION_KINDS = (
    "missing_required",
    "type_mismatch",
    "enum_violation",
    "unknown_parameter",
    "unknown_tool",
)

# Characters that would collide with serialized structure around a tool name.
INVALID_NAME_CHARS = re.compile(r"[\s<>{}\"']")


class SchemaError(ValueError):
    """Raised when a schema, call or sample violates its construction invariants."""


class EmptyQueryError(SchemaError):
    pass


def normalize_text(value: str) -> str:
    """NFC-normalize and trim a string."""
    return unicodedata.normalize("NFC", value).strip()


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    value_type: str
    description: str = ""
    enum_values: tuple[str, ...] | None = None
    required: bool = False

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("parameter name must be non-empty")
        if self.value_type not in VALUE_TYPES:
            raise SchemaError(f"parameter {self.name!r}: unknown type {self.value_type!r}")
        if self.enum_values is not None:
            if self.value_type != "string":
                raise SchemaError(f"parameter {self.name!r}: enum only allowed on string parameters")
            values = tuple(self.enum_values)
            if not values:
                raise SchemaError(f"parameter {self.name!r}: enum must be non-empty")
            if len({normalize_text(v) for v in values}) != len(values):
                raise SchemaError(f"parameter {self.name!r}: duplicate enum values")
            object.__setattr__(self, "enum_values", values)

    @property
    def is_enum(self) -> bool:
        return self.enum_values is not None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name, "type": self.value_type, "description": self.description}
        if self.enum_values is not None:
            out["enum"] = list(self.enum_values)
        out["required"] = self.required
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ParameterSpec":
        enum = data.get("enum")
        return cls(
            name=data["name"],
            value_type=data.get("type", data.get("value_type", "string")),
            description=data.get("description", ""),
            enum_values=tuple(enum) if enum is not None else None,
            required=bool(data.get("required", False)),
        )


@dataclass(frozen=True)
class ToolSchema:
    name: str
    description: str = ""
    parameters: tuple[ParameterSpec, ...] = ()

    def __post_init__(self) -> None:
        if not self.name or INVALID_NAME_CHARS.search(self.name):
            raise SchemaError(f"invalid tool name {self.name!r}")
        params = tuple(self.parameters)
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise SchemaError(f"tool {self.name!r}: duplicate parameter names")
        object.__setattr__(self, "parameters", params)

    def parameter(self, name: str) -> ParameterSpec | None:
        for p in self.parameters:
            if p.name == name:
                return p
        return None

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "parameters": [p.to_dict() for p in self.parameters],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ToolSchema":
        return cls(
            name=data["name"],
            description=data.get("description", ""),
            parameters=tuple(ParameterSpec.from_dict(p) for p in data.get("parameters", [])),
        )


@dataclass(frozen=True)
class ToolCall:
    tool_name: str
    arguments: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"tool_name": self.tool_name, "arguments": dict(self.arguments)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ToolCall":
        name = data.get("tool_name", data.get("name"))
        if not isinstance(name, str) or not name:
            raise SchemaError("tool call without a name")
        args = data.get("arguments") or {}
        if not isinstance(args, Mapping):
            raise SchemaError("tool call arguments must be an object")
        return cls(tool_name=name, arguments=dict(args))


@dataclass(frozen=True)
class Sample:
    id: str
    query: str
    dialect: str
    domain: str
    requires_function: bool
    target: ToolCall | None = None
    timestamp: str | None = None
    # Stored assistant text for negatives, when the source corpus carries one.
    response: str | None = None
    # Reasoning trace for the think variant.
    reasoning: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise SchemaError("sample id must be non-empty")
        if not isinstance(self.query, str) or not self.query.strip():
            raise EmptyQueryError(f"sample {self.id!r}: empty query")
        if self.dialect not in DIALECTS:
            raise SchemaError(f"sample {self.id!r}: unknown dialect {self.dialect!r}")
        if self.requires_function != (self.target is not None):
            raise SchemaError(f"sample {self.id!r}: requires_function disagrees with target presence")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "id": self.id,
            "query": self.query,
            "dialect": self.dialect,
            "domain": self.domain,
            "requires_function": self.requires_function,
            "target": self.target.to_dict() if self.target else None,
        }
        for key in ("timestamp", "response", "reasoning"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Sample":
        try:
            target = data.get("target")
            return cls(
                id=str(data["id"]),
                query=data.get("query", ""),
                dialect=data["dialect"],
                domain=data["domain"],
                requires_function=bool(data["requires_function"]),
                target=ToolCall.from_dict(target) if target else None,
                timestamp=data.get("timestamp"),
                response=data.get("response"),
                reasoning=data.get("reasoning"),
            )
        except KeyError as exc:
            raise SchemaError(f"sample row missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class Violation:
    parameter: str | None
    kind: str

    def to_dict(self) -> dict[str, Any]:
        return {"parameter": self.parameter, "kind": self.kind}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def to_dict(self) -> dict[str, Any]:
        return {"valid": self.valid, "violations": [v.to_dict() for v in self.violations]}


def type_matches(value: Any, value_type: str) -> bool:
    # bool is an int subclass in Python; JSON keeps them apart.
    if value_type == "string":
        return isinstance(value, str)
    if value_type == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if value_type == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if value_type == "boolean":
        return isinstance(value, bool)
    if value_type == "array":
        return isinstance(value, list)
    if value_type == "object":
        return isinstance(value, dict)
    return False


def _index(inventory: Iterable[ToolSchema]) -> dict[str, ToolSchema]:
    return {tool.name: tool for tool in inventory}


def validate_call(
    call: ToolCall,
    inventory: Sequence[ToolSchema] | Mapping[str, ToolSchema],
    enum_rule: str = NONE_IS_VALID,
) -> ValidationReport:
    """Check a call against the inventory.

    Under ``legacy`` a null enum argument is an ``enum_violation``; under
    ``none_is_valid`` null is accepted for optional parameters. A required
    parameter that is absent or null is ``missing_required`` under both rules.
    """
    if enum_rule not in ENUM_RULES:
        raise ValueError(f"unknown enum rule {enum_rule!r}")
    tools = inventory if isinstance(inventory, Mapping) else _index(inventory)
    if not tools:
        raise ValueError("inventory must be non-empty")

    schema = tools.get(call.tool_name)
    if schema is None:
        return ValidationReport((Violation(call.tool_name, "unknown_tool"),))

    violations: list[Violation] = []
    args = call.arguments
    for param in schema.parameters:
        value = args.get(param.name)
        if value is None:
            if param.required:
                violations.append(Violation(param.name, "missing_required"))
            elif param.is_enum and param.name in args and enum_rule == LEGACY:
                violations.append(Violation(param.name, "enum_violation"))
            continue
        if not type_matches(value, param.value_type):
            violations.append(Violation(param.name, "type_mismatch"))
            continue
        if param.is_enum:
            allowed = {normalize_text(v) for v in param.enum_values}
            if normalize_text(value) not in allowed:
                violations.append(Violation(param.name, "enum_violation"))

    declared = set(schema.parameter_names)
    for key in sorted(k for k in args if k not in declared):
        violations.append(Violation(key, "unknown_parameter"))
    return ValidationReport(tuple(violations))


def load_inventory(path: str | Path) -> list[ToolSchema]:
    """Read a JSON array of tool objects."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, list):
        raise SchemaError(f"{path}: inventory must be a JSON array")
    tools = [ToolSchema.from_dict(item) for item in data]
    names = [t.name for t in tools]
    if len(set(names)) != len(names):
        raise SchemaError(f"{path}: duplicate tool names in inventory")
    return tools


def dump_inventory(tools: Iterable[ToolSchema]) -> str:
    return json.dumps([t.to_dict() for t in tools], ensure_ascii=False, indent=2) + "\n"
