"""Control-token chat serialization with a prompt/completion boundary.

A serialized example is ``developer turn | tool declarations | user turn``
followed by the assistant completion. ``prompt_end`` is the character offset
where the completion starts: a loss mask is 0 before it and 1 from it on.
"""

from __future__ import annotations

import functools
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from .schema_core import Sample, ToolSchema

TokenCounter = Callable[[str], int]


class SerializationError(ValueError):
    pass


@dataclass(frozen=True)
class ControlTokens:
    decl_start: str = "<start_function_declaration>"
    decl_end: str = "<end_function_declaration>"
    call_start: str = "<start_function_call>"
    call_end: str = "<end_function_call>"
    resp_start: str = "<start_function_response>"
    resp_end: str = "<end_function_response>"
    escape: str = "<escape>"

    def all(self) -> tuple[str, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))


@dataclass(frozen=True)
class ThinkTokens:
    open: str = "<think>"
    close: str = "</think>"


def _check_token_set(tokens: Sequence[str]) -> None:
    if any(not t for t in tokens):
        raise ValueError("control tokens must be non-empty")
    if len(set(tokens)) != len(tokens):
        raise ValueError("control tokens must be pairwise distinct")
    for a in tokens:
        for b in tokens:
            if a != b and a in b:
                raise ValueError(f"control token {a!r} occurs inside {b!r}")


@dataclass(frozen=True)
class SerializerConfig:
    system_instruction: str = (
        "أنت نموذج يستدعي الدوال. استخدم إحدى الأدوات المعرّفة عند الحاجة، "
        "وإلا فأجب دون استدعاء أي أداة."
    )
    # "from_sample", "fixed" or "omit"
    timestamp_policy: str = "from_sample"
    fixed_timestamp: str | None = None
    timestamp_label: str = "Current date and time"
    control_tokens: ControlTokens = field(default_factory=ControlTokens)
    think_tokens: ThinkTokens = field(default_factory=ThinkTokens)
    no_call_text: str = "عذراً، لا تتوفر أداة مناسبة لهذا الطلب."
    turn_start: str = "<start_of_turn>"
    turn_end: str = "<end_of_turn>"
    # Move enum lists into the parameter description instead of a constraint field.
    flatten_enums: bool = False

    def __post_init__(self) -> None:
        if self.timestamp_policy not in ("from_sample", "fixed", "omit"):
            raise ValueError(f"unknown timestamp policy {self.timestamp_policy!r}")
        if self.timestamp_policy == "fixed" and not self.fixed_timestamp:
            raise ValueError("fixed timestamp policy needs a value")
        _check_token_set(self.reserved_tokens())
        if any(t in self.no_call_text for t in self.reserved_tokens()):
            raise ValueError("no-call text must not contain control tokens")

    def reserved_tokens(self) -> tuple[str, ...]:
        return self.control_tokens.all() + (self.think_tokens.open, self.think_tokens.close)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SerializerConfig":
        data = dict(data)
        policy = data.get("timestamp_policy", "from_sample")
        # {"fixed": "2025-01-01T09:00:00+03:00"} is accepted as shorthand.
        if isinstance(policy, Mapping):
            data["fixed_timestamp"] = policy["fixed"]
            data["timestamp_policy"] = "fixed"
        if "control_tokens" in data:
            data["control_tokens"] = ControlTokens(**data["control_tokens"])
        if "think_tokens" in data:
            data["think_tokens"] = ThinkTokens(**data["think_tokens"])
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "SerializerConfig":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


@dataclass(frozen=True)
class SerializedExample:
    text: str
    prompt_end: int
    sample_id: str
    token_count: int | None = None

    def __post_init__(self) -> None:
        if not 0 < self.prompt_end <= len(self.text):
            raise SerializationError("prompt_end out of range")

    @property
    def prompt(self) -> str:
        return self.text[: self.prompt_end]

    @property
    def completion(self) -> str:
        return self.text[self.prompt_end :]

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.sample_id, "text": self.text, "prompt_end": self.prompt_end, "token_count": self.token_count}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SerializedExample":
        return cls(text=data["text"], prompt_end=data["prompt_end"], sample_id=data["id"], token_count=data.get("token_count"))


class WhitespaceCounter:
    """Whitespace-delimited units plus one per reserved-token occurrence."""

    def __init__(self, tokens: Sequence[str] | None = None) -> None:
        self.tokens = tuple(tokens) if tokens is not None else SerializerConfig().reserved_tokens()

    def __call__(self, text: str) -> int:
        return len(text.split()) + sum(text.count(t) for t in self.tokens)


DEFAULT_COUNTER = WhitespaceCounter()


def count_tokens(text: str, counter: TokenCounter | None = None) -> int:
    return (counter or DEFAULT_COUNTER)(text)


@dataclass(frozen=True)
class ContextFit:
    fits: bool
    overflow_by: int


def check_context_fit(example: SerializedExample, budget: int) -> ContextFit:
    if example.token_count is None:
        raise ValueError(f"example {example.sample_id!r} has no token_count")
    overflow = max(0, example.token_count - budget)
    return ContextFit(fits=overflow == 0, overflow_by=overflow)


def _dumps(value: Any) -> str:
    return json.dumps(value, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


@functools.lru_cache(maxsize=4096)
def render_declaration(tool: ToolSchema, config: SerializerConfig) -> str:
    _reject_reserved(tool.description, config, f"tool {tool.name!r} description")
    properties: dict[str, Any] = {}
    for p in tool.parameters:
        _reject_reserved(p.description + "".join(p.enum_values or ()), config, f"parameter {tool.name}.{p.name}")
        prop: dict[str, Any] = {"type": p.value_type, "description": p.description}
        if p.enum_values is not None:
            if config.flatten_enums:
                prop["description"] = f"{p.description} (one of: {', '.join(p.enum_values)})".strip()
            else:
                prop["enum"] = list(p.enum_values)
        properties[p.name] = prop
    body = {
        "description": tool.description,
        "parameters": {
            "type": "object",
            "properties": properties,
            "required": [p.name for p in tool.parameters if p.required],
        },
    }
    tok = config.control_tokens
    return tok.decl_start + tool.name + json.dumps(body, ensure_ascii=False, separators=(", ", ": ")) + tok.decl_end


def render_call(
    tool_name: str,
    arguments: Mapping[str, Any],
    config: SerializerConfig,
    schema: ToolSchema | None = None,
) -> str:
    """Render ``call_start name {args} call_end``.

    Keys follow schema declaration order (undeclared keys sorted after);
    top-level strings are wrapped in the escape delimiter verbatim.
    """
    tok = config.control_tokens
    order = [n for n in (schema.parameter_names if schema else ()) if n in arguments]
    order += sorted(k for k in arguments if k not in set(order))
    parts = []
    for key in order:
        value = arguments[key]
        if isinstance(value, str):
            _reject_reserved(value, config, f"argument {key!r}")
            rendered = tok.escape + value + tok.escape
        else:
            rendered = _dumps(value)
        parts.append(_dumps(key) + ":" + rendered)
    return tok.call_start + tool_name + "{" + ",".join(parts) + "}" + tok.call_end


def _reject_reserved(text: str, config: SerializerConfig, what: str) -> None:
    for t in config.reserved_tokens():
        if t in text:
            raise SerializationError(f"{what} contains reserved token {t!r}")


def _timestamp(sample: Sample, config: SerializerConfig) -> str | None:
    if config.timestamp_policy == "fixed":
        return config.fixed_timestamp
    if config.timestamp_policy == "from_sample":
        return sample.timestamp
    return None


def render_prompt(sample: Sample, tools: Sequence[ToolSchema], config: SerializerConfig) -> str:
    _reject_reserved(sample.query, config, f"sample {sample.id!r} query")
    ts = _timestamp(sample, config)
    dev = config.system_instruction
    if ts:
        dev += f"\n{config.timestamp_label}: {ts}"
    decls = "\n".join(render_declaration(t, config) for t in tools)
    return (
        f"{config.turn_start}developer\n{dev}\n{decls}{config.turn_end}\n"
        f"{config.turn_start}user\n{sample.query}{config.turn_end}\n"
        f"{config.turn_start}model\n"
    )


def _answer(sample: Sample, tools: Sequence[ToolSchema], config: SerializerConfig, check_target: bool) -> str:
    if sample.target is None:
        return config.no_call_text
    schema = next((t for t in tools if t.name == sample.target.tool_name), None)
    if schema is None and check_target:
        raise SerializationError(
            f"sample {sample.id!r}: target tool {sample.target.tool_name!r} is not among the declared tools"
        )
    try:
        return render_call(sample.target.tool_name, sample.target.arguments, config, schema)
    except (TypeError, ValueError) as exc:
        raise SerializationError(f"sample {sample.id!r}: {exc}") from None


def _finish(sample: Sample, prompt: str, completion: str, counter: TokenCounter | None, token_count: int | None):
    text = prompt + completion
    if token_count is None:
        token_count = count_tokens(text, counter)
    return SerializedExample(text=text, prompt_end=len(prompt), sample_id=sample.id, token_count=token_count)


def serialize(
    sample: Sample,
    tools: Sequence[ToolSchema],
    config: SerializerConfig | None = None,
    counter: TokenCounter | None = None,
    token_count: int | None = None,
    check_target: bool = True,
) -> SerializedExample:
    """Serialize a sample with the given ordered tool declarations.

    ``token_count`` overrides the counter when an external count is known.
    ``check_target=False`` lets audits size prompts for samples whose target
    is not declared; training data should never use it.
    """
    config = config or SerializerConfig()
    if not tools:
        raise SerializationError("at least one tool declaration is required")
    completion = _answer(sample, tools, config, check_target)
    return _finish(sample, render_prompt(sample, tools, config), completion, counter, token_count)


def serialize_think(
    sample: Sample,
    reasoning: str,
    tools: Sequence[ToolSchema],
    config: SerializerConfig | None = None,
    counter: TokenCounter | None = None,
    token_count: int | None = None,
) -> SerializedExample:
    """Like :func:`serialize`, with a ``<think>`` block leading the completion."""
    config = config or SerializerConfig()
    if not tools:
        raise SerializationError("at least one tool declaration is required")
    if not reasoning or not reasoning.strip():
        raise SerializationError(f"sample {sample.id!r}: reasoning must be non-empty")
    _reject_reserved(reasoning, config, "reasoning")
    think = config.think_tokens
    completion = think.open + "\n" + reasoning + think.close + _answer(sample, tools, config, True)
    return _finish(sample, render_prompt(sample, tools, config), completion, counter, token_count)
