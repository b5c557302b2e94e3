"""Parse raw model completions into a call, a no-call, or a located failure.

Grammar, after optional leading whitespace::

    output   := [think] (call | nocall)
    think    := THINK_OPEN text THINK_CLOSE        (deployment_aware only)
    call     := CALL_START name object CALL_END ws*
    nocall   := text without CALL_START / CALL_END
    object   := JSON object whose values may be ESCAPE raw-text ESCAPE

Failures are returned as values; the parser never raises on input content.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from typing import Any

from .chat_serializer import ControlTokens, ThinkTokens
from .schema_core import INVALID_NAME_CHARS, ToolCall

NO_CALL = "NoCall"
PARSED_CALL = "ParsedCall"
PARSE_FAILURE = "ParseFailure"

STRICT = "strict"
DEPLOYMENT_AWARE = "deployment_aware"
PARSE_MODES = (STRICT, DEPLOYMENT_AWARE)


@dataclass(frozen=True)
class FailureDetail:
    position: int
    reason: str


@dataclass(frozen=True)
class ParsedOutput:
    kind: str
    call: ToolCall | None = None
    reasoning: str | None = None
    had_think_block: bool = False
    failure_detail: FailureDetail | None = None

    def __post_init__(self) -> None:
        if (self.kind == PARSED_CALL) != (self.call is not None):
            raise ValueError("call must be present exactly for ParsedCall")
        if self.had_think_block and self.reasoning is None:
            raise ValueError("think block without reasoning")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "call": self.call.to_dict() if self.call else None,
            "reasoning": self.reasoning,
            "had_think_block": self.had_think_block,
            "failure_detail": (
                {"position": self.failure_detail.position, "reason": self.failure_detail.reason}
                if self.failure_detail
                else None
            ),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ParsedOutput":
        detail = data.get("failure_detail")
        return cls(
            kind=data["kind"],
            call=ToolCall.from_dict(data["call"]) if data.get("call") else None,
            reasoning=data.get("reasoning"),
            had_think_block=bool(data.get("had_think_block")),
            failure_detail=FailureDetail(**detail) if detail else None,
        )


def normalize_mode(mode: str) -> str:
    mode = mode.replace("-", "_")
    if mode not in PARSE_MODES:
        raise ValueError(f"unknown parse mode {mode!r}")
    return mode


class _Fail(Exception):
    def __init__(self, position: int, reason: str) -> None:
        self.position = position
        self.reason = reason


def _skip_ws(text: str, i: int) -> int:
    n = len(text)
    while i < n and text[i].isspace():
        i += 1
    return i


def _reject_duplicates(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in pairs:
        if key in out:
            raise ValueError(f"duplicate key {key!r}")
        out[key] = value
    return out


def _reject_constant(name: str) -> Any:
    raise ValueError(f"non-standard JSON constant {name}")


class _ArgumentScanner:
    """Find the extent of the argument object and rewrite escape regions as JSON strings."""

    def __init__(self, tokens: ControlTokens, reserved: tuple[str, ...]) -> None:
        self.escape = tokens.escape
        self.reserved = reserved
        self.lead_chars = {t[0] for t in reserved}

    def scan(self, text: str, start: int) -> tuple[str, list[int], list[int], int]:
        n = len(text)
        i = start
        depth = 0
        in_string = False
        pieces: list[str] = []
        # Parallel offset tables mapping rewritten positions back to the source.
        out_marks: list[int] = [0]
        src_marks: list[int] = [start]
        out_len = 0
        seg = start
        while i < n:
            c = text[i]
            if in_string:
                if c == "\\":
                    i += 2
                    continue
                if c == '"':
                    in_string = False
                i += 1
                continue
            if c in self.lead_chars:
                if text.startswith(self.escape, i):
                    body_start = i + len(self.escape)
                    close = text.find(self.escape, body_start)
                    if close < 0:
                        raise _Fail(i, "unterminated escape region")
                    pieces.append(text[seg:i])
                    out_len += i - seg
                    literal = json.dumps(text[body_start:close], ensure_ascii=False)
                    out_marks.append(out_len)
                    src_marks.append(i)
                    pieces.append(literal)
                    out_len += len(literal)
                    i = close + len(self.escape)
                    seg = i
                    out_marks.append(out_len)
                    src_marks.append(i)
                    continue
                for tok in self.reserved:
                    if text.startswith(tok, i):
                        raise _Fail(i, f"malformed arguments: unexpected {tok} inside argument object")
            if c == '"':
                in_string = True
            elif c in "{[":
                depth += 1
            elif c in "}]":
                depth -= 1
                if depth == 0:
                    i += 1
                    pieces.append(text[seg:i])
                    return "".join(pieces), out_marks, src_marks, i
            i += 1
        raise _Fail(n, "malformed arguments: truncated argument object")


def _map_position(pos: int, out_marks: list[int], src_marks: list[int]) -> int:
    k = bisect.bisect_right(out_marks, pos) - 1
    return src_marks[k] + (pos - out_marks[k])


def parse_output(
    text: str | bytes,
    tokens: ControlTokens | None = None,
    mode: str = STRICT,
    think_tokens: ThinkTokens | None = None,
) -> ParsedOutput:
    """Parse one raw completion.

    In ``strict`` mode a leading think block is a failure; in
    ``deployment_aware`` mode it is consumed into ``reasoning``.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    tokens = tokens or ControlTokens()
    think = think_tokens or ThinkTokens()
    mode = normalize_mode(mode)

    reasoning: str | None = None
    had_think = False
    try:
        pos = _skip_ws(text, 0)
        if text.startswith(think.open, pos):
            if mode == STRICT:
                raise _Fail(pos, "reasoning block not permitted in strict mode")
            body = pos + len(think.open)
            close = text.find(think.close, body)
            if close < 0:
                raise _Fail(pos, "unterminated reasoning block")
            reasoning = text[body:close].strip()
            had_think = True
            pos = _skip_ws(text, close + len(think.close))

        call_at = text.find(tokens.call_start, pos)
        if call_at < 0:
            stray = text.find(tokens.call_end, pos)
            if stray >= 0:
                raise _Fail(stray, "call end without call start")
            return ParsedOutput(NO_CALL, reasoning=reasoning, had_think_block=had_think)
        if text[pos:call_at].strip():
            raise _Fail(pos, "unexpected text before call")

        call = _parse_call(text, call_at, tokens, think)
        return ParsedOutput(PARSED_CALL, call=call, reasoning=reasoning, had_think_block=had_think)
    except _Fail as fail:
        return ParsedOutput(
            PARSE_FAILURE,
            reasoning=reasoning,
            had_think_block=had_think,
            failure_detail=FailureDetail(fail.position, fail.reason),
        )


def _parse_call(text: str, call_at: int, tokens: ControlTokens, think: ThinkTokens) -> ToolCall:
    reserved = tokens.all() + (think.open, think.close)
    name_start = call_at + len(tokens.call_start)
    brace = text.find("{", name_start)
    if brace < 0:
        raise _Fail(name_start, "expected argument object after tool name")
    raw_name = text[name_start:brace]
    for tok in reserved:
        hit = raw_name.find(tok)
        if hit >= 0:
            raise _Fail(name_start + hit, f"unexpected {tok} in call header")
    name = raw_name.strip()
    if not name:
        raise _Fail(name_start, "empty tool name")
    if INVALID_NAME_CHARS.search(name):
        raise _Fail(name_start, "invalid tool name")

    scanner = _ArgumentScanner(tokens, reserved)
    rewritten, out_marks, src_marks, end = scanner.scan(text, brace)
    try:
        arguments = json.loads(
            rewritten,
            object_pairs_hook=_reject_duplicates,
            parse_constant=_reject_constant,
        )
    except json.JSONDecodeError as exc:
        raise _Fail(_map_position(exc.pos, out_marks, src_marks), f"malformed arguments: {exc.msg}") from None
    except ValueError as exc:
        raise _Fail(brace, f"malformed arguments: {exc}") from None
    except RecursionError:
        raise _Fail(brace, "malformed arguments: nesting too deep") from None
    if not isinstance(arguments, dict):
        raise _Fail(brace, "malformed arguments: expected an object")

    pos = _skip_ws(text, end)
    if not text.startswith(tokens.call_end, pos):
        if pos >= len(text):
            raise _Fail(pos, "unterminated call")
        raise _Fail(pos, "expected call end")
    pos = _skip_ws(text, pos + len(tokens.call_end))
    if pos < len(text):
        raise _Fail(pos, "trailing content after call")
    return ToolCall(tool_name=name, arguments=arguments)
