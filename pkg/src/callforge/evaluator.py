"""Scoring parsed outputs against gold samples, aggregation and report rendering."""

from __future__ import annotations

import json
import unicodedata
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Iterable, Mapping, Sequence

from .call_parser import NO_CALL, PARSE_FAILURE, PARSED_CALL, ParsedOutput, normalize_mode, parse_output
from .chat_serializer import SerializerConfig
from .schema_core import Sample

# Error classes, in report order.
CLS_PARSE_FAILURE = "ParseFailure"
CLS_HALLUCINATION = "ToolHallucination"
CLS_WRONG_FUNCTION = "WrongFunction"
CLS_ARGUMENT_MISMATCH = "ArgumentMismatch"
CLS_CORRECT = "Correct"
CLS_MISSED_CALL = "MissedCall"
ERROR_CLASSES = (
    CLS_PARSE_FAILURE,
    CLS_HALLUCINATION,
    CLS_WRONG_FUNCTION,
    CLS_ARGUMENT_MISMATCH,
    CLS_CORRECT,
    CLS_MISSED_CALL,
)
ERROR_LABELS = {
    CLS_PARSE_FAILURE: "Parse Failure",
    CLS_HALLUCINATION: "Tool Hallucination",
    CLS_WRONG_FUNCTION: "Wrong Function",
    CLS_ARGUMENT_MISMATCH: "Argument Mismatch",
    CLS_CORRECT: "Correct",
    CLS_MISSED_CALL: "Missed Call",
}

# Row order of the per-dialect table.
DIALECTS_TABLE_ORDER = ("MSA", "Gulf", "Egyptian", "Levantine", "Maghrebi")

HALLUCINATED_CALL_ON_NEGATIVE = "call_on_negative"
HALLUCINATED_UNOFFERED_TOOL = "unoffered_tool"

METRIC_DEFINITIONS = {
    "decision_accuracy": "fraction of records where a parsed call was emitted iff requires_function; parse failures count as wrong",
    "hallucination_rate": "fraction of all records classed ToolHallucination (calls on negatives plus calls to tools not offered in the prompt)",
    "function_name_accuracy": "over positives: a parsed call naming the gold tool",
    "mean_arg_f1": "over positives with a parsed call: F1 of (key, normalized value) pairs; null-valued keys ignored",
    "think_before_call_rate": "fraction of parsed calls preceded by a reasoning block",
}


class EvaluationInputError(ValueError):
    pass


class ReportError(ValueError):
    pass


@dataclass(frozen=True)
class RecordScore:
    sample_id: str
    error_class: str
    parsed_kind: str
    name_correct: bool = False
    arg_precision: float = 0.0
    arg_recall: float = 0.0
    arg_f1: float = 0.0
    arg_key_f1: float = 0.0
    arg_exact: bool = False
    full_match: bool = False
    had_think_block: bool = False
    hallucination_kind: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RecordScore":
        return cls(**{f.name: data[f.name] for f in fields(cls) if f.name in data})


def normalize_value(value: Any) -> Any:
    """Hashable comparison form: NFC + trim for strings, numbers compared numerically."""
    if value is None:
        return ("null",)
    if isinstance(value, bool):
        return ("bool", value)
    if isinstance(value, int):
        return ("num", value)
    if isinstance(value, float):
        return ("num", int(value) if value.is_integer() else value)
    if isinstance(value, str):
        return ("str", unicodedata.normalize("NFC", value).strip())
    if isinstance(value, list):
        return ("list", tuple(normalize_value(v) for v in value))
    if isinstance(value, dict):
        return ("obj", tuple(sorted((unicodedata.normalize("NFC", str(k)), normalize_value(v)) for k, v in value.items())))
    return ("other", repr(value))


def _pairs(arguments: Mapping[str, Any]) -> set[tuple[str, Any]]:
    return {(unicodedata.normalize("NFC", k), normalize_value(v)) for k, v in arguments.items() if v is not None}


def _prf(predicted: set, gold: set) -> tuple[float, float, float]:
    hit = len(predicted & gold)
    precision = hit / len(predicted) if predicted else (1.0 if not gold else 0.0)
    recall = hit / len(gold) if gold else (1.0 if not predicted else 0.0)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def argument_scores(predicted: Mapping[str, Any], gold: Mapping[str, Any]) -> tuple[float, float, float, float, bool]:
    """Return ``(precision, recall, f1, key_f1, exact)`` over argument pairs."""
    p, g = _pairs(predicted), _pairs(gold)
    precision, recall, f1 = _prf(p, g)
    _, _, key_f1 = _prf({k for k, _ in p}, {k for k, _ in g})
    return precision, recall, f1, key_f1, p == g


def score_record(sample: Sample, parsed: ParsedOutput, offered_tools: Iterable[str]) -> RecordScore:
    """Classify one prediction.

    Precedence: parse failure, call on a negative, missed call, correct
    abstention, tool not offered, wrong tool, argument mismatch, correct.
    """
    base = dict(sample_id=sample.id, parsed_kind=parsed.kind, had_think_block=parsed.had_think_block)
    if parsed.kind == PARSE_FAILURE:
        return RecordScore(error_class=CLS_PARSE_FAILURE, **base)
    called = parsed.kind == PARSED_CALL
    if not sample.requires_function:
        if called:
            return RecordScore(error_class=CLS_HALLUCINATION, hallucination_kind=HALLUCINATED_CALL_ON_NEGATIVE, **base)
        return RecordScore(error_class=CLS_CORRECT, **base)
    if not called:
        return RecordScore(error_class=CLS_MISSED_CALL, **base)

    gold = sample.target
    call = parsed.call
    precision, recall, f1, key_f1, exact = argument_scores(call.arguments, gold.arguments)
    name_ok = call.tool_name == gold.tool_name
    scored = dict(
        name_correct=name_ok,
        arg_precision=precision,
        arg_recall=recall,
        arg_f1=f1,
        arg_key_f1=key_f1,
        arg_exact=exact,
        full_match=name_ok and exact,
    )
    if call.tool_name not in set(offered_tools):
        return RecordScore(error_class=CLS_HALLUCINATION, hallucination_kind=HALLUCINATED_UNOFFERED_TOOL, **base, **scored)
    if not name_ok:
        return RecordScore(error_class=CLS_WRONG_FUNCTION, **base, **scored)
    if not exact:
        return RecordScore(error_class=CLS_ARGUMENT_MISMATCH, **base, **scored)
    return RecordScore(error_class=CLS_CORRECT, **base, **scored)


@dataclass
class MetricsReport:
    n: int
    n_positive: int
    n_negative: int
    parse_failure_rate: float | None
    format_validity: float | None
    tool_call_rate: float | None
    function_name_accuracy: float | None
    full_call_match: float | None
    mean_arg_f1: float | None
    mean_arg_key_f1: float | None
    arg_exact_rate: float | None
    hallucination_rate: float | None
    hallucination_on_negatives_rate: float | None
    hallucination_unoffered_rate: float | None
    abstention_accuracy: float | None
    think_before_call_rate: float | None
    decision_accuracy: float | None
    error_distribution: dict[str, float]
    by_dialect: dict[str, dict[str, Any]]
    by_domain: dict[str, dict[str, Any]]
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MetricsReport":
        return cls(**{f.name: data[f.name] for f in fields(cls) if f.name in data})


def _mean(values: Sequence[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _rate(flags: Sequence[bool]) -> float | None:
    return sum(1 for f in flags if f) / len(flags) if flags else None


def _groups(pairs: list[tuple[Sample, RecordScore]], attr: str) -> dict[str, dict[str, Any]]:
    buckets: dict[str, list[tuple[Sample, RecordScore]]] = {}
    for s, r in pairs:
        buckets.setdefault(getattr(s, attr), []).append((s, r))
    out = {}
    for key in sorted(buckets):
        rows = buckets[key]
        pos = [r for s, r in rows if s.requires_function]
        out[key] = {
            "n": len(rows),
            "n_positive": len(pos),
            "function_name_accuracy": _rate([r.name_correct for r in pos]),
        }
    return out


def aggregate(scores: Sequence[RecordScore], samples: Sequence[Sample], metadata: Mapping[str, Any] | None = None) -> MetricsReport:
    by_id: dict[str, Sample] = {}
    for s in samples:
        if s.id in by_id:
            raise EvaluationInputError(f"duplicate sample id {s.id!r}")
        by_id[s.id] = s
    seen: set[str] = set()
    pairs: list[tuple[Sample, RecordScore]] = []
    for r in scores:
        if r.sample_id in seen:
            raise EvaluationInputError(f"duplicate score for id {r.sample_id!r}")
        if r.sample_id not in by_id:
            raise EvaluationInputError(f"score for unknown id {r.sample_id!r}")
        seen.add(r.sample_id)
        pairs.append((by_id[r.sample_id], r))
    if len(seen) != len(by_id):
        missing = next(s.id for s in samples if s.id not in seen)
        raise EvaluationInputError(f"no score for id {missing!r}")

    n = len(pairs)
    records = [r for _, r in pairs]
    pos = [r for s, r in pairs if s.requires_function]
    neg = [r for s, r in pairs if not s.requires_function]
    calls = [r for r in records if r.parsed_kind == PARSED_CALL]
    pos_calls = [r for r in pos if r.parsed_kind == PARSED_CALL]

    parse_fail = _rate([r.parsed_kind == PARSE_FAILURE for r in records])
    counts = {c: 0 for c in ERROR_CLASSES}
    for r in records:
        counts[r.error_class] += 1

    decision = [
        (s.requires_function and r.parsed_kind == PARSED_CALL) or (not s.requires_function and r.parsed_kind == NO_CALL)
        for s, r in pairs
    ]
    meta = {"definitions": dict(METRIC_DEFINITIONS)}
    meta.update(metadata or {})
    return MetricsReport(
        n=n,
        n_positive=len(pos),
        n_negative=len(neg),
        parse_failure_rate=parse_fail,
        format_validity=None if parse_fail is None else 1.0 - parse_fail,
        tool_call_rate=_rate([r.parsed_kind == PARSED_CALL for r in records]),
        function_name_accuracy=_rate([r.name_correct for r in pos]),
        full_call_match=_rate([r.full_match for r in pos]),
        mean_arg_f1=_mean([r.arg_f1 for r in pos_calls]),
        mean_arg_key_f1=_mean([r.arg_key_f1 for r in pos_calls]),
        arg_exact_rate=_rate([r.arg_exact for r in pos_calls]),
        hallucination_rate=_rate([r.error_class == CLS_HALLUCINATION for r in records]),
        hallucination_on_negatives_rate=_rate([r.hallucination_kind == HALLUCINATED_CALL_ON_NEGATIVE for r in records]),
        hallucination_unoffered_rate=_rate([r.hallucination_kind == HALLUCINATED_UNOFFERED_TOOL for r in records]),
        abstention_accuracy=_rate([r.error_class == CLS_CORRECT for r in neg]),
        think_before_call_rate=_rate([r.had_think_block for r in calls]),
        decision_accuracy=_rate(decision),
        error_distribution={c: counts[c] / n for c in ERROR_CLASSES} if n else {c: 0.0 for c in ERROR_CLASSES},
        by_dialect=_groups(pairs, "dialect"),
        by_domain=_groups(pairs, "domain"),
        metadata=meta,
    )


def evaluate(
    samples: Sequence[Sample],
    offered: Mapping[str, Sequence[str]],
    outputs: Mapping[str, str],
    mode: str = "strict",
    config: SerializerConfig | None = None,
) -> tuple[list[ParsedOutput], list[RecordScore], MetricsReport]:
    """Parse every raw output, score it and aggregate.

    ``offered`` and ``outputs`` are keyed by sample id; a sample without an
    output raises :class:`EvaluationInputError` naming the first such id.
    """
    config = config or SerializerConfig()
    mode = normalize_mode(mode)
    parsed, scores = [], []
    for s in samples:
        if s.id not in outputs:
            raise EvaluationInputError(f"missing prediction for id {s.id!r}")
        if s.id not in offered:
            raise EvaluationInputError(f"no offered tools recorded for id {s.id!r}")
        p = parse_output(outputs[s.id], config.control_tokens, mode, config.think_tokens)
        parsed.append(p)
        scores.append(score_record(s, p, offered[s.id]))
    return parsed, scores, aggregate(scores, samples, metadata={"mode": mode})


SUMMARY_ROWS = (
    ("Parse failure rate", "parse_failure_rate"),
    ("Format validity", "format_validity"),
    ("Tool call rate", "tool_call_rate"),
    ("Function name accuracy", "function_name_accuracy"),
    ("Full tool-call match", "full_call_match"),
    ("Argument F1", "mean_arg_f1"),
    ("Argument key F1", "mean_arg_key_f1"),
    ("Argument exact match", "arg_exact_rate"),
    ("Hallucination rate", "hallucination_rate"),
    ("  calls on negatives", "hallucination_on_negatives_rate"),
    ("  tools not offered", "hallucination_unoffered_rate"),
    ("Abstention accuracy", "abstention_accuracy"),
    ("Think-before-call rate", "think_before_call_rate"),
    ("Decision accuracy", "decision_accuracy"),
)


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def render_report(report: MetricsReport, fmt: str = "markdown") -> str:
    if report.n == 0:
        raise ReportError("refusing to render a report over zero records")
    if fmt == "json":
        return json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n"
    if fmt != "markdown":
        raise ValueError(f"unknown report format {fmt!r}")

    mode = report.metadata.get("mode")
    lines = ["# Evaluation report", ""]
    header = f"n = {report.n} ({report.n_positive} positive, {report.n_negative} negative)"
    lines += [header + (f", parse mode `{mode}`" if mode else ""), ""]

    lines += ["## Summary", "", "| Metric | Value |", "|---|---|"]
    lines += [f"| {label} | {_fmt(getattr(report, attr))} |" for label, attr in SUMMARY_ROWS]

    lines += ["", "## Function Name Accuracy by Dialect", "", "| Dialect | n | Positives | Function Name Accuracy |", "|---|---|---|---|"]
    order = [d for d in DIALECTS_TABLE_ORDER if d in report.by_dialect]
    order += sorted(d for d in report.by_dialect if d not in DIALECTS_TABLE_ORDER)
    for d in order:
        g = report.by_dialect[d]
        lines.append(f"| {d} | {g['n']} | {g['n_positive']} | {_fmt(g['function_name_accuracy'])} |")

    lines += ["", "## Function Name Accuracy by Domain", "", "| Domain | n | Positives | Function Name Accuracy |", "|---|---|---|---|"]
    for d, g in report.by_domain.items():
        lines.append(f"| {d} | {g['n']} | {g['n_positive']} | {_fmt(g['function_name_accuracy'])} |")

    lines += ["", "## Error Distribution", "", "| Error Type | Fraction | % |", "|---|---|---|"]
    for c in ERROR_CLASSES:
        v = report.error_distribution.get(c, 0.0)
        lines.append(f"| {ERROR_LABELS[c]} | {v:.4f} | {100 * v:.2f} |")
    return "\n".join(lines) + "\n"
