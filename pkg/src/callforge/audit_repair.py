"""Corpus audit and the repair transforms: enum normalization and tool pruning."""

from __future__ import annotations

import dataclasses
import functools
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .chat_serializer import SerializationError, SerializerConfig, TokenCounter, serialize
from .io import InputError, parallel_map
from .schema_core import (
    LEGACY,
    NONE_IS_VALID,
    EmptyQueryError,
    Sample,
    SchemaError,
    ToolCall,
    ToolSchema,
    normalize_text,
    validate_call,
)


class RepairConfigError(ValueError):
    pass


@dataclass
class AuditReport:
    total_samples: int = 0
    empty_queries: int = 0
    unreadable_rows: list[dict[str, Any]] = field(default_factory=list)
    enum_violations_legacy: int = 0
    enum_violations_fixed: int = 0
    samples_restored_by_fix: int = 0
    invalid_legacy: int = 0
    invalid_fixed: int = 0
    unknown_tool_samples: int = 0
    silent_negatives: int = 0
    duplicate_tool_groups: list[list[str]] = field(default_factory=list)
    dead_tools: list[str] = field(default_factory=list)
    dead_tools_fixed: list[str] = field(default_factory=list)
    revived_tools: list[str] = field(default_factory=list)
    oversized_prompts: int = 0
    token_budget: int = 0

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def detect_duplicates(inventory: Sequence[ToolSchema]) -> list[list[str]]:
    """Group tools sharing a parameter signature or a normalized name.

    Grouping is the transitive closure of the pairwise relation; only groups
    with two or more members are returned, each sorted, ordered by first name.
    Tools without parameters are matched by name only.
    """
    parent = list(range(len(inventory)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    by_key: dict[tuple, int] = {}
    for i, tool in enumerate(inventory):
        keys = [("name", "".join(ch for ch in tool.name.lower() if ch.isalnum()))]
        if tool.parameters:
            sig = tuple(sorted((p.name, p.value_type, p.required) for p in tool.parameters))
            keys.append(("sig", sig))
        for key in keys:
            if key in by_key:
                union(by_key[key], i)
            else:
                by_key[key] = i

    groups: dict[int, list[str]] = {}
    for i, tool in enumerate(inventory):
        groups.setdefault(find(i), []).append(tool.name)
    return sorted((sorted(g) for g in groups.values() if len(g) > 1), key=lambda g: g[0])


@dataclass(frozen=True)
class _RowAudit:
    status: str  # "ok", "empty", "unreadable"
    reason: str = ""
    positive: bool = False
    tool: str | None = None
    enum_legacy: bool = False
    enum_fixed: bool = False
    valid_legacy: bool = True
    valid_fixed: bool = True
    unknown_tool: bool = False
    silent: bool = False
    oversized: bool = False


def _audit_row(
    row: Any,
    inventory: Sequence[ToolSchema],
    index: Mapping[str, ToolSchema],
    budget: int,
    counter: TokenCounter | None,
    config: SerializerConfig,
) -> _RowAudit:
    if isinstance(row, InputError):
        return _RowAudit("unreadable", str(row))
    if isinstance(row, Sample):
        sample = row
    else:
        try:
            sample = Sample.from_dict(row)
        except EmptyQueryError:
            return _RowAudit("empty")
        except (SchemaError, TypeError, AttributeError, ValueError) as exc:
            return _RowAudit("unreadable", str(exc))

    try:
        oversized = serialize(sample, inventory, config, counter, check_target=False).token_count > budget
    except SerializationError:
        oversized = False
    if sample.target is None:
        silent = not (sample.response or "").strip()
        return _RowAudit("ok", silent=silent, oversized=oversized)

    legacy = validate_call(sample.target, index, LEGACY)
    fixed = validate_call(sample.target, index, NONE_IS_VALID)
    return _RowAudit(
        "ok",
        positive=True,
        tool=sample.target.tool_name,
        enum_legacy="enum_violation" in legacy.kinds(),
        enum_fixed="enum_violation" in fixed.kinds(),
        valid_legacy=legacy.valid,
        valid_fixed=fixed.valid,
        unknown_tool="unknown_tool" in legacy.kinds(),
        oversized=oversized,
    )


def audit(
    samples: Iterable[Any],
    inventory: Sequence[ToolSchema],
    token_budget: int = 2048,
    counter: TokenCounter | None = None,
    serializer_config: SerializerConfig | None = None,
    jobs: int = 1,
) -> AuditReport:
    """Audit a corpus against an inventory.

    ``samples`` may hold :class:`Sample` objects, raw row mappings, or
    :class:`InputError` placeholders for lines that failed to decode. Bad rows
    are counted and listed, never fatal.
    """
    if not inventory:
        raise ValueError("inventory must be non-empty")
    rows = list(samples)
    index = {t.name: t for t in inventory}
    worker = functools.partial(
        _audit_row,
        inventory=list(inventory),
        index=index,
        budget=token_budget,
        counter=counter,
        config=serializer_config or SerializerConfig(),
    )
    results = parallel_map(worker, rows, jobs)

    report = AuditReport(total_samples=len(rows), token_budget=token_budget)
    alive_legacy: Counter[str] = Counter()
    alive_fixed: Counter[str] = Counter()
    for i, r in enumerate(results):
        if r.status == "empty":
            report.empty_queries += 1
            continue
        if r.status == "unreadable":
            report.unreadable_rows.append({"index": i, "reason": r.reason})
            continue
        report.oversized_prompts += r.oversized
        report.silent_negatives += r.silent
        if not r.positive:
            continue
        report.enum_violations_legacy += r.enum_legacy
        report.enum_violations_fixed += r.enum_fixed
        report.invalid_legacy += not r.valid_legacy
        report.invalid_fixed += not r.valid_fixed
        report.unknown_tool_samples += r.unknown_tool
        if r.valid_legacy:
            alive_legacy[r.tool] += 1
        if r.valid_fixed:
            alive_fixed[r.tool] += 1

    report.samples_restored_by_fix = report.enum_violations_legacy - report.enum_violations_fixed
    names = [t.name for t in inventory]
    report.dead_tools = [n for n in names if alive_legacy[n] == 0]
    report.dead_tools_fixed = [n for n in names if alive_fixed[n] == 0]
    report.revived_tools = [n for n in report.dead_tools if alive_fixed[n] > 0]
    report.duplicate_tool_groups = detect_duplicates(inventory)
    return report


def format_audit(report: AuditReport) -> str:
    lines = [
        "Corpus audit",
        f"  total samples            {report.total_samples}",
        f"  empty queries            {report.empty_queries}",
        f"  unreadable rows          {len(report.unreadable_rows)}",
        f"  silent negatives         {report.silent_negatives}",
        f"  enum violations (legacy) {report.enum_violations_legacy}",
        f"  enum violations (fixed)  {report.enum_violations_fixed}",
        f"  restored by null fix     {report.samples_restored_by_fix}",
        f"  invalid (legacy / fixed) {report.invalid_legacy} / {report.invalid_fixed}",
        f"  unknown-tool samples     {report.unknown_tool_samples}",
        f"  prompts over {report.token_budget} tokens {report.oversized_prompts}",
        f"  dead tools (legacy)      {', '.join(report.dead_tools) or '-'}",
        f"  dead tools (fixed)       {', '.join(report.dead_tools_fixed) or '-'}",
        f"  revived by null fix      {', '.join(report.revived_tools) or '-'}",
        "  duplicate candidates:",
    ]
    lines += [f"    {{{', '.join(g)}}}" for g in report.duplicate_tool_groups] or ["    -"]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class NormalizationMap:
    """Operator-written ``{tool: {param: {variant: canonical}}}`` table."""

    entries: Mapping[str, Mapping[str, Mapping[str, str]]]

    def __post_init__(self) -> None:
        table: dict[str, dict[str, dict[str, str]]] = {}
        for tool, params in self.entries.items():
            for param, variants in params.items():
                canon = set(variants.values())
                slot: dict[str, str] = {}
                for variant, value in variants.items():
                    key = normalize_text(variant)
                    if key in slot and slot[key] != value:
                        raise RepairConfigError(f"{tool}.{param}: variant {variant!r} maps to two values")
                    if key in canon and key != value:
                        raise RepairConfigError(f"{tool}.{param}: canonical value {key!r} is remapped")
                    slot[key] = value
                table.setdefault(tool, {})[param] = slot
        object.__setattr__(self, "_table", table)

    def lookup(self, tool: str, param: str, value: str) -> str | None:
        return self._table.get(tool, {}).get(param, {}).get(normalize_text(value))

    def check_against(self, inventory: Sequence[ToolSchema]) -> None:
        index = {t.name: t for t in inventory}
        for tool, params in self._table.items():
            schema = index.get(tool)
            if schema is None:
                raise RepairConfigError(f"normalization map names unknown tool {tool!r}")
            for param, slot in params.items():
                spec = schema.parameter(param)
                if spec is None or spec.enum_values is None:
                    raise RepairConfigError(f"{tool}.{param} is not an enum parameter")
                bad = set(slot.values()) - set(spec.enum_values)
                if bad:
                    raise RepairConfigError(f"{tool}.{param}: canonical values {sorted(bad)} not in enum")

    @classmethod
    def from_file(cls, path: str | Path) -> "NormalizationMap":
        with open(path, encoding="utf-8") as f:
            return cls(json.load(f))


def normalize_sample(sample: Sample, nmap: NormalizationMap) -> Sample:
    if sample.target is None:
        return sample
    tool = sample.target.tool_name
    args = dict(sample.target.arguments)
    changed = False
    for key, value in args.items():
        if isinstance(value, str):
            canonical = nmap.lookup(tool, key, value)
            if canonical is not None and canonical != value:
                args[key] = canonical
                changed = True
    if not changed:
        return sample
    return dataclasses.replace(sample, target=ToolCall(tool, args))


@dataclass(frozen=True)
class MergeRule:
    target: str
    param_renames: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class PrunePlan:
    remove: frozenset[str] = frozenset()
    merge: Mapping[str, MergeRule] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "remove", frozenset(self.remove))
        clash = self.remove & set(self.merge)
        if clash:
            raise RepairConfigError(f"tools both removed and merged: {sorted(clash)}")
        for alias, rule in self.merge.items():
            if rule.target in self.remove:
                raise RepairConfigError(f"merge target {rule.target!r} is scheduled for removal")
            if rule.target in self.merge:
                raise RepairConfigError(f"merge target {rule.target!r} is itself an alias")
            if rule.target == alias:
                raise RepairConfigError(f"tool {alias!r} merged into itself")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PrunePlan":
        merge = {}
        for alias, rule in (data.get("merge") or {}).items():
            if isinstance(rule, str):
                rule = {"target": rule}
            merge[alias] = MergeRule(rule["target"], dict(rule.get("param_renames") or {}))
        return cls(frozenset(data.get("remove") or ()), merge)

    @classmethod
    def from_file(cls, path: str | Path) -> "PrunePlan":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict[str, Any]:
        return {
            "remove": sorted(self.remove),
            "merge": {
                a: {"target": r.target, "param_renames": dict(r.param_renames)} for a, r in sorted(self.merge.items())
            },
        }


@dataclass(frozen=True)
class PruneResult:
    samples: list[Sample]
    inventory: list[ToolSchema]
    dropped: int
    rewritten: int


def apply_prune(samples: Sequence[Sample], inventory: Sequence[ToolSchema], plan: PrunePlan) -> PruneResult:
    names = {t.name for t in inventory}
    for name in sorted(plan.remove | set(plan.merge)):
        if name not in names:
            raise RepairConfigError(f"prune plan names unknown tool {name!r}")
    for alias, rule in plan.merge.items():
        if rule.target not in names:
            raise RepairConfigError(f"merge target {rule.target!r} for {alias!r} is not in the inventory")

    gone = plan.remove | set(plan.merge)
    kept_tools = [t for t in inventory if t.name not in gone]
    out: list[Sample] = []
    dropped = rewritten = 0
    for s in samples:
        if s.target is None:
            out.append(s)
            continue
        name = s.target.tool_name
        if name in plan.remove:
            dropped += 1
            continue
        rule = plan.merge.get(name)
        if rule is not None:
            args = {rule.param_renames.get(k, k): v for k, v in s.target.arguments.items()}
            s = dataclasses.replace(s, target=ToolCall(rule.target, args))
            rewritten += 1
        out.append(s)
    return PruneResult(out, kept_tools, dropped, rewritten)
