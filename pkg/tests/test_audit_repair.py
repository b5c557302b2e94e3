import dataclasses
import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from callforge import fixtures
from callforge.audit_repair import (
    NormalizationMap,
    PrunePlan,
    RepairConfigError,
    apply_prune,
    audit,
    detect_duplicates,
    format_audit,
    normalize_sample,
)
from callforge.io import InputError
from callforge.schema_core import ParameterSpec, Sample, ToolCall, ToolSchema


def _rows_to_params(tool):
    return [{"name": p.name, "type": p.value_type, "enum": list(p.enum_values) if p.enum_values else None, "required": p.required} for p in tool.parameters]


def test_ten_sample_corpus_counts():
    rows = fixtures.make_corpus(10, seed=3, negative_fraction=0.2, null_enum_count=3)
    report = audit(rows, fixtures.pruned_inventory())
    assert (report.enum_violations_legacy, report.enum_violations_fixed, report.samples_restored_by_fix) == (3, 0, 3)

    # brute-force re-validation under both rules
    index = {t.name: _rows_to_params(t) for t in fixtures.pruned_inventory()}
    bad = {rule: sum(1 for r in rows if r["target"] and not oracles.enum_valid(r["target"]["arguments"], index[r["target"]["tool_name"]], rule)) for rule in ("legacy", "none_is_valid")}
    assert bad == {"legacy": 3, "none_is_valid": 0}


def test_empty_corpus_all_counts_zero():
    report = audit([], fixtures.pruned_inventory())
    counts = {k: v for k, v in report.to_dict().items() if isinstance(v, int) and k != "token_budget"}
    assert counts and all(v == 0 for v in counts.values())
    assert report.unreadable_rows == []


def test_audit_requires_inventory():
    with pytest.raises(ValueError):
        audit([], [])


def test_unreadable_and_empty_rows_are_counted_not_fatal():
    rows = fixtures.make_corpus(6, seed=1)
    rows[1] = {"id": "x"}  # missing fields
    rows[2] = dict(rows[2], query="")
    report = audit(rows + [InputError("line 9: bad json")], fixtures.pruned_inventory())
    assert report.total_samples == 7
    assert report.empty_queries == 1
    assert [r["index"] for r in report.unreadable_rows] == [1, 6]


def test_silent_negatives_flagged():
    s = Sample("n1", "شكراً جزيلاً", "MSA", "travel", False, response="  ")
    t = Sample("n2", "شكراً جزيلاً", "MSA", "travel", False, response="العفو")
    u = Sample("n3", "شكراً جزيلاً", "MSA", "travel", False)
    assert audit([s, t, u], fixtures.pruned_inventory()).silent_negatives == 2


def test_dead_tools_and_revival():
    dead = ["check_balance", "calculate_zakat"]
    rows = fixtures.make_corpus(600, seed=2, dead_tools=dead, null_enum_count=50)
    report = audit(rows, fixtures.pruned_inventory())
    targeted = {r["target"]["tool_name"] for r in rows if r["target"]}
    assert set(dead) <= targeted
    assert set(dead) <= set(report.dead_tools)
    assert set(dead) <= set(report.revived_tools)
    assert set(report.dead_tools) <= {t.name for t in fixtures.pruned_inventory()}
    assert report.samples_restored_by_fix == report.enum_violations_legacy - report.enum_violations_fixed >= 0


def test_oversized_prompts_counted_against_full_inventory():
    rows = fixtures.make_corpus(20, seed=4)
    assert audit(rows, fixtures.pruned_inventory(), token_budget=2048).oversized_prompts == 20
    assert audit(rows, fixtures.pruned_inventory(), token_budget=10**6).oversized_prompts == 0


def test_audit_invariant_under_reordering_and_jobs():
    rows = fixtures.make_corpus(300, seed=5, null_enum_count=40, variant_count=10, empty_queries=3)
    base = audit(rows, fixtures.raw_inventory()).to_dict()
    shuffled = rows[:]
    random.Random(0).shuffle(shuffled)
    other = audit(shuffled, fixtures.raw_inventory(), jobs=2).to_dict()
    base.pop("unreadable_rows"), other.pop("unreadable_rows")
    assert base == other


def test_format_audit_mentions_counts():
    text = format_audit(audit(fixtures.make_corpus(10, seed=3, null_enum_count=3), fixtures.pruned_inventory()))
    assert "restored by null fix     3" in text


def test_duplicate_groups_on_raw_inventory():
    groups = detect_duplicates(fixtures.raw_inventory())
    assert ["convert_currency", "currency_convert"] in groups
    assert groups == oracles.duplicate_groups([t.to_dict() for t in fixtures.raw_inventory()])


def test_duplicate_edge_cases():
    assert detect_duplicates(fixtures.pruned_inventory()) == []
    assert detect_duplicates(fixtures.pruned_inventory()[:1]) == []
    assert detect_duplicates([]) == []


def test_duplicate_by_name_only():
    a = ToolSchema("Get-Time", "", (ParameterSpec("tz", "string"),))
    b = ToolSchema("gettime", "", (ParameterSpec("zone", "integer"),))
    assert detect_duplicates([a, b]) == [["Get-Time", "gettime"]]


params = st.lists(
    st.tuples(st.sampled_from(["a", "b", "c"]), st.sampled_from(["string", "integer"]), st.booleans()),
    max_size=3,
    unique_by=lambda t: t[0],
)


@given(st.lists(st.tuples(st.sampled_from(["x", "X_", "y", "y1", "z", "w", "x-"]), params), max_size=7, unique_by=lambda t: t[0]))
def test_duplicates_match_pairwise_oracle(spec):
    tools = [ToolSchema(name, "", tuple(ParameterSpec(n, t, required=r) for n, t, r in ps)) for name, ps in spec]
    assert detect_duplicates(tools) == oracles.duplicate_groups([t.to_dict() for t in tools])


NMAP = NormalizationMap(fixtures.default_normalization_map())


def _weather(unit):
    return Sample("s1", "الطقس في دبي", "Gulf", "weather", True, ToolCall("get_weather", {"city": "دبي", "unit": unit}))


def test_normalize_variant_to_canonical():
    assert normalize_sample(_weather("سيلزيوس"), NMAP).target.arguments == {"city": "دبي", "unit": "celsius"}


def test_normalize_identity_cases():
    s = _weather("celsius")
    assert normalize_sample(s, NMAP) is s
    neg = Sample("n", "مرحبا", "MSA", "travel", False)
    assert normalize_sample(neg, NMAP) is neg


def test_normalize_keeps_other_fields():
    s = dataclasses.replace(_weather("F"), timestamp="2025-05-05T08:00:00+03:00", reasoning="تفكير")
    out = normalize_sample(s, NMAP)
    assert dataclasses.replace(out, target=s.target) == s


def test_normalization_map_validation():
    with pytest.raises(RepairConfigError):
        NormalizationMap({"get_weather": {"unit": {"C": "celsius", "C ": "fahrenheit"}}})
    with pytest.raises(RepairConfigError):
        NormalizationMap({"get_weather": {"unit": {"celsius": "fahrenheit", "x": "celsius"}}})
    with pytest.raises(RepairConfigError):
        NormalizationMap({"get_weather": {"unit": {"C": "kelvin"}}}).check_against(fixtures.pruned_inventory())
    with pytest.raises(RepairConfigError):
        NormalizationMap({"get_weather": {"city": {"x": "y"}}}).check_against(fixtures.pruned_inventory())
    NMAP.check_against(fixtures.raw_inventory())


@given(st.sampled_from([v for vs in fixtures.VARIANTS.values() for v in vs] + ["celsius", "kelvin", None]))
def test_normalize_idempotent(unit):
    once = normalize_sample(_weather(unit), NMAP)
    assert normalize_sample(once, NMAP) == once


PLAN = PrunePlan.from_dict(fixtures.default_prune_plan())


def test_prune_36_to_27():
    result = apply_prune([], fixtures.raw_inventory(), PLAN)
    assert len(fixtures.raw_inventory()) == 36
    assert len(PLAN.remove) == 7 and len(PLAN.merge) == 2
    assert [t.name for t in result.inventory] == [t.name for t in fixtures.pruned_inventory()]


def test_empty_plan_is_identity():
    rows = [Sample.from_dict(r) for r in fixtures.make_corpus(30, seed=6, inventory=fixtures.raw_inventory())]
    result = apply_prune(rows, fixtures.raw_inventory(), PrunePlan())
    assert result.samples == rows and result.inventory == fixtures.raw_inventory()
    assert (result.dropped, result.rewritten) == (0, 0)


def test_alias_rewrite_with_renames():
    inv = [
        ToolSchema("convert_currency", "", (ParameterSpec("amount", "number", required=True), ParameterSpec("to", "string"))),
        ToolSchema("fx", "", (ParameterSpec("value", "number", required=True), ParameterSpec("to", "string"))),
    ]
    plan = PrunePlan.from_dict({"merge": {"fx": {"target": "convert_currency", "param_renames": {"value": "amount"}}}})
    s = Sample("a", "حوّل ١٠٠ ريال", "Gulf", "banking", True, ToolCall("fx", {"value": 100, "to": "USD"}))
    result = apply_prune([s], inv, plan)
    assert result.samples[0].target == ToolCall("convert_currency", {"amount": 100, "to": "USD"})
    assert [t.name for t in result.inventory] == ["convert_currency"]
    assert result.rewritten == 1


def test_prune_config_errors():
    inv = fixtures.raw_inventory()
    with pytest.raises(RepairConfigError):
        PrunePlan.from_dict({"remove": ["a"], "merge": {"a": "b"}})
    with pytest.raises(RepairConfigError):
        PrunePlan.from_dict({"remove": ["b"], "merge": {"a": "b"}})
    with pytest.raises(RepairConfigError):
        apply_prune([], inv, PrunePlan.from_dict({"merge": {"currency_convert": "no_such_tool"}}))
    with pytest.raises(RepairConfigError):
        apply_prune([], inv, PrunePlan.from_dict({"remove": ["ghost"]}))


def test_prune_plan_file_round_trip(tmp_path):
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(PLAN.to_dict()), encoding="utf-8")
    assert PrunePlan.from_file(path) == PLAN


@given(st.integers(0, 2**16), st.integers(0, 60))
def test_prune_invariants(seed, n):
    rows = [Sample.from_dict(r) for r in fixtures.make_corpus(n, seed=seed, inventory=fixtures.raw_inventory())]
    result = apply_prune(rows, fixtures.raw_inventory(), PLAN)
    names = {t.name for t in result.inventory}
    assert len(result.inventory) <= 36 and len(result.samples) <= len(rows)
    assert all(s.target is None or s.target.tool_name in names for s in result.samples)
    assert len(result.samples) + result.dropped == len(rows)
