import itertools
import json
import random
import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from callforge import fixtures
from callforge.chat_serializer import SerializerConfig, render_call
from callforge.call_parser import DEPLOYMENT_AWARE, NO_CALL, PARSE_FAILURE, PARSED_CALL, STRICT, FailureDetail, ParsedOutput
from callforge.evaluator import (
    ERROR_CLASSES,
    EvaluationInputError,
    MetricsReport,
    ReportError,
    aggregate,
    argument_scores,
    evaluate,
    normalize_value,
    render_report,
    score_record,
)
from callforge.schema_core import DIALECTS, Sample, ToolCall
from evalsets import random_eval_set

GOLD = ToolCall("get_weather", {"city": "جدة", "unit": "celsius"})
POS = Sample("p1", "الطقس في جدة", "Gulf", "weather", True, GOLD)
NEG = Sample("n1", "شكراً", "MSA", "travel", False)
OFFERED = ["get_weather", "get_forecast", "convert_currency", "get_prayer_times", "book_hotel"]


def _call(name, args):
    return ParsedOutput(PARSED_CALL, call=ToolCall(name, args))


def test_negative_no_call_is_correct_abstention():
    r = score_record(NEG, ParsedOutput(NO_CALL), OFFERED)
    assert r.error_class == "Correct"
    assert aggregate([r], [NEG]).abstention_accuracy == 1.0


def test_partial_arguments():
    r = score_record(POS, _call("get_weather", {"city": "جدة"}), OFFERED)
    assert (r.arg_precision, r.arg_recall) == (1.0, 0.5)
    assert r.arg_f1 == pytest.approx(2 / 3)
    assert r.error_class == "ArgumentMismatch"


def test_unoffered_tool_is_hallucination():
    r = score_record(POS, _call("get_weather_v2", {"city": "جدة"}), OFFERED)
    assert r.error_class == "ToolHallucination" and r.hallucination_kind == "unoffered_tool"


def test_parse_failure_wins_regardless_of_content():
    p = ParsedOutput(PARSE_FAILURE, failure_detail=FailureDetail(0, "x"))
    assert score_record(POS, p, OFFERED).error_class == "ParseFailure"
    assert score_record(NEG, p, OFFERED).error_class == "ParseFailure"


def test_call_on_negative():
    r = score_record(NEG, _call("get_weather", {}), OFFERED)
    assert r.error_class == "ToolHallucination" and r.hallucination_kind == "call_on_negative"


def test_value_normalization():
    assert normalize_value(1) == normalize_value(1.0)
    assert normalize_value(True) != normalize_value(1)
    assert normalize_value(" جدة ") == normalize_value("جدة")
    assert normalize_value("é") == normalize_value("é")
    assert argument_scores({}, {}) == (1.0, 1.0, 1.0, 1.0, True)
    assert argument_scores({"unit": None, "city": "x"}, {"city": "x"})[4]
    assert argument_scores({"a": 1}, {})[:3] == (0.0, 0.0, 0.0)


def test_exhaustive_precedence_table():
    kinds = [PARSE_FAILURE, NO_CALL, PARSED_CALL]
    names = {"gold_offered": "get_weather", "other_offered": "get_forecast", "unoffered": "ghost"}
    arg_sets = {"exact": dict(GOLD.arguments), "partial": {"city": "جدة"}, "none": {}}
    for positive, kind, name_key, args_key in itertools.product([True, False], kinds, names, arg_sets):
        sample = POS if positive else NEG
        if kind == PARSED_CALL:
            parsed = _call(names[name_key], arg_sets[args_key])
            call = parsed.call.to_dict()
        elif kind == PARSE_FAILURE:
            parsed, call = ParsedOutput(kind, failure_detail=FailureDetail(0, "x")), None
        else:
            parsed, call = ParsedOutput(kind), None
        got = score_record(sample, parsed, OFFERED).error_class
        want = oracles.classify(positive, GOLD.to_dict() if positive else None, kind, call, OFFERED)
        assert got == want, (positive, kind, name_key, args_key)


def test_all_correct_set():
    samples, offered, outputs = [], {}, {}
    rng = random.Random(0)
    for i in range(40):
        s = fixtures.random_valid_sample(rng, fixtures.pruned_inventory(), i)
        samples.append(s)
        offered[s.id] = [s.target.tool_name] if s.target else ["get_weather"]
        outputs[s.id] = render_call(s.target.tool_name, s.target.arguments, SerializerConfig()) if s.target else "لا"
    _, _, report = evaluate(samples, offered, outputs)
    assert report.parse_failure_rate == 0.0 and report.hallucination_rate == 0.0
    for key in ("format_validity", "function_name_accuracy", "full_call_match", "mean_arg_f1", "mean_arg_key_f1", "arg_exact_rate", "abstention_accuracy", "decision_accuracy"):
        assert getattr(report, key) == 1.0, key
    assert report.error_distribution["Correct"] == 1.0


def test_error_mix_distribution_exact():
    samples, offered, outputs = fixtures.error_mix_fixture(seed=0)
    _, _, report = evaluate(samples, offered, outputs, STRICT)
    assert report.n == 1000
    expected = {"ParseFailure": 0.008, "ToolHallucination": 0.247, "WrongFunction": 0.236, "ArgumentMismatch": 0.202, "Correct": 0.203, "MissedCall": 0.104}
    assert report.error_distribution == expected


def test_think_fixture_modes():
    samples, offered, outputs = fixtures.think_fixture(seed=0)
    _, _, aware = evaluate(samples, offered, outputs, DEPLOYMENT_AWARE)
    assert aware.think_before_call_rate == 1.0
    assert aware.hallucination_rate == 0.0
    assert aware.function_name_accuracy == pytest.approx(238 / 240)
    assert round(aware.function_name_accuracy, 3) == 0.992
    _, _, strict = evaluate(samples, offered, outputs, STRICT)
    assert strict.parse_failure_rate == 1.0


def test_aggregate_input_errors():
    r = score_record(POS, ParsedOutput(NO_CALL), OFFERED)
    with pytest.raises(EvaluationInputError):
        aggregate([r, r], [POS])
    with pytest.raises(EvaluationInputError):
        aggregate([r], [POS, NEG])
    with pytest.raises(EvaluationInputError):
        aggregate([score_record(NEG, ParsedOutput(NO_CALL), OFFERED)], [POS])
    with pytest.raises(EvaluationInputError, match="'n1'"):
        evaluate([POS, NEG], {"p1": OFFERED, "n1": OFFERED}, {"p1": ""})


def test_empty_report_refused():
    report = aggregate([], [])
    assert report.n == 0 and report.parse_failure_rate is None
    with pytest.raises(ReportError):
        render_report(report)


def test_markdown_tables():
    rng = random.Random(5)
    samples, offered, outputs, _ = random_eval_set(rng, 300)
    _, _, report = evaluate(samples, offered, outputs, DEPLOYMENT_AWARE)
    md = render_report(report, "markdown")
    section = md.split("## Function Name Accuracy by Dialect")[1].split("##")[0]
    rows = [line.split("|")[1].strip() for line in section.splitlines() if line.startswith("| ") and "Dialect" not in line]
    assert rows == ["MSA", "Gulf", "Egyptian", "Levantine", "Maghrebi"]
    errors = md.split("## Error Distribution")[1]
    assert len([line for line in errors.splitlines() if line.startswith("| ") and "Error Type" not in line]) == 6
    with pytest.raises(ValueError):
        render_report(report, "html")


def test_json_markdown_consistency():
    rng = random.Random(6)
    samples, offered, outputs, _ = random_eval_set(rng, 120)
    _, _, report = evaluate(samples, offered, outputs, DEPLOYMENT_AWARE)
    again = MetricsReport.from_dict(json.loads(render_report(report, "json")))
    assert again == report
    md = render_report(again, "markdown")
    summary = dict(re.findall(r"^\| ([^|]+?) \| ([0-9.]+|n/a) \|$", md, flags=re.M))
    assert float(summary["Function name accuracy"]) == pytest.approx(report.function_name_accuracy, abs=5e-5)
    assert float(summary["Hallucination rate"]) == pytest.approx(report.hallucination_rate, abs=5e-5)
    for cls in ERROR_CLASSES:
        label = {"ParseFailure": "Parse Failure", "ToolHallucination": "Tool Hallucination", "WrongFunction": "Wrong Function", "ArgumentMismatch": "Argument Mismatch", "MissedCall": "Missed Call"}.get(cls, cls)
        fraction = re.search(rf"^\| {label} \| ([0-9.]+) \|", md, flags=re.M).group(1)
        assert float(fraction) == pytest.approx(report.error_distribution[cls], abs=5e-5)


def test_group_counts_sum_to_total():
    rng = random.Random(8)
    samples, offered, outputs, _ = random_eval_set(rng, 200)
    _, _, report = evaluate(samples, offered, outputs)
    assert sum(g["n"] for g in report.by_dialect.values()) == 200
    assert sum(g["n"] for g in report.by_domain.values()) == 200
    assert set(report.by_dialect) <= set(DIALECTS)


@given(st.integers(0, 2**32), st.integers(1, 50))
def test_rates_match_brute_force_recount(seed, n):
    samples, offered, outputs, records = random_eval_set(random.Random(seed), n)
    _, _, report = evaluate(samples, offered, outputs, DEPLOYMENT_AWARE)
    truth = oracles.recount(records)
    for key, want in truth.items():
        got = report.error_distribution[key[5:]] if key.startswith("dist_") else getattr(report, key)
        if want is None:
            assert got is None, key
        else:
            assert abs(got - float(want)) <= 1e-12, key
