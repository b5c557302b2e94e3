import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from callforge.call_parser import (
    DEPLOYMENT_AWARE,
    NO_CALL,
    PARSE_FAILURE,
    PARSED_CALL,
    STRICT,
    ParsedOutput,
    normalize_mode,
    parse_output,
)
from callforge.chat_serializer import SerializerConfig, render_call
from callforge.schema_core import ToolCall

CS, CE, ESC = "<start_function_call>", "<end_function_call>", "<escape>"
CFG = SerializerConfig()


def _reason(text, mode=STRICT):
    out = parse_output(text, mode=mode)
    assert out.kind == PARSE_FAILURE
    return out.failure_detail.reason


def test_plain_json_string_call():
    out = parse_output(CS + 'get_weather{"city":"دبي"}' + CE)
    assert out.kind == PARSED_CALL and out.call == ToolCall("get_weather", {"city": "دبي"})


def test_escaped_call_with_structure_inside():
    out = parse_output(CS + 'f{"q":' + ESC + '{"a": "}"}' + ESC + ',"n":2}' + CE)
    assert out.call == ToolCall("f", {"q": '{"a": "}"}', "n": 2})


def test_plain_arabic_is_no_call():
    out = parse_output("لا توجد أداة مناسبة لطلبك، يمكنني المساعدة بطريقة أخرى.")
    assert out.kind == NO_CALL and out.call is None and not out.had_think_block


def test_think_prefix_depends_on_mode():
    text = "<think>اختار أداة الطقس</think>" + CS + 'get_weather{"city":' + ESC + "جدة" + ESC + "}" + CE
    assert _reason(text) == "reasoning block not permitted in strict mode"
    out = parse_output(text, mode=DEPLOYMENT_AWARE)
    assert out.kind == PARSED_CALL and out.had_think_block and out.reasoning == "اختار أداة الطقس"
    assert parse_output(text, mode="deployment-aware") == out


def test_think_then_no_call():
    out = parse_output("<think>لا شيء</think>\nلا أستطيع.", mode=DEPLOYMENT_AWARE)
    assert out.kind == NO_CALL and out.had_think_block


def test_truncated_json():
    assert _reason(CS + 'get_weather{"city":').startswith("malformed arguments")


@pytest.mark.parametrize(
    "text,reason",
    [
        ("<think>بلا نهاية", "unterminated reasoning block"),
        ("نص " + CE, "call end without call start"),
        ("مرحبا " + CS + "f{}" + CE, "unexpected text before call"),
        (CS + "f" + CE, "expected argument object after tool name"),
        (CS + "{}" + CE, "empty tool name"),
        (CS + "bad name{}" + CE, "invalid tool name"),
        (CS + 'f{"a":' + ESC + "open" + CE, "unterminated escape region"),
        (CS + 'f{"a":1,"a":2}' + CE, "malformed arguments: duplicate key 'a'"),
        (CS + 'f{"a":NaN}' + CE, "malformed arguments: non-standard JSON constant NaN"),
        (CS + 'f{"a":1,}' + CE, None),
        (CS + "f[1]" + CE, None),
        (CS + 'f{"a":1}', "unterminated call"),
        (CS + 'f{"a":1} x' + CE, "expected call end"),
        (CS + "f{}" + CE + " بعد", "trailing content after call"),
        (CS + "f{}" + CE + CS + "g{}" + CE, "trailing content after call"),
        (CS + "f{}" + CE + "<think>x</think>", "trailing content after call"),
    ],
)
def test_failure_reasons(text, reason):
    got = _reason(text, DEPLOYMENT_AWARE)
    if reason is None:
        assert got.startswith("malformed arguments") or got == "expected argument object after tool name"
    else:
        assert got == reason


def test_failure_positions_point_into_source():
    text = CS + 'f{"a":' + ESC + "قيمة طويلة" + ESC + ',"b":tru}' + CE
    out = parse_output(text)
    assert out.failure_detail.position == text.index("tru}")


def test_whitespace_is_insignificant_around_tokens():
    out = parse_output("  \n" + CS + " f {\"a\": 1} \n" + CE + "\n ")
    assert out.call == ToolCall("f", {"a": 1})


def test_bytes_input_and_invalid_utf8():
    assert parse_output((CS + 'f{"a":"ب"}' + CE).encode("utf-8")).kind == PARSED_CALL
    assert parse_output(b"\xff\xfe" + CS.encode() + b"f{}" + CE.encode()).kind == PARSE_FAILURE


def test_deep_nesting_is_a_failure_not_a_crash():
    text = CS + 'f{"a":' + "[" * 100_000 + "]" * 100_000 + "}" + CE
    assert parse_output(text).kind in (PARSED_CALL, PARSE_FAILURE)


def test_long_input_is_fast():
    junk = "كلمة " * 200_000
    body = CS + 'f{"a":' + ESC + junk + ESC + "}" + CE
    start = time.perf_counter()
    assert parse_output(body).kind == PARSED_CALL
    assert parse_output(junk + CE).kind == PARSE_FAILURE
    assert time.perf_counter() - start < 2.0


def test_parsed_output_invariants_and_dict_round_trip():
    with pytest.raises(ValueError):
        ParsedOutput(PARSED_CALL)
    with pytest.raises(ValueError):
        ParsedOutput(NO_CALL, had_think_block=True)
    for text in ["x", CS + "f{}" + CE, CS]:
        out = parse_output(text)
        assert ParsedOutput.from_dict(out.to_dict()) == out
    with pytest.raises(ValueError):
        normalize_mode("lenient")


fragments = st.sampled_from([CS, CE, ESC, "<think>", "</think>", "{", "}", "[", "]", '"', "\\", ":", ",", "f", "a", "1", " ", "\n", "null", "ب"])
soups = st.lists(fragments, max_size=30).map("".join)


@given(st.one_of(soups, st.text(max_size=200)), st.sampled_from([STRICT, DEPLOYMENT_AWARE]))
def test_totality(text, mode):
    out = parse_output(text, mode=mode)
    assert out.kind in (NO_CALL, PARSED_CALL, PARSE_FAILURE)
    if out.kind == PARSE_FAILURE:
        assert 0 <= out.failure_detail.position <= len(text)
    assert parse_output(text, mode=mode) == out


@given(st.binary(max_size=200))
def test_totality_on_bytes(data):
    parse_output(data)


@given(st.one_of(soups, st.text(max_size=100)))
def test_mode_monotonicity(text):
    strict = parse_output(text, mode=STRICT)
    if strict.kind == PARSED_CALL:
        assert parse_output(text, mode=DEPLOYMENT_AWARE) == strict


@given(
    st.dictionaries(st.sampled_from(["city", "unit", "n", "q"]), st.one_of(st.text(max_size=10), st.integers(), st.none()), max_size=4),
    st.integers(0, 200),
    st.sampled_from(["", "x", "}", "{", CE, CS, ESC, '"']),
)
def test_mutations_of_valid_calls_never_crash(args, cut, insert):
    text = render_call("get_weather", args, CFG)
    cut %= len(text) + 1
    mutated = text[:cut] + insert + text[cut:]
    out = parse_output(mutated)
    assert out.kind in (NO_CALL, PARSED_CALL, PARSE_FAILURE)
    if insert == "":
        assert out.call == ToolCall("get_weather", args)
