import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from callforge.fixtures import DOMAINS
from callforge.schema_core import DIALECTS, Sample, ToolCall
from callforge.splitter import SplitSpec, largest_remainder, split_manifest, stratified_split, stratum_of

TARGET_COUNTS = (41104, 4568, 5079)
TOTAL = sum(TARGET_COUNTS)
EXACT = tuple(c / TOTAL for c in TARGET_COUNTS)


def make_samples(n, seed=0, strata=None):
    rng = random.Random(seed)
    strata = strata or [(d, m) for d in DIALECTS for m in DOMAINS]
    return [Sample(f"x{i:06d}", "سؤال", *rng.choice(strata), requires_function=False) for i in range(n)]


def _check_per_stratum(samples, result, ratios):
    sizes = {}
    for part, members in enumerate(result.parts()):
        for s in members:
            sizes.setdefault((s.dialect, s.domain), [0, 0, 0])[part] += 1
    for counts in sizes.values():
        n = sum(counts)
        if n < 3:
            continue
        for c, r in zip(counts, ratios):
            assert abs(c - n * Fraction(r)) <= 1


def test_target_sizes_with_exact_ratios():
    samples = make_samples(TOTAL, seed=1)
    result = stratified_split(samples, SplitSpec(EXACT, seed=7))
    assert tuple(map(len, result.parts())) == TARGET_COUNTS
    assert not result.warnings
    _check_per_stratum(samples, result, EXACT)


def test_rounded_ratios_give_neighbouring_sizes():
    # 0.8099 / 0.0900 / 0.1001 are four-decimal roundings; exact apportionment of them differs by one.
    result = stratified_split(make_samples(TOTAL, seed=1), SplitSpec((0.8099, 0.0900, 0.1001), seed=7))
    assert tuple(map(len, result.parts())) == (41103, 4568, 5080)
    assert largest_remainder(TOTAL, (0.8099, 0.0900, 0.1001)) == oracles.largest_remainder(TOTAL, [Fraction(8099, 10000), Fraction(900, 10000), Fraction(1001, 10000)])


def test_ten_samples_one_stratum():
    result = stratified_split(make_samples(10, strata=[("MSA", "weather")]), SplitSpec((0.8, 0.1, 0.1)))
    assert tuple(map(len, result.parts())) == (8, 1, 1)


def test_shuffle_invariance():
    samples = make_samples(3000, seed=2)
    spec = SplitSpec((0.8, 0.1, 0.1), seed=3)
    a = stratified_split(samples, spec)
    shuffled = samples[:]
    random.Random(9).shuffle(shuffled)
    b = stratified_split(shuffled, spec)
    assert [{s.id for s in p} for p in a.parts()] == [{s.id for s in p} for p in b.parts()]
    assert split_manifest(a, spec)["checksums"] == split_manifest(b, spec)["checksums"]


def test_seed_changes_membership():
    samples = make_samples(500, seed=2)
    a = stratified_split(samples, SplitSpec(seed=1))
    b = stratified_split(samples, SplitSpec(seed=2))
    assert {s.id for s in a.test} != {s.id for s in b.test}


def test_small_strata_go_to_train_with_warning():
    samples = make_samples(20, strata=[("MSA", "weather")]) + [Sample("lonely", "سؤال", "Gulf", "banking", False)]
    result = stratified_split(samples, SplitSpec())
    assert any(s.id == "lonely" for s in result.train)
    assert any("Gulf/banking" in w for w in result.warnings)
    assert result.per_stratum["Gulf/banking"] == [1, 0, 0]


def test_spec_validation():
    for bad in [(0.5, 0.5, 0.0), (0.8, 0.1, 0.2), (0.5, 0.5), (1.2, -0.1, -0.1)]:
        with pytest.raises(ValueError):
            SplitSpec(bad)
    with pytest.raises(ValueError):
        SplitSpec(strata_keys=("speaker",))
    with pytest.raises(ValueError):
        stratified_split([], SplitSpec())
    with pytest.raises(ValueError):
        stratified_split(make_samples(2) + make_samples(1), SplitSpec())


def test_tool_stratum_key():
    s = Sample("p", "الطقس", "MSA", "weather", True, ToolCall("get_weather", {"city": "جدة"}))
    n = Sample("n", "مرحبا", "MSA", "weather", False)
    assert stratum_of(s, ("dialect", "tool")) == ("MSA", "get_weather")
    assert stratum_of(n, ("tool",)) == ("<none>",)


def _feasible(sizes, ratios):
    """Brute force: can per-stratum floor/ceil choices hit the global largest-remainder targets?"""
    targets = oracles.largest_remainder(sum(sizes), ratios)
    options = []
    for n in sizes:
        floors = [(n * r).numerator // (n * r).denominator for r in ratios]
        opts = [c for c in itertools.product(*[(f, f + 1) for f in floors]) if sum(c) == n]
        options.append(opts)
    return any([sum(col) for col in zip(*combo)] == targets for combo in itertools.product(*options))


ratio_triples = st.tuples(st.integers(1, 18), st.integers(1, 18)).filter(lambda t: t[0] + t[1] < 20).map(
    lambda t: (Fraction(t[0], 20), Fraction(t[1], 20), Fraction(20 - t[0] - t[1], 20))
)


@given(st.lists(st.integers(3, 40), min_size=1, max_size=5), ratio_triples, st.integers(0, 2**64 - 1))
def test_split_properties_against_brute_force(sizes, ratios, seed):
    strata = [(DIALECTS[i % 5], DOMAINS[i]) for i in range(len(sizes))]
    samples = [Sample(f"{i}-{j}", "سؤال", *strata[i], requires_function=False) for i, n in enumerate(sizes) for j in range(n)]
    spec = SplitSpec(tuple(float(r) for r in ratios), seed=seed)
    result = stratified_split(samples, spec)

    ids = [s.id for p in result.parts() for s in p]
    assert sorted(ids) == sorted(s.id for s in samples)
    _check_per_stratum(samples, result, ratios)

    exact_totals = tuple(map(len, result.parts())) == tuple(oracles.largest_remainder(len(samples), ratios))
    assert exact_totals == _feasible(sizes, ratios)
    assert (not result.warnings) == exact_totals
