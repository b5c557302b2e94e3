"""Deterministic stratified train/validation/test partitioning."""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .schema_core import Sample

log = logging.getLogger(__name__)

STRATA_KEYS = ("dialect", "domain", "tool")
PARTS = ("train", "val", "test")
_EPS = Fraction(1, 10**9)


def _exact(ratio: float) -> Fraction:
    # Read a ratio as the decimal it was written as, so 0.55 means 11/20 and
    # remainder ties are decided by position rather than by float noise.
    return Fraction(repr(float(ratio)))


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    strata_keys: tuple[str, ...] = ("dialect", "domain")

    def __post_init__(self) -> None:
        ratios = tuple(float(r) for r in self.ratios)
        if len(ratios) != 3 or not all(0.0 < r < 1.0 for r in ratios):
            raise ValueError("ratios must be three fractions in (0, 1)")
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios sum to {sum(ratios)!r}, not 1")
        bad = set(self.strata_keys) - set(STRATA_KEYS)
        if bad:
            raise ValueError(f"unknown strata keys {sorted(bad)}")
        object.__setattr__(self, "ratios", ratios)
        object.__setattr__(self, "strata_keys", tuple(self.strata_keys))


@dataclass
class SplitResult:
    train: list[Sample]
    val: list[Sample]
    test: list[Sample]
    # stratum label -> [train, val, test] counts
    per_stratum: dict[str, list[int]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def parts(self) -> tuple[list[Sample], list[Sample], list[Sample]]:
        return self.train, self.val, self.test


def stratum_of(sample: Sample, keys: Sequence[str]) -> tuple[str, ...]:
    out = []
    for key in keys:
        if key == "tool":
            value = sample.target.tool_name if sample.target else "<none>"
        else:
            value = getattr(sample, key)
        if value is None or value == "":
            raise ValueError(f"sample {sample.id!r} has no value for stratum key {key!r}")
        out.append(str(value))
    return tuple(out)


def _order_key(seed: int, sample_id: str) -> bytes:
    return hashlib.blake2b(f"{seed}\x1f{sample_id}".encode("utf-8"), digest_size=16).digest()


def largest_remainder(total: int, ratios: Sequence[float]) -> list[int]:
    """Integer apportionment of ``total`` by ``ratios`` (ties go to the earlier part)."""
    quotas = [total * _exact(r) for r in ratios]
    # Snap quotas like 41103.999999999 from long decimals before flooring.
    floors = [math.floor(q + _EPS) for q in quotas]
    rest = total - sum(floors)
    order = sorted(range(len(quotas)), key=lambda j: (-(quotas[j] - floors[j]), j))
    for j in order[: max(rest, 0)]:
        floors[j] += 1
    return floors


def _place_extras(
    labels: list[tuple[str, ...]],
    need: dict[tuple[str, ...], int],
    remainders: dict[tuple[str, ...], list[Fraction]],
    capacity: list[int],
) -> dict[tuple[str, ...], list[int]] | None:
    """Give each stratum ``need`` extra seats in distinct parts so part totals hit ``capacity``.

    Greedy on largest residual capacity (Ryser's construction), preferring
    parts with the larger fractional remainder on ties. Returns None when the
    margins are infeasible.
    """
    cap = list(capacity)
    extra = {s: [0, 0, 0] for s in labels}
    for s in sorted(labels, key=lambda s: (-need[s], s)):
        d = need[s]
        if d == 0:
            continue
        ranked = sorted(range(3), key=lambda j: (-cap[j], -remainders[s][j], j))
        picks = ranked[:d]
        if any(cap[j] <= 0 for j in picks):
            return None
        for j in picks:
            cap[j] -= 1
            extra[s][j] += 1
    if any(cap):
        return None
    return extra


def stratified_split(samples: Sequence[Sample], spec: SplitSpec) -> SplitResult:
    """Partition samples so every stratum follows the ratios to within one sample.

    Global part sizes are the largest-remainder apportionment of the eligible
    total. Within a stratum, members are ordered by a seed-keyed hash of their
    id, so membership does not depend on input order.
    """
    if not samples:
        raise ValueError("cannot split an empty sample list")
    ids = [s.id for s in samples]
    if len(set(ids)) != len(ids):
        raise ValueError("sample ids must be unique")

    strata: dict[tuple[str, ...], list[Sample]] = {}
    for s in samples:
        strata.setdefault(stratum_of(s, spec.strata_keys), []).append(s)

    warnings: list[str] = []
    small = sorted(k for k, members in strata.items() if len(members) < 3)
    for k in small:
        msg = f"stratum {'/'.join(k)} has {len(strata[k])} samples; assigned wholly to train"
        log.warning(msg)
        warnings.append(msg)
    labels = sorted(k for k in strata if k not in set(small))

    floors: dict[tuple[str, ...], list[int]] = {}
    remainders: dict[tuple[str, ...], list[Fraction]] = {}
    need: dict[tuple[str, ...], int] = {}
    for k in labels:
        n = len(strata[k])
        q = [n * _exact(r) for r in spec.ratios]
        f = [math.floor(x + _EPS) for x in q]
        floors[k] = f
        remainders[k] = [max(Fraction(0), x - y) for x, y in zip(q, f)]
        need[k] = n - sum(f)

    eligible = sum(len(strata[k]) for k in labels)
    targets = largest_remainder(eligible, spec.ratios)
    capacity = [targets[j] - sum(floors[k][j] for k in labels) for j in range(3)]
    extra = None
    if all(c >= 0 for c in capacity):
        extra = _place_extras(labels, need, remainders, capacity)
    if extra is None:
        # Margins infeasible: fall back to independent per-stratum apportionment.
        msg = "global part sizes could not be matched exactly; using per-stratum apportionment"
        log.warning(msg)
        warnings.append(msg)
        counts = {k: largest_remainder(len(strata[k]), spec.ratios) for k in labels}
    else:
        counts = {k: [floors[k][j] + extra[k][j] for j in range(3)] for k in labels}

    assignment: dict[str, int] = {}
    per_stratum: dict[str, list[int]] = {}
    for k in labels:
        members = sorted(strata[k], key=lambda s: (_order_key(spec.seed, s.id), s.id))
        c = counts[k]
        bounds = [c[0], c[0] + c[1]]
        for pos, s in enumerate(members):
            assignment[s.id] = 0 if pos < bounds[0] else (1 if pos < bounds[1] else 2)
        per_stratum["/".join(k)] = list(c)
    for k in small:
        for s in strata[k]:
            assignment[s.id] = 0
        per_stratum["/".join(k)] = [len(strata[k]), 0, 0]

    parts: tuple[list[Sample], list[Sample], list[Sample]] = ([], [], [])
    for s in samples:
        parts[assignment[s.id]].append(s)
    return SplitResult(*parts, per_stratum=dict(sorted(per_stratum.items())), warnings=warnings)


def id_checksum(samples: Sequence[Sample]) -> str:
    """Order-independent digest of a partition's member ids."""
    return hashlib.sha256("\n".join(sorted(s.id for s in samples)).encode("utf-8")).hexdigest()


def split_manifest(result: SplitResult, spec: SplitSpec) -> dict[str, Any]:
    return {
        "seed": spec.seed,
        "ratios": list(spec.ratios),
        "strata_keys": list(spec.strata_keys),
        "sizes": {name: len(part) for name, part in zip(PARTS, result.parts())},
        "per_stratum": result.per_stratum,
        "checksums": {name: id_checksum(part) for name, part in zip(PARTS, result.parts())},
        "warnings": result.warnings,
    }
