"""Fixed-size stochastic tool subsets with guaranteed gold-tool inclusion."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Sequence

from .schema_core import ToolSchema


class SamplingError(ValueError):
    pass


class ToolConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    k: int = 5
    seed: int = 0
    epoch: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def sample_rng(seed: int, sample_id: str, epoch: int = 0) -> random.Random:
    """A generator keyed only by ``(seed, epoch, sample_id)``, independent of call order."""
    key = f"{seed}\x1f{epoch}\x1f{sample_id}".encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8, person=b"toolsmpl").digest()
    return random.Random(int.from_bytes(digest, "big"))


def _partial_fisher_yates(pool: list[int], m: int, rng: random.Random) -> list[int]:
    # Only the first m slots are shuffled into place.
    n = len(pool)
    for i in range(m):
        j = rng.randrange(i, n)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:m]


def _shuffle(items: list[int], rng: random.Random) -> None:
    for i in range(len(items) - 1, 0, -1):
        j = rng.randrange(i + 1)
        items[i], items[j] = items[j], items[i]


def sample_tools(
    inventory: Sequence[ToolSchema],
    target: str | None,
    requires_function: bool,
    sample_id: str,
    config: SamplerConfig | None = None,
) -> list[ToolSchema]:
    """Return ``k`` distinct tools in random order.

    Positives get the target plus ``k - 1`` distractors drawn without
    replacement from the rest of the inventory; negatives get a uniform
    ``k``-subset. The final order is a uniform permutation.
    """
    config = config or SamplerConfig()
    k = config.k
    if len(inventory) < k:
        raise SamplingError(f"inventory has {len(inventory)} tools, need at least {k}")
    rng = sample_rng(config.seed, sample_id, config.epoch)

    if requires_function:
        if target is None:
            raise ToolConfigError(f"sample {sample_id!r}: positive sample without a target tool")
        names = [t.name for t in inventory]
        try:
            gold = names.index(target)
        except ValueError:
            raise ToolConfigError(f"sample {sample_id!r}: target {target!r} not in inventory") from None
        pool = [i for i in range(len(inventory)) if i != gold]
        chosen = [gold] + _partial_fisher_yates(pool, k - 1, rng)
    else:
        chosen = _partial_fisher_yates(list(range(len(inventory))), k, rng)

    _shuffle(chosen, rng)
    return [inventory[i] for i in chosen]
