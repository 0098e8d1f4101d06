"""Seeded Monte-Carlo plumbing.

Every random draw comes from a Philox generator derived from a root seed via
``SeedSequence.spawn``, so a block's numbers depend only on (seed, block index).
Blocks are reduced in index order, which keeps results bit-identical for any
thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

Z95 = 1.959963984540054


@dataclass(frozen=True)
class Estimate:
    """Sample mean with a 95% normal confidence half-width."""

    value: float
    ci_halfwidth: float
    n: int

    @property
    def low(self) -> float:
        return self.value - self.ci_halfwidth

    @property
    def high(self) -> float:
        return self.value + self.ci_halfwidth

    def contains(self, x: float) -> bool:
        return self.low <= x <= self.high

    @classmethod
    def from_samples(cls, samples) -> "Estimate":
        x = np.asarray(samples, dtype=float)
        n = x.size
        mean = float(np.sum(x) / n)
        if n < 2:
            return cls(mean, math.inf, n)
        var = float(np.sum((x - mean) ** 2) / (n - 1))
        return cls(mean, Z95 * math.sqrt(var / n), n)


def generators(seed: int, count: int) -> list[np.random.Generator]:
    """``count`` independent counter-based generators derived from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def ordered_map(fn: Callable, items: Iterable, threads: int = 1) -> list:
    """Map preserving input order regardless of completion order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def block_sizes(total: int, block: int) -> Sequence[int]:
    full, rest = divmod(total, block)
    return [block] * full + ([rest] if rest else [])
