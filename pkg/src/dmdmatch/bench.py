"""Matching throughput and template size measurement."""

from __future__ import annotations

import os
import platform
import time
from dataclasses import dataclass

from .core import Flavor
from .relaxation import PRESETS, MatchParams, match_templates
from .serialization import to_bytes


@dataclass
class BenchReport:
    pairs_per_second: float
    template_bytes_avg: float
    flavor: str
    preset: str
    environment: str = ""

    def to_line(self) -> str:
        return (f"pairs_per_second={self.pairs_per_second:.2f} "
                f"template_bytes_avg={self.template_bytes_avg:.2f} "
                f"flavor={self.flavor} preset={self.preset}")


def pair_schedule(n: int, pair_count: int) -> list[tuple[int, int]]:
    """Cycle over all ordered pairs (a, b), a != b, in row-major order."""
    pairs = []
    while len(pairs) < pair_count:
        for a in range(n):
            for b in range(n):
                if a != b:
                    pairs.append((a, b))
                    if len(pairs) == pair_count:
                        return pairs
    return pairs


def bench_matching(pool, pair_count: int, flavor: Flavor | str | None = None,
                   params: MatchParams | None = None, preset: str = "verifinger",
                   warmup: int = 20, repeats: int = 1) -> BenchReport:
    """Time ``pair_count`` matches over a deterministic pair schedule.

    With ``repeats > 1`` the fastest pass is reported.
    """
    pool = list(pool)
    if len(pool) < 2:
        raise ValueError("bench pool needs at least 2 templates")
    if pair_count < 1:
        raise ValueError("pair_count must be >= 1")
    flavors = {t.flavor for t in pool}
    if len(flavors) > 1:
        raise ValueError("bench pool mixes flavors")
    actual = flavors.pop()
    if flavor is not None:
        want = Flavor[flavor.upper()] if isinstance(flavor, str) else Flavor(flavor)
        if want != actual:
            raise ValueError(f"pool flavor is {actual.name}, not {want.name}")
    params = params or PRESETS[preset]
    schedule = pair_schedule(len(pool), pair_count)
    for a, b in schedule[:warmup]:
        match_templates(pool[a], pool[b], params)
    best = float("inf")
    for _ in range(max(1, repeats)):
        start = time.perf_counter()
        for a, b in schedule:
            match_templates(pool[a], pool[b], params)
        best = min(best, time.perf_counter() - start)
    size = sum(len(to_bytes(t)) for t in pool) / len(pool)
    env = f"python {platform.python_version()} on {platform.machine()}, {os.cpu_count()} cpu"
    return BenchReport(pair_count / max(best, 1e-12), size, actual.name, preset, env)
