"""Monte Carlo estimates of revenue and welfare for a fixed price vector.

Trials are cut into fixed-size shards by trial index.  Shard ``j`` draws from
its own Philox stream keyed by ``SeedSequence(seed, spawn_key=(j,))`` and
returns exact (``fsum``) sums, so neither the worker count nor completion
order can change a single bit of the result.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._workers import default_workers
from .dist import Distribution
from .pricing import as_price_vector

SHARD_SIZE = 1 << 16
GENERATOR = "numpy.random.Philox"


def generator_metadata() -> dict:
    return {"generator": GENERATOR, "numpy": np.__version__, "shard_size": SHARD_SIZE}


@dataclass(frozen=True)
class SimResult:
    trials: int
    mean: float
    std_error: float
    seed: int
    metadata: dict = field(default_factory=generator_metadata, compare=False)


def _shard_rng(seed: int, shard: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(shard,))
    return np.random.Generator(np.random.Philox(ss))


def _run_shard(d: Distribution, prices: np.ndarray, record_value: bool, seed: int, shard: int, size: int):
    rng = _shard_rng(seed, shard)
    outcome = np.zeros(size)
    unsold = np.ones(size, dtype=bool)
    for p in prices:
        v = d.sample(rng, size)
        # ties count as a sale, matching the v >= p rule of the analytics
        buy = unsold & (v >= p)
        outcome[buy] = v[buy] if record_value else p
        unsold &= ~buy
        if not unsold.any():
            break
    return math.fsum(outcome), math.fsum(outcome * outcome)


def _simulate(d, pv, trials, seed, record_value, workers):
    if trials < 1:
        raise ValueError("trials must be at least 1")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    prices = np.array(as_price_vector(pv).prices)
    shards = [(j, min(SHARD_SIZE, trials - j * SHARD_SIZE)) for j in range(-(-trials // SHARD_SIZE))]

    def job(spec):
        return _run_shard(d, prices, record_value, seed, *spec)

    workers = default_workers() if workers is None else workers
    if workers > 1 and len(shards) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, shards))
    else:
        parts = [job(s) for s in shards]

    total = math.fsum(s for s, _ in parts)
    total_sq = math.fsum(s2 for _, s2 in parts)
    mean = total / trials
    if trials > 1:
        var = max(total_sq - total * mean, 0.0) / (trials - 1)
        std_error = math.sqrt(var / trials)
    else:
        std_error = math.nan
    return SimResult(trials, mean, std_error, seed)


def simulate_revenue(d: Distribution, pv, trials: int, seed: int, workers: int | None = None) -> SimResult:
    """Average price paid (0 when nobody buys); bidder i buys iff their value is at least ``pv[i]``."""
    return _simulate(d, pv, trials, seed, False, workers)


def simulate_welfare(d: Distribution, pv, trials: int, seed: int, workers: int | None = None) -> SimResult:
    """Average value of the buyer (0 when nobody buys)."""
    return _simulate(d, pv, trials, seed, True, workers)
