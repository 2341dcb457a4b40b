"""Anonymous and discriminatory sequential posted prices for one item."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dist import ContinuousDistribution, DiscreteDistribution, Distribution, NoFiniteOptimum
from .search import maximize

UNDERFLOW = 1e-300


@dataclass(frozen=True)
class PriceVector:
    """Prices ``p_1..p_n``; entry ``i`` is offered to the ``i``-th arriving bidder."""

    prices: tuple[float, ...]

    def __post_init__(self):
        prices = tuple(float(p) for p in self.prices)
        if not prices:
            raise ValueError("a price vector needs at least one price")
        if any(not math.isfinite(p) or p < 0 for p in prices):
            raise ValueError(f"prices must be finite and nonnegative, got {prices}")
        object.__setattr__(self, "prices", prices)

    def __len__(self):
        return len(self.prices)

    def __iter__(self):
        return iter(self.prices)

    def __getitem__(self, i):
        return self.prices[i]


def as_price_vector(pv) -> PriceVector:
    if isinstance(pv, PriceVector):
        return pv
    if np.ndim(pv) == 0:
        return PriceVector((float(pv),))
    return PriceVector(tuple(pv))


@dataclass(frozen=True)
class RecursionTable:
    """Backward-induction table.

    ``continuation[k]`` is the optimal objective with ``k`` bidders and
    ``step_prices[k]`` is the price posted when ``k`` bidders remain after the
    current one, so ``continuation[k + 1]`` is attained by ``step_prices[k]``.
    """

    objective: str
    continuation: tuple[float, ...]
    step_prices: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.step_prices)

    def price_vector(self, n: int | None = None) -> PriceVector:
        n = self.n if n is None else n
        if not 1 <= n <= self.n:
            raise ValueError(f"table covers 1..{self.n} bidders, asked for {n}")
        return PriceVector(tuple(reversed(self.step_prices[:n])))


class AnonymousOptimum(NamedTuple):
    price: float
    revenue: float


class DiscriminatoryOptimum(NamedTuple):
    prices: PriceVector
    revenue: float
    table: RecursionTable


def sale_probability(tail, n: int):
    """``1 - (1 - tail)**n`` without cancellation for small ``tail``."""
    t = np.asarray(tail, dtype=float)
    with np.errstate(divide="ignore"):
        out = -np.expm1(n * np.log1p(-np.minimum(t, 1.0)))
    if np.ndim(tail) == 0:
        return float(out)
    return out


def anonymous_revenue(d: Distribution, n: int, p):
    """``p * (1 - left_cdf(p)**n)``: revenue from posting ``p`` to all ``n`` bidders."""
    if n < 1:
        raise ValueError("n must be at least 1")
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr < 0):
        raise ValueError("prices must be nonnegative")
    out = p_arr * sale_probability(np.asarray(d.tail(p_arr), dtype=float), n)
    if np.ndim(p) == 0:
        return float(out)
    return out


def discriminatory_revenue(d: Distribution, pv) -> float:
    pv = as_price_vector(pv)
    total = []
    survive = 1.0
    for p in pv:
        total.append(survive * p * float(d.tail(p)))
        survive *= float(d.left_cdf(p))
        if survive < UNDERFLOW:
            break
    return math.fsum(total)


def _require_finite(d: Distribution):
    if not math.isfinite(d.revenue_at_zero):
        raise NoFiniteOptimum(f"{d.kind} distribution has an unbounded revenue curve; no finite optimum")


def _last_argmax(vals: np.ndarray) -> int:
    # highest price among exact ties (atoms are sorted ascending)
    return int(np.flatnonzero(vals == vals.max())[-1])


def optimal_anonymous(d: Distribution, n: int) -> AnonymousOptimum:
    """Best single price for ``n`` bidders.

    Discrete distributions are solved exactly by trying every atom; otherwise
    the search runs over the sale quantile of one bidder.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    _require_finite(d)
    if isinstance(d, DiscreteDistribution):
        atoms = d.atom_array
        vals = atoms * sale_probability(d.atom_tails, n)
        k = _last_argmax(vals)
        return AnonymousOptimum(float(atoms[k]), float(vals[k]))

    def objective(q):
        return anonymous_revenue(d, n, d.quantile(q))

    slope = None
    if isinstance(d, ContinuousDistribution):
        def slope(q):
            p = float(d.quantile(q))
            dens = float(d.pdf(p))
            return -sale_probability(q, n) / dens + p * n * (1.0 - q) ** (n - 1)

    q, rev = maximize(objective, 0.0, 1.0, slope=slope, extra=d.breakpoints)
    return AnonymousOptimum(float(d.quantile(q)), float(rev))


def best_step(d: Distribution, continuation: float) -> tuple[float, float]:
    """Price maximizing ``p*P[X >= p] + P[X < p]*continuation`` and that maximum."""
    if isinstance(d, DiscreteDistribution):
        atoms = d.atom_array
        vals = atoms * d.atom_tails + d.atom_below * continuation
        k = _last_argmax(vals)
        return float(atoms[k]), float(vals[k])

    def objective(q):
        p = np.asarray(d.quantile(q), dtype=float)
        t = np.asarray(d.tail(p), dtype=float)
        out = p * t + (1.0 - t) * continuation
        return float(out) if np.ndim(q) == 0 else out

    slope = None
    if isinstance(d, ContinuousDistribution):
        def slope(q):
            return d.virtual_value(float(d.quantile(q))) - continuation

    q, val = maximize(objective, 0.0, 1.0, slope=slope, extra=d.breakpoints)
    return float(d.quantile(q)), float(val)


def optimal_discriminatory(d: Distribution, n: int) -> DiscriminatoryOptimum:
    """Backward induction from the last bidder.

    With ``k`` bidders still to come the current price maximizes
    ``p*P[X >= p] + P[X < p]*V_k`` and ``V_{k+1}`` is the maximum, ``V_0 = 0``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    _require_finite(d)
    cont = [0.0]
    steps = []
    for _ in range(n):
        p, v = best_step(d, cont[-1])
        steps.append(p)
        cont.append(v)
    table = RecursionTable("revenue", tuple(cont), tuple(steps))
    return DiscriminatoryOptimum(table.price_vector(), cont[n], table)


def monopoly_price(d: Distribution) -> float:
    return optimal_discriminatory(d, 1).prices[0]

