"""Ex-ante relaxation: maximize sum R(q_i) subject to sum q_i <= 1."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dist import ContinuousDistribution, DiscreteDistribution, Distribution, NoFiniteOptimum, is_regular
from .pricing import as_price_vector
from .search import maximize

BUDGET_TOL = 1e-12
DEFAULT_BUDGET_GRID = 10_000


@dataclass(frozen=True)
class QuantileAllocation:
    """Per-bidder sale probabilities ``q_1..q_n``."""

    q: tuple[float, ...]

    def __post_init__(self):
        q = tuple(float(x) for x in self.q)
        if not q:
            raise ValueError("allocation needs at least one bidder")
        if any(not (0.0 <= x <= 1.0) for x in q):
            raise ValueError(f"sale probabilities must lie in [0, 1], got {q}")
        if math.fsum(q) > 1.0 + BUDGET_TOL:
            raise ValueError(f"sale probabilities sum to {math.fsum(q)!r} > 1")
        object.__setattr__(self, "q", q)

    def __len__(self):
        return len(self.q)

    def __iter__(self):
        return iter(self.q)

    def __getitem__(self, i):
        return self.q[i]

    @property
    def total(self) -> float:
        return math.fsum(self.q)


class SymmetricExAnte(NamedTuple):
    q_star: float
    value: float


class ExAnte(NamedTuple):
    allocation: QuantileAllocation
    value: float


def _require_finite(d):
    if not math.isfinite(d.revenue_at_zero):
        raise NoFiniteOptimum(f"{d.kind} distribution has an unbounded revenue curve; ex-ante optimum is infinite")


def exante_regular(d: Distribution, n: int) -> SymmetricExAnte:
    """Symmetric optimum ``q_i = q*`` for a concave revenue curve.

    Concavity makes equal splitting optimal, so this reduces to maximizing
    ``n * R(q)`` over ``0 <= q <= 1/n``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not is_regular(d):
        raise ValueError(f"{d.kind} distribution is not regular; use exante_general")
    _require_finite(d)
    cap = 1.0 / n
    if isinstance(d, DiscreteDistribution):
        cands = np.concatenate((d.atom_tails[d.atom_tails <= cap], [cap]))
        vals = np.asarray(d.revenue_curve(cands), dtype=float)
        k = int(np.argmax(vals))
        return SymmetricExAnte(float(cands[k]), n * float(vals[k]))

    slope = None
    if isinstance(d, ContinuousDistribution):
        def slope(q):
            return d.virtual_value(float(d.quantile(q)))

    q, rev = maximize(d.revenue_curve, 0.0, cap, slope=slope, extra=d.breakpoints)
    return SymmetricExAnte(q, n * rev)


def exante_general(d: Distribution, n: int, budget_grid: int = DEFAULT_BUDGET_GRID) -> ExAnte:
    """Ex-ante optimum without assuming concavity.

    Discrete distributions are solved exactly: an optimum uses atom tail
    probabilities for all bidders but at most one, and that one takes the
    leftover budget.  Everything else goes through a max-plus dynamic program
    on a uniform budget grid; the value is then a lower bound whose error is
    at most ``grid_error_bound``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if budget_grid < 100:
        raise ValueError("budget_grid must be at least 100")
    _require_finite(d)
    if isinstance(d, DiscreteDistribution):
        return _exante_discrete(d, n)
    return _exante_grid(d, n, budget_grid)


def _pareto_prune(states):
    # states: (used budget, value, allocation); keep the budget/value frontier
    states.sort(key=lambda s: (s[0], -s[1]))
    kept = []
    best = -math.inf
    for s in states:
        if s[1] > best:
            kept.append(s)
            best = s[1]
    return kept


def _exante_discrete(d: DiscreteDistribution, n: int) -> ExAnte:
    tails = d.atom_tails
    revs = tails * d.atom_array
    options = list(zip(tails.tolist(), revs.tolist()))

    frontiers = [[(0.0, 0.0, ())]]
    for _ in range(n):
        nxt = []
        for used, val, alloc in frontiers[-1]:
            nxt.append((used, val, alloc + (0.0,)))
            for t, r in options:
                if used + t <= 1.0 + BUDGET_TOL:
                    nxt.append((used + t, val + r, alloc + (t,)))
        frontiers.append(_pareto_prune(nxt))

    best_val, best_alloc = -math.inf, None
    for used, val, alloc in frontiers[n]:
        if val > best_val:
            best_val, best_alloc = val, alloc
    # one bidder may take whatever budget is left at a non-atom quantile
    for used, val, alloc in frontiers[n - 1]:
        left = 1.0 - used
        if left <= 0.0:
            continue
        r_left = float(d.revenue_curve(min(left, 1.0)))
        if val + r_left > best_val:
            best_val, best_alloc = val + r_left, alloc + (left,)
    alloc = tuple(min(max(x, 0.0), 1.0) for x in best_alloc)
    return ExAnte(QuantileAllocation(alloc), best_val)


def _revenue_grid(d: Distribution, budget_grid: int) -> np.ndarray:
    b = np.arange(budget_grid + 1) / budget_grid
    return np.asarray(d.revenue_curve(b), dtype=float)


def _exante_grid(d: Distribution, n: int, budget_grid: int) -> ExAnte:
    rev = _revenue_grid(d, budget_grid)
    size = budget_grid + 1
    g = np.zeros(size)
    choices = []
    for _ in range(n):
        # new[j] = max_i rev[i] + g[j - i]
        new = np.full(size, -np.inf)
        arg = np.zeros(size, dtype=np.int64)
        for i in range(size):
            cand = rev[i] + g[: size - i]
            better = cand > new[i:]
            new[i:][better] = cand[better]
            arg[i:][better] = i
        choices.append(arg)
        g = new
    j = int(np.argmax(g))
    value = float(g[j])
    q = []
    for arg in reversed(choices):
        i = int(arg[j])
        q.append(i / budget_grid)
        j -= i
    return ExAnte(QuantileAllocation(tuple(q)), value)


def grid_error_bound(d: Distribution, n: int, budget_grid: int = DEFAULT_BUDGET_GRID) -> float:
    """``(max slope of R) * (grid step) * n``, the slope estimated from grid differences."""
    if isinstance(d, DiscreteDistribution):
        return 0.0
    rev = _revenue_grid(d, budget_grid)
    slope = float(np.max(np.abs(np.diff(rev)))) * budget_grid
    return slope * n / budget_grid


def exante_restricted(d: Distribution, pv) -> ExAnte:
    """LP optimum of ``sum p_i q_i`` with ``q_i <= P[X >= p_i]`` and ``sum q_i <= 1``.

    Greedy in decreasing price order is exact for this fractional knapsack.
    """
    pv = as_price_vector(pv)
    prices = np.array(pv.prices)
    caps = np.asarray(d.tail(prices), dtype=float)
    q = np.zeros(len(prices))
    budget = 1.0
    for i in np.argsort(-prices, kind="stable"):
        if budget <= 0.0:
            break
        q[i] = min(caps[i], budget)
        budget -= q[i]
    value = math.fsum((prices * q).tolist())
    return ExAnte(QuantileAllocation(tuple(q.tolist())), value)
