"""Revenue gaps between discriminatory and anonymous pricing, their bounds, and tight instances."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dist import DiscreteDistribution, Distribution, PiecewiseLinearRevenueDist, is_regular
from .exante import DEFAULT_BUDGET_GRID, QuantileAllocation, exante_general, exante_regular, exante_restricted
from .pricing import (
    PriceVector,
    anonymous_revenue,
    as_price_vector,
    discriminatory_revenue,
    optimal_anonymous,
    optimal_discriminatory,
    sale_probability,
)

# provenance tags
ENUMERATED = "enumerated"
GRID_OPTIMIZED = "grid-optimized"
BUDGET_DP = "budget-dp"


def bound_general(n: int) -> float:
    """Worst-case ratio ``2 - 1/n`` for arbitrary distributions."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return 2.0 - 1.0 / n


def bound_regular(n: int) -> float:
    """Worst-case ratio ``1/(1 - (1 - 1/n)**n)`` for regular distributions; tends to e/(e-1)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return 1.0 / -math.expm1(n * math.log1p(-1.0 / n)) if n > 1 else 1.0


def quantile_ratio(z, n: int):
    """``z / (1 - (1 - z)**n)``, extended by its limit ``1/n`` at ``z = 0``."""
    z_arr = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        den = -np.expm1(n * np.log1p(-np.minimum(z_arr, 1.0)))
        out = np.where(z_arr > 0, z_arr / den, 1.0 / n)
    return float(out) if np.ndim(z) == 0 else out


@dataclass(frozen=True)
class GapReport:
    n: int
    R_a: float
    R_d: float
    R_x: float
    gap_da: float
    gap_xa: float
    bound_general: float
    bound_regular: float | None
    method_a: str
    method_d: str
    method_x: str

    @property
    def regular(self) -> bool:
        return self.bound_regular is not None


def gap(d: Distribution, n: int, budget_grid: int = DEFAULT_BUDGET_GRID) -> GapReport:
    """Optimal anonymous, discriminatory and ex-ante revenue for ``n`` bidders.

    ``budget_grid`` only matters for irregular continuous distributions.
    """
    discrete = isinstance(d, DiscreteDistribution)
    regular = is_regular(d)
    anon = optimal_anonymous(d, n)
    disc = optimal_discriminatory(d, n)
    if regular:
        r_x = exante_regular(d, n).value
        method_x = ENUMERATED if discrete else GRID_OPTIMIZED
    else:
        r_x = exante_general(d, n, budget_grid).value
        method_x = ENUMERATED if discrete else BUDGET_DP
    opt_method = ENUMERATED if discrete else GRID_OPTIMIZED
    return GapReport(
        n=n,
        R_a=anon.revenue,
        R_d=disc.revenue,
        R_x=r_x,
        gap_da=disc.revenue / anon.revenue,
        gap_xa=r_x / anon.revenue,
        bound_general=bound_general(n),
        bound_regular=bound_regular(n) if regular else None,
        method_a=opt_method,
        method_d=opt_method,
        method_x=method_x,
    )


def gap_batch(d: Distribution, ns, workers: int = 1, budget_grid: int = DEFAULT_BUDGET_GRID) -> list[GapReport]:
    """``gap`` for several ``n``; results are in input order whatever the worker count."""
    ns = list(ns)
    if workers <= 1 or len(ns) <= 1:
        return [gap(d, n, budget_grid) for n in ns]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda n: gap(d, n, budget_grid), ns))


@dataclass(frozen=True)
class LotteryWeights:
    """Weights of a lottery over anonymous prices built from sale probabilities.

    ``weights[i] = q_i / (1 - left_cdf(p_i)**n)`` with ``p_i = quantile(q_i)``;
    picking ``p_i`` with probability proportional to its weight earns
    ``lottery_revenue``, and ``sum(weights) == exante_value / lottery_revenue``.
    """

    weights: tuple[float, ...]
    prices: tuple[float | None, ...]
    exante_value: float
    lottery_revenue: float

    @property
    def total(self) -> float:
        return math.fsum(self.weights)


def lottery_weights(d: Distribution, qa, n: int, rtol: float = 1e-9) -> LotteryWeights:
    if not isinstance(qa, QuantileAllocation):
        qa = QuantileAllocation(tuple(qa))
    weights, prices, terms, rev_terms = [], [], [], []
    for q in qa:
        if q <= 0.0:
            weights.append(0.0)
            prices.append(None)
            continue
        p = float(d.quantile(q))
        # left_cdf(p) <= 1 - q, so the denominator is positive
        w = q / sale_probability(float(d.tail(p)), n)
        weights.append(w)
        prices.append(p)
        terms.append(p * q)
        rev_terms.append(w * anonymous_revenue(d, n, p))
    total = math.fsum(weights)
    exante_value = math.fsum(terms)
    if total == 0.0:
        return LotteryWeights(tuple(weights), tuple(prices), 0.0, 0.0)
    lottery_revenue = math.fsum(rev_terms) / total
    expected = exante_value / total
    if not math.isclose(lottery_revenue, expected, rel_tol=rtol, abs_tol=1e-300):
        raise ArithmeticError(
            f"lottery revenue {lottery_revenue!r} disagrees with ex-ante value / weight {expected!r}"
        )
    return LotteryWeights(tuple(weights), tuple(prices), exante_value, lottery_revenue)


class BestAnonymous(NamedTuple):
    price: float
    ratio: float


def best_anonymous_among(d: Distribution, pv, n: int | None = None) -> BestAnonymous:
    """Best of the given prices used as an anonymous price, and ``R^d(pv) / R^a(p)``.

    Lowest index wins ties.  If no price ever sells, both revenues are zero
    and the ratio is reported as 1.
    """
    pv = as_price_vector(pv)
    n = len(pv) if n is None else n
    revs = [anonymous_revenue(d, n, p) for p in pv]
    k = int(np.argmax(revs))
    disc = discriminatory_revenue(d, pv)
    if revs[k] == 0.0:
        return BestAnonymous(pv[k], 1.0 if disc == 0.0 else math.inf)
    return BestAnonymous(pv[k], disc / revs[k])


class LowerBoundInstance(NamedTuple):
    dist: Distribution
    prices: PriceVector


def irregular_lower_construction(n: int, eps: float = 1e-6) -> LowerBoundInstance:
    """Two atoms ``{1, n/eps}`` with ``P[n/eps] = eps/n**2``; prices ``n/eps`` then ``1`` last."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 < eps < n * n:
        raise ValueError(f"eps must lie in (0, n^2) = (0, {n * n}), got {eps}")
    high = n / eps
    p_high = eps / (n * n)
    masses = {1.0: 1.0 - p_high}
    masses[high] = masses.get(high, 0.0) + p_high
    atoms = tuple(sorted(masses))
    dist = DiscreteDistribution(atoms, tuple(masses[a] for a in atoms))
    return LowerBoundInstance(dist, PriceVector((high,) * (n - 1) + (1.0,)))


def regular_lower_r(n: int, q: float | None = None) -> float:
    """Limiting revenue ``r`` at which the anonymous optimum sells with probability ``q`` (default 1/n)."""
    q = 1.0 / n if q is None else q
    surv = (1.0 - q) ** n
    return n * q * q * (1.0 - q) ** (n - 1) / (1.0 - (n * q + 1.0) * surv)


def regular_lower_construction(n: int, eps: float = 1e-5) -> LowerBoundInstance:
    """Piecewise-linear revenue curve with ``r`` chosen so that ``q = 1/n`` is anonymous-optimal.

    The first ``n - 1`` bidders face the atom price ``quantile(eps)``, the last
    one ``quantile(1) = 1``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0.0 < eps < 1.0 / n:
        raise ValueError(f"eps must lie in (0, 1/n), got {eps}")
    r = regular_lower_r(n)
    if not 0.0 < r < 2.0 / (n + 1):
        raise ArithmeticError(f"r={r!r} outside (0, 2/(n+1)) for n={n}")
    dist = PiecewiseLinearRevenueDist(r, eps)
    high = float(dist.quantile(eps))
    return LowerBoundInstance(dist, PriceVector((high,) * (n - 1) + (float(dist.quantile(1.0)),)))


@dataclass(frozen=True)
class LowerBoundReport:
    n: int
    eps: float
    R_d_prices: float
    R_d: float
    R_a: float
    ratio: float
    bound: float


def lower_bound_report(kind: str, n: int, eps: float | None = None) -> LowerBoundReport:
    """Evaluate a tight construction: ``kind`` is ``"irregular"`` or ``"regular"``."""
    if kind == "irregular":
        eps = 1e-6 if eps is None else eps
        inst = irregular_lower_construction(n, eps)
        bound = bound_general(n)
    elif kind == "regular":
        eps = 1e-5 if eps is None else eps
        inst = regular_lower_construction(n, eps)
        bound = bound_regular(n)
    else:
        raise ValueError(f"unknown construction {kind!r}")
    r_a = optimal_anonymous(inst.dist, n).revenue
    r_d = optimal_discriminatory(inst.dist, n).revenue
    return LowerBoundReport(
        n=n,
        eps=eps,
        R_d_prices=discriminatory_revenue(inst.dist, inst.prices),
        R_d=r_d,
        R_a=r_a,
        ratio=r_d / r_a,
        bound=bound,
    )


def bernoulli_variant(x, k):
    """``(1 + k*x)**-1 - (1 - x)**k``; positive for ``x`` in (0, 1) and ``k >= 1``."""
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    return 1.0 / (1.0 + k * x) - np.exp(k * np.log1p(-x))
