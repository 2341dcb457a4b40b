"""Welfare-maximizing sequential prices (Cayley-Moser thresholds) and their link to revenue prices."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .dist import Distribution, Exponential, Uniform
from .pricing import UNDERFLOW, as_price_vector, optimal_anonymous, optimal_discriminatory

EULER_GAMMA = 0.5772156649015329
HARMONIC_EXACT_LIMIT = 10**6
GAP_TABLE_MAX_N = 10**4


@dataclass(frozen=True)
class WelfareTable:
    """``W[k]`` is the optimal expected welfare with ``k`` bidders, ``W[0] = 0``.

    ``p_W[k]`` is the threshold posted when ``k`` bidders remain after the
    current one; it equals ``W[k]`` because the current bidder should be
    accepted exactly when their value beats what the rest can deliver.
    """

    W: tuple[float, ...]
    p_W: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.W) - 1

    def price_vector(self):
        # bidder i has n - 1 - i bidders after them
        return as_price_vector(tuple(self.W[self.n - 1 - i] for i in range(self.n)))


def _require_continuous(d: Distribution):
    if not d.continuous:
        raise ValueError(f"{d.kind} distribution is not continuous; welfare recursion needs a density")


def welfare_prices(d: Distribution, n: int) -> WelfareTable:
    """``W_1 = E[X]`` and ``W_{k+1} = F(W_k) W_k + E[X; X >= W_k]``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    _require_continuous(d)
    mean = float(d.mean)
    if not math.isfinite(mean):
        raise ValueError(f"{d.kind} distribution has infinite mean")
    W = [0.0, mean]
    for _ in range(n - 1):
        w = W[-1]
        W.append(float(d.cdf(w)) * w + float(d.tail_integral(w)))
    return WelfareTable(tuple(W), tuple(W))


def welfare_of_prices(d: Distribution, pv) -> float:
    """Expected value of the buyer (0 if unsold) when bidder i faces ``pv[i]``."""
    pv = as_price_vector(pv)
    terms = []
    survive = 1.0
    for p in pv:
        terms.append(survive * float(d.tail_integral(p)))
        survive *= float(d.left_cdf(p))
        if survive < UNDERFLOW:
            break
    return math.fsum(terms)


def check_shift_theorem(d: Distribution, i_max: int) -> float:
    """``max_i |p_i^R - p_{i+1}^W|`` for ``i = 0..i_max``.

    ``p_i^R`` is the revenue-optimal price with ``i`` bidders still to come
    after the current one.  Only distributions with affine virtual values
    are accepted.  The two sequences coincide when the support starts at 0:
    the first step needs ``phi(E[X]) = E[phi(X)] = 0``, while in general
    ``E[phi(X)]`` is the lower end of the support, so a shifted family
    reports a genuine nonzero deviation.
    """
    if i_max < 0:
        raise ValueError("i_max must be nonnegative")
    if getattr(d, "affine_virtual_value", None) is None:
        raise ValueError(f"{d.kind} distribution does not have an affine virtual value")
    rev = optimal_discriminatory(d, i_max + 1).table.step_prices
    wel = welfare_prices(d, i_max + 1).p_W
    return max(abs(rev[i] - wel[i + 1]) for i in range(i_max + 1))


def virtual_value_conditional_mean(d: Distribution, y: float) -> float:
    """``E[phi(X) | X >= y]`` by quadrature over the quantile ``u = P[X >= x]``."""
    _require_continuous(d)
    lo, hi = d.support
    if not (lo <= y <= hi) or math.isinf(y):
        raise ValueError(f"y={y!r} outside support [{lo}, {hi}]")
    s = float(d.sf(y))
    if s <= 0.0:
        raise ValueError(f"P[X >= {y!r}] is zero; the conditional mean is undefined")

    def integrand(u):
        return d.virtual_value(float(d.quantile(u)))

    val, _ = integrate.quad(integrand, 0.0, s, epsabs=1e-13, epsrel=1e-12, limit=500)
    return val / s


def harmonic(m: int) -> float:
    """``H_m``; exact up to 10**6 terms, asymptotic ``ln m + gamma + 1/(2m)`` beyond."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m <= HARMONIC_EXACT_LIMIT:
        return math.fsum(1.0 / k for k in range(1, m + 1))
    return math.log(m) + EULER_GAMMA + 1.0 / (2 * m)


def gilbert_mosteller_bracket(i: int) -> tuple[float, float]:
    """Interval containing the welfare threshold ``p_i^W`` of the unit uniform, for ``i >= 10``."""
    if i < 10:
        raise ValueError("the bracket is only valid for i >= 10")
    base = harmonic(i + 1) + i + 1.5
    return 1.0 - 2.0 / (base - 0.310), 1.0 - 2.0 / (base - 0.121)


class GapRow(NamedTuple):
    n: int
    R_d: float
    R_a: float
    ratio: float


class GapTable(NamedTuple):
    family: str
    rows: list[GapRow]
    argmax: GapRow


_FAMILIES = {"uniform": lambda: Uniform(0.0, 1.0), "exponential": lambda: Exponential(1.0)}


def gap_table(family: str, n_range, workers: int = 1) -> GapTable:
    """``R^d_n / R^a_n`` for the unit uniform or unit exponential over ``n_range``.

    One backward recursion up to ``max(n_range)`` yields every ``R^d_n``;
    the anonymous optimum is solved per ``n``.  Rows are in input order.
    """
    if family not in _FAMILIES:
        raise ValueError(f"family must be one of {sorted(_FAMILIES)}, got {family!r}")
    ns = [int(n) for n in n_range]
    if not ns:
        raise ValueError("empty n range")
    if min(ns) < 1 or max(ns) > GAP_TABLE_MAX_N:
        raise ValueError(f"n must lie in [1, {GAP_TABLE_MAX_N}]")
    d = _FAMILIES[family]()
    cont = optimal_discriminatory(d, max(ns)).table.continuation

    def row(n):
        r_a = optimal_anonymous(d, n).revenue
        return GapRow(n, cont[n], r_a, cont[n] / r_a)

    if workers > 1 and len(ns) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, ns))
    else:
        rows = [row(n) for n in ns]
    k = int(np.argmax([r.ratio for r in rows]))
    return GapTable(family, rows, rows[k])
