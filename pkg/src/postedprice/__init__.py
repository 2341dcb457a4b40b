"""Numerical tools for single-item sequential posted pricing."""
from __future__ import annotations

from .dist import (
    DiscreteDistribution,
    Distribution,
    Exponential,
    GeneralizedPareto,
    NoFiniteOptimum,
    PiecewiseLinearRevenueDist,
    Uniform,
    is_regular,
    parse_distribution,
    read_discrete_csv,
    regularity_check,
)
from .exante import QuantileAllocation, exante_general, exante_regular, exante_restricted
from .gaps import (
    GapReport,
    best_anonymous_among,
    bound_general,
    bound_regular,
    gap,
    irregular_lower_construction,
    lottery_weights,
    regular_lower_construction,
)
from .pricing import (
    PriceVector,
    RecursionTable,
    anonymous_revenue,
    discriminatory_revenue,
    monopoly_price,
    optimal_anonymous,
    optimal_discriminatory,
)
from .sim import SimResult, simulate_revenue, simulate_welfare
from .welfare import (
    WelfareTable,
    check_shift_theorem,
    gap_table,
    gilbert_mosteller_bracket,
    virtual_value_conditional_mean,
    welfare_prices,
)

__version__ = "0.1.0"
