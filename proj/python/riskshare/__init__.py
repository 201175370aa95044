"""Distortion risk measures, optimal risk sharing, and verification oracles."""

from ._core import (
    DEFAULT_GRID,
    BudgetError,
    DistortionFn,
    DomainError,
    InfConvCurve,
    PreconditionError,
    brute_min,
    check_existence,
    dominates,
    dual,
    dual_power,
    expected_shortfall,
    flat_then_linear,
    identity,
    infconv_fn,
    is_concave,
    is_convex,
    min_of,
    piecewise_linear,
    power,
    power_family_split,
    pwl_n_agent,
    rho,
    shift,
    solve_linf,
    solve_lplus,
    solve_n,
    tabulated,
    var_indicator,
)

__all__ = [
    "DEFAULT_GRID",
    "BudgetError",
    "DistortionFn",
    "DomainError",
    "InfConvCurve",
    "PreconditionError",
    "brute_min",
    "check_existence",
    "dominates",
    "dual",
    "dual_power",
    "expected_shortfall",
    "flat_then_linear",
    "identity",
    "infconv_fn",
    "is_concave",
    "is_convex",
    "min_of",
    "piecewise_linear",
    "power",
    "power_family_split",
    "pwl_n_agent",
    "rho",
    "shift",
    "solve_linf",
    "solve_lplus",
    "solve_n",
    "tabulated",
    "var_indicator",
]
