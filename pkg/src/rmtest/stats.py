"""Exact binomial (Clopper-Pearson) bounds at a sigma-equivalent confidence level."""

from __future__ import annotations

from scipy import stats as _st

__all__ = [
    "one_sided_alpha",
    "clopper_pearson",
    "demonstrates_at_least",
    "demonstrates_at_most",
    "consistent_with_at_least",
    "consistent_with_at_most",
]


def one_sided_alpha(sigma: float = 3.0) -> float:
    """Upper-tail mass of a standard normal beyond ``sigma`` (about 0.00135 at 3)."""
    return float(_st.norm.sf(sigma))


def clopper_pearson(successes: int, trials: int, sigma: float = 3.0) -> tuple[float, float]:
    """One-sided lower and upper exact bounds, each at level 1 - one_sided_alpha(sigma)."""
    if trials <= 0:
        return 0.0, 1.0
    if not 0 <= successes <= trials:
        raise ValueError("successes out of range")
    a = one_sided_alpha(sigma)
    lo = 0.0 if successes == 0 else float(_st.beta.ppf(a, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(_st.beta.ppf(1 - a, successes + 1, trials - successes))
    return lo, hi


def demonstrates_at_least(successes: int, trials: int, threshold, sigma: float = 3.0) -> bool:
    """The exact lower confidence bound clears the threshold."""
    return clopper_pearson(successes, trials, sigma)[0] >= float(threshold)


def demonstrates_at_most(successes: int, trials: int, bound, sigma: float = 3.0) -> bool:
    """The exact upper confidence bound stays below the bound."""
    return clopper_pearson(successes, trials, sigma)[1] <= float(bound)


def consistent_with_at_least(successes: int, trials: int, threshold, sigma: float = 3.0) -> bool:
    """The data do not rule out a rate >= threshold."""
    return clopper_pearson(successes, trials, sigma)[1] >= float(threshold)


def consistent_with_at_most(successes: int, trials: int, bound, sigma: float = 3.0) -> bool:
    """The data do not rule out a rate <= bound."""
    return clopper_pearson(successes, trials, sigma)[0] <= float(bound)
