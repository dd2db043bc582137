"""Exact comparisons and certified ceilings for quantities like q^(-a/b)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import mpmath
from mpmath import iv

__all__ = ["QPower", "as_fraction_or_qpower", "to_interval", "certified_ceil", "ceil_log_ratio"]

_PRECISIONS = (64, 128, 256, 512, 2048, 8192)


@dataclass(frozen=True)
class QPower:
    """The positive real q^(-a/b), compared exactly against rationals."""

    q: int
    a: int
    b: int

    def __post_init__(self) -> None:
        if self.q < 2 or self.b < 1 or self.a < 0:
            raise ValueError(f"bad QPower({self.q}, {self.a}, {self.b})")
        g = math.gcd(self.a, self.b)
        object.__setattr__(self, "a", self.a // g)
        object.__setattr__(self, "b", self.b // g)

    def _cmp(self, r) -> int:
        # sign of (q^(-a/b) - r) for rational r > 0
        r = Fraction(r)
        if r <= 0:
            return 1
        lhs = r.denominator**self.b
        rhs = r.numerator**self.b * self.q**self.a
        return (lhs > rhs) - (lhs < rhs)

    def __lt__(self, r) -> bool:
        return self._cmp(r) < 0

    def __le__(self, r) -> bool:
        return self._cmp(r) <= 0

    def __gt__(self, r) -> bool:
        return self._cmp(r) > 0

    def __ge__(self, r) -> bool:
        return self._cmp(r) >= 0

    def __float__(self) -> float:
        return float(self.q) ** (-self.a / self.b)

    def __str__(self) -> str:
        if self.a == 0:
            return "1"
        if self.b == 1:
            return f"1/{self.q ** self.a}"
        return f"{self.q}^(-{self.a}/{self.b})"


def as_fraction_or_qpower(x):
    if isinstance(x, QPower):
        return x
    return Fraction(x)


def to_interval(x, ctx=iv):
    """Enclosing mpmath interval for a Fraction, int or QPower."""
    if isinstance(x, QPower):
        if x.a == 0:
            return ctx.mpf(1)
        return ctx.exp(-ctx.mpf(x.a) / x.b * ctx.log(x.q))
    x = Fraction(x)
    return ctx.mpf(x.numerator) / x.denominator


def certified_ceil(build: Callable) -> int:
    """Ceiling of a real given by ``build(iv)`` returning an enclosing interval.

    Precision grows until both endpoints share a ceiling; raises if the value
    looks like an exact integer that interval arithmetic cannot separate.
    """
    old = iv.prec
    try:
        for prec in _PRECISIONS:
            iv.prec = prec
            x = build(iv)
            lo, hi = int(mpmath.ceil(x.a.a)), int(mpmath.ceil(x.b.a))
            if lo == hi:
                return lo
    finally:
        iv.prec = old
    raise ArithmeticError("ceiling could not be certified")


def ceil_log_ratio(scale: int, log_arg: int, delta, log_multiplier: int = 1) -> int:
    """ceil(scale * log_multiplier * ln(log_arg) / delta), certified.

    ``delta`` is a Fraction or QPower.  ln(1) = 0 is handled exactly.
    """
    if log_arg < 1:
        raise ValueError("logarithm argument must be >= 1")
    if log_arg == 1 or log_multiplier == 0:
        return 0
    return certified_ceil(
        lambda ctx: ctx.mpf(scale * log_multiplier) * ctx.log(ctx.mpf(log_arg)) / to_interval(delta, ctx)
    )
