"""Exact rational kernels for raising/falling factorials and binomial identities.

Everything in this module runs in arbitrary-precision rational arithmetic
(`fractions.Fraction`); no rounding happens here.  The single float helper,
`raising_over_factorial`, is the bridge the multidimensional solver uses and
carries an explicit overflow guard.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

from .errors import OverflowGuardError

Rational = Union[Fraction, int]


def _check_order(n: int) -> int:
    if n < 0 or int(n) != n:
        raise ValueError("order must be a nonnegative integer")
    return int(n)


def raising(x: Rational, n: int) -> Fraction:
    """Raising factorial x(x+1)...(x+n-1); empty product is 1."""
    n = _check_order(n)
    out = Fraction(1)
    x = Fraction(x)
    for i in range(n):
        out *= x + i
    return out


def falling(x: Rational, n: int) -> Fraction:
    """Falling factorial x(x-1)...(x-n+1); empty product is 1."""
    n = _check_order(n)
    out = Fraction(1)
    x = Fraction(x)
    for i in range(n):
        out *= x - i
    return out


def binomial_ext(x: Rational, n: int) -> Fraction:
    """Generalized binomial coefficient: falling(x, n) / n! for any rational x."""
    n = _check_order(n)
    return falling(x, n) / math.factorial(n)


def shifted_binomial_sides(n: int, k: int, m: int) -> tuple[Fraction, Fraction]:
    """Both sides of the shift identity

        binom(n-k, m) == sum_{j=0}^{m} (-1)^(m-j) binom(n, j) raising(k, m-j)/(m-j)!

    evaluated exactly; the caller asserts equality.  The left side uses the
    generalized binomial, so n-k may be negative.
    """
    n, k, m = _check_order(n), _check_order(k), _check_order(m)
    lhs = binomial_ext(n - k, m)
    rhs = Fraction(0)
    for j in range(m + 1):
        sign = -1 if (m - j) % 2 else 1
        rhs += sign * binomial_ext(n, j) * raising(k, m - j) / math.factorial(m - j)
    return lhs, rhs


# Threshold beyond which a double would overflow: log(DBL_MAX) ~ 709.78.
_LOG_GUARD = 700.0


def raising_over_factorial(k: float, r: int) -> float:
    """raising(k, r) / r! as a double, with a log-domain overflow guard.

    The product k(k+1)...(k+r-1)/r! reaches double overflow once
    r*log(k+r) - log(r!) exceeds ~709; the guard trips a little early so the
    partial products themselves stay finite.
    """
    r = _check_order(r)
    if r == 0:
        return 1.0
    if k <= 0:
        raise ValueError("k must be positive")
    log_mag = r * math.log(k + r) - math.lgamma(r + 1)
    if log_mag > _LOG_GUARD:
        raise OverflowGuardError(
            f"raising({k:g}, {r})/{r}! has log-magnitude {log_mag:.1f} > {_LOG_GUARD:g}"
        )
    out = 1.0
    for i in range(r):
        out *= k + i
    return out / math.factorial(r)
