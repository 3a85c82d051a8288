import math
from fractions import Fraction

import pytest

from recbound import (
    OverflowGuardError,
    binomial_ext,
    falling,
    raising,
    raising_over_factorial,
    shifted_binomial_sides,
)


def test_raising_examples():
    assert raising(3, 2) == 12
    assert raising(Fraction(7, 3), 0) == 1
    assert raising(-5, 0) == 1
    assert raising(1, 5) == 120


def test_falling_examples():
    assert falling(5, 3) == 60
    assert falling(2, 3) == 0
    assert falling(-1, 2) == 2


def test_binomial_examples():
    assert binomial_ext(5, 2) == 10
    assert binomial_ext(Fraction(11, 7), 0) == 1
    assert binomial_ext(Fraction(1, 2), 2) == Fraction(-1, 8)
    # extension to negative upper index
    assert binomial_ext(-3, 2) == 6


def test_results_are_exact_rationals():
    out = binomial_ext(Fraction(1, 3), 3)
    assert isinstance(out, Fraction)
    assert out == Fraction(1, 3) * Fraction(-2, 3) * Fraction(-5, 3) / 6


def test_shifted_binomial_sides_examples():
    lhs, rhs = shifted_binomial_sides(5, 2, 2)
    assert lhs == rhs == 3
    # k = 0: only the j = m term survives, both sides binom(n, m)
    for n in (0, 3, 9):
        lhs, rhs = shifted_binomial_sides(n, 0, 4)
        assert lhs == rhs == binomial_ext(n, 4)
    # m = 0: both sides 1
    lhs, rhs = shifted_binomial_sides(17, 5, 0)
    assert lhs == rhs == 1


def test_shifted_binomial_identity_small_grid():
    for n in range(0, 13):
        for k in range(0, 13):
            for m in range(0, 7):
                lhs, rhs = shifted_binomial_sides(n, k, m)
                assert lhs == rhs, (n, k, m)


def test_reflection_identity():
    # falling(-x, n) = (-1)^n raising(x, n)
    grid = [Fraction(v) for v in range(-10, 11)]
    grid += [Fraction(1, 2), Fraction(-1, 2), Fraction(3, 2), Fraction(-3, 2)]
    for x in grid:
        for n in range(0, 21):
            assert falling(-x, n) == (-1) ** n * raising(x, n), (x, n)


def test_vandermonde_convolution():
    grid = [Fraction(v) for v in (-3, -1, 0, 1, 2, 5)] + [Fraction(1, 2), Fraction(-3, 2)]
    for x in grid:
        for y in grid:
            for n in range(0, 16):
                lhs = falling(x + y, n)
                rhs = sum(
                    binomial_ext(n, i) * falling(x, i) * falling(y, n - i)
                    for i in range(n + 1)
                )
                assert lhs == rhs, (x, y, n)


def test_order_must_be_nonnegative_integer():
    with pytest.raises(ValueError):
        raising(3, -1)
    with pytest.raises(ValueError):
        falling(3, -2)


def test_raising_over_factorial_matches_exact():
    for k in (1, 2, 17, 1000, 10**6):
        for r in (0, 1, 3, 5):
            exact = raising(k, r) / math.factorial(r)
            got = raising_over_factorial(float(k), r)
            assert abs(got - float(exact)) <= 1e-12 * float(exact)


def test_raising_over_factorial_overflow_guard():
    # r*log(k+r) - log(r!) crosses ~700 well before the product overflows
    with pytest.raises(OverflowGuardError):
        raising_over_factorial(1e6, 80)
    # comfortably representable case near the documented regime
    assert math.isfinite(raising_over_factorial(1e6, 8))
