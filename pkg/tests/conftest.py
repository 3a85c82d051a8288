"""Shared fixture builders for the test suite.

The randomized families are seeded and deterministic; every expected value
asserted in the tests comes from an oracle independent of the code path it
checks (closed forms, telescoping identities, higher-precision references,
or exhaustive exact arithmetic).
"""

from __future__ import annotations

import numpy as np

from recbound import check_kl_hypothesis, parse_phase


def monotone_slope_phase(rng: np.random.Generator, n_total: int):
    """A phase f = a*n + b*n^gamma whose slope is nondecreasing and trapped
    in [theta + 1e-4, 1 - theta - 1e-3] for n < n_total, by construction.

    Returns (expression text, theta).  The construction places the slope
    endpoints strictly inside the band, then verifies with the checker.
    """
    theta = float(rng.uniform(0.05, 0.45))
    lo = theta + 1e-4
    hi = 1.0 - theta - 1e-3
    if rng.uniform() < 0.2:
        a = float(rng.uniform(lo, hi))
        text = f"{a!r}*n"
    else:
        gamma = float(rng.uniform(1.1, 2.0))
        d_first = 2.0**gamma - 1.0
        d_last = float(n_total) ** gamma - float(n_total - 1) ** gamma
        span = float(rng.uniform(0.2, 1.0)) * (hi - lo)
        b = span / (d_last - d_first)
        a = lo - b * d_first
        text = f"{a!r}*n + {b!r}*n^{gamma!r}"
    expr = parse_phase(text)
    chk = check_kl_hypothesis(expr, n_total, theta)
    assert chk.holds, f"construction failed for {text}: violated at {chk.violation_at}"
    return expr, theta


def pole_free_phase(rng: np.random.Generator, n0_max: int, n_max: int):
    """A random smooth phase plus bounds, resampled until every slope on
    [n0, N+1] stays at least 1e-6 away from the integers."""
    while True:
        n0 = int(rng.integers(1, n0_max + 1))
        n_total = int(rng.integers(n0 + 10, n_max + 1))
        a = float(rng.uniform(0.05, 0.95))
        b = float(rng.uniform(-0.5, 0.5))
        c = float(rng.uniform(-0.2, 0.2))
        text = f"{a!r}*n + {b!r}*sqrt(n) + {c!r}*log(n)"
        expr = parse_phase(text)
        ns = np.arange(n0, n_total + 3, dtype=np.float64)
        d = np.diff(expr.evaluate(ns))
        dist = np.abs(d - np.round(d))
        if float(dist.min()) >= 1e-6:
            return expr, n0, n_total
