"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every tolerance is pinned here exactly as stated; expected values come from
independent oracles (closed forms, extended-precision references, exhaustive
exact arithmetic, alternating-series limits, direct summation).
"""

import json
import math
import time

import numpy as np
import pytest

from recbound import (
    CellSolutionEvaluator,
    CriticalCellProblem,
    JordanBlock,
    Verdict,
    abel_identity_residual,
    binomial_ext,
    bounded_initial_state,
    certify_bounded,
    certify_unbounded,
    critical_init_values,
    explicit_source,
    falling,
    kusmin_landau_bound,
    parse_phase,
    partial_sums,
    perturbation_probe,
    phase_source,
    raising,
    required_init_expanding,
    shifted_binomial_sides,
    simulate_block,
    tail_sum_bound,
)
from recbound.cli import main

from conftest import monotone_slope_phase, pole_free_phase


def _report(criterion: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def test_criterion_01_kusmin_landau_property_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(108)
    horizon = 10**5
    worst_margin = math.inf
    for _ in range(100):
        expr, theta = monotone_slope_phase(rng, horizon)  # verified inside
        sup = partial_sums(expr, horizon).sup_abs
        bound = kusmin_landau_bound(theta) + 1e-6
        worst_margin = min(worst_margin, bound - sup)
        assert sup <= bound, (str(expr), theta, sup, bound)
    elapsed = time.perf_counter() - start
    _report(
        "01 (envelope property suite)",
        worst_margin >= 0.0 and elapsed < 120.0,
        f"100 phases, sup <= cot(pi*theta/2)+1e-6, worst margin "
        f"{worst_margin:.3g}, {elapsed:.1f}s < 120s",
    )


def test_criterion_02_geometric_oracle():
    start = time.perf_counter()
    horizon = 10**6
    sa = partial_sums("0.3*n", horizon)
    # closed form |S(K)| = |sin(pi K phi)| / sin(pi phi), max over K <= N,
    # evaluated in 80-bit long double as an independent reference
    phi = np.longdouble(0.3)
    ks = np.arange(1, horizon + 1, dtype=np.longdouble)
    frac = np.mod(phi * ks, np.longdouble(1.0))
    closed = float(np.max(np.abs(np.sin(np.longdouble(np.pi) * frac)))
                   / np.sin(np.longdouble(np.pi) * phi))
    dev = abs(sa.sup_abs - closed)
    elapsed = time.perf_counter() - start
    _report(
        "02 (geometric oracle)",
        dev < 1e-6 and elapsed < 5.0,
        f"sup={sa.sup_abs!r} closed-form={closed!r} dev={dev:.3g} < 1e-6, "
        f"{elapsed:.2f}s < 5s",
    )


def test_criterion_03_bounded_sum_fixture():
    horizon = 10**6
    expr = parse_phase("0.25*n + sqrt(n)*log(n)")
    # |D2 f| = |D2(sqrt(n) log n)| <= 0.3 log(n) n^(-3/2) beyond the horizon
    tail = tail_sum_bound("0.3*log(n)*n^(-1.5)", horizon - 1, monotone_decreasing=True)
    cert = certify_bounded(expr, horizon, tail_majorant=tail)
    sa = partial_sums(expr, horizon)
    ok = (
        cert.verdict is Verdict.BOUNDED_CERTIFIED
        and sa.sup_abs <= cert.bound_value
        and sa.growth.exponent <= 0.05
    )
    _report(
        "03 (bounded-sum fixture)",
        ok,
        f"verdict={cert.verdict.value} sup={sa.sup_abs:.4f} <= "
        f"bound={cert.bound_value:.4f}, growth beta={sa.growth.exponent:.4f} <= 0.05",
    )


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
def test_criterion_04_unbounded_fixtures(alpha):
    horizon = 10**6
    text = f"n^{alpha!r}"
    sa = partial_sums(text, horizon)
    cert = certify_unbounded(text, horizon, declared_psi=0.0)
    beta_dev = abs(sa.growth.exponent - (1.0 - alpha))
    ok = (
        cert.verdict is Verdict.UNBOUNDED_CERTIFIED
        and sa.final_abs > 50.0
        and beta_dev <= 0.15
    )
    _report(
        f"04 (unbounded fixture alpha={alpha})",
        ok,
        f"verdict={cert.verdict.value}, |S(10^6)|={sa.final_abs:.2f} (need > 50), "
        f"beta={sa.growth.exponent:.3f} vs 1-alpha={1 - alpha:.1f} (dev {beta_dev:.3f})",
    )


def test_criterion_05_abel_identity_random_instances():
    rng = np.random.default_rng(515151)
    worst = 0.0
    for _ in range(100):
        expr, n0, n_total = pole_free_phase(rng, 10**3, 10**5)
        worst = max(worst, abel_identity_residual(expr, n0, n_total))
    _report(
        "05 (summation-by-parts identity)",
        worst <= 1e-6,
        f"100 pole-free instances, n0 <= 1e3, N <= 1e5, worst residual {worst:.3g} <= 1e-6",
    )


def test_criterion_06_exact_identity_suite():
    from fractions import Fraction

    start = time.perf_counter()
    for n in range(0, 31):
        for k in range(0, 31):
            for m in range(0, 13):
                lhs, rhs = shifted_binomial_sides(n, k, m)
                assert lhs == rhs, (n, k, m)
    grid = [Fraction(v) for v in range(-10, 11)]
    grid += [Fraction(1, 2), Fraction(-1, 2), Fraction(3, 2), Fraction(-3, 2)]
    for x in grid:
        for n in range(0, 21):
            assert falling(-x, n) == (-1) ** n * raising(x, n), (x, n)
    for x in grid:
        for y in grid:
            for n in range(0, 16):
                lhs = falling(x + y, n)
                rhs = sum(
                    binomial_ext(n, i) * falling(x, i) * falling(y, n - i)
                    for i in range(n + 1)
                )
                assert lhs == rhs, (x, y, n)
    elapsed = time.perf_counter() - start
    _report(
        "06 (exact identity suite)",
        elapsed < 30.0,
        f"shift identity exhaustive n,k<=30,m<=12; reflection & convolution on "
        f"stated grids; zero failures, {elapsed:.1f}s < 30s",
    )


def test_criterion_07_cell_solution_equivalence():
    rng = np.random.default_rng(7777)
    worst = 0.0
    for _ in range(50):
        order = int(rng.integers(1, 6))
        phi = float(rng.uniform(0.0, 1.0)) % 1.0
        inputs = tuple(
            phase_source(
                f"{float(rng.uniform(0.05, 0.95))!r}*n"
                f" + {float(rng.uniform(-0.3, 0.3))!r}*sqrt(n)"
            )
            for _ in range(order)
        )
        init = tuple(complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(order))
        blk = JordanBlock(1.0, phi, order, inputs, init)
        ev = CellSolutionEvaluator(blk)
        for n in (2, 31, 777, 10**4):
            sim = simulate_block(blk, n)
            for m in range(1, order + 1):
                ref = sim[m - 1].final
                got = ev.value(m, n)
                rel = abs(got - ref) / max(1.0, abs(ref))
                worst = max(worst, rel)
                assert rel <= 1e-7, (order, phi, m, n, rel)
    _report(
        "07 (closed-form cell solution equivalence)",
        worst <= 1e-7,
        f"50 random critical cells (order <= 5), n <= 1e4, worst relative "
        f"deviation {worst:.3g} <= 1e-7",
    )


def test_criterion_08_critical_cell_construction():
    # alternating-harmonic fixture: lam = 1, order 2, unscaled second row (-1)^n
    problem = CriticalCellProblem(0.0, 2, (explicit_source([0j] * 10**6),
                                           phase_source("0.5*n")))
    result = critical_init_values(problem, tol=1e-8, probe_horizon=10**6)
    target = math.log(2.0)  # independent alternating-series oracle
    err = abs(result.values[0] - target)
    assert err <= 1e-8, err

    state = bounded_initial_state(problem, result)
    trajs = simulate_block(problem.block(state), 10**6)
    sup = max(t.sup_abs for t in trajs)
    beta = max(t.growth.exponent for t in trajs)
    assert math.isfinite(sup) and sup < 100.0
    assert beta <= 0.05, beta

    probe = perturbation_probe(problem, state, 0.1, 2, 10**5)
    ratio = probe.row1_final_ratio
    ok = err <= 1e-8 and beta <= 0.05 and 0.08 <= ratio <= 0.12
    _report(
        "08 (critical-cell construction)",
        ok,
        f"x_2(1)={result.values[0].real:.10f} vs ln2 (err {err:.2e} <= 1e-8); "
        f"10^6-step sup={sup:.3f} beta={beta:.4f} <= 0.05; "
        f"perturbation ratio {ratio:.4f} in [0.08, 0.12]",
    )


def test_criterion_09_expanding_initializer():
    ones = phase_source("0")
    zeros = explicit_source([0j] * 4096)
    blk = JordanBlock(2.0, 0.0, 2, (zeros, ones))
    inits = required_init_expanding(blk, 1e-18)
    bounded = simulate_block(JordanBlock(2.0, 0.0, 2, (zeros, ones), tuple(inits)), 200)
    sup = max(t.sup_abs for t in bounded)
    perturbed = simulate_block(
        JordanBlock(2.0, 0.0, 2, (zeros, ones), (inits[0] + 0.01, inits[1])), 25
    )
    blowup = perturbed[0].sup_abs
    ok = sup < 10.0 and blowup > 1e3
    _report(
        "09 (expanding-regime initializer)",
        ok,
        f"x(1)={[v.real for v in inits]}, 200-step sup={sup:.3f} < 10; "
        f"0.01-perturbed first row reaches {blowup:.3g} > 1e3 within 25 steps",
    )


def test_criterion_10_sweep_determinism(tmp_path):
    doc = {
        "kind": "expsum",
        "phase": "n^{alpha}",
        "horizon": 10**5,
        "declared_psi": 0,
        "sweep": {"parameter": "alpha", "values": [0.3, 0.5, 0.7]},
    }
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps(doc))
    blobs = []
    for jobs, sub in ((1, "j1"), (8, "j8")):
        out = tmp_path / sub
        code = main(["sweep", str(cfg), "--jobs", str(jobs), "--out", str(out)])
        assert code == 0
        blobs.append((out / "sweep.sweep.csv").read_bytes())
    ok = blobs[0] == blobs[1]
    _report(
        "10 (sweep determinism)",
        ok,
        f"aggregate CSV bitwise identical across --jobs 1 and --jobs 8 "
        f"({len(blobs[0])} bytes)",
    )
