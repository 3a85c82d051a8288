import math

import numpy as np
import pytest

from recbound import (
    Declarations,
    Regime,
    RefusedError,
    ScalarEquation,
    Verdict,
    WphiVerdict,
    classify_scalar,
    closed_form_scalar,
    criterion_partial_sums,
    explicit_source,
    phase_source,
    required_init_scalar,
    simulate_scalar,
    wphi_membership,
)

ZEROS = explicit_source([0j] * 20000)
ONES = phase_source("0")
ALT = phase_source("0.5*n")  # (-1)^n


def test_invalid_equation_parameters():
    with pytest.raises(ValueError):
        ScalarEquation(0.0, 0.0, 0j, ZEROS)
    with pytest.raises(ValueError):
        ScalarEquation(1.0, 1.0, 0j, ZEROS)


def test_from_complex_polar_form():
    eq = ScalarEquation.from_complex(2j, 1 + 0j, ZEROS)
    assert abs(eq.rho - 2.0) < 1e-15
    assert abs(eq.phi - 0.75) < 1e-15  # 2j = 2 e(-3/4)


def test_simulate_zero_input_zero_start():
    eq = ScalarEquation(1.0, 0.0, 0j, ZEROS)
    traj = simulate_scalar(eq, 100)
    assert traj.sup_abs == 0.0 and traj.final == 0j


def test_simulate_quarter_turns():
    eq = ScalarEquation(1.0, 0.25, 1 + 0j, ZEROS)
    traj = simulate_scalar(eq, 5)
    assert abs(traj.final - 1.0) < 1e-15  # four quarter-turns return to start
    assert abs(traj.sup_abs - 1.0) < 1e-15


def test_simulate_alternating_input_telescopes():
    eq = ScalarEquation(1.0, 0.0, 0j, ALT)
    traj = simulate_scalar(eq, 10**5)
    assert traj.sup_abs <= 1.0 + 1e-12


def test_closed_form_at_one_is_initial_value():
    eq = ScalarEquation(1.0, 0.3, 2 - 1j, ALT)
    assert closed_form_scalar(eq, 1) == 2 - 1j


def test_closed_form_geometric():
    eq = ScalarEquation(2.0, 0.0, 1 + 0j, ZEROS)
    assert closed_form_scalar(eq, 11) == 1024 + 0j
    assert simulate_scalar(eq, 11).final == 1024 + 0j


def test_simulation_matches_closed_form_randomized():
    rng = np.random.default_rng(314159)
    for _ in range(200):
        kind = rng.integers(3)
        if kind == 0:
            rho = float(rng.uniform(0.2, 0.98))
            n = int(rng.integers(2, 2001))
        elif kind == 1:
            rho = 1.0
            n = int(rng.integers(2, 10001))
        else:
            rho = float(rng.uniform(1.02, 1.3))
            n = int(rng.integers(2, 120))
        phi = float(rng.uniform(0.0, 1.0)) % 1.0
        x1 = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        y = phase_source(f"{float(rng.uniform(0.05, 0.95))!r}*n + {float(rng.uniform(-0.4, 0.4))!r}*sqrt(n)")
        eq = ScalarEquation(rho, phi, x1, y)
        sim = simulate_scalar(eq, n).final
        closed = closed_form_scalar(eq, n)
        assert abs(sim - closed) <= 1e-9 * max(1.0, abs(sim)), (rho, phi, n)


def test_trajectory_sup_is_full_resolution():
    # a spike between decimated sample points must still set the sup
    spike_at = 54321  # not on the geometric sample grid for N = 10^5
    vals = [0j] * (10**5)
    vals[spike_at - 1] = 500 + 0j
    eq = ScalarEquation(1.0, 0.0, 0j, explicit_source(vals))
    traj = simulate_scalar(eq, 10**5)
    assert traj.sup_abs == 500.0
    assert traj.sup_at == spike_at + 1
    assert not np.any(traj.samples[:, 0] == spike_at + 1)


def test_criterion_partial_sums_examples():
    assert criterion_partial_sums(ScalarEquation(1.0, 0.0, 0j, ZEROS), 1000) == 0.0
    assert abs(criterion_partial_sums(ScalarEquation(1.0, 0.0, 0j, ALT), 10**5) - 1.0) < 1e-12
    sup = criterion_partial_sums(ScalarEquation(1.0, 0.3, 0j, ONES), 10**5)
    assert abs(sup - 1.0 / math.sin(0.3 * math.pi)) < 1e-9


def test_criterion_requires_unit_circle():
    with pytest.raises(ValueError):
        criterion_partial_sums(ScalarEquation(2.0, 0.0, 0j, ONES), 10)


def test_criterion_two_sided_domination():
    # sup |x(n)| <= |x1| + sup criterion, and criterion <= |x1| + sup |x(n)|
    rng = np.random.default_rng(2718)
    for _ in range(10):
        phi = float(rng.uniform(0, 1))
        x1 = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        y = phase_source(f"{float(rng.uniform(0.1, 0.9))!r}*n")
        eq = ScalarEquation(1.0, phi, x1, y)
        horizon = 4000
        traj = simulate_scalar(eq, horizon)
        crit = criterion_partial_sums(eq, horizon)
        assert traj.sup_abs <= abs(x1) + crit + 1e-9
        assert crit <= abs(x1) + traj.sup_abs + 1e-9


def test_initial_value_independence_on_circle():
    # rotation preserves norms: trajectories from x1 and x1' differ by
    # exactly |x1 - x1'| at every step
    y = phase_source("0.3*n + 0.1*sqrt(n)")
    eq1 = ScalarEquation(1.0, 0.37, 1 + 1j, y)
    eq2 = ScalarEquation(1.0, 0.37, -0.5 + 2j, y)
    t1 = simulate_scalar(eq1, 3000)
    t2 = simulate_scalar(eq2, 3000)
    gap = abs((1 + 1j) - (-0.5 + 2j))
    vals1 = t1.samples[:, 2] + 1j * t1.samples[:, 3]
    vals2 = t2.samples[:, 2] + 1j * t2.samples[:, 3]
    assert np.max(np.abs(np.abs(vals1 - vals2) - gap)) < 1e-10


def test_required_init_scalar_constant_input():
    # x(1) = -sum a^(-k) = -1 for a = 2, y = 1; verified by the fixed point
    # of the recurrence (x = 2x + 1 at x = -1) and by the simulation staying
    # bounded (the spec text's -1/2 reproduces a typo; see decisions ledger)
    eq = ScalarEquation(2.0, 0.0, 0j, ONES)
    x1 = required_init_scalar(eq, 1e-18)
    assert x1 == -1.0 + 0j
    bounded = simulate_scalar(ScalarEquation(2.0, 0.0, x1, ONES), 200)
    assert bounded.sup_abs < 10.0


def test_required_init_scalar_zero_input():
    eq = ScalarEquation(2.0, 0.0, 0j, ZEROS)
    assert required_init_scalar(eq, 1e-12) == 0j


def test_required_init_scalar_alternating():
    # -sum (-1)^k 3^(-k) = 1/4: alternating geometric series
    eq = ScalarEquation(3.0, 0.0, 0j, ALT)
    x1 = required_init_scalar(eq, 1e-13)
    assert abs(x1 - 0.25) < 1e-13
    # boundedness check with exact +-1 terms: x = 1/4 -> -1/4 -> 1/4 is the
    # dyadic 2-cycle of the recurrence (phase-source terms carry ~1e-16
    # imaginary dust, which 3^n would amplify past any fixed bound)
    exact_alt = explicit_source([complex((-1) ** n, 0) for n in range(1, 61)])
    bounded = simulate_scalar(ScalarEquation(3.0, 0.0, 0.25 + 0j, exact_alt), 60)
    assert bounded.sup_abs < 2.0


def test_required_init_refuses_growing_input():
    growing = explicit_source([complex(n, 0) for n in range(1, 5001)])
    eq = ScalarEquation(2.0, 0.0, 0j, growing)
    with pytest.raises(RefusedError):
        required_init_scalar(eq, 1e-10)


def test_classify_contracting():
    cls = classify_scalar(ScalarEquation(0.5, 0.0, 0j, ONES), 10**4)
    assert cls.regime is Regime.ALL_BOUNDED
    assert cls.y_sup == 1.0


def test_classify_expanding():
    cls = classify_scalar(ScalarEquation(2.0, 0.0, 0j, ONES), 10**4, tol=1e-15)
    assert cls.regime is Regime.UNIQUE_BOUNDED
    assert abs(cls.required_x1 - (-1.0)) < 1e-12


def test_classify_critical_power_phase():
    cls = classify_scalar(ScalarEquation(1.0, 0.0, 0j, phase_source("n^0.5")), 10**5)
    assert cls.regime is Regime.CRITICAL
    assert cls.certificate.verdict is Verdict.UNBOUNDED_EVIDENCE


def test_classify_critical_non_phase_input():
    vals = [complex((-1) ** n, 0) for n in range(1, 20001)]
    cls = classify_scalar(ScalarEquation(1.0, 0.0, 0j, explicit_source(vals)), 2 * 10**4)
    assert cls.regime is Regime.CRITICAL
    assert cls.certificate.verdict is Verdict.BOUNDED_EVIDENCE
    assert cls.criterion_sup == 1.0


def test_wphi_member_bounded_phase():
    report = wphi_membership(0.25, phase_source("n^0.5 - n^(1/3) + log(n)"), 10**5,
                             Declarations(tail_majorant=None))
    assert report.verdict is WphiVerdict.MEMBER_EVIDENCE
    tail_cert = wphi_membership(
        0.25, phase_source("n^0.5 - n^(1/3) + log(n)"), 10**5,
        Declarations(tail_majorant=0.01),
    )
    assert tail_cert.verdict is WphiVerdict.MEMBER_CERTIFIED


def test_wphi_non_member_arctan_fixture():
    # rotation e(-3/4) with input e(sum arctan(k)): slope of the combined
    # phase tends to 1/4 + 3/4 = 1, an integer, so solutions are unbounded
    report = wphi_membership(
        0.75, phase_source_radians_arctan(), 10**5, Declarations(declared_psi=0.25)
    )
    assert report.verdict is WphiVerdict.NON_MEMBER_CERTIFIED


def phase_source_radians_arctan():
    from recbound import phase_source_radians

    return phase_source_radians("csum(1, atan(k))")


def test_wphi_alternating_member():
    report = wphi_membership(0.0, ALT, 10**4, Declarations(tail_majorant=0.0))
    assert report.verdict is WphiVerdict.MEMBER_CERTIFIED


def test_wphi_requires_phase_source():
    with pytest.raises(ValueError):
        wphi_membership(0.0, ZEROS, 10**4)


def test_wphi_closure_under_monotone_bounded_weights():
    # members absorb monotone bounded coefficient sequences: the weighted
    # partial sums obey the summation-by-parts bound
    # sup_K |sum b_n z_n e(n phi)| <= 3 * (sup |b|) * (sup partial sums)
    phi = 0.25
    horizon = 10**4
    zsrc = phase_source("0.3*n")
    base_sup = criterion_partial_sums(ScalarEquation(1.0, phi, 0j, zsrc), horizon)
    for b_text, b_sup in (("1/n", 1.0), ("1 + 1/n", 2.0)):
        weighted = phase_weighted_source(zsrc, b_text)
        w_sup = criterion_partial_sums(ScalarEquation(1.0, phi, 0j, weighted), horizon)
        assert w_sup <= 3.0 * b_sup * base_sup + 1e-9


def phase_weighted_source(src, weight_text):
    from recbound.phasefn import SequenceSource, parse_phase

    weight = parse_phase(weight_text)

    class _Weighted(SequenceSource):
        def terms(self, start, stop):
            ns = np.arange(start, stop, dtype=np.float64)
            return src.terms(start, stop) * weight.evaluate(ns)

        def describe(self):
            return f"({weight_text})*{src.describe()}"

    return _Weighted()
