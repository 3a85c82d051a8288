"""The one-dimensional equation x(n+1) = a*x(n) + y(n).

The coefficient is stored in polar form a = rho * e(-phi) with phi in cycles.
On the unit circle (rho = 1, the critical case) the iteration never multiplies
by a rectangular complex a: the substitution u(n) = e((n-1)*phi) * x(n) turns
the recurrence into a pure accumulation

    u(n+1) = u(n) + e(n*phi) * y(n),      |x(n)| = |u(n)|,

so phases come from split-multiply mod-1 reduction and norms suffer no drift
even over 10^7 steps.  Off the circle the plain iteration is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import OverflowGuardError, RefusedError
from .expsum import Certificate, Verdict, certify_bounded, certify_unbounded
from .numerics import (
    CHUNK,
    ComplexNeumaier,
    GrowthFit,
    envelope_scan,
    fit_growth,
    frac_linear,
    frac_linear_scalar,
    geometric_indices,
    unit_from_frac,
    unit_linear,
    unit_scalar,
)
from .phasefn import Binary, Const, Index, PhaseExpr, SequenceSource

_ABS_GUARD = 1e300


class Regime(str, Enum):
    ALL_BOUNDED = "AllBounded"
    UNIQUE_BOUNDED = "UniqueBounded"
    CRITICAL = "Critical"


class WphiVerdict(str, Enum):
    MEMBER_CERTIFIED = "MemberCertified"
    MEMBER_EVIDENCE = "MemberEvidence"
    NON_MEMBER_CERTIFIED = "NonMemberCertified"
    NON_MEMBER_EVIDENCE = "NonMemberEvidence"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Declarations:
    """Analytic claims supplied by the caller; they are what upgrades evidence
    to a certificate.

    tail_majorant: upper bound for the |second difference| tail of the input
    phase beyond the scan horizon.  declared_psi: declared limit of the slope
    of the input phase (cycles); any rotation phi is added internally.
    """

    tail_majorant: Optional[float] = None
    declared_psi: Optional[float] = None


@dataclass(frozen=True)
class ScalarEquation:
    rho: float
    phi: float
    x1: complex
    y: SequenceSource

    def __post_init__(self):
        if not self.rho > 0.0:
            raise ValueError("rho must be positive")
        if not 0.0 <= self.phi < 1.0:
            raise ValueError("phi must lie in [0, 1)")

    @property
    def a(self) -> complex:
        """The coefficient as a rectangular complex number (avoid when rho=1)."""
        return self.rho * unit_scalar(-self.phi)

    @classmethod
    def from_complex(cls, a: complex, x1: complex, y: SequenceSource) -> "ScalarEquation":
        rho = abs(a)
        if rho == 0.0:
            raise ValueError("coefficient must be nonzero")
        phi = float(np.mod(-np.angle(a) / (2.0 * math.pi), 1.0))
        return cls(rho, phi, x1, y)


@dataclass(frozen=True)
class Trajectory:
    """Decimated trajectory with an exact (full-resolution) running sup."""

    horizon: int
    sup_abs: float
    sup_at: int
    final: complex
    growth: GrowthFit
    samples: np.ndarray  # columns n, abs, re, im


def _trajectory_from(samples: np.ndarray, horizon: int, sup: float, sup_at: int,
                     final: complex, *, decades: float = 3.0) -> Trajectory:
    growth = fit_growth(samples[:, 0], samples[:, 1], decades=decades, min_abs=1e-12)
    return Trajectory(horizon, sup, sup_at, final, growth, samples)


def _simulate_unit_circle(eq: ScalarEquation, n_total: int) -> Trajectory:
    sample_ns = geometric_indices(n_total)
    rows = np.zeros((len(sample_ns), 4), dtype=np.float64)
    acc = ComplexNeumaier(complex(eq.x1))
    sup = abs(complex(eq.x1))
    sup_at = 1
    consumed = 0
    if sample_ns[0] == 1:
        rows[0] = (1.0, abs(complex(eq.x1)), complex(eq.x1).real, complex(eq.x1).imag)
        consumed = 1
    final = complex(eq.x1)
    for lo in range(1, n_total, CHUNK):
        hi = min(n_total - 1, lo + CHUNK - 1)
        terms = eq.y.terms(lo, hi + 1) * unit_linear(eq.phi, lo, hi + 1)
        cs = np.cumsum(terms)
        u_vals = acc.value + cs  # u(n) for n = lo+1 .. hi+1
        a_vals = np.abs(u_vals)
        j = int(np.argmax(a_vals))
        if float(a_vals[j]) > sup:
            sup = float(a_vals[j])
            sup_at = lo + 1 + j
        upto = int(np.searchsorted(sample_ns, hi + 1, side="right"))
        sel = sample_ns[consumed:upto] - (lo + 1)
        x_sel = u_vals[sel] * np.conj(unit_from_frac(frac_linear(eq.phi, sample_ns[consumed:upto] - 1)))
        rows[consumed:upto, 0] = sample_ns[consumed:upto]
        rows[consumed:upto, 1] = a_vals[sel]
        rows[consumed:upto, 2] = x_sel.real
        rows[consumed:upto, 3] = x_sel.imag
        consumed = upto
        acc.add(complex(cs[-1]))
        final = acc.value
    final_x = final * unit_scalar(-frac_linear_scalar(eq.phi, n_total - 1) % 1.0)
    return _trajectory_from(rows, n_total, sup, sup_at, final_x)


def _simulate_generic(eq: ScalarEquation, n_total: int) -> Trajectory:
    sample_ns = geometric_indices(n_total)
    rows = np.zeros((len(sample_ns), 4), dtype=np.float64)
    a = eq.a
    x = complex(eq.x1)
    sup = abs(x)
    sup_at = 1
    consumed = 0
    if sample_ns[0] == 1:
        rows[0] = (1.0, abs(x), x.real, x.imag)
        consumed = 1
    for lo in range(1, n_total, CHUNK):
        hi = min(n_total - 1, lo + CHUNK - 1)
        terms = eq.y.terms(lo, hi + 1)
        for off in range(hi - lo + 1):
            n = lo + off + 1
            x = a * x + complex(terms[off])
            ax = abs(x)
            if ax > _ABS_GUARD:
                raise OverflowGuardError(f"trajectory magnitude exceeded {_ABS_GUARD:g} at n={n}")
            if ax > sup:
                sup = ax
                sup_at = n
            if consumed < len(sample_ns) and sample_ns[consumed] == n:
                rows[consumed] = (float(n), ax, x.real, x.imag)
                consumed += 1
    return _trajectory_from(rows, n_total, sup, sup_at, x)


def simulate_scalar(eq: ScalarEquation, n_total: int) -> Trajectory:
    """Iterate the recurrence for n = 1..n_total; needs y on 1..n_total-1."""
    if n_total < 1:
        raise ValueError("horizon must be >= 1")
    if eq.rho == 1.0:
        return _simulate_unit_circle(eq, n_total)
    return _simulate_generic(eq, n_total)


def closed_form_scalar(eq: ScalarEquation, n: int) -> complex:
    """x(n) = a^(n-1) x(1) + sum_{k=1}^{n-1} a^(n-k-1) y(k), summed in reverse.

    The reverse-order accumulation makes this a distinct computation from
    simulate_scalar, which it must match to ~1e-9 relative.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return complex(eq.x1)
    if eq.rho == 1.0:
        acc = ComplexNeumaier()
        for lo in range(n - 1, 0, -CHUNK):
            lo_k = max(1, lo - CHUNK + 1)
            terms = eq.y.terms(lo_k, lo + 1) * unit_linear(eq.phi, lo_k, lo + 1)
            for t in terms[::-1]:
                acc.add(complex(t))
        inner = complex(eq.x1) + acc.value
        return inner * unit_scalar(-frac_linear_scalar(eq.phi, n - 1) % 1.0)
    a = eq.a
    acc = ComplexNeumaier()
    power = 1.0 + 0.0j  # a^(n-k-1) for k = n-1 down to 1
    for k in range(n - 1, 0, -1):
        acc.add(power * eq.y.term(k))
        power *= a
        if abs(power) > _ABS_GUARD:
            raise OverflowGuardError(f"geometric factor exceeded {_ABS_GUARD:g} at k={k}")
    return power * complex(eq.x1) + acc.value


def _criterion_scan(eq: ScalarEquation, sup_to: int):
    def chunk(lo: int, hi: int) -> np.ndarray:
        return eq.y.terms(lo, hi + 1) * unit_linear(eq.phi, lo, hi + 1)

    return envelope_scan(chunk, sup_to)


def criterion_partial_sums(eq: ScalarEquation, sup_to: int) -> float:
    """max_{J<=K} |sum_{k<=J} y_k e(k*phi)|: the boundedness criterion envelope.

    The running max is exact (taken at full resolution during the scan).
    """
    if eq.rho != 1.0:
        raise ValueError("criterion applies to the critical case rho = 1 only")
    return _criterion_scan(eq, sup_to).sup_abs


def _input_sup(y: SequenceSource, horizon: int) -> tuple[float, GrowthFit]:
    """Running sup of |y_n| plus a growth fit of the sup envelope."""
    marks = geometric_indices(horizon, 64)
    sup = 0.0
    vals = np.zeros(len(marks), dtype=np.float64)
    consumed = 0
    for lo in range(1, horizon + 1, CHUNK):
        hi = min(horizon, lo + CHUNK - 1)
        run = np.maximum.accumulate(np.abs(y.terms(lo, hi + 1)))
        upto = int(np.searchsorted(marks, hi, side="right"))
        sel = marks[consumed:upto] - lo
        vals[consumed:upto] = np.maximum(sup, run[sel])
        consumed = upto
        sup = max(sup, float(run[-1]))
    fit = fit_growth(marks.astype(np.float64), vals, decades=2.0, min_abs=1e-12)
    return sup, fit


def required_init_scalar(
    eq: ScalarEquation,
    tol: float,
    *,
    probe_horizon: int = 4096,
    y_bound: Optional[float] = None,
) -> complex:
    """The unique initial value with a bounded solution when rho > 1:

        x(1) = - sum_{k>=1} a^(-k) y(k),

    truncated once the geometric tail Y * rho^(-K) / (rho - 1) drops below tol
    (Y a bound for |y|, measured on a probe horizon unless declared).
    """
    if not eq.rho > 1.0:
        raise ValueError("expanding regime requires rho > 1")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    probe = probe_horizon
    if eq.y.horizon is not None:
        probe = min(probe, eq.y.horizon)
    if y_bound is None:
        y_sup, fit = _input_sup(eq.y, probe)
        if fit.reliable and fit.exponent > 0.1:
            raise RefusedError(
                f"input sup grows like n^{fit.exponent:.2f} on the probe horizon; "
                "declare a bound to override"
            )
        y_bound = y_sup
    y_bound = max(float(y_bound), 1e-300)
    k_cut = max(4, int(math.ceil(math.log(y_bound / (tol * (eq.rho - 1.0))) / math.log(eq.rho))) + 1)
    if eq.y.horizon is not None and k_cut > eq.y.horizon:
        raise RefusedError(
            f"series truncation needs {k_cut} terms but the source ends at {eq.y.horizon}"
        )
    acc = ComplexNeumaier()
    inv_mag = 1.0 / eq.rho
    for lo in range(1, k_cut + 1, CHUNK):
        hi = min(k_cut, lo + CHUNK - 1)
        ks = np.arange(lo, hi + 1, dtype=np.float64)
        # a^(-k) = rho^(-k) e(k*phi).  Term-by-term compensated accumulation:
        # for dyadic fixtures the partial sum must round to the exact limit,
        # because any initial-value error is amplified by rho^n afterwards.
        terms = eq.y.terms(lo, hi + 1) * unit_linear(eq.phi, lo, hi + 1) * inv_mag ** ks
        for t in terms:
            acc.add(complex(t))
    return -acc.value


@dataclass(frozen=True)
class WphiReport:
    verdict: WphiVerdict
    certificate: Certificate
    combined_phase: str


def wphi_membership(
    phi: float,
    y: SequenceSource,
    horizon: int,
    declarations: Optional[Declarations] = None,
) -> WphiReport:
    """Decide membership of y in W(phi), the inputs with all-bounded solutions.

    For a phase input y_n = e(f(n)) the weighted sums sum y_n e(n*phi) are the
    plain exponential sums of g(n) = f(n) + n*phi, so the boundedness
    certificates apply to g directly.
    """
    if y.phase_expr is None:
        raise ValueError("W(phi) membership analysis requires a phase input source")
    if not 0.0 <= phi < 1.0:
        raise ValueError("phi must lie in [0, 1)")
    decl = declarations or Declarations()
    g = PhaseExpr(Binary("+", y.phase_expr.root, Binary("*", Const(phi), Index())))
    cert = certify_bounded(g, horizon, tail_majorant=decl.tail_majorant)
    if cert.verdict is Verdict.BOUNDED_CERTIFIED:
        return WphiReport(WphiVerdict.MEMBER_CERTIFIED, cert, str(g))
    if cert.verdict is Verdict.BOUNDED_EVIDENCE:
        return WphiReport(WphiVerdict.MEMBER_EVIDENCE, cert, str(g))
    declared_total = None
    if decl.declared_psi is not None:
        declared_total = decl.declared_psi + phi
    cert_u = certify_unbounded(g, horizon, declared_psi=declared_total)
    if cert_u.verdict is Verdict.UNBOUNDED_CERTIFIED:
        return WphiReport(WphiVerdict.NON_MEMBER_CERTIFIED, cert_u, str(g))
    if cert_u.verdict is Verdict.UNBOUNDED_EVIDENCE:
        return WphiReport(WphiVerdict.NON_MEMBER_EVIDENCE, cert_u, str(g))
    report = dict(cert_u.hypothesis_report)
    report["bounded_attempt"] = cert.hypothesis_report
    return WphiReport(WphiVerdict.INCONCLUSIVE, Certificate(Verdict.INCONCLUSIVE, None, report), str(g))


@dataclass(frozen=True)
class ScalarClassification:
    regime: Regime
    y_sup: float
    y_growth: GrowthFit
    required_x1: Optional[complex]
    certificate: Optional[Certificate]
    criterion_sup: Optional[float]
    notes: tuple[str, ...]


def classify_scalar(
    eq: ScalarEquation,
    horizon: int,
    *,
    tol: float = 1e-9,
    declarations: Optional[Declarations] = None,
) -> ScalarClassification:
    """Regime report: contracting / expanding / critical, with the appropriate
    boundedness artifact for each (see module docstring for the critical case).
    """
    probe = horizon
    if eq.y.horizon is not None:
        probe = min(probe, eq.y.horizon)
    y_sup, y_fit = _input_sup(eq.y, probe)
    notes: list[str] = []
    if eq.rho < 1.0:
        if y_fit.reliable and y_fit.exponent > 0.1:
            notes.append("input sup appears to grow; bounded-solution guarantee is conditional")
        return ScalarClassification(
            Regime.ALL_BOUNDED, y_sup, y_fit, None, None, None, tuple(notes)
        )
    if eq.rho > 1.0:
        x1 = required_init_scalar(eq, tol, probe_horizon=probe, y_bound=y_sup)
        notes.append("bounded solution exists only for the reported initial value")
        return ScalarClassification(
            Regime.UNIQUE_BOUNDED, y_sup, y_fit, x1, None, None, tuple(notes)
        )
    # critical circle
    if eq.y.phase_expr is not None:
        report = wphi_membership(eq.phi, eq.y, horizon, declarations)
        notes.append(f"phase input: analyzed combined phase {report.combined_phase}")
        return ScalarClassification(
            Regime.CRITICAL, y_sup, y_fit, None, report.certificate, None, tuple(notes)
        )
    scan = _criterion_scan(eq, probe)
    fit = fit_growth(scan.samples[:, 0], scan.samples[:, 1], decades=3.0, min_abs=1.0)
    report = {
        "theorem": "partial-sum criterion: bounded solutions iff bounded weighted sums",
        "horizon": probe,
        "criterion_sup": scan.sup_abs,
        "criterion_growth_exponent": fit.exponent,
        "criterion_growth_reliable": fit.reliable,
    }
    if fit.reliable and fit.exponent >= 0.5:
        verdict = Verdict.UNBOUNDED_EVIDENCE
    elif fit.reliable and fit.exponent <= 0.05:
        verdict = Verdict.BOUNDED_EVIDENCE
    elif not fit.reliable and scan.sup_abs <= 1e3:
        verdict = Verdict.BOUNDED_EVIDENCE
        report["note"] = "envelope too flat for a growth fit; sup stayed small"
    else:
        verdict = Verdict.INCONCLUSIVE
    cert = Certificate(verdict, None, report)
    return ScalarClassification(
        Regime.CRITICAL, y_sup, y_fit, None, cert, scan.sup_abs, tuple(notes)
    )
