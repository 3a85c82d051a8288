"""Block-diagonal Jordan systems x(n+1) = J x(n) + y(n).

A cell of order M with eigenvalue lam = rho * e(-phi) couples rows by
back-substitution: x_i(n+1) = lam*x_i(n) + x_{i+1}(n) + y_i(n), the last row
being a plain scalar equation.  On the unit circle the whole cell is iterated
in the rotating frame w(n) = lam^(-(n-1)) x(n), where the recurrence becomes

    w_i(n+1) = w_i(n) + lam^(-1) w_{i+1}(n) + lam^(-n) y_i(n),

a pure accumulation with unit rotations generated fresh from split mod-1
phases each step - no norm drift, and |x_i(n)| = |w_i(n)| exactly.

The critical-cell machinery operationalizes the constructive initial values:
inputs enter pre-scaled, y_m(n) = ytilde_m(n) / n^(m-1), each ytilde_m must
have numerically bounded rotated partial sums (measured sup C_m), and the
initial values for rows m >= 2 are tails of the series

    x_m(1) = - sum_{r=0}^{M-m} (-1)^r sum_k (k)^[r]/r! * lam^(-k-r) * y_{r+m}(k)

truncated where the Dirichlet-test tail bound (C/r!) (K)^[r] / K^(r+m-1)
drops below the per-series budget tol / (M (M+1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import OverflowGuardError, RefusedError, TransformError
from .factpoly import raising_over_factorial
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
from .phasefn import SequenceSource, scaled_source
from .scalar import Regime, Trajectory, _trajectory_from

_ABS_GUARD = 1e300
_SERIES_CHUNK = 1 << 22


@dataclass(frozen=True)
class JordanBlock:
    """One Jordan cell: eigenvalue rho*e(-phi), order, per-row inputs and inits."""

    rho: float
    phi: float
    order: int
    inputs: tuple[SequenceSource, ...]
    init: tuple[complex, ...] = ()

    def __post_init__(self):
        if not self.rho > 0.0:
            raise ValueError("rho must be positive")
        if not 0.0 <= self.phi < 1.0:
            raise ValueError("phi must lie in [0, 1)")
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if len(self.inputs) != self.order:
            raise ValueError("need one input sequence per row")
        if not self.init:
            object.__setattr__(self, "init", tuple(0.0j for _ in range(self.order)))
        elif len(self.init) != self.order:
            raise ValueError("need one initial value per row")

    @property
    def eigenvalue(self) -> complex:
        return self.rho * unit_scalar(-self.phi)

    def regime(self) -> Regime:
        if self.rho < 1.0:
            return Regime.ALL_BOUNDED
        if self.rho > 1.0:
            return Regime.UNIQUE_BOUNDED
        return Regime.CRITICAL


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def _simulate_unit_block(b: JordanBlock, n_total: int, decades: float) -> list[Trajectory]:
    m_rows = b.order
    sample_ns = geometric_indices(n_total)
    rows_data = [np.zeros((len(sample_ns), 4), dtype=np.float64) for _ in range(m_rows)]
    accs = [ComplexNeumaier(complex(v)) for v in b.init]
    sups = [abs(complex(v)) for v in b.init]
    sup_ats = [1] * m_rows
    consumed = 0
    if sample_ns[0] == 1:
        for i in range(m_rows):
            v = complex(b.init[i])
            rows_data[i][0] = (1.0, abs(v), v.real, v.imag)
        consumed = 1
    rot1 = unit_scalar(frac_linear_scalar(b.phi, 1))  # lam^(-1)
    for lo in range(1, n_total, CHUNK):
        hi = min(n_total - 1, lo + CHUNK - 1)
        rot_n = unit_linear(b.phi, lo, hi + 1)  # lam^(-n)
        before = [acc.value for acc in accs]
        outs: list[Optional[np.ndarray]] = [None] * m_rows
        for i in range(m_rows - 1, -1, -1):
            inc = rot_n * b.inputs[i].terms(lo, hi + 1)
            if i < m_rows - 1:
                prev = outs[i + 1]
                shifted = np.empty_like(prev)
                shifted[0] = before[i + 1]
                shifted[1:] = prev[:-1]
                inc = inc + rot1 * shifted
            cs = np.cumsum(inc)
            vals = before[i] + cs  # w_i(n+1) for n = lo..hi
            outs[i] = vals
            avals = np.abs(vals)
            j = int(np.argmax(avals))
            if float(avals[j]) > sups[i]:
                sups[i] = float(avals[j])
                sup_ats[i] = lo + 1 + j
            accs[i].add(complex(cs[-1]))
        upto = int(np.searchsorted(sample_ns, hi + 1, side="right"))
        sel_ns = sample_ns[consumed:upto]
        sel = sel_ns - (lo + 1)
        rot_back = np.conj(unit_from_frac(frac_linear(b.phi, sel_ns - 1)))
        for i in range(m_rows):
            x_sel = outs[i][sel] * rot_back
            rows_data[i][consumed:upto, 0] = sel_ns
            rows_data[i][consumed:upto, 1] = np.abs(outs[i][sel])
            rows_data[i][consumed:upto, 2] = x_sel.real
            rows_data[i][consumed:upto, 3] = x_sel.imag
        consumed = upto
    back = unit_scalar(-frac_linear_scalar(b.phi, n_total - 1) % 1.0) if n_total > 1 else 1.0
    return [
        _trajectory_from(rows_data[i], n_total, sups[i], sup_ats[i], accs[i].value * back,
                         decades=decades)
        for i in range(m_rows)
    ]


def _simulate_generic_block(b: JordanBlock, n_total: int, decades: float) -> list[Trajectory]:
    m_rows = b.order
    lam = b.eigenvalue
    sample_ns = geometric_indices(n_total)
    rows_data = [np.zeros((len(sample_ns), 4), dtype=np.float64) for _ in range(m_rows)]
    x = [complex(v) for v in b.init]
    sups = [abs(v) for v in x]
    sup_ats = [1] * m_rows
    consumed = 0
    if sample_ns[0] == 1:
        for i in range(m_rows):
            rows_data[i][0] = (1.0, abs(x[i]), x[i].real, x[i].imag)
        consumed = 1
    for lo in range(1, n_total, CHUNK):
        hi = min(n_total - 1, lo + CHUNK - 1)
        ys = [src.terms(lo, hi + 1) for src in b.inputs]
        for off in range(hi - lo + 1):
            n = lo + off + 1
            new = [0.0j] * m_rows
            for i in range(m_rows):
                up = x[i + 1] if i + 1 < m_rows else 0.0j
                new[i] = lam * x[i] + up + complex(ys[i][off])
            x = new
            for i in range(m_rows):
                ax = abs(x[i])
                if ax > _ABS_GUARD:
                    raise OverflowGuardError(
                        f"row {i + 1} magnitude exceeded {_ABS_GUARD:g} at n={n}"
                    )
                if ax > sups[i]:
                    sups[i] = ax
                    sup_ats[i] = n
            if consumed < len(sample_ns) and sample_ns[consumed] == n:
                for i in range(m_rows):
                    rows_data[i][consumed] = (float(n), abs(x[i]), x[i].real, x[i].imag)
                consumed += 1
    return [
        _trajectory_from(rows_data[i], n_total, sups[i], sup_ats[i], x[i], decades=decades)
        for i in range(m_rows)
    ]


def simulate_block(b: JordanBlock, n_total: int, *, growth_decades: float = 2.0) -> list[Trajectory]:
    """Row trajectories for n = 1..n_total (row i at index i-1).

    Growth exponents are fitted on the last two decades of n: the polynomial
    binomial prefactors in the solution die off slowly, and early transients
    would otherwise pollute the exponent.
    """
    if n_total < 1:
        raise ValueError("horizon must be >= 1")
    if b.rho == 1.0:
        return _simulate_unit_block(b, n_total, growth_decades)
    return _simulate_generic_block(b, n_total, growth_decades)


# ---------------------------------------------------------------------------
# Explicit cell solution
# ---------------------------------------------------------------------------

class CellSolutionEvaluator:
    """Evaluate the closed-form cell solution with prefix-cached inner sums.

    x_m(n) = sum_{i=0}^{M-m} binom(n-1, i) lam^(n-1-i) [ x_{i+m}(1)
               + sum_{r=0}^{M-(i+m)} (-1)^r P_{r, r+i+m}(n) ],
    P_{r,j}(n) = sum_{k=1}^{n-1} (k)^[r]/r! * lam^(-k-r) * y_j(k).

    The P sums advance incrementally, so sweeping n upward costs O(1)
    amortized per step.  Evaluation at a smaller n than already advanced
    requires a fresh evaluator.
    """

    def __init__(self, block: JordanBlock):
        self.block = block
        m = block.order
        self._pairs = [(r, j) for j in range(1, m + 1) for r in range(0, j)]
        self._sums = {pair: ComplexNeumaier() for pair in self._pairs}
        self._next_k = 1

    def _rot_neg(self, lo: int, hi: int, shift: int) -> np.ndarray:
        """lam^(-(k+shift)) for k in [lo, hi]."""
        units = unit_linear(self.block.phi, lo + shift, hi + 1 + shift)
        if self.block.rho == 1.0:
            return units
        exps = np.arange(lo + shift, hi + 1 + shift, dtype=np.float64)
        logmag = -exps * math.log(self.block.rho)
        if np.any(logmag > 690.0):
            raise OverflowGuardError("lam^(-k) magnitude exceeds double range")
        return np.exp(logmag) * units

    def _advance(self, n: int) -> None:
        while self._next_k <= n - 1:
            lo = self._next_k
            hi = min(n - 1, lo + CHUNK - 1)
            ks = np.arange(lo, hi + 1, dtype=np.float64)
            ys = {j: self.block.inputs[j - 1].terms(lo, hi + 1)
                  for j in {j for _, j in self._pairs}}
            for r, j in self._pairs:
                w = np.ones(len(ks))
                for t in range(r):
                    w = w * (ks + t)
                w /= math.factorial(r)
                terms = w * self._rot_neg(lo, hi, r) * ys[j]
                self._sums[(r, j)].add(complex(np.sum(terms)))
            self._next_k = hi + 1

    def _lam_pow(self, p: int) -> complex:
        u = np.conj(unit_scalar(frac_linear_scalar(self.block.phi, p)))
        if self.block.rho == 1.0:
            return complex(u)
        logmag = p * math.log(self.block.rho)
        if logmag > 690.0:
            raise OverflowGuardError("lam^p magnitude exceeds double range")
        return complex(math.exp(logmag) * u)

    def value(self, row_m: int, n: int) -> complex:
        m_rows = self.block.order
        if not 1 <= row_m <= m_rows:
            raise ValueError("row index out of range")
        if n < 1:
            raise ValueError("n must be >= 1")
        if n - 1 < self._next_k - 1:
            raise ValueError("evaluator already advanced past this n; use a fresh one")
        self._advance(n)
        total = ComplexNeumaier()
        for i in range(0, m_rows - row_m + 1):
            j_row = i + row_m
            coeff = float(math.comb(n - 1, i))
            bracket = ComplexNeumaier(complex(self.block.init[j_row - 1]))
            for r in range(0, m_rows - j_row + 1):
                sign = -1.0 if r % 2 else 1.0
                bracket.add(sign * self._sums[(r, r + j_row)].value)
            total.add(coeff * self._lam_pow(n - 1 - i) * bracket.value)
        return total.value


def explicit_cell_solution(b: JordanBlock, row_m: int, n: int) -> complex:
    """One-shot closed-form value x_{row_m}(n); use the evaluator for sweeps."""
    return CellSolutionEvaluator(b).value(row_m, n)


# ---------------------------------------------------------------------------
# Spectrum classification
# ---------------------------------------------------------------------------

class SystemVerdict(str, Enum):
    ALL_BOUNDED = "AllBounded"
    SPLIT_SOLVABLE = "SplitSolvable"
    CRITICAL = "Critical"


@dataclass(frozen=True)
class BlockRegime:
    index: int
    rho: float
    phi: float
    order: int
    regime: Regime


@dataclass(frozen=True)
class SpectrumReport:
    blocks: tuple[BlockRegime, ...]
    verdict: SystemVerdict


@dataclass(frozen=True, eq=False)
class JordanSystem:
    """Block-diagonal system plus an optional similarity transform T.

    When T is present the original equation is T J T^(-1); boundedness
    verdicts transfer both ways with norm distortion at most hs(T)*hs(T^(-1)).
    """

    blocks: tuple[JordanBlock, ...]
    transform: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("system needs at least one block")
        if self.transform is not None:
            t = np.asarray(self.transform, dtype=np.complex128)
            if t.ndim != 2 or t.shape[0] != t.shape[1]:
                raise TransformError("transform must be a square matrix")
            if t.shape[0] != self.dimension:
                raise TransformError(
                    f"transform is {t.shape[0]}x{t.shape[1]} but blocks span {self.dimension}"
                )
            object.__setattr__(self, "transform", t)

    @property
    def dimension(self) -> int:
        return sum(b.order for b in self.blocks)


def classify_spectrum(system: JordanSystem) -> SpectrumReport:
    """Label every block contracting/expanding/critical and combine.

    All contracting -> every solution bounded.  No critical block -> the space
    splits and exactly one initial value on the expanding part gives a bounded
    solution.  Any critical block -> per-cell analysis is required.
    """
    blocks = tuple(
        BlockRegime(i, b.rho, b.phi, b.order, b.regime())
        for i, b in enumerate(system.blocks)
    )
    if all(b.regime is Regime.ALL_BOUNDED for b in blocks):
        verdict = SystemVerdict.ALL_BOUNDED
    elif all(b.regime is not Regime.CRITICAL for b in blocks):
        verdict = SystemVerdict.SPLIT_SOLVABLE
    else:
        verdict = SystemVerdict.CRITICAL
    return SpectrumReport(blocks, verdict)


# ---------------------------------------------------------------------------
# Expanding-cell initial values
# ---------------------------------------------------------------------------

def _input_sup_probe(src: SequenceSource, horizon: int) -> tuple[float, GrowthFit]:
    from .scalar import _input_sup

    return _input_sup(src, horizon)


def required_init_expanding(
    b: JordanBlock,
    tol: float,
    *,
    probe_horizon: int = 4096,
    y_bound: Optional[float] = None,
) -> list[complex]:
    """The unique initial vector with a bounded solution when rho > 1:

        x(1) = - sum_{k>=1} J^(-k) y(k),
        (J^(-k))_{i,i+j} = binom(-k, j) lam^(-k-j) = (-1)^j (k)^[j]/j! lam^(-k-j).

    Truncation is geometric-dominated: the entries grow polynomially in k and
    lam^(-k) decays like rho^(-k).  Accumulation is per-term compensated, so
    dyadic fixtures round to the exact limit (errors are amplified by rho^n
    downstream).
    """
    if not b.rho > 1.0:
        raise ValueError("expanding regime requires rho > 1")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    probe = probe_horizon
    horizons = [s.horizon for s in b.inputs if s.horizon is not None]
    if horizons:
        probe = min(probe, min(horizons))
    if y_bound is None:
        y_bound = 0.0
        for src in b.inputs:
            sup, fit = _input_sup_probe(src, probe)
            if fit.reliable and fit.exponent > 0.1:
                raise RefusedError(
                    f"input row {src.describe()} grows like n^{fit.exponent:.2f} on the probe"
                )
            y_bound = max(y_bound, sup)
    y_bound = max(float(y_bound), 1e-300)
    m_rows = b.order

    def tail_bound(k_cut: int) -> float:
        # term magnitude <= Y * (k+M)^M / M! * rho^(-k); ratio of consecutive
        # bounds is below r = ((k+1+M)/(k+M))^M / rho
        k1 = k_cut + 1
        top = y_bound * (k1 + m_rows) ** m_rows / math.factorial(m_rows) * b.rho ** (-k1)
        ratio = ((k1 + 1 + m_rows) / (k1 + m_rows)) ** m_rows / b.rho
        if ratio >= 1.0:
            return math.inf
        return top * (m_rows + 1) / (1.0 - ratio)

    k_cut = 8
    while tail_bound(k_cut) > tol:
        k_cut += max(8, k_cut // 2)
        if k_cut > 10**7:
            raise RefusedError("tolerance unreachable: geometric decay too slow")
    if horizons and k_cut > min(horizons):
        raise RefusedError(
            f"series truncation needs {k_cut} terms but an input ends at {min(horizons)}"
        )
    accs = [ComplexNeumaier() for _ in range(m_rows)]
    ys = [src.terms(1, k_cut + 1) for src in b.inputs]
    for k in range(1, k_cut + 1):
        rot_base = unit_scalar(frac_linear_scalar(b.phi, k))  # e(k*phi)
        rot_step = unit_scalar(frac_linear_scalar(b.phi, 1))
        mag = b.rho ** float(-k)
        binom = 1.0  # (k)^[j]/j!
        rot = rot_base
        magj = mag
        for j in range(0, m_rows):
            sign = -1.0 if j % 2 else 1.0
            entry = sign * binom * magj * rot  # binom(-k, j) lam^(-k-j)
            for i in range(1, m_rows - j + 1):
                accs[i - 1].add(entry * complex(ys[i + j - 1][k - 1]))
            binom = binom * (k + j) / (j + 1)
            rot = rot * rot_step
            magj = magj / b.rho
    return [-acc.value for acc in accs]


# ---------------------------------------------------------------------------
# Critical cells
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalCellProblem:
    """Critical cell data in pre-scaled form.

    `ytilde[m-1]` is the unscaled row input; the row actually driving the cell
    is ytilde_m(n)/n^(m-1), applied here by construction rather than trusted
    from the caller.  alpha optionally records witnesses: initial values that
    keep the scalar equations z' = lam z + ytilde_m bounded.
    """

    phi: float
    order: int
    ytilde: tuple[SequenceSource, ...]
    alpha: Optional[tuple[complex, ...]] = None

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("critical-cell analysis needs order >= 2")
        if not 0.0 <= self.phi < 1.0:
            raise ValueError("phi must lie in [0, 1)")
        if len(self.ytilde) != self.order:
            raise ValueError("need one unscaled input per row")

    def scaled_input(self, row_m: int) -> SequenceSource:
        return scaled_source(self.ytilde[row_m - 1], row_m - 1)

    def block(self, init: Sequence[complex]) -> JordanBlock:
        return JordanBlock(
            1.0,
            self.phi,
            self.order,
            tuple(self.scaled_input(m) for m in range(1, self.order + 1)),
            tuple(complex(v) for v in init),
        )


@dataclass(frozen=True)
class InputBoundsReport:
    """Measured sups C_m of |sum_{n<=K} ytilde_m(n) lam^(-n)| plus trend data."""

    probe_horizon: int
    c_values: tuple[float, ...]
    trend_exponents: tuple[float, ...]
    growing: tuple[bool, ...]


def measure_input_bounds(p: CriticalCellProblem, probe_horizon: int = 10**6) -> InputBoundsReport:
    """Probe each row's rotated partial sums and fit the running-sup trend.

    A row whose running sup keeps growing (fitted exponent > 0.1 over the top
    two decades) fails the bounded-partial-sums hypothesis and is flagged.
    """
    c_vals, trends, growing = [], [], []
    for m in range(1, p.order + 1):
        src = p.ytilde[m - 1]
        horizon = probe_horizon
        if src.horizon is not None:
            horizon = min(horizon, src.horizon)

        def chunkf(lo: int, hi: int, _src=src) -> np.ndarray:
            return _src.terms(lo, hi + 1) * unit_linear(p.phi, lo, hi + 1)

        scan = envelope_scan(chunkf, horizon)
        running = np.maximum.accumulate(scan.samples[:, 1])
        fit = fit_growth(scan.samples[:, 0], running, decades=2.0, min_abs=1e-9)
        c_vals.append(scan.sup_abs)
        trends.append(fit.exponent if fit.reliable else 0.0)
        growing.append(bool(fit.reliable and fit.exponent > 0.1))
    return InputBoundsReport(probe_horizon, tuple(c_vals), tuple(trends), tuple(growing))


@dataclass(frozen=True)
class TruncationEntry:
    row_m: int
    series_r: int
    input_row: int
    terms: int
    tail_bound: float
    c_used: float


@dataclass(frozen=True)
class CriticalInitResult:
    """Initial values for rows 2..M (index 0 -> row 2) plus the audit trail."""

    values: tuple[complex, ...]
    truncation: tuple[TruncationEntry, ...]
    input_bounds: InputBoundsReport
    tol: float


def _series_truncation(c_bound: float, r: int, row_m: int, budget: float) -> tuple[int, float]:
    """Smallest K with (C/r!) (K)^[r] / K^(r+m-1) <= budget, plus the bound there."""

    def bound(k: int) -> float:
        return c_bound * raising_over_factorial(float(k), r) / float(k) ** (r + row_m - 1)

    if c_bound == 0.0:
        return 8, 0.0
    k = 8
    while bound(k) > budget:
        k *= 2
        if k > 2**34:
            raise RefusedError(
                f"series (m={row_m}, r={r}) needs more than 2^34 terms for the budget; "
                "loosen tol or supply smaller inputs"
            )
    lo, hi = k // 2, k
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if bound(mid) <= budget:
            hi = mid
        else:
            lo = mid
    return hi, bound(hi)


def critical_init_values(
    p: CriticalCellProblem,
    tol: float = 1e-8,
    *,
    probe_horizon: int = 10**6,
    input_bounds: Optional[InputBoundsReport] = None,
) -> CriticalInitResult:
    """Initial values x_m(1), m = 2..M, that make the critical cell bounded.

    Refuses when any row's rotated partial sums are not evidently bounded on
    the probe horizon: the construction's error control is C_m itself, so a
    growing C_m invalidates the whole computation.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    bounds = input_bounds or measure_input_bounds(p, probe_horizon)
    for m in range(1, p.order + 1):
        if bounds.growing[m - 1]:
            raise RefusedError(
                f"row {m}: rotated partial sums grow like n^{bounds.trend_exponents[m - 1]:.2f} "
                f"(sup {bounds.c_values[m - 1]:.3g} at horizon {bounds.probe_horizon}); "
                "bounded-partial-sums hypothesis fails"
            )
    budget = tol / (p.order * (p.order + 1))
    values: list[complex] = []
    entries: list[TruncationEntry] = []
    for row_m in range(2, p.order + 1):
        total = ComplexNeumaier()
        for r in range(0, p.order - row_m + 1):
            j = r + row_m
            c_j = bounds.c_values[j - 1]
            k_cut, tail = _series_truncation(c_j, r, row_m, budget)
            src = p.ytilde[j - 1]
            if src.horizon is not None and k_cut > src.horizon:
                raise RefusedError(
                    f"series (m={row_m}, r={r}) needs {k_cut} terms but input row {j} "
                    f"ends at n={src.horizon}"
                )
            acc = ComplexNeumaier()
            fact_r = math.factorial(r)
            for lo in range(1, k_cut + 1, _SERIES_CHUNK):
                hi = min(k_cut, lo + _SERIES_CHUNK - 1)
                ks = np.arange(lo, hi + 1, dtype=np.float64)
                w = np.ones(len(ks), dtype=np.float64)
                for t in range(r):
                    w = w * (ks + t)
                w = w / (fact_r * ks ** (r + row_m - 1))
                terms = w * src.terms(lo, hi + 1)
                if p.phi != 0.0:  # lam = 1 needs no rotation
                    terms = terms * unit_linear(p.phi, lo + r, hi + 1 + r)
                acc.add(complex(np.sum(terms)))
            sign = -1.0 if r % 2 else 1.0
            total.add(sign * acc.value)
            entries.append(TruncationEntry(row_m, r, j, k_cut, tail, c_j))
        values.append(-total.value)
    return CriticalInitResult(tuple(values), tuple(entries), bounds, tol)


def bounded_initial_state(p: CriticalCellProblem, result: CriticalInitResult,
                          x1_first: complex = 0.0j) -> tuple[complex, ...]:
    """Full initial vector: the free first row plus the constructed rows 2..M."""
    return (complex(x1_first),) + result.values


@dataclass(frozen=True)
class PerturbationProbe:
    base: tuple[Trajectory, ...]
    perturbed: tuple[Trajectory, ...]
    delta: complex
    row: int
    row1_final_ratio: float  # |x_1(N)| / N of the perturbed run


def perturbation_probe(
    p: CriticalCellProblem,
    x_init: Sequence[complex],
    delta: complex,
    row: int,
    n_total: int,
) -> PerturbationProbe:
    """Simulate from x_init and from x_init + delta*e_row and compare growth.

    Perturbing a constructed row by delta != 0 feeds a non-vanishing bracket
    into the polynomial prefactors: for order 2 the first row picks up linear
    growth with slope ~ |delta|, which `row1_final_ratio` exposes directly.
    """
    if not 2 <= row <= p.order:
        raise ValueError("perturbation row must be in 2..M")
    base_init = tuple(complex(v) for v in x_init)
    pert_init = list(base_init)
    pert_init[row - 1] += delta
    base = simulate_block(p.block(base_init), n_total)
    pert = simulate_block(p.block(tuple(pert_init)), n_total)
    ratio = abs(pert[0].final) / float(n_total)
    return PerturbationProbe(tuple(base), tuple(pert), complex(delta), row, ratio)


# ---------------------------------------------------------------------------
# Coordinate transform
# ---------------------------------------------------------------------------

def hs_norm(a: np.ndarray) -> float:
    """Hilbert-Schmidt (Frobenius) norm sqrt(sum |a_ij|^2); dominates ||Ax||/||x||."""
    a = np.asarray(a, dtype=np.complex128)
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


@dataclass(frozen=True)
class TransformResult:
    mapped: np.ndarray
    condition: float
    distortion_note: str


def transform_condition(system: JordanSystem) -> float:
    if system.transform is None:
        raise TransformError("system carries no transform matrix")
    t = system.transform
    tinv = np.linalg.inv(t)
    return hs_norm(t) * hs_norm(tinv)


def apply_transform(system: JordanSystem, data, *, direction: str = "to_jordan") -> TransformResult:
    """Map vectors (or rows of vectors) between original and Jordan coordinates.

    to_jordan applies T^(-1), from_jordan applies T.  Boundedness transfers
    both ways, with norms distorted by at most hs(T)*hs(T^(-1)); the result
    records that factor so downstream verdicts can carry it.
    """
    if system.transform is None:
        raise TransformError("system carries no transform matrix")
    cond = transform_condition(system)
    if not math.isfinite(cond) or cond > 1e12:
        raise TransformError(f"transform condition estimate {cond:.3g} exceeds 1e12")
    t = system.transform
    arr = np.asarray(data, dtype=np.complex128)
    flat = arr.ndim == 1
    vecs = arr.reshape(1, -1) if flat else arr
    if vecs.shape[-1] != system.dimension:
        raise TransformError(
            f"vectors have length {vecs.shape[-1]}, system dimension is {system.dimension}"
        )
    if direction == "to_jordan":
        mapped = np.linalg.solve(t, vecs.T).T
    elif direction == "from_jordan":
        mapped = (t @ vecs.T).T
    else:
        raise ValueError("direction must be 'to_jordan' or 'from_jordan'")
    if flat:
        mapped = mapped[0]
    note = (
        f"norm distortion factor <= {cond!r}: boundedness verdicts transfer both ways"
    )
    return TransformResult(mapped, cond, note)
