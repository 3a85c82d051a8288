"""Low-level numeric kernels: compensated accumulation and exact mod-1 reduction.

Everything here is deterministic: fixed chunk sizes, fixed accumulation order,
no parallel reductions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

# Veltkamp splitting constant for IEEE doubles (2^27 + 1).
_SPLIT = float(1 << 27) + 1.0
# Integer block size for the two-level decomposition in frac_linear.
_BLOCK = float(1 << 24)

# Chunk length used by the streaming scans.  Large enough to amortize numpy
# dispatch, small enough that per-chunk cumsum rounding stays ~1e-11.
CHUNK = 1 << 17


def frac(x):
    """Fractional part x - floor(x), elementwise; result in [0, 1)."""
    return x - np.floor(x)


def veltkamp_split(c: float) -> tuple[float, float]:
    """Split c = hi + lo exactly with hi carrying the top 26 significand bits."""
    t = c * _SPLIT
    hi = t - (t - c)
    return hi, c - hi


def frac_linear(c: float, ns) -> np.ndarray:
    """(c*n) mod 1 for integer n, accurate to a few ulp of the fraction.

    Forming c*n directly and reducing loses roughly log10(c*n) digits of the
    fractional part.  Instead write n = q*2^24 + s.  Because scaling by 2^24
    is exact, d := frac(c * 2^24) is the exact value of (c*2^24) mod 1, and

        (c*n) mod 1 = (q*d + c*s) mod 1.

    q*d is a short product (q <= n/2^24), and c*s is evaluated via a Veltkamp
    split of c so its high product is exact for s < 2^24.  Valid for n < 2^48.
    """
    ns = np.asarray(ns, dtype=np.float64)
    q = np.floor(ns / _BLOCK)
    s = ns - q * _BLOCK
    d = frac(c * _BLOCK)
    hi, lo = veltkamp_split(c)
    out = frac(q * d)
    out = out + frac(hi * s)
    out = out + frac(lo * s)
    return frac(out)


def frac_linear_scalar(c: float, n: int) -> float:
    return float(frac_linear(c, np.array([float(n)]))[0])


def unit_from_frac(fr):
    """e^(2*pi*i*fr) for fr already reduced to [0, 1)."""
    ang = TWO_PI * np.asarray(fr, dtype=np.float64)
    return np.cos(ang) + 1j * np.sin(ang)


def unit_scalar(fr: float) -> complex:
    ang = TWO_PI * fr
    return complex(np.cos(ang), np.sin(ang))


_TBL_BITS = 12
_TBL = 1 << _TBL_BITS


def unit_linear(c: float, start: int, stop: int) -> np.ndarray:
    """e(c*k) for integer k in [start, stop), phase-exact and table-accelerated.

    Splits k = q*4096 + s and combines e(c*4096*q) * e(c*s) from two small
    tables whose entries come from the split mod-1 reduction, replacing
    per-element floor/trig with two gathers and one complex multiply.  Entry
    error stays at the ~1e-15 level of frac_linear itself.
    """
    n = int(stop) - int(start)
    if n <= 0:
        return np.empty(0, dtype=np.complex128)
    if n <= 2 * _TBL:
        return unit_from_frac(frac_linear(c, np.arange(start, stop, dtype=np.float64)))
    q0 = int(start) >> _TBL_BITS
    q1 = (int(stop) - 1) >> _TBL_BITS
    big = unit_from_frac(frac_linear(c * _TBL, np.arange(q0, q1 + 1, dtype=np.float64)))
    small = unit_from_frac(frac_linear(c, np.arange(_TBL, dtype=np.float64)))
    ks = np.arange(int(start), int(stop), dtype=np.int64)
    return big[(ks >> _TBL_BITS) - q0] * small[ks & (_TBL - 1)]


class NeumaierSum:
    """Compensated scalar accumulator (Neumaier's variant of Kahan summation)."""

    __slots__ = ("_s", "_c")

    def __init__(self, value: float = 0.0):
        self._s = float(value)
        self._c = 0.0

    def add(self, term: float) -> None:
        t = self._s + term
        if abs(self._s) >= abs(term):
            self._c += (self._s - t) + term
        else:
            self._c += (term - t) + self._s
        self._s = t

    @property
    def value(self) -> float:
        return self._s + self._c


class ComplexNeumaier:
    """Compensated complex accumulator; real and imaginary parts separately."""

    __slots__ = ("re", "im")

    def __init__(self, value: complex = 0.0j):
        self.re = NeumaierSum(value.real)
        self.im = NeumaierSum(value.imag)

    def add(self, term: complex) -> None:
        self.re.add(term.real)
        self.im.add(term.imag)

    @property
    def value(self) -> complex:
        return complex(self.re.value, self.im.value)


def compensated_cumsum(values: np.ndarray, carry: tuple[float, float] = (0.0, 0.0)):
    """Running compensated prefix sums of a 1-d real array.

    Returns (prefix, raw_carry, comp_carry) where prefix[j] is the corrected
    sum of values[:j+1] plus the incoming carry.  The raw/comp carries allow
    the scan to continue across chunks without losing the compensation term.
    """
    s, comp = carry
    out = np.empty(len(values), dtype=np.float64)
    for j, term in enumerate(values):
        term = float(term)
        t = s + term
        if abs(s) >= abs(term):
            comp += (s - t) + term
        else:
            comp += (term - t) + s
        s = t
        out[j] = s + comp
    return out, s, comp


@dataclass(frozen=True)
class GrowthFit:
    """Least-squares slope of log|value| against log n.

    exponent ~ 0 indicates a bounded envelope, ~1 linear accumulation.  The
    fit is flagged unreliable when too few points survive the |value| floor
    or the slope falls outside the plausible [-0.5, 1.5] window.
    """

    exponent: float
    coefficient: float
    rms_residual: float
    reliable: bool
    points: int


def fit_growth(ns, abs_vals, *, decades: float = 3.0, min_abs: float = 1.0) -> GrowthFit:
    """Fit |value| ~ c * n^beta over the top `decades` of the sample range.

    Points with |value| < min_abs are ignored (log of a near-zero dip would
    dominate the fit).  Plain closed-form least squares; no LAPACK, so the
    result is bitwise reproducible.
    """
    ns = np.asarray(ns, dtype=np.float64)
    abs_vals = np.asarray(abs_vals, dtype=np.float64)
    if len(ns) == 0:
        return GrowthFit(0.0, 0.0, 0.0, False, 0)
    n_hi = float(ns.max())
    n_lo = n_hi / (10.0 ** decades)
    keep = (ns >= n_lo) & (abs_vals >= min_abs)
    pts = int(np.count_nonzero(keep))
    if pts < 4:
        return GrowthFit(0.0, 0.0, 0.0, False, pts)
    x = np.log(ns[keep])
    y = np.log(abs_vals[keep])
    mx = float(np.mean(x))
    my = float(np.mean(y))
    vx = float(np.mean((x - mx) ** 2))
    if vx <= 0.0:
        return GrowthFit(0.0, 0.0, 0.0, False, pts)
    beta = float(np.mean((x - mx) * (y - my)) / vx)
    intercept = my - beta * mx
    resid = y - (intercept + beta * x)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    reliable = (-0.5 <= beta <= 1.5) and pts >= 8 and rms < 1.5
    return GrowthFit(beta, float(np.exp(intercept)), rms, reliable, pts)


def geometric_indices(n: int, max_points: int = 4096) -> np.ndarray:
    """Geometrically spaced integers in [1, n], deduplicated, ends included."""
    if n <= max_points:
        return np.arange(1, n + 1, dtype=np.int64)
    g = np.geomspace(1.0, float(n), max_points)
    return np.unique(np.round(g).astype(np.int64))


@dataclass
class EnvelopeScan:
    """Full-resolution running maximum of |partial sums| plus decimated samples.

    The sup is taken over every prefix, not just the stored samples, so
    decimation cannot miss a peak.  `samples` has columns (n, abs, re, im).
    """

    horizon: int
    sup_abs: float
    sup_at: int
    final: complex
    samples: np.ndarray


def envelope_scan(chunk_terms, n_total: int, max_samples: int = 4096) -> EnvelopeScan:
    """Scan partial sums S(K) = sum_{n<=K} t_n for K = 1..n_total.

    `chunk_terms(lo, hi)` must return the complex terms for n in [lo, hi].
    Terms are accumulated chunkwise: an in-chunk cumsum plus a compensated
    carry across chunk boundaries, which keeps the absolute error near
    chunk_len * eps * max|S| while staying vectorized.  Deterministic for a
    fixed input regardless of threading outside.
    """
    if n_total < 1:
        raise ValueError("horizon must be >= 1")
    sample_ns = geometric_indices(n_total, max_samples)
    rows = np.zeros((len(sample_ns), 4), dtype=np.float64)
    off_re = NeumaierSum()
    off_im = NeumaierSum()
    sup = -1.0
    sup_at = 1
    consumed = 0
    for lo in range(1, n_total + 1, CHUNK):
        hi = min(n_total, lo + CHUNK - 1)
        terms = np.asarray(chunk_terms(lo, hi), dtype=np.complex128)
        cs = np.cumsum(terms)
        svals = complex(off_re.value, off_im.value) + cs
        avals = np.abs(svals)
        j = int(np.argmax(avals))
        if float(avals[j]) > sup:
            sup = float(avals[j])
            sup_at = lo + j
        upto = int(np.searchsorted(sample_ns, hi, side="right"))
        sel = sample_ns[consumed:upto] - lo
        rows[consumed:upto, 0] = sample_ns[consumed:upto]
        rows[consumed:upto, 1] = avals[sel]
        rows[consumed:upto, 2] = svals[sel].real
        rows[consumed:upto, 3] = svals[sel].imag
        consumed = upto
        off_re.add(float(cs[-1].real))
        off_im.add(float(cs[-1].imag))
    return EnvelopeScan(n_total, sup, sup_at, complex(off_re.value, off_im.value), rows)


def aitken_limit(x0: float, x1: float, x2: float) -> float:
    """Aitken delta-squared extrapolation; falls back to x2 when degenerate."""
    denom = (x2 - x1) - (x1 - x0)
    if denom == 0.0 or not np.isfinite(denom):
        return x2
    acc = x2 - (x2 - x1) ** 2 / denom
    if not np.isfinite(acc):
        return x2
    # Reject wild extrapolations: the limit should stay near the samples.
    if abs(acc - x2) > 4.0 * (abs(x2 - x0) + 1e-300):
        return x2
    return float(acc)


def distance_to_integer(x: float) -> float:
    return abs(x - round(x))


def format_float(x: float) -> str:
    """Shortest round-trip decimal form; used by all reports and CSVs."""
    return repr(float(x))
