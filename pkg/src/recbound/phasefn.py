"""Phase expressions f: N -> R in cycles, and the input-sequence sources built on them.

A phase of f(n) cycles stands for the summand e^(2*pi*i*f(n)).  The expression
language is deliberately small: numeric literals, the index variable (spelled
``n`` at top level, conventionally ``k`` inside a cumulative sum), ``pi``,
``+ - * / ^``, ``sqrt log exp sin cos atan``, and ``csum(a, g)`` for the
running sum of g over the index range [a, n].

Two evaluation paths exist.  ``evaluate`` returns raw values f(n) as doubles.
``evaluate_mod1`` returns f(n) mod 1 and is the path the exponential-sum code
uses: it reduces additive pieces separately and evaluates linear terms c*n
with a split-multiply reduction, so the fractional part stays accurate long
after c*n itself has outgrown double resolution.
"""

from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import PhaseEvalError, PhaseSyntaxError, SourceExhaustedError
from .numerics import CHUNK, frac, frac_linear, unit_from_frac, unit_linear

_FUNCTIONS = ("sqrt", "log", "exp", "sin", "cos", "atan")
_INDEX_NAMES = ("n", "k")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Node:
    pass


@dataclass(frozen=True)
class Const(Node):
    value: float


@dataclass(frozen=True)
class Index(Node):
    """The evaluation index; a single variable shared by all nesting levels."""


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class Call(Node):
    name: str  # one of _FUNCTIONS
    arg: Node


@dataclass(frozen=True)
class Binary(Node):
    op: str  # + - * / ^
    left: Node
    right: Node


@dataclass(frozen=True)
class CSum(Node):
    """Cumulative sum of `body` over the index running from `start` to n."""

    start: int
    body: Node


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


class _Token:
    __slots__ = ("kind", "text", "offset")

    def __init__(self, kind: str, text: str, offset: int):
        self.kind = kind
        self.text = text
        self.offset = offset


def _byte_offset(text: str, char_pos: int) -> int:
    return len(text[:char_pos].encode("utf-8"))


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad_pos = len(text) - len(stripped)
            raise PhaseSyntaxError(
                f"unexpected character {stripped[0]!r}", _byte_offset(text, bad_pos)
            )
        if m.lastgroup == "num":
            tokens.append(_Token("num", m.group("num"), _byte_offset(text, m.start("num"))))
        elif m.lastgroup == "ident":
            tokens.append(_Token("ident", m.group("ident"), _byte_offset(text, m.start("ident"))))
        else:
            tokens.append(_Token(m.group("op"), m.group("op"), _byte_offset(text, m.start("op"))))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text.encode("utf-8"))))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise PhaseSyntaxError(
                f"expected {kind!r}, found {tok.text or 'end of input'!r}", tok.offset
            )
        return self.advance()

    def parse(self) -> Node:
        node = self.expression()
        tok = self.peek()
        if tok.kind != "eof":
            raise PhaseSyntaxError(f"trailing input {tok.text!r}", tok.offset)
        return node

    def expression(self) -> Node:
        node = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek().kind in ("*", "/"):
            op = self.advance().kind
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.peek().kind == "-":
            self.advance()
            inner = self.factor()
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Neg(inner)
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.peek().kind == "^":
            self.advance()
            return Binary("^", base, self.factor())
        return base

    def primary(self) -> Node:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "(":
            self.advance()
            node = self.expression()
            self.expect(")")
            return node
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if name in _INDEX_NAMES:
                return Index()
            if name == "pi":
                return Const(math.pi)
            if name in _FUNCTIONS:
                self.expect("(")
                arg = self.expression()
                self.expect(")")
                return Call(name, arg)
            if name == "csum":
                return self.csum(tok)
            raise PhaseSyntaxError(f"unknown identifier {name!r}", tok.offset)
        raise PhaseSyntaxError(
            f"expected a value, found {tok.text or 'end of input'!r}", tok.offset
        )

    def csum(self, head: _Token) -> Node:
        self.expect("(")
        start_tok = self.peek()
        start_node = self.expression()
        start = _constant_int(start_node)
        if start is None or start < 0:
            raise PhaseSyntaxError(
                "csum lower bound must be a nonnegative integer constant", start_tok.offset
            )
        if self.peek().kind != ",":
            raise PhaseSyntaxError("csum takes two arguments", self.peek().offset)
        self.advance()
        body = self.expression()
        self.expect(")")
        return CSum(start, body)


def _constant_int(node: Node) -> Optional[int]:
    if isinstance(node, Const) and float(node.value).is_integer():
        return int(node.value)
    return None


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(node: Node) -> int:
    if isinstance(node, Binary):
        if node.op in ("+", "-"):
            return _PREC_ADD
        if node.op in ("*", "/"):
            return _PREC_MUL
        return _PREC_POW
    if isinstance(node, Neg):
        return _PREC_NEG
    if isinstance(node, Const) and node.value < 0:
        return _PREC_NEG  # prints with a leading minus
    return _PREC_ATOM


def _render(node: Node, inside_csum: bool) -> str:
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Index):
        return "k" if inside_csum else "n"
    if isinstance(node, Neg):
        inner = _render(node.arg, inside_csum)
        if _prec(node.arg) < _PREC_NEG:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Call):
        return f"{node.name}({_render(node.arg, inside_csum)})"
    if isinstance(node, CSum):
        return f"csum({node.start}, {_render(node.body, True)})"
    if isinstance(node, Binary):
        lp, rp = _prec(node.left), _prec(node.right)
        left = _render(node.left, inside_csum)
        right = _render(node.right, inside_csum)
        if node.op in ("+", "-"):
            if lp < _PREC_ADD:
                left = f"({left})"
            if rp <= _PREC_ADD:
                right = f"({right})"
            return f"{left} {node.op} {right}"
        if node.op in ("*", "/"):
            if lp < _PREC_MUL:
                left = f"({left})"
            if rp <= _PREC_MUL or isinstance(node.right, Neg) or (
                isinstance(node.right, Const) and node.right.value < 0
            ):
                right = f"({right})"
            return f"{left}{node.op}{right}"
        # power: right-associative
        if lp <= _PREC_POW:
            left = f"({left})"
        if rp < _PREC_POW:
            right = f"({right})"
        return f"{left}^{right}"
    raise TypeError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _first_bad_n(ns: np.ndarray, mask: np.ndarray):
    idx = int(np.argmax(mask))
    return ns[idx]


def _eval(node: Node, ns: np.ndarray) -> np.ndarray:
    if isinstance(node, Const):
        return np.full(ns.shape, node.value, dtype=np.float64)
    if isinstance(node, Index):
        return ns.astype(np.float64, copy=False)
    if isinstance(node, Neg):
        return -_eval(node.arg, ns)
    if isinstance(node, Call):
        arg = _eval(node.arg, ns)
        if node.name == "sqrt":
            bad = arg < 0.0
            if bad.any():
                raise PhaseEvalError("sqrt of negative value", _first_bad_n(ns, bad))
            return np.sqrt(arg)
        if node.name == "log":
            bad = arg <= 0.0
            if bad.any():
                raise PhaseEvalError("log of non-positive value", _first_bad_n(ns, bad))
            return np.log(arg)
        if node.name == "exp":
            with np.errstate(over="ignore"):
                out = np.exp(arg)
            bad = ~np.isfinite(out)
            if bad.any():
                raise PhaseEvalError("exp overflow", _first_bad_n(ns, bad))
            return out
        if node.name == "sin":
            return np.sin(arg)
        if node.name == "cos":
            return np.cos(arg)
        if node.name == "atan":
            return np.arctan(arg)
        raise PhaseEvalError(f"unknown function {node.name!r}")
    if isinstance(node, Binary):
        left = _eval(node.left, ns)
        if node.op == "^":
            right = _eval(node.right, ns)
            neg_base = left < 0.0
            if neg_base.any():
                frac_exp = right != np.round(right)
                bad = neg_base & frac_exp
                if bad.any():
                    raise PhaseEvalError(
                        "negative base with non-integer exponent", _first_bad_n(ns, bad)
                    )
            zero_neg = (left == 0.0) & (right < 0.0)
            if zero_neg.any():
                raise PhaseEvalError("zero base with negative exponent", _first_bad_n(ns, zero_neg))
            with np.errstate(over="ignore"):
                out = np.power(left, right)
            bad = ~np.isfinite(out)
            if bad.any():
                raise PhaseEvalError("power overflow", _first_bad_n(ns, bad))
            return out
        right = _eval(node.right, ns)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        bad = right == 0.0
        if bad.any():
            raise PhaseEvalError("division by zero", _first_bad_n(ns, bad))
        return left / right
    if isinstance(node, CSum):
        return _csum_values(node, ns, mod1=False)
    raise TypeError(f"unknown node {node!r}")


def _linear_coefficient(node: Node) -> Optional[float]:
    """c when the node is exactly c*index or index*c (c a constant), else None."""
    if isinstance(node, Binary) and node.op == "*":
        if isinstance(node.left, Const) and isinstance(node.right, Index):
            return node.left.value
        if isinstance(node.right, Const) and isinstance(node.left, Index):
            return node.right.value
    if isinstance(node, Index):
        return 1.0
    return None


def _eval_mod1(node: Node, ns: np.ndarray) -> np.ndarray:
    if isinstance(node, Binary) and node.op == "+":
        return frac(_eval_mod1(node.left, ns) + _eval_mod1(node.right, ns))
    if isinstance(node, Binary) and node.op == "-":
        return frac(_eval_mod1(node.left, ns) - _eval_mod1(node.right, ns))
    if isinstance(node, Neg):
        return frac(-_eval_mod1(node.arg, ns))
    coeff = _linear_coefficient(node)
    if coeff is not None:
        return frac_linear(coeff, ns)
    if isinstance(node, Const):
        return np.full(ns.shape, frac(np.float64(node.value)), dtype=np.float64)
    if isinstance(node, CSum):
        return _csum_values(node, ns, mod1=True)
    return frac(_eval(node, ns))


# ---------------------------------------------------------------------------
# Cumulative-sum cache
# ---------------------------------------------------------------------------

class _CSumCache:
    """Compensated prefix sums of a csum body, memoized per AST node.

    raw[j] + comp[j] is the corrected value of sum_{i=start}^{j} body(i);
    keeping the compensation separately preserves the fractional part of
    large running sums for the mod-1 path.
    """

    __slots__ = ("raw", "comp", "filled", "carry_s", "carry_c", "lock")

    def __init__(self):
        self.raw = np.zeros(0, dtype=np.float64)
        self.comp = np.zeros(0, dtype=np.float64)
        self.filled = -1
        self.carry_s = 0.0
        self.carry_c = 0.0
        self.lock = threading.Lock()


_CSUM_CACHES: dict[CSum, _CSumCache] = {}
_CSUM_DICT_LOCK = threading.Lock()


def clear_expression_caches() -> None:
    with _CSUM_DICT_LOCK:
        _CSUM_CACHES.clear()


def _csum_cache(node: CSum) -> _CSumCache:
    with _CSUM_DICT_LOCK:
        cache = _CSUM_CACHES.get(node)
        if cache is None:
            cache = _CSumCache()
            _CSUM_CACHES[node] = cache
        return cache


def _csum_fill(node: CSum, cache: _CSumCache, nmax: int) -> None:
    if cache.filled >= nmax:
        return
    size = nmax + 1
    if len(cache.raw) < size:
        grow = max(size, 2 * len(cache.raw), 1024)
        raw = np.zeros(grow, dtype=np.float64)
        comp = np.zeros(grow, dtype=np.float64)
        raw[: len(cache.raw)] = cache.raw
        comp[: len(cache.comp)] = cache.comp
        cache.raw, cache.comp = raw, comp
    begin = max(cache.filled + 1, node.start)
    if cache.filled < node.start - 1:
        cache.filled = min(node.start - 1, nmax)
    if begin > nmax:
        cache.filled = max(cache.filled, nmax)
        return
    s, c = cache.carry_s, cache.carry_c
    raw, comp = cache.raw, cache.comp
    for lo in range(begin, nmax + 1, CHUNK):
        hi = min(nmax, lo + CHUNK - 1)
        body = _eval(node.body, np.arange(lo, hi + 1, dtype=np.float64))
        for off, term in enumerate(body):
            term = float(term)
            t = s + term
            if abs(s) >= abs(term):
                c += (s - t) + term
            else:
                c += (term - t) + s
            s = t
            raw[lo + off] = s
            comp[lo + off] = c
    cache.carry_s, cache.carry_c = s, c
    cache.filled = nmax


def _csum_values(node: CSum, ns: np.ndarray, *, mod1: bool) -> np.ndarray:
    if not np.all(ns == np.round(ns)):
        raise PhaseEvalError("csum requires integer evaluation points")
    idx = ns.astype(np.int64)
    if (idx < 0).any():
        raise PhaseEvalError("csum requires nonnegative evaluation points")
    nmax = int(idx.max()) if len(idx) else -1
    cache = _csum_cache(node)
    with cache.lock:
        _csum_fill(node, cache, nmax)
        raw = cache.raw[idx]
        comp = cache.comp[idx]
    if mod1:
        return frac(frac(raw) + comp)
    return raw + comp


# ---------------------------------------------------------------------------
# Public wrapper
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseExpr:
    """Immutable parsed phase function; evaluation is pure and thread-safe."""

    root: Node

    def __str__(self) -> str:
        return _render(self.root, False)

    def evaluate(self, ns) -> np.ndarray:
        """Raw values f(n) over an array of evaluation points."""
        ns = np.asarray(ns, dtype=np.float64)
        out = _eval(self.root, ns)
        bad = ~np.isfinite(out)
        if bad.any():
            raise PhaseEvalError("overflow to non-finite value", _first_bad_n(ns, bad))
        return out

    def evaluate_mod1(self, ns) -> np.ndarray:
        """f(n) mod 1 with additive pieces reduced separately (phase-accurate)."""
        ns = np.asarray(ns, dtype=np.float64)
        out = _eval_mod1(self.root, ns)
        bad = ~np.isfinite(out)
        if bad.any():
            raise PhaseEvalError("overflow to non-finite value", _first_bad_n(ns, bad))
        return out


def parse_phase(text: str) -> PhaseExpr:
    """Parse an expression in the phase grammar; offsets in errors are UTF-8 bytes."""
    if not isinstance(text, str):
        raise PhaseSyntaxError("expected a string expression", 0)
    if not text.strip():
        raise PhaseSyntaxError("empty expression", 0)
    return PhaseExpr(_Parser(text).parse())


def to_text(expr: PhaseExpr) -> str:
    return str(expr)


def _as_expr(f: Union[PhaseExpr, str]) -> PhaseExpr:
    return f if isinstance(f, PhaseExpr) else parse_phase(f)


def eval_phase(f: Union[PhaseExpr, str], n: int) -> float:
    """f(n) at a single integer point n >= 1."""
    if n < 1 or int(n) != n:
        raise PhaseEvalError("evaluation point must be a positive integer", n)
    expr = _as_expr(f)
    return float(expr.evaluate(np.array([float(n)]))[0])


def finite_difference(f: Union[PhaseExpr, str], n: int, order: int = 1) -> float:
    """First or second forward difference at n, from evaluated values."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    expr = _as_expr(f)
    if n < 1 or int(n) != n:
        raise PhaseEvalError("evaluation point must be a positive integer", n)
    pts = expr.evaluate(np.arange(n, n + order + 1, dtype=np.float64))
    if order == 1:
        return float(pts[1] - pts[0])
    return float(pts[2] - 2.0 * pts[1] + pts[0])


@dataclass(frozen=True)
class TailSum:
    """Partial sum of |second difference| plus the magnitude of its last term."""

    value: float
    last_term: float


def second_difference_tail(f: Union[PhaseExpr, str], n0: int, horizon: int) -> TailSum:
    """Compensated sum of |f(n+2) - 2 f(n+1) + f(n)| for n in [n0, horizon]."""
    if horizon < n0:
        raise ValueError("horizon must be >= n0")
    expr = _as_expr(f)
    total_s, total_c = 0.0, 0.0
    last = 0.0
    for lo in range(n0, horizon + 1, CHUNK):
        hi = min(horizon, lo + CHUNK - 1)
        vals = expr.evaluate(np.arange(lo, hi + 3, dtype=np.float64))
        d2 = np.abs(vals[2:] - 2.0 * vals[1:-1] + vals[:-2])
        last = float(d2[-1])
        chunk = float(np.sum(d2))
        t = total_s + chunk
        if abs(total_s) >= abs(chunk):
            total_c += (total_s - t) + chunk
        else:
            total_c += (chunk - t) + total_s
        total_s = t
    return TailSum(total_s + total_c, last)


# ---------------------------------------------------------------------------
# Sequence sources
# ---------------------------------------------------------------------------

class SequenceSource:
    """A source of complex terms y_n, n >= 1; finite sources report a horizon."""

    horizon: Optional[int] = None
    phase_expr: Optional[PhaseExpr] = None

    def terms(self, start: int, stop: int) -> np.ndarray:
        """Terms for n in [start, stop) as complex128."""
        raise NotImplementedError

    def term(self, n: int) -> complex:
        return complex(self.terms(n, n + 1)[0])

    def describe(self) -> str:
        raise NotImplementedError

    def _check_range(self, start: int, stop: int) -> None:
        if start < 1:
            raise SourceExhaustedError(f"terms start at n=1, requested n={start}")
        if self.horizon is not None and stop - 1 > self.horizon:
            raise SourceExhaustedError(
                f"source {self.describe()} ends at n={self.horizon}, requested n={stop - 1}"
            )


class PhaseSource(SequenceSource):
    """y_n = e(f(n)) for a phase f in cycles."""

    def __init__(self, expr: Union[PhaseExpr, str], *, radians: bool = False):
        expr = _as_expr(expr)
        if radians:
            expr = PhaseExpr(Binary("/", expr.root, Binary("*", Const(2.0), Const(math.pi))))
        self.phase_expr = expr
        # purely linear phases take the table-accelerated rotation path
        self._linear = _linear_coefficient(expr.root)

    def terms(self, start: int, stop: int) -> np.ndarray:
        self._check_range(start, stop)
        if self._linear is not None:
            return unit_linear(self._linear, start, stop)
        ns = np.arange(start, stop, dtype=np.float64)
        return unit_from_frac(self.phase_expr.evaluate_mod1(ns))

    def describe(self) -> str:
        return f"e({self.phase_expr})"


class ExplicitSource(SequenceSource):
    """Finite list of complex terms; y_n = values[n-1]."""

    def __init__(self, values: Sequence[complex], *, label: str = "explicit"):
        self.values = np.asarray(values, dtype=np.complex128)
        self.horizon = len(self.values)
        self.label = label

    def terms(self, start: int, stop: int) -> np.ndarray:
        self._check_range(start, stop)
        return self.values[start - 1 : stop - 1]

    def describe(self) -> str:
        return f"{self.label}[{self.horizon} terms]"


class ScaledSource(SequenceSource):
    """Inner source divided termwise by n^power."""

    def __init__(self, inner: SequenceSource, power: int):
        if power < 0 or int(power) != power:
            raise ValueError("power must be a nonnegative integer")
        self.inner = inner
        self.power = int(power)

    @property
    def horizon(self) -> Optional[int]:  # type: ignore[override]
        return self.inner.horizon

    def terms(self, start: int, stop: int) -> np.ndarray:
        base = self.inner.terms(start, stop)
        ns = np.arange(start, stop, dtype=np.float64)
        return base / ns ** self.power

    def describe(self) -> str:
        return f"({self.inner.describe()})/n^{self.power}"


def phase_source(expr: Union[PhaseExpr, str]) -> PhaseSource:
    return PhaseSource(expr)


def phase_source_radians(expr: Union[PhaseExpr, str]) -> PhaseSource:
    return PhaseSource(expr, radians=True)


def explicit_source(values: Sequence[complex]) -> ExplicitSource:
    return ExplicitSource(values)


def scaled_source(inner: SequenceSource, power: int) -> SequenceSource:
    # power 0 must be term-identical to the inner source.
    if power == 0:
        return inner
    return ScaledSource(inner, power)


def file_source(path: str) -> ExplicitSource:
    """Load a CSV of complex terms: one `re` or `re,im` row per n, header optional."""
    values: list[complex] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            try:
                if len(parts) == 1:
                    values.append(complex(float(parts[0]), 0.0))
                elif len(parts) == 2:
                    values.append(complex(float(parts[0]), float(parts[1])))
                else:
                    raise ValueError
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise SourceExhaustedError(f"{path}:{lineno}: cannot parse {line!r}") from None
    if not values:
        raise SourceExhaustedError(f"{path}: no terms found")
    import os

    return ExplicitSource(values, label=os.path.basename(path))
