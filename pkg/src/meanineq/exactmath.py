"""Exact univariate polynomials over Q and positivity certificates on intervals.

Rationals are :class:`fractions.Fraction`.  Polynomials are dense and
immutable; coefficient ``i`` multiplies ``r**i``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence

Rational = Fraction


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` / integer strings to Fraction.

    Floats and decimal strings are refused: exact paths must not inherit
    binary rounding silently.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if re.fullmatch(r"[+-]?\d+(/\d+)?", text):
            return Fraction(text)
        raise ValueError(
            f"{value!r} is not an exact rational; write it as 'p/q' (e.g. '3/2')"
        )
    raise TypeError(f"cannot use {type(value).__name__} as an exact rational")


class PolyQ:
    """Dense polynomial in ``r`` with rational coefficients.

    The zero polynomial has an empty coefficient tuple and degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [as_rational(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("PolyQ is immutable")

    # -- constructors -------------------------------------------------
    @classmethod
    def const(cls, c) -> "PolyQ":
        return cls([c])

    @classmethod
    def var(cls) -> "PolyQ":
        return cls([0, 1])

    @classmethod
    def linear(cls, slope, intercept) -> "PolyQ":
        return cls([intercept, slope])

    @classmethod
    def parse(cls, text: str) -> "PolyQ":
        return parse_poly(text)

    # -- basic properties ---------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def lead(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def coeff(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    # -- ring operations ----------------------------------------------
    def _coerce(self, other) -> "PolyQ":
        if isinstance(other, PolyQ):
            return other
        return PolyQ.const(other)

    def __add__(self, other):
        other = self._coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return PolyQ(self.coeff(i) + other.coeff(i) for i in range(n))

    __radd__ = __add__

    def __neg__(self):
        return PolyQ(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        if self.is_zero() or other.is_zero():
            return PolyQ()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return PolyQ(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative polynomial power")
        result, base = PolyQ.const(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __divmod__(self, other: "PolyQ"):
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = other.degree
        if len(rem) - 1 < dq:
            return PolyQ(), self
        quot = [Fraction(0)] * (len(rem) - dq)
        inv_lead = 1 / other.lead
        for i in range(len(rem) - 1, dq - 1, -1):
            c = rem[i] * inv_lead
            quot[i - dq] = c
            if c:
                for j, b in enumerate(other.coeffs):
                    rem[i - dq + j] -= c * b
        return PolyQ(quot), PolyQ(rem[:dq])

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def __eq__(self, other):
        if isinstance(other, PolyQ):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == PolyQ.const(other).coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    # -- calculus and evaluation --------------------------------------
    def derivative(self) -> "PolyQ":
        return PolyQ(i * c for i, c in enumerate(self.coeffs) if i)

    def __call__(self, r):
        """Horner evaluation; exact for rationals, also works for mpf."""
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * r + c
        return acc

    def eval_mp(self, r):
        import mpmath

        acc = mpmath.mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * r + mpmath.mpf(c.numerator) / c.denominator
        return acc

    def shift(self, c) -> "PolyQ":
        """Return q with q(t) = self(t + c)."""
        c = as_rational(c)
        # Taylor shift via repeated synthetic division
        cs = list(self.coeffs)
        n = len(cs)
        for i in range(n):
            for j in range(n - 2, i - 1, -1):
                cs[j] += c * cs[j + 1]
        return PolyQ(cs)

    def compose(self, other: "PolyQ") -> "PolyQ":
        acc = PolyQ()
        for c in reversed(self.coeffs):
            acc = acc * other + c
        return acc

    def primitive(self) -> "PolyQ":
        """Positive rational multiple with coprime integer coefficients."""
        if self.is_zero():
            return self
        den = lcm(*(c.denominator for c in self.coeffs))
        ints = [int(c * den) for c in self.coeffs]
        g = 0
        for v in ints:
            g = gcd(g, v)
        return PolyQ(Fraction(v, g) for v in ints)

    def monic(self) -> "PolyQ":
        return PolyQ(c / self.lead for c in self.coeffs)

    # -- display --------------------------------------------------------
    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = -c if c < 0 else c
            if i == 0:
                body = str(mag)
            else:
                mono = "r" if i == 1 else f"r^{i}"
                body = mono if mag == 1 else f"{mag}*{mono}"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"PolyQ({str(self)!r})"

    def to_json(self) -> dict:
        return {"coeffs": [str(c) for c in self.coeffs], "text": str(self)}

    @classmethod
    def from_json(cls, data: dict) -> "PolyQ":
        return cls(Fraction(c) for c in data["coeffs"])


R = PolyQ.var()


# ----------------------------------------------------------------------
# parsing of printed polynomial expressions
# ----------------------------------------------------------------------

class PolyParseError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(\d+)|(r)|(\^)|([()+\-*{}]))")


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PolyParseError(f"unexpected character at {pos}: {text[pos:]!r}")
        out.append(m.group(m.lastindex))
        pos = m.end()
    return out


def parse_poly(text: str) -> PolyQ:
    """Parse a printed polynomial such as ``"128(r-1)^2(r+1)^2(r^2+3)"``.

    Juxtaposition multiplies only when the right operand starts with ``r`` or
    a bracket; a number directly after a complete factor (as in
    ``"48r^{10}280r^{9}"``) is rejected as malformed rather than guessed.
    """
    toks = _tokenize(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise PolyParseError(f"expected {expected!r} at token {pos} in {text!r}")
        pos += 1
        return tok

    def expr():
        sign = 1
        if peek() in ("+", "-"):
            sign = -1 if take() == "-" else 1
        acc = term() * sign
        while peek() in ("+", "-"):
            op = take()
            t = term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term():
        acc = power()
        while True:
            tok = peek()
            if tok == "*":
                take()
                acc = acc * power()
            elif tok in ("r", "(", "{"):
                acc = acc * power()
            elif tok is not None and tok.isdigit():
                raise PolyParseError(f"malformed juxtaposition before {tok!r} in {text!r}")
            else:
                return acc

    def power():
        base = atom()
        if peek() == "^":
            take()
            if peek() == "{":
                take()
                n = take()
                take("}")
            else:
                n = take()
            if not n.isdigit():
                raise PolyParseError(f"bad exponent {n!r}")
            base = base ** int(n)
        return base

    def atom():
        tok = peek()
        if tok is None:
            raise PolyParseError(f"unexpected end of {text!r}")
        if tok.isdigit():
            take()
            return PolyQ.const(int(tok))
        if tok == "r":
            take()
            return R
        if tok in ("(", "{"):
            close = ")" if tok == "(" else "}"
            take()
            inner = expr()
            take(close)
            return inner
        raise PolyParseError(f"unexpected token {tok!r} in {text!r}")

    result = expr()
    if pos != len(toks):
        raise PolyParseError(f"trailing tokens in {text!r}: {toks[pos:]}")
    return result


# ----------------------------------------------------------------------
# operation-level API
# ----------------------------------------------------------------------

def poly_arith(p: PolyQ, q: PolyQ, op: str) -> PolyQ:
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown op {op!r}")


def poly_eval_exact(p: PolyQ, r) -> Fraction:
    return Fraction(p(as_rational(r)))


def poly_shift(p: PolyQ, c) -> PolyQ:
    return p.shift(c)


def poly_equal(p: PolyQ, q: PolyQ) -> bool:
    return PolyQ(p.coeffs) == PolyQ(q.coeffs)


# ----------------------------------------------------------------------
# Sturm chains and square-free parts
# ----------------------------------------------------------------------

def sturm_chain(p: PolyQ) -> list[PolyQ]:
    """Canonical Sturm chain, each member scaled to a primitive integer poly."""
    chain = [p.primitive(), p.derivative().primitive()]
    if chain[1].is_zero():
        return chain[:1]
    while True:
        rem = -(chain[-2] % chain[-1])
        if rem.is_zero():
            return chain
        chain.append(rem.primitive())


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def _variations(signs: Sequence[int]) -> int:
    nz = [s for s in signs if s]
    return sum(1 for a, b in zip(nz, nz[1:]) if a != b)


def _signs_at(chain: Sequence[PolyQ], x) -> list[int]:
    if x is None:  # +infinity
        return [_sign(q.lead) for q in chain]
    return [_sign(q(x)) for q in chain]


def count_distinct_roots(p: PolyQ, lo, hi=None) -> int:
    """Distinct real roots in (lo, hi]; ``hi=None`` means +infinity.

    ``lo`` must not be a root.
    """
    chain = sturm_chain(p)
    return _variations(_signs_at(chain, lo)) - _variations(_signs_at(chain, hi))


def poly_gcd(p: PolyQ, q: PolyQ) -> PolyQ:
    while not q.is_zero():
        p, q = q, p % q
    return p.monic() if not p.is_zero() else p


def squarefree_factors(p: PolyQ) -> list[PolyQ]:
    """Yun's algorithm: ``p = c * prod(f[i] ** (i + 1))``."""
    out = []
    a = poly_gcd(p, p.derivative())
    b = p // a
    c = p.derivative() // a
    d = c - b.derivative()
    while b.degree > 0:
        g = poly_gcd(b, d)
        out.append(g)
        b = b // g
        c = d // g
        d = c - b.derivative()
    return out


# ----------------------------------------------------------------------
# positivity certificates
# ----------------------------------------------------------------------

POSITIVE = "positive"
NONNEG_ROOTS = "nonnegative-with-roots"
INDEFINITE = "indefinite"


@dataclass(frozen=True)
class PositivityCertificate:
    """Re-checkable evidence about the sign of a polynomial on ``(lo, hi)``.

    ``deflation`` records how many factors ``(r - lo)`` and ``(hi - r)`` were
    divided out before the cofactor was examined; both are positive inside
    the open interval.
    """

    method: str
    lo: Fraction
    hi: Fraction | None
    verdict: str
    deflation: tuple[int, int] = (0, 0)
    data: dict = field(default_factory=dict, compare=False)

    @property
    def interval(self) -> str:
        return f"({self.lo}, {'+inf' if self.hi is None else self.hi})"

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "interval": {"lo": str(self.lo), "hi": None if self.hi is None else str(self.hi)},
            "data": {"deflation": list(self.deflation), **self.data},
            "verdict": self.verdict,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PositivityCertificate":
        data = dict(obj["data"])
        defl = tuple(data.pop("deflation", (0, 0)))
        hi = obj["interval"]["hi"]
        return cls(
            method=obj["method"],
            lo=Fraction(obj["interval"]["lo"]),
            hi=None if hi is None else Fraction(hi),
            verdict=obj["verdict"],
            deflation=defl,
            data=data,
        )

    def recheck(self, p: PolyQ) -> bool:
        """Validate this certificate against ``p`` using only recorded data."""
        try:
            cof = _cofactor(p, self.lo, self.hi, self.deflation)
        except ValueError:
            return False
        if self.method == "shift-descartes":
            stored = [Fraction(c) for c in self.data["coefficients"]]
            if _descartes_transform(cof, self.lo, self.hi).coeffs != PolyQ(stored).coeffs:
                return False
            ok = all(c >= 0 for c in stored) and any(c > 0 for c in stored)
            return ok == (self.verdict == POSITIVE)
        if self.method == "sturm":
            chain = [PolyQ(Fraction(c) for c in q) for q in self.data["chain"]]
            if not chain or chain[0] != cof.primitive():
                return False
            if len(chain) > 1 and chain[1] != cof.derivative().primitive():
                return False
            for i in range(2, len(chain)):
                if chain[i] != (-(chain[i - 2] % chain[i - 1])).primitive():
                    return False
            if len(chain) > 1 and not (chain[-2] % chain[-1]).is_zero():
                return False
            roots = _variations(_signs_at(chain, self.lo)) - _variations(_signs_at(chain, self.hi))
            if roots != self.data["roots"]:
                return False
            sample = Fraction(self.data["sample"])
            if _sign(cof(sample)) != self.data["sample_sign"]:
                return False
            if self.verdict == POSITIVE:
                return roots == 0 and self.data["sample_sign"] > 0
            if self.verdict == NONNEG_ROOTS:
                odd = [PolyQ(Fraction(c) for c in q) for q in self.data.get("odd_factors", [])]
                return self.data["sample_sign"] > 0 and all(
                    count_distinct_roots(f, self.lo, self.hi) == 0 for f in odd
                )
            return True
        return False


def _deflate(p: PolyQ, lo: Fraction, hi: Fraction | None):
    k = m = 0
    while not p.is_zero() and p(lo) == 0:
        p = p // PolyQ.linear(1, -lo)
        k += 1
    if hi is not None:
        while not p.is_zero() and p(hi) == 0:
            p = p // PolyQ.linear(-1, hi)
            m += 1
    return p, (k, m)


def _cofactor(p: PolyQ, lo, hi, deflation) -> PolyQ:
    k, m = deflation
    divisor = PolyQ.linear(1, -lo) ** k
    if hi is not None:
        divisor = divisor * PolyQ.linear(-1, hi) ** m
    q, rem = divmod(p, divisor)
    if not rem.is_zero():
        raise ValueError("deflation factor does not divide the polynomial")
    return q


def _descartes_transform(p: PolyQ, lo: Fraction, hi: Fraction | None) -> PolyQ:
    """Coefficients whose nonnegativity proves p > 0 on the interval.

    Half-line: p(lo + t).  Bounded: (1 + t)^d p((lo + hi t) / (1 + t)).
    """
    if hi is None:
        return p.shift(lo)
    d = max(p.degree, 0)
    one_plus_t = PolyQ([1, 1])
    num = PolyQ([lo, hi])
    acc = PolyQ()
    for i, c in enumerate(p.coeffs):
        acc = acc + c * num ** i * one_plus_t ** (d - i)
    return acc


def _sample_point(lo: Fraction, hi: Fraction | None, avoid: PolyQ) -> Fraction:
    x = lo + 1 if hi is None else (lo + hi) / 2
    step = Fraction(1, 3)
    while avoid(x) == 0:
        x = lo + step if hi is None else lo + (hi - lo) * step
        step /= 2
    return x


def positivity_on_open_interval(p: PolyQ, lo, hi=None, method: str = "auto") -> PositivityCertificate:
    """Certify p > 0 on the open interval (lo, hi); ``hi=None`` is +infinity.

    ``method`` is ``"auto"`` (Descartes-style coefficient test first, Sturm
    fallback), ``"descartes"`` or ``"sturm"``.  The Descartes route only
    ever concludes ``positive``; when it cannot, it returns ``indefinite``.
    """
    if p.is_zero():
        raise ValueError("cannot certify the zero polynomial")
    lo = as_rational(lo)
    hi = None if hi is None else as_rational(hi)
    if hi is not None and hi <= lo:
        raise ValueError("empty interval")
    cof, defl = _deflate(p, lo, hi)

    if method in ("auto", "descartes"):
        tr = _descartes_transform(cof, lo, hi)
        if all(c >= 0 for c in tr.coeffs) and any(c > 0 for c in tr.coeffs):
            return PositivityCertificate(
                "shift-descartes", lo, hi, POSITIVE, defl,
                {"coefficients": [str(c) for c in tr.coeffs]},
            )
        if method == "descartes":
            return PositivityCertificate(
                "shift-descartes", lo, hi, INDEFINITE, defl,
                {"coefficients": [str(c) for c in tr.coeffs]},
            )

    chain = sturm_chain(cof)
    roots = _variations(_signs_at(chain, lo)) - _variations(_signs_at(chain, hi))
    sample = _sample_point(lo, hi, cof)
    ssign = _sign(cof(sample))
    data = {
        "chain": [[str(c) for c in q.coeffs] for q in chain],
        "roots": roots,
        "sample": str(sample),
        "sample_sign": ssign,
    }
    if roots == 0:
        verdict = POSITIVE if ssign > 0 else INDEFINITE
    else:
        factors = squarefree_factors(cof)
        odd = [f for i, f in enumerate(factors) if (i + 1) % 2 == 1 and f.degree > 0]
        data["odd_factors"] = [[str(c) for c in f.coeffs] for f in odd]
        crosses = any(count_distinct_roots(f, lo, hi) for f in odd)
        verdict = NONNEG_ROOTS if (not crosses and ssign > 0) else INDEFINITE
    return PositivityCertificate("sturm", lo, hi, verdict, defl, data)


@dataclass(frozen=True)
class SignCertificate:
    """Sign of a nonzero polynomial on an interval: +1 or -1 via a positivity
    certificate of ``p`` or ``-p``; 0 for the zero polynomial; None if unknown."""

    sign: int | None
    certificate: PositivityCertificate | None

    def to_json(self) -> dict:
        label = {1: "positive", -1: "negative", 0: "zero", None: "indefinite"}[self.sign]
        return {
            "sign": label,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
        }


def certify_sign(p: PolyQ, lo=1, hi=None) -> SignCertificate:
    if p.is_zero():
        return SignCertificate(0, None)
    pos = positivity_on_open_interval(p, lo, hi)
    if pos.verdict == POSITIVE:
        return SignCertificate(1, pos)
    neg = positivity_on_open_interval(-p, lo, hi)
    if neg.verdict == POSITIVE:
        return SignCertificate(-1, neg)
    return SignCertificate(None, pos)
