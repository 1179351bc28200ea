"""Generalized logarithmic (Stolarsky) and Gini means at arbitrary precision.

With ``a <= b`` and ``t = ln(b/a)`` both families reduce to divided
differences of one-variable kernels::

    ln L_r(a, b) = ln a + (phi(r t) - phi(t)) / (r - 1),  phi(u) = ln((e^u - 1) / u)
    ln C_r(a, b) = ln a + (chi(r t) - chi(t)) / (r - 1),  chi(u) = ln(1 + e^u)

The removable singularities at ``r = 1`` and ``a = b`` are handled by exact
limits and by Taylor series in the small variable; ``r = +-inf`` give the
max/min limits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import mpmath
from mpmath import mp, mpf

from .exactmath import PolyQ

GUARD_BITS = 24
MAX_FINITE_ORDER = 10**6


# ----------------------------------------------------------------------
# parameter and context types
# ----------------------------------------------------------------------

def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a number")
    if isinstance(x, (int, float, str)):
        return Fraction(x)
    if hasattr(x, "_mpf_") and not isinstance(x, mpf):
        x = +x  # mpmath constants such as e, pi
    if isinstance(x, mpf):
        if not mpmath.isfinite(x):
            raise ValueError("non-finite value")
        man, exp = x.man_exp
        return Fraction(man) * Fraction(2) ** exp
    raise TypeError(f"unsupported numeric type {type(x).__name__}")


@dataclass(frozen=True)
class ExtendedParam:
    """A mean order: finite rational/binary value or +-infinity."""

    kind: str
    value: Fraction | None = None

    def __post_init__(self):
        if self.kind not in ("finite", "+inf", "-inf"):
            raise ValueError(f"bad kind {self.kind!r}")
        if (self.kind == "finite") != (self.value is not None):
            raise ValueError("finite params carry a value, infinite ones do not")

    @classmethod
    def of(cls, x) -> "ExtendedParam":
        if isinstance(x, ExtendedParam):
            return x
        if isinstance(x, str):
            s = x.strip().lower()
            if s in ("inf", "+inf", "infinity", "+infinity"):
                return cls("+inf")
            if s in ("-inf", "-infinity"):
                return cls("-inf")
        if isinstance(x, float) and math.isinf(x):
            return cls("+inf" if x > 0 else "-inf")
        if isinstance(x, mpf) and mpmath.isinf(x):
            return cls("+inf" if x > 0 else "-inf")
        if isinstance(x, float) and math.isnan(x):
            raise ValueError("NaN order")
        return cls("finite", _to_fraction(x))

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    def __neg__(self):
        if self.kind == "+inf":
            return ExtendedParam("-inf")
        if self.kind == "-inf":
            return ExtendedParam("+inf")
        return ExtendedParam("finite", -self.value)

    def to_mpf(self):
        if self.kind == "+inf":
            return mpmath.inf
        if self.kind == "-inf":
            return -mpmath.inf
        return _frac_mpf(self.value)

    def __str__(self):
        return self.kind if not self.is_finite else str(self.value)


@dataclass(frozen=True)
class PositivePair:
    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", _to_fraction(self.a))
        object.__setattr__(self, "b", _to_fraction(self.b))
        if self.a <= 0 or self.b <= 0:
            raise ValueError("both arguments of a mean must be positive")

    @classmethod
    def of(cls, pair) -> "PositivePair":
        if isinstance(pair, PositivePair):
            return pair
        a, b = pair
        return cls(a, b)

    @property
    def lo(self) -> Fraction:
        return min(self.a, self.b)

    @property
    def hi(self) -> Fraction:
        return max(self.a, self.b)

    def scaled(self, alpha) -> "PositivePair":
        alpha = _to_fraction(alpha)
        return PositivePair(self.a * alpha, self.b * alpha)

    def swapped(self) -> "PositivePair":
        return PositivePair(self.b, self.a)


@dataclass(frozen=True)
class EvalContext:
    """Working precision (bits), series switch threshold and series order."""

    precision: int = 256
    singular_threshold: float | None = None
    series_order: int = 6

    def __post_init__(self):
        if self.precision < 64:
            raise ValueError("precision must be at least 64 bits")
        if self.singular_threshold is None:
            object.__setattr__(self, "singular_threshold", 2.0 ** (-self.precision / 4))
        if not 0 < self.singular_threshold < 1 / 16:
            raise ValueError("singular_threshold must lie in (0, 1/16)")
        if self.series_order < 4:
            raise ValueError("series_order must be at least 4")

    def with_precision(self, precision: int) -> "EvalContext":
        return replace(self, precision=precision, singular_threshold=None)


DEFAULT_CONTEXT = EvalContext()


def _ctx(ctx) -> EvalContext:
    return DEFAULT_CONTEXT if ctx is None else ctx


def _frac_mpf(q: Fraction):
    if q.denominator == 1:
        return mpf(q.numerator)
    return mpf(q.numerator) / q.denominator


def parse_positive(text: str) -> Fraction:
    """Parse a positive real argument, rejecting -0.0 and float subnormals."""
    s = text.strip()
    if s.startswith("-"):
        raise ValueError(f"{text!r}: mean arguments must be positive")
    try:
        value = Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"{text!r} is not a number") from exc
    if value <= 0:
        raise ValueError(f"{text!r}: mean arguments must be positive")
    if ("e" in s.lower() or "." in s) and value < Fraction(2.2250738585072014e-308):
        raise ValueError(f"{text!r} is subnormal in double precision; rescale the pair")
    return value


# ----------------------------------------------------------------------
# series coefficients
# ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def _even_coeffs(kind: str, n_terms: int) -> tuple[Fraction, ...]:
    """Coefficients of u^(2k), k=1..n, in ln((e^u-1)/u) - u/2 ("L") or
    ln(1+e^u) - ln 2 - u/2 ("C")."""
    out = []
    for k in range(1, n_terms + 1):
        p, q = mpmath.bernfrac(2 * k)
        bern = Fraction(int(p), int(q))
        c = bern / (2 * k * math.factorial(2 * k))
        if kind == "C":
            c *= 2 ** (2 * k) - 1
        out.append(c)
    return tuple(out)


@lru_cache(maxsize=None)
def _derivative_polys(kind: str, n: int) -> tuple[PolyQ, ...]:
    """Polynomials P_k with kernel^(k+1) expressed through one auxiliary.

    "L": d^k/du^k of 1/(e^u - 1) = P_k(sigma), sigma = 1/(e^u - 1).
    "C": d^k/du^k of the logistic s = 1/(1 + e^-u) = P_k(s).
    """
    s = PolyQ.var()
    chain = -s - s * s if kind == "L" else s - s * s
    polys = [s]
    for _ in range(n):
        polys.append(polys[-1].derivative() * chain)
    return tuple(polys)


def _kernel_derivs(kind: str, u, n: int) -> list:
    """[f'(u), ..., f^(n)(u)] for f = phi ("L") or chi ("C")."""
    polys = _derivative_polys(kind, n)
    if kind == "L":
        sigma = 1 / mpmath.expm1(u)
        out = [1 + sigma - 1 / u]
        for k in range(2, n + 1):
            out.append(polys[k - 1].eval_mp(sigma) + (-1) ** k * math.factorial(k - 1) / u ** k)
        return out
    s = 1 / (1 + mpmath.exp(-u))
    return [polys[k - 1].eval_mp(s) for k in range(1, n + 1)]


def _phi(u):
    if u == 0:
        return mpf(0)
    return mpmath.log(mpmath.expm1(u) / u)


def _chi(u):
    if u > 0:
        return u + mpmath.log1p(mpmath.exp(-u))
    return mpmath.log1p(mpmath.exp(u))


# ----------------------------------------------------------------------
# core evaluation in log space
# ----------------------------------------------------------------------

def _log_ratio(pair: PositivePair):
    """t = ln(b/a) for b >= a, accurate even for b/a close to 1."""
    lo, hi = pair.lo, pair.hi
    return mpmath.log1p(_frac_mpf((hi - lo) / lo))


def _ln_mean_unit(kind: str, r: Fraction, t, ctx: EvalContext):
    """ln M_r(1, e^t) for M = L or C, finite r, t > 0, at current precision."""
    thr = ctx.singular_threshold
    if kind == "L" and r == 0:
        return _phi(t)
    if r == 1:
        if kind == "L":
            return t / (-mpmath.expm1(-t)) - 1
        return t / (1 + mpmath.exp(-t))
    rm = _frac_mpf(r)
    # small t: even series in t, exact in r (no pole at r = 1)
    if t * max(1, abs(rm)) < thr:
        coeffs = _even_coeffs(kind, ctx.series_order // 2)
        acc = t / 2
        t2 = t * t
        tp = mpf(1)
        for k, c in enumerate(coeffs, start=1):
            tp *= t2
            geom = sum(r ** j for j in range(2 * k))  # (r^(2k) - 1) / (r - 1)
            acc += _frac_mpf(c * geom) * tp
        return acc
    h = r - 1
    if abs(h) < thr:
        n = ctx.series_order
        extra = (n + 1) * max(0, -math.floor(math.log2(float(t)))) if kind == "L" else 0
        with mp.extraprec(extra + 16):
            derivs = _kernel_derivs(kind, t, n)
            hm = _frac_mpf(h)
            acc = mpf(0)
            tk = mpf(1)
            hk = mpf(1)
            for k in range(1, n + 1):
                tk *= t
                acc += derivs[k - 1] * tk * hk / math.factorial(k)
                hk *= hm
            return acc
    kernel = _phi if kind == "L" else _chi
    lost = max(0, -math.floor(math.log2(abs(float(h))))) if abs(h) < 1 else 0
    with mp.extraprec(lost + 8):
        # r itself must carry the extra bits, else r - 1 is already rounded
        return (kernel(_frac_mpf(r) * t) - kernel(t)) / _frac_mpf(h)


def _round(x, ctx: EvalContext):
    with mp.workprec(ctx.precision):
        return +x


def _infinite_order(r: ExtendedParam) -> ExtendedParam:
    if r.is_finite and abs(r.value) > MAX_FINITE_ORDER:
        warnings.warn(
            f"order {float(r.value):.3g} exceeds 1e6 in magnitude; using the "
            "max/min limit instead",
            stacklevel=3,
        )
        return ExtendedParam("+inf" if r.value > 0 else "-inf")
    return r


def _eval_mean(kind: str, r, pair, ctx) -> mpf:
    r = _infinite_order(ExtendedParam.of(r))
    pair = PositivePair.of(pair)
    ctx = _ctx(ctx)
    with mp.workprec(ctx.precision + GUARD_BITS):
        if r.kind == "+inf":
            return _round(_frac_mpf(pair.hi), ctx)
        if r.kind == "-inf":
            return _round(_frac_mpf(pair.lo), ctx)
        if pair.a == pair.b:
            return _round(_frac_mpf(pair.a), ctx)
        if kind == "C" and r.value == 0:
            return _round(_frac_mpf((pair.a + pair.b) / 2), ctx)
        t = _log_ratio(pair)
        y = _ln_mean_unit(kind, r.value, t, ctx)
        return _round(_frac_mpf(pair.lo) * mpmath.exp(y), ctx)


def eval_L(r, pair, ctx: EvalContext | None = None) -> mpf:
    """Generalized logarithmic mean L_r(a, b) = ((b^r - a^r)/(r(b - a)))^(1/(r-1))."""
    return _eval_mean("L", r, pair, ctx)


def eval_C(r, pair, ctx: EvalContext | None = None) -> mpf:
    """Gini-type mean C_r(a, b) = ((b^r + a^r)/(b + a))^(1/(r-1))."""
    return _eval_mean("C", r, pair, ctx)


# ----------------------------------------------------------------------
# two-parameter families
# ----------------------------------------------------------------------

def _two_param(kind: str, p, q, pair, ctx):
    p, q = ExtendedParam.of(p), ExtendedParam.of(q)
    pair = PositivePair.of(pair)
    ctx = _ctx(ctx)
    evaluator = eval_L if kind == "L" else eval_C
    finite = [x for x in (p, q) if x.is_finite]
    if len(finite) == 2 and p.value == 0 and q.value == 0:
        return evaluator(0, pair, ctx)
    if not finite:
        raise ValueError("at least one of p, q must be finite")
    # both families are symmetric in (p, q): divide by the larger finite one
    if len(finite) == 2:
        num, den = (p, q) if abs(q.value) >= abs(p.value) else (q, p)
    else:
        num, den = (p, q) if q.is_finite else (q, p)
    if den.value == 0:
        raise ValueError("E/G with an infinite order needs a nonzero finite partner")
    ratio = ExtendedParam(num.kind) if not num.is_finite else ExtendedParam("finite", num.value / den.value)
    extra = max(0, -math.floor(math.log2(abs(float(den.value))))) + 8
    inner = ctx.with_precision(ctx.precision + GUARD_BITS + extra)
    with mp.workprec(inner.precision):
        d = _frac_mpf(den.value)
        if den.value.denominator == 1 and abs(den.value) <= 64:
            A, B = pair.a ** int(den.value), pair.b ** int(den.value)
        else:
            A = mpmath.power(_frac_mpf(pair.a), d)
            B = mpmath.power(_frac_mpf(pair.b), d)
        m = evaluator(ratio, (A, B), inner)
        return _round(mpmath.power(m, 1 / d), ctx)


def eval_stolarsky(p, q, pair, ctx: EvalContext | None = None) -> mpf:
    """Stolarsky mean E_{p,q}(a, b) via E = L_{p/q}(a^q, b^q)^(1/q)."""
    return _two_param("L", p, q, pair, ctx)


def eval_gini(p, q, pair, ctx: EvalContext | None = None) -> mpf:
    """Gini mean G_{p,q}(a, b) via G = C_{p/q}(a^q, b^q)^(1/q)."""
    return _two_param("C", p, q, pair, ctx)


def check_identity_LC(r, pair, ctx: EvalContext | None = None) -> mpf:
    """Relative residual of L_r(a^2, b^2) = L_r(a, b) C_r(a, b)."""
    pair = PositivePair.of(pair)
    ctx = _ctx(ctx)
    sq = PositivePair(pair.a ** 2, pair.b ** 2)
    lhs = eval_L(r, sq, ctx)
    l1 = eval_L(r, pair, ctx)
    c1 = eval_C(r, pair, ctx)
    with mp.workprec(ctx.precision + GUARD_BITS):
        return abs(lhs - l1 * c1) / lhs


# raw formulas, used as independent references away from singularities

def _num(x):
    return _frac_mpf(x) if isinstance(x, Fraction) else mpf(x)


def raw_L(r, a, b):
    r, a, b = _num(r), _num(a), _num(b)
    return ((b ** r - a ** r) / (r * (b - a))) ** (1 / (r - 1))


def raw_C(r, a, b):
    r, a, b = _num(r), _num(a), _num(b)
    return ((b ** r + a ** r) / (b + a)) ** (1 / (r - 1))
