"""Randomized, adaptive-precision verification of the mean inequalities,
limit formulas and auxiliary proof functions."""

from __future__ import annotations

import csv
import math
import random
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath
from mpmath import mp, mpf

from .cascade import AffineFreq, build_initial, classify_sign_pattern
from .exactmath import parse_poly
from .means import (
    GUARD_BITS,
    EvalContext,
    ExtendedParam,
    PositivePair,
    _frac_mpf,
    eval_C,
    eval_L,
)

REPORT_SCHEMA = "meanineq.suite-report/1"


class DomainError(ValueError):
    pass


class PrecisionExhausted(ArithmeticError):
    pass


class ClaimViolation(AssertionError):
    def __init__(self, claim: str, witness: dict):
        super().__init__(f"{claim} violated at {witness}")
        self.claim = claim
        self.witness = witness


# ----------------------------------------------------------------------
# parameters of one inequality instance
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Params:
    """Extra parameters of an inequality instance; unused ones stay None."""

    r: ExtendedParam | None = None
    s: ExtendedParam | None = None
    alpha: Fraction | None = None
    beta: Fraction | None = None
    region: tuple[Fraction, Fraction] | None = None

    @classmethod
    def make(cls, r=None, s=None, alpha=None, beta=None, region=None) -> "Params":
        return cls(
            None if r is None else ExtendedParam.of(r),
            None if s is None else ExtendedParam.of(s),
            None if alpha is None else Fraction(alpha),
            None if beta is None else Fraction(beta),
            None if region is None else (Fraction(region[0]), Fraction(region[1])),
        )

    def describe(self) -> dict:
        out = {}
        for k in ("r", "s", "alpha", "beta"):
            v = getattr(self, k)
            if v is not None:
                out[k] = str(v)
        if self.region is not None:
            out["region"] = [str(x) for x in self.region]
        return out


class MeanCache:
    """Memo of mean values for one pair, keyed by (kind, order, pair, precision)."""

    def __init__(self):
        self._store = {}

    def get(self, kind: str, r, pair: PositivePair, ctx: EvalContext):
        # plain int tuples hash much faster than Fractions
        if isinstance(r, ExtendedParam):
            rk = (r.kind, r.value.numerator, r.value.denominator) if r.value is not None else (r.kind,)
        else:
            rk = r
        a, b = pair.a, pair.b
        key = (kind, rk, a.numerator, a.denominator, b.numerator, b.denominator, ctx.precision)
        val = self._store.get(key)
        if val is None:
            fn = eval_L if kind == "L" else eval_C
            val = self._store[key] = fn(r, pair, ctx)
        return val


# ----------------------------------------------------------------------
# registry
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Inequality:
    id: str
    needs: tuple[str, ...]
    domain: Callable[[Params], bool]
    margin: Callable  # (pair, params, ctx, cache) -> (margin, scale)
    statement: str


def _finite(p: ExtendedParam | None) -> bool:
    return p is not None and p.is_finite


def _pos_finite(p):
    return _finite(p) and p.value > 0


def _nonneg_finite(p):
    return _finite(p) and p.value >= 0


def _mp(q):
    return _frac_mpf(q)


def _pow(x, e: Fraction):
    return mpmath.power(x, _mp(e))


def _conj_a(pair, p, ctx, c):
    r = p.r
    L = lambda q: c.get("L", q, pair, ctx)  # noqa: E731
    return L(r) + L(-r) - 2 * L(0), _mp(pair.a + pair.b)


def _conj_b(pair, p, ctx, c):
    L = lambda q: c.get("L", q, pair, ctx)  # noqa: E731
    return _mp(pair.a + pair.b) - L(p.r) - L(-p.r), _mp(pair.a + pair.b)


def _conj_1(pair, p, ctx, c):
    C = lambda q: c.get("C", q, pair, ctx)  # noqa: E731
    return C(p.r) + C(-p.r) - _mp(pair.a + pair.b), _mp(pair.a + pair.b)


def _conj_2(pair, p, ctx, c):
    C = lambda q: c.get("C", q, pair, ctx)  # noqa: E731
    s2 = _mp(pair.a ** 2 + pair.b ** 2)
    return s2 - C(p.r) ** 2 - C(-p.r) ** 2, s2


def _alz(pair, p, ctx, c):
    L = lambda q: c.get("L", q, pair, ctx)  # noqa: E731
    return L(1) + L(-1) - 2 * L(0), _mp(pair.a + pair.b)


def _lem_11(pair, p, ctx, c):
    L = lambda q: c.get("L", q, pair, ctx)  # noqa: E731
    prod = L(p.r) * L(-p.r)
    l0sq = L(0) ** 2
    return min(prod - _mp(pair.a * pair.b), l0sq - prod), l0sq


def _prod_c(pair, p, ctx, c):
    C = lambda q: c.get("C", q, pair, ctx)  # noqa: E731
    ps, pr = C(p.s) * C(-p.s), C(p.r) * C(-p.r)
    c0sq = C(0) ** 2
    return min(ps - C(-1) ** 2, pr - ps, c0sq - pr), c0sq


def _prod_l(pair, p, ctx, c):
    L = lambda q: c.get("L", q, pair, ctx)  # noqa: E731
    ps, pr = L(p.s) * L(-p.s), L(p.r) * L(-p.r)
    l0sq = L(0) ** 2
    return min(ps - _mp(pair.a * pair.b), pr - ps, l0sq - pr), l0sq


def _mono(kind):
    def margin(pair, p, ctx, c):
        M = lambda q: c.get(kind, q, pair, ctx)  # noqa: E731
        lo, hi = _mp(pair.lo), _mp(pair.hi)
        ms, mr = M(p.s), M(p.r)
        return min(ms - lo, mr - ms, hi - mr), hi
    return margin


def _lem_41(pair, p, ctx, c):
    sq = PositivePair(pair.a ** 2, pair.b ** 2)
    return c.get("C", p.r, sq, ctx) - c.get("C", p.r, pair, ctx) ** 2, _mp(pair.a ** 2 + pair.b ** 2)


def _cor_43(pair, p, ctx, c):
    C = lambda q: c.get("C", q, pair, ctx)  # noqa: E731
    s2 = _mp(pair.a ** 2 + pair.b ** 2)
    return s2 - (_mp(pair.hi) * C(p.r) + _mp(pair.lo) * C(-p.r)), s2


def _cor_61a(pair, p, ctx, c):
    C = lambda q: c.get("C", q, pair, ctx)  # noqa: E731
    a, b = pair.a, pair.b
    bound = mpmath.sqrt(_mp(3 * a * a + 2 * a * b + 3 * b * b) / 2)
    return bound - C(p.r) - C(-p.r), _mp(a + b)


def _cor_61b(pair, p, ctx, c):
    C = lambda q: c.get("C", q, pair, ctx)  # noqa: E731
    return C(p.r) ** 2 + C(-p.r) ** 2 - _mp((pair.a + pair.b) ** 2) / 2, _mp(pair.a ** 2 + pair.b ** 2)


def _chain_6(pair, p, ctx, c):
    C = lambda q: c.get("C", q, pair, ctx)  # noqa: E731
    cr, cm = C(p.r), C(-p.r)
    c0, c2, cg = C(0), C(2), C(-1)
    gm = mpmath.sqrt(cr * cm)
    am = (cr + cm) / 2
    top = mpmath.sqrt(c0 * (c0 + c2) / 2)
    return min(gm - cg, c0 - gm, am - c0, top - am), _mp(pair.a + pair.b)


def _cor_64i(pair, p, ctx, c):
    C = lambda q: c.get("C", q, pair, ctx)  # noqa: E731
    al = p.alpha
    rhs = _pow(_mp(pair.a), al) + _pow(_mp(pair.b), al)
    return _pow(C(p.r), al) + _pow(C(-p.r), al) - rhs, rhs


def _cor_64ii(pair, p, ctx, c):
    C = lambda q: c.get("C", q, pair, ctx)  # noqa: E731
    e = 2 + p.beta
    rhs = _pow(_mp(pair.a), e) + _pow(_mp(pair.b), e)
    return rhs - _pow(C(p.r), e) - _pow(C(-p.r), e), rhs


def _cor_64iii(pair, p, ctx, c):
    L = lambda q: c.get("L", q, pair, ctx)  # noqa: E731
    e = 1 + p.beta
    rhs = _pow(_mp(pair.a), e) + _pow(_mp(pair.b), e)
    return rhs - _pow(L(p.r), e) - _pow(L(-p.r), e), rhs


def region_point(pair: PositivePair, g_frac, m_frac):
    """(x, y) with sqrt(ab) < sqrt(xy) <= (x+y)/2 < (a+b)/2.

    The geometric mean g of (x, y) is placed a fraction g_frac of the way
    from sqrt(ab) to (a+b)/2, the arithmetic mean m a fraction m_frac of the
    way from g to (a+b)/2; x, y are the roots of t^2 - 2 m t + g^2.
    """
    a, b = _mp(pair.a), _mp(pair.b)
    gab, aab = mpmath.sqrt(a * b), (a + b) / 2
    g = gab + _mp(Fraction(g_frac)) * (aab - gab)
    m = g + _mp(Fraction(m_frac)) * (aab - g)
    d = mpmath.sqrt(max(m * m - g * g, 0))
    return m - d, m + d


def _region_69(pair, p, ctx, c):
    e = 1 + p.beta
    x, y = region_point(pair, *p.region)
    rhs = _pow(_mp(pair.a), e) + _pow(_mp(pair.b), e)
    return rhs - _pow(x, e) - _pow(y, e), rhs


def denom_46(r, b):
    """b^(r+1) + (r-1) b^r + r b^(r-1) - r b^2 - (r-1) b - 1 (and abs-term scale)."""
    terms = [b ** (r + 1), (r - 1) * b ** r, r * b ** (r - 1), -r * b * b, -(r - 1) * b, mpf(-1)]
    return mpmath.fsum(terms), mpmath.fsum(abs(t) for t in terms)


def denom_48(r, b):
    """r b^(r+2) + (r+1) b^(r+1) - b^r + b - (r+1) - r/b (and abs-term scale)."""
    terms = [r * b ** (r + 2), (r + 1) * b ** (r + 1), -b ** r, b, -(r + 1), -r / b]
    return mpmath.fsum(terms), mpmath.fsum(abs(t) for t in terms)


def _denom(fn):
    def margin(pair, p, ctx, c):
        return fn(_mp(p.r.value), _mp(pair.hi / pair.lo))
    return margin


def _r_in(lo=None, hi=None, lo_open=True, hi_open=True, allow_inf=False):
    def check(p: Params) -> bool:
        r = p.r
        if r is None:
            return False
        if not r.is_finite:
            return allow_inf and r.kind == "+inf"
        v = r.value
        if lo is not None and (v < lo or (lo_open and v == lo)):
            return False
        if hi is not None and (v > hi or (hi_open and v == hi)):
            return False
        return True
    return check


def _and(*checks):
    return lambda p: all(ch(p) for ch in checks)


_r_pos = _r_in(0)
_r_nonneg = _r_in(0, lo_open=False)
_r_gt1 = _r_in(1)
_s_gt_r = lambda p: _finite(p.s) and _pos_finite(p.r) and p.s.value > p.r.value  # noqa: E731
_s_lt_r = lambda p: _finite(p.s) and _finite(p.r) and p.s.value < p.r.value  # noqa: E731
_alpha_ok = lambda p: p.alpha is not None and 0 < p.alpha <= 1  # noqa: E731
_beta_ok = lambda p: p.beta is not None and p.beta >= 0  # noqa: E731
_beta_pos = lambda p: p.beta is not None and p.beta > 0  # noqa: E731
_region_ok = lambda p: p.region is not None and 0 < p.region[0] < 1 and 0 <= p.region[1] < 1  # noqa: E731
_no_params = lambda p: True  # noqa: E731

REGISTRY: dict[str, Inequality] = {
    ineq.id: ineq
    for ineq in [
        Inequality("CONJ-A", ("r",), _r_in(0, allow_inf=True), _conj_a, "L_r + L_-r > 2 L_0, r in (0, inf]"),
        Inequality("CONJ-B", ("r",), _r_nonneg, _conj_b, "L_r + L_-r < a + b, r in [0, inf)"),
        Inequality("CONJ-1", ("r",), _r_pos, _conj_1, "C_r + C_-r > a + b, r in (0, inf)"),
        Inequality("CONJ-2", ("r",), _r_nonneg, _conj_2, "C_r^2 + C_-r^2 < a^2 + b^2, r in [0, inf)"),
        Inequality("ALZ-1987", (), _no_params, _alz, "L_1 + L_-1 > 2 L_0"),
        Inequality("LEM-1.1", ("r",), _r_pos, _lem_11, "ab < L_r L_-r < L_0^2"),
        Inequality("PROD-C", ("r", "s"), _s_gt_r, _prod_c, "C_-1^2 < C_s C_-s < C_r C_-r < C_0^2, 0 < r < s"),
        Inequality("PROD-L", ("r", "s"), _s_gt_r, _prod_l, "ab < L_s L_-s < L_r L_-r < L_0^2, 0 < r < s"),
        Inequality("MONO-L", ("r", "s"), _s_lt_r, _mono("L"), "min < L_s < L_r < max, s < r"),
        Inequality("MONO-C", ("r", "s"), _s_lt_r, _mono("C"), "min < C_s < C_r < max, s < r"),
        Inequality("LEM-4.1", ("r",), _r_gt1, _lem_41, "C_r(a,b)^2 < C_r(a^2,b^2), r > 1"),
        Inequality("COR-4.3", ("r",), _r_nonneg, _cor_43, "max C_r + min C_-r < a^2 + b^2"),
        Inequality("COR-6.1a", ("r",), _r_pos, _cor_61a, "C_r + C_-r < sqrt((3a^2 + 2ab + 3b^2)/2)"),
        Inequality("COR-6.1b", ("r",), _r_pos, _cor_61b, "C_r^2 + C_-r^2 > (a+b)^2/2"),
        Inequality("CHAIN-6", ("r",), _r_pos, _chain_6,
                   "C_-1 < sqrt(C_r C_-r) < C_0 < (C_r + C_-r)/2 < sqrt(C_0 (C_0 + C_2)/2)"),
        Inequality("COR-6.4i", ("r", "alpha"), _and(_r_pos, _alpha_ok), _cor_64i,
                   "C_r^alpha + C_-r^alpha > a^alpha + b^alpha, alpha in (0, 1]"),
        Inequality("COR-6.4ii", ("r", "beta"), _and(_r_pos, _beta_ok), _cor_64ii,
                   "C_r^(2+beta) + C_-r^(2+beta) < a^(2+beta) + b^(2+beta)"),
        Inequality("COR-6.4iii", ("r", "beta"), _and(_r_pos, _beta_ok), _cor_64iii,
                   "L_r^(1+beta) + L_-r^(1+beta) < a^(1+beta) + b^(1+beta)"),
        Inequality("REGION-6.9", ("beta", "region"), _and(_beta_pos, _region_ok), _region_69,
                   "x^(1+beta) + y^(1+beta) < a^(1+beta) + b^(1+beta) on the mean region"),
        Inequality("DENOM-4.6", ("r",), _r_gt1, _denom(denom_46),
                   "b^(r+1) + (r-1)b^r + r b^(r-1) - r b^2 - (r-1)b - 1 > 0, b > 1"),
        Inequality("DENOM-4.8", ("r",), _r_gt1, _denom(denom_48),
                   "r b^(r+2) + (r+1)b^(r+1) - b^r + b - (r+1) - r/b > 0, b > 1"),
    ]
}

ALL_IDS = tuple(REGISTRY)


# ----------------------------------------------------------------------
# single checks with escalation
# ----------------------------------------------------------------------

@dataclass
class MarginResult:
    id: str
    margin: mpf
    scale: mpf
    precision: int
    escalations: int
    verdict: str  # "holds" | "violated" | "undecided"

    @property
    def relative(self) -> float:
        return float(self.margin / self.scale)


def escalation_ladder(base: int, escalation: int | None = None) -> tuple[int, ...]:
    escalation = escalation or 4 * base
    return (base, escalation, 4 * escalation)


def check_inequality(id: str, pair, ctx: EvalContext | None = None, *, r=None, s=None,
                     alpha=None, beta=None, region=None, params: Params | None = None,
                     ladder: Sequence[int] | None = None, cache: MeanCache | None = None) -> MarginResult:
    """Signed margin (positive = inequality holds) with precision escalation.

    Near-zero margins (below 2^(-prec/2) * scale) are recomputed at the next
    rung of the ladder; a violation is only declared at the top rung.
    """
    if id not in REGISTRY:
        raise KeyError(f"unknown inequality {id!r}")
    ineq = REGISTRY[id]
    pair = PositivePair.of(pair)
    if pair.a == pair.b:
        raise DomainError("inequalities are strict only for a != b")
    params = params or Params.make(r, s, alpha, beta, region)
    if not ineq.domain(params):
        raise DomainError(f"{id}: parameters {params.describe()} outside the domain")
    ctx = ctx or EvalContext()
    ladder = tuple(ladder or escalation_ladder(ctx.precision))
    cache = cache or MeanCache()
    for i, prec in enumerate(ladder):
        level = ctx if prec == ctx.precision else ctx.with_precision(prec)
        with mp.workprec(prec + GUARD_BITS):
            margin, scale = ineq.margin(pair, params, level, cache)
            tol = mpmath.ldexp(scale, -(prec // 2))
            if abs(margin) >= tol or i == len(ladder) - 1:
                if margin > 0:
                    verdict = "holds"
                elif abs(margin) > tol:
                    verdict = "violated"
                else:
                    verdict = "undecided"
                return MarginResult(id, +margin, +scale, prec, i, verdict)
    raise AssertionError("unreachable")


# ----------------------------------------------------------------------
# limits
# ----------------------------------------------------------------------

@dataclass
class LimitResult:
    which: str
    value: mpf
    expected: mpf
    rel_error: float
    observed_order: float
    raw_order: float
    quotients: list

    def to_json(self):
        return {
            "which": self.which,
            "extrapolated": mpmath.nstr(self.value, 25),
            "expected": mpmath.nstr(self.expected, 25),
            "relError": self.rel_error,
            "observedOrder": self.observed_order,
            "rawOrder": self.raw_order,
        }


LIMIT_STEPS = (Fraction(1, 64), Fraction(1, 128), Fraction(1, 256))
# one extra halving, used only to measure the convergence order
ORDER_PROBE_STEP = Fraction(1, 512)


def richardson(values: Sequence, ratio: int = 2, orders: Sequence[int] = (1, 2)):
    """Eliminate the h^p terms listed in ``orders`` from a halving sequence."""
    table = list(values)
    for p in orders:
        f = mpf(ratio) ** p
        table = [(f * table[i + 1] - table[i]) / (f - 1) for i in range(len(table) - 1)]
    return table[-1]


def _order(seq) -> float:
    d1, d2 = seq[0] - seq[1], seq[1] - seq[2]
    if d2 == 0:
        return math.inf
    return float(mpmath.log(abs(d1 / d2), 2))


def _limit_quotient(which, r, s, a, h, ctx):
    pair = PositivePair(a, a + h)
    L = lambda q: eval_L(q, pair, ctx)  # noqa: E731
    if which == "quartic":
        num, power = L(r) + L(-r) - 2 * L(0), 4
    elif which == "quadratic":
        num, power = L(r) + L(-r) - _mp(2 * a + h), 2
    else:
        num, power = L(r) * L(-r) - L(s) * L(-s), 4
    if abs(num) < mpmath.ldexp(_mp(a), -(ctx.precision - 32)):
        raise PrecisionExhausted(f"{which}: difference lost in cancellation at h={h}")
    return num / _mp(h) ** power


def verify_limit(which: str, ctx: EvalContext | None = None, *, r, a=1, s=None) -> LimitResult:
    """Richardson-extrapolated limit of a scaled difference quotient as b -> a.

    ``observed_order`` is the convergence order of the once-extrapolated
    column (needs the extra probe step); ``raw_order`` that of the quotients.
    """
    ctx = ctx or EvalContext()
    if ctx.precision < 256:
        ctx = ctx.with_precision(256)
    if which not in ("quartic", "quadratic", "product"):
        raise ValueError(f"unknown limit {which!r}")
    r = Fraction(r)
    a = Fraction(a)
    if r <= 0 or a <= 0:
        raise DomainError("limits need r > 0 and a > 0")
    if which == "product":
        if s is None or Fraction(s) <= r:
            raise DomainError("product limit needs s > r")
        s = Fraction(s)
    with mp.workprec(ctx.precision + GUARD_BITS):
        quotients = [_limit_quotient(which, r, s, a, h, ctx) for h in LIMIT_STEPS]
        probe = _limit_quotient(which, r, s, a, ORDER_PROBE_STEP, ctx)
        value = richardson(quotients)
        if which == "quartic":
            expected = _mp(r * r / (960 * a ** 3))
        elif which == "quadratic":
            expected = _mp(-1 / (6 * a))
        else:
            expected = _mp((s * s - r * r) / (1440 * a * a))
        qs = quotients + [probe]
        first = [2 * qs[i + 1] - qs[i] for i in range(3)]
        rel = float(abs(value / expected - 1))
        return LimitResult(which, +value, +expected, rel, _order(first), _order(qs[:3]), quotients)


# ----------------------------------------------------------------------
# auxiliary proof functions
# ----------------------------------------------------------------------

def _poly_terms(rows):
    return [(parse_poly(c), AffineFreq.parse(e) if "r" in e else AffineFreq(0, int(e)) if e != "0" else None)
            for c, e in rows]


F2_TERMS = _poly_terms([
    ("-(r-1)", "3r+1"), ("r+1", "3r"), ("r^2(r-1)", "2r+2"), ("(r+1)(r^2-4r+1)", "2r+1"),
    ("-(r-1)(r^2+4r+1)", "2r"), ("-r^2(r+1)", "2r-1"), ("r^2(r+1)", "r+2"),
    ("(r-1)(r^2+4r+1)", "r+1"), ("-(r+1)(r^2-4r+1)", "r"), ("-r^2(r-1)", "r-1"),
    ("-(r+1)", "1"), ("r-1", "0"),
])

H2_TERMS = _poly_terms([
    ("(r-1)^2", "3r+5"), ("r^2+6r-3", "3r+4"), ("4(r+1)", "3r+3"), ("4(r-1)", "3r+2"),
    ("-(r^2-6r-3)", "3r+1"), ("-(r+1)^2", "3r"), ("r^2(r-1)^2", "2r+6"),
    ("3r^4-6r^3-6r^2-2r+3", "2r+5"), ("3r^4-10r^3-6r^2+6r-9", "2r+4"),
    ("r^4-14r^3+r^2+4r+12", "2r+3"), ("-(r^4+14r^3+r^2-4r+12)", "2r+2"),
    ("-(3r^4+10r^3-6r^2-6r-9)", "2r+1"), ("-(3r^4+6r^3-6r^2+2r+3)", "2r"),
    ("-r^2(r+1)^2", "2r-1"), ("r^2(r+1)^2", "r+6"), ("3r^4+6r^3-6r^2+2r+3", "r+5"),
    ("3r^4+10r^3-6r^2-6r-9", "r+4"), ("r^4+14r^3+r^2-4r+12", "r+3"),
    ("-(r^4-14r^3+r^2+4r+12)", "r+2"), ("-(3r^4-10r^3-6r^2+6r-9)", "r+1"),
    ("-(3r^4-6r^3-6r^2-2r+3)", "r"), ("-r^2(r-1)^2", "r-1"), ("(r+1)^2", "5"),
    ("r^2-6r-3", "4"), ("-4(r-1)", "3"), ("-4(r+1)", "2"), ("-(r^2+6r-3)", "1"),
    ("-(r-1)^2", "0"),
])


def _eval_b_poly(terms, r: Fraction, b):
    rm = _mp(r)
    acc = []
    for coeff, expo in terms:
        e = mpf(0) if expo is None else expo.slope * rm + expo.intercept
        acc.append(_mp(Fraction(coeff(r))) * mpmath.power(b, e))
    return mpmath.fsum(acc)


PROOF_FUNCTIONS = ("f", "g", "h", "F0", "F1", "F2", "H0", "H1", "H2")


def _extra_bits(x: Fraction, mult: int = 2) -> int:
    """Extra bits to absorb cancellation when x is close to 0."""
    if x == 0:
        return 0
    return mult * max(0, -math.floor(math.log2(abs(float(x)) or 1e-300)))


def _f_raw(r: Fraction, b):
    """d/dr ln C_r(1, b)."""
    if r == 1:
        lb = mpmath.log(b)
        return b * lb * lb / (2 * (b + 1) ** 2)
    rm = _mp(r)
    br = mpmath.power(b, rm)
    lb = mpmath.log(b)
    return -mpmath.log((br + 1) / (b + 1)) / (rm - 1) ** 2 + br * lb / ((rm - 1) * (br + 1))


def _C1b(r, b, ctx):
    return eval_C(r, (1, b), ctx)


def eval_proof_fn(name: str, r, b, ctx: EvalContext | None = None):
    """Value of an auxiliary function from the proofs at (r, b)."""
    ctx = ctx or EvalContext()
    r = Fraction(r)
    b = Fraction(b)
    if b < 1:
        raise DomainError("auxiliary functions are defined for b >= 1")
    if name in ("F1", "F2") and r < 1:
        raise DomainError(f"{name} needs r >= 1")
    if name in ("H0", "H1", "H2") and r <= 1:
        raise DomainError(f"{name} needs r > 1")
    if name in ("h", "F0") and r <= 0:
        raise DomainError(f"{name} needs r > 0")
    if name not in PROOF_FUNCTIONS:
        raise KeyError(f"unknown proof function {name!r}")
    extra = _extra_bits(r - 1, 3) + _extra_bits(b - 1, 4) + GUARD_BITS
    inner = ctx.with_precision(ctx.precision + extra)
    with mp.workprec(inner.precision):
        bm = _mp(b)
        if name == "f":
            val = _f_raw(r, bm) if b != 1 else mpf(0)
        elif name == "g":
            val = mpf(0) if (r == 1 or b == 1) else (1 - _mp(r)) ** 2 * _f_raw(r, bm)
        elif name == "h":
            if r == 1 or b == 1:
                val = mpf(0)
            else:
                rm = _mp(r)
                val = (rm - 1) ** 2 * (rm + 1) ** 2 / rm * (_f_raw(r, bm) - _f_raw(-r, bm))
        elif name == "F0":
            val = (_C1b(r, b, inner) + _C1b(-r, b, inner) - bm - 1) / (bm + 1)
        elif name == "F1":
            val = mpf(0) if b == 1 else _F1(r, bm, b, inner)
        elif name == "F2":
            val = _eval_b_poly(F2_TERMS, r, bm)
        elif name == "H0":
            val = (_C1b(r, b, inner) ** 2 + _C1b(-r, b, inner) ** 2 - bm * bm - 1) / (2 * (bm * bm + 1))
        elif name == "H1":
            rm = _mp(r)
            if b == 1:
                val = -mpmath.log((rm + 1) / (rm - 1))
            else:
                n1, _ = denom_46(rm, bm)
                n2, _ = denom_48(rm, bm)
                val = (2 * mpmath.log(_C1b(r, b, inner) / _C1b(-r, b, inner))
                       - mpmath.log((rm - 1) * n2 / ((rm + 1) * n1)))
        else:
            val = _eval_b_poly(H2_TERMS, r, bm)
    with mp.workprec(ctx.precision):
        return +val


def _F1(r: Fraction, bm, b: Fraction, ctx):
    rm = _mp(r)
    first = mpmath.log(_C1b(r, b, ctx) / _C1b(-r, b, ctx))
    if r == 1:
        ratio = (bm - 1 / bm) / (2 * mpmath.log(bm))
    else:
        # (r-1)/(b^(r-1) - 1) = 1 / (ln b * L-type divided difference)
        lb = mpmath.log(bm)
        u = (rm - 1) * lb
        ratio = (rm - 1) * (mpmath.power(bm, rm) - 1 / bm) / ((rm + 1) * mpmath.expm1(u))
    return first - mpmath.log(ratio)


def bridge_residuals(r, b, ctx: EvalContext | None = None) -> tuple:
    """Relative gaps |F2 - 2e^{(3r+1)x} G2| / |F2| and |H2 - 2e^{(3r+5)x} W2| / |H2|, x = ln sqrt(b)."""
    ctx = ctx or EvalContext()
    r = Fraction(r)
    b = Fraction(b)
    with mp.workprec(ctx.precision + GUARD_BITS):
        bm = _mp(b)
        x = mpmath.log(bm) / 2
        rm = _mp(r)
        f2 = eval_proof_fn("F2", r, b, ctx)
        h2 = eval_proof_fn("H2", r, b, ctx)
        g2 = build_initial("G").evaluate(r, x)
        w2 = build_initial("W").evaluate(r, x)
        rf = abs(f2 - 2 * mpmath.exp((3 * rm + 1) * x) * g2) / abs(f2)
        rh = abs(h2 - 2 * mpmath.exp((3 * rm + 5) * x) * w2) / abs(h2)
    return rf, rh


# ----------------------------------------------------------------------
# qualitative claims on auxiliary functions
# ----------------------------------------------------------------------

@dataclass
class SignChangeReport:
    function: str
    r: str
    bracket: tuple[str, str]
    monotone_segments: bool | None

    def to_json(self):
        return asdict(self)


@dataclass
class ClaimReport:
    claims: dict = field(default_factory=dict)
    sign_changes: list[SignChangeReport] = field(default_factory=list)

    def to_json(self):
        return {"claims": self.claims, "signChanges": [s.to_json() for s in self.sign_changes]}


def b_grid(points: int = 1024, lo_exp: int = -20, hi_exp: int = 20) -> list[Fraction]:
    """b = 1 + 2^e with e evenly spaced in [lo_exp, hi_exp]."""
    return [1 + Fraction(2.0 ** (lo_exp + (hi_exp - lo_exp) * i / (points - 1))) for i in range(points)]


def _scan(fn, grid):
    return [fn(b) for b in grid]


def _monotone(vals, increasing: bool) -> bool:
    pairs = zip(vals, vals[1:])
    return all((v2 > v1) if increasing else (v2 < v1) for v1, v2 in pairs)


def proof_fn_claims(names: Iterable[str], r_samples: Iterable, ctx: EvalContext | None = None,
                    grid: Sequence[Fraction] | None = None) -> ClaimReport:
    """Numerically confirm the qualitative claims made about auxiliary functions.

    Claim names: f, g, h, H1, F1, case-I, case-IV.  Raises ClaimViolation with
    a witness on the first failure.
    """
    ctx = ctx or EvalContext()
    grid = list(grid) if grid is not None else b_grid()
    report = ClaimReport()
    r_samples = [Fraction(r) for r in r_samples]
    located = set()
    for name in names:
        for r in r_samples:
            key = f"{name}@r={r}"
            if name == "f":
                for b in grid:
                    if eval_proof_fn("f", r, b, ctx) <= 0:
                        raise ClaimViolation("f > 0", {"r": str(r), "b": str(b)})
            elif name == "g":
                if r == 1:
                    continue
                for b in grid:
                    if eval_proof_fn("g", r, b, ctx) <= 0:
                        raise ClaimViolation("g(r,b) > g(1,b) = 0", {"r": str(r), "b": str(b)})
            elif name == "h":
                if r == 1 or r <= 0:
                    continue
                for b in grid:
                    if eval_proof_fn("h", r, b, ctx) >= 0:
                        raise ClaimViolation("h(r,b) < h(1,b) = 0", {"r": str(r), "b": str(b)})
            elif name == "H1":
                rr = r if r > 1 else 1 / r
                if rr == 1:
                    continue
                vals = _scan(lambda b: eval_proof_fn("H1", rr, b, ctx), grid)
                if not _monotone(vals, True):
                    i = next(i for i in range(len(vals) - 1) if vals[i + 1] <= vals[i])
                    raise ClaimViolation("H1 strictly increasing in b",
                                         {"r": str(rr), "b": [str(grid[i]), str(grid[i + 1])]})
                if ("H1", rr) not in located:
                    located.add(("H1", rr))
                    report.sign_changes.append(_sign_change("H1", rr, grid, ctx, expect=(-1, 1)))
            elif name == "F1":
                rr = r if r >= 1 else 1 / r
                if ("F1", rr) not in located:
                    located.add(("F1", rr))
                    report.sign_changes.append(_sign_change("F1", rr, grid, ctx, expect=(1, -1)))
            elif name == "case-I":
                for b in grid[:: max(1, len(grid) // 64)]:
                    with mp.workprec(ctx.precision + GUARD_BITS):
                        lhs = _C1b(3, b, ctx) ** 2 + _C1b(-1, b, ctx) ** 2
                        rhs = _mp(b * b + 1)
                        rel = abs(lhs - rhs) / rhs
                    if rel > 8 * mpmath.ldexp(1, -ctx.precision):
                        raise ClaimViolation("C_3^2 + C_-1^2 = b^2 + 1", {"b": str(b), "rel": float(rel)})
            elif name == "case-IV":
                rr = r if r < 1 else 1 / r
                if rr == 1:
                    continue
                s = 1 / rr
                for b in grid[:: max(1, len(grid) // 64)]:
                    if b > 2 ** 8:
                        continue
                    with mp.workprec(ctx.precision + GUARD_BITS):
                        bm = _mp(b)
                        bs = mpmath.power(bm, _mp(s))
                        inner = ctx.with_precision(ctx.precision + GUARD_BITS)
                        lhs = eval_C(rr, (1, bs), inner) ** 2 + eval_C(-rr, (1, bs), inner) ** 2
                        fac = ((1 + bs) / (1 + bm)) ** 2
                        rhs = fac * (_C1b(s, b, inner) ** 2 + _C1b(-s, b, inner) ** 2)
                        rel = abs(lhs - rhs) / rhs
                    if rel > mpmath.ldexp(1, -(ctx.precision - 8)):
                        raise ClaimViolation("case-IV reduction identity", {"r": str(rr), "b": str(b)})
            else:
                raise KeyError(f"unknown claim {name!r}")
            report.claims[key] = "holds"
    return report


def _sign_change(fn: str, r: Fraction, grid, ctx, expect) -> SignChangeReport:
    """Locate the single sign change of F1 (+ to -) or H1 (- to +) in b."""
    def f(bm):
        return eval_proof_fn(fn, r, _to_frac(bm), ctx)

    sgn_fn = f if expect == (1, -1) else (lambda bm: -f(bm))
    shape, crossings = classify_sign_pattern(sgn_fn, grid)
    if shape != "single-crossing":
        raise ClaimViolation(f"{fn} has one sign change", {"r": str(r), "shape": shape})
    lo, hi = crossings[0][:2]
    # monotone segments of the parent: F0 rises then falls around b0;
    # H0 falls then rises around b1
    parent = "F0" if fn == "F1" else "H0"
    left = [b for b in grid if _mp(b) < lo]
    right = [b for b in grid if _mp(b) > hi]
    pv_l = _scan(lambda b: eval_proof_fn(parent, r, b, ctx), left)
    pv_r = _scan(lambda b: eval_proof_fn(parent, r, b, ctx), right)
    rising_first = fn == "F1"
    mono = _monotone(pv_l, rising_first) and _monotone(pv_r, not rising_first)
    return SignChangeReport(fn, str(r), (mpmath.nstr(lo, 20), mpmath.nstr(hi, 20)), mono)


def _to_frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    man, exp = mpf(x).man_exp
    return Fraction(man) * Fraction(2) ** exp


# ----------------------------------------------------------------------
# randomized suite
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SampleConfig:
    seed: int = 42
    samples: int = 10_000
    r_lo: float = 1e-3
    r_hi: float = 1e3
    ratio_hi: float = 1e6
    base_precision: int = 256
    escalation_precision: int = 1024

    def __post_init__(self):
        if self.samples < 0:
            raise ValueError("samples must be nonnegative")
        if not self.r_lo > 0 or not self.r_hi > self.r_lo:
            raise ValueError("need 0 < r_lo < r_hi")
        if not self.ratio_hi > 1:
            raise ValueError("ratio_hi must exceed 1")
        if self.escalation_precision < 2 * self.base_precision:
            raise ValueError("escalation precision must be at least twice the base")


ADVERSARIAL_RATIOS = (1 + Fraction(1, 2 ** 20), Fraction(2), Fraction(10 ** 6))
ADVERSARIAL_RS = (Fraction(1, 2 ** 10), 1 - Fraction(1, 2 ** 20), Fraction(1),
                  1 + Fraction(1, 2 ** 20), Fraction(3), Fraction(2 ** 10))
ADVERSARIAL_ALPHAS = (Fraction(1, 2 ** 10), Fraction(1, 2), Fraction(1))
ADVERSARIAL_BETAS = (Fraction(0), Fraction(1, 2), Fraction(8))


@dataclass(frozen=True)
class Sample:
    index: int
    pair: PositivePair
    r: Fraction
    s: Fraction          # > r, for the product chains
    mono: tuple[Fraction, Fraction]   # (s, r) with s < r
    alpha: Fraction
    beta: Fraction
    region: tuple[Fraction, Fraction]
    adversarial: bool = False

    def params_for(self, id: str) -> list[Params]:
        r = self.r
        if id in ("LEM-4.1", "DENOM-4.6", "DENOM-4.8"):
            if r == 1:
                return []
            r = r if r > 1 else 1 / r
        if id == "ALZ-1987":
            return [Params()]
        if id in ("PROD-C", "PROD-L"):
            return [Params.make(r=r, s=self.s)]
        if id in ("MONO-L", "MONO-C"):
            return [Params.make(r=self.mono[1], s=self.mono[0])]
        if id == "COR-6.4i":
            alphas = ADVERSARIAL_ALPHAS if self.adversarial else (self.alpha,)
            return [Params.make(r=r, alpha=a) for a in alphas]
        if id in ("COR-6.4ii", "COR-6.4iii"):
            betas = ADVERSARIAL_BETAS if self.adversarial else (self.beta,)
            return [Params.make(r=r, beta=b) for b in betas]
        if id == "REGION-6.9":
            betas = ADVERSARIAL_BETAS[1:] if self.adversarial else (self.beta,)
            return [Params.make(beta=b, region=self.region) for b in betas]
        return [Params.make(r=r)]


def _log_uniform(rng: random.Random, lo: float, hi: float) -> Fraction:
    return Fraction(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def draw_samples(config: SampleConfig) -> list[Sample]:
    rng = random.Random(config.seed)
    out = []
    for i in range(config.samples):
        a = _log_uniform(rng, 2.0 ** -10, 2.0 ** 10)
        ratio = Fraction(math.exp(rng.uniform(0.0, math.log(config.ratio_hi))))
        if ratio == 1:
            ratio = 1 + Fraction(1, 2 ** 30)
        r = _log_uniform(rng, config.r_lo, config.r_hi)
        s = r * _log_uniform(rng, 1.0 + 2.0 ** -20, 16.0)
        wider = r * _log_uniform(rng, 1.0 + 2.0 ** -20, 16.0)
        mono = (r, wider) if rng.random() < 0.5 else (-wider, r)
        alpha = Fraction(1 - rng.random())
        beta = _log_uniform(rng, 1e-3, 10.0)
        g_frac = Fraction(rng.random()) or Fraction(1, 2 ** 30)
        m_frac = Fraction(rng.random())
        out.append(Sample(i, PositivePair(a, a * ratio), r, s, mono, alpha, beta, (g_frac, m_frac)))
    return out


def adversarial_samples(start_index: int = 0) -> list[Sample]:
    out = []
    i = start_index
    for ratio in ADVERSARIAL_RATIOS:
        for r in ADVERSARIAL_RS:
            out.append(Sample(i, PositivePair(1, ratio), r, 2 * r, (r / 2, r), Fraction(1), Fraction(1),
                              (Fraction(1, 2), Fraction(1, 2)), adversarial=True))
            i += 1
            out.append(Sample(i, PositivePair(1, ratio), r, 2 * r, (-r, r), Fraction(1), Fraction(1),
                              (Fraction(1, 1024), Fraction(1023, 1024)), adversarial=True))
            i += 1
    return out


@dataclass
class IdResult:
    id: str
    passes: int = 0
    fails: int = 0
    undecided: int = 0
    min_margin: float | None = None
    min_margin_precision: int | None = None
    min_margin_sample: int | None = None
    escalations: int = 0

    def add(self, res: MarginResult, sample_index: int):
        if res.verdict == "holds":
            self.passes += 1
        elif res.verdict == "violated":
            self.fails += 1
        else:
            self.undecided += 1
        self.escalations += res.escalations
        rel = res.relative
        if self.min_margin is None or (rel, sample_index) < (self.min_margin, self.min_margin_sample):
            self.min_margin = rel
            self.min_margin_precision = res.precision
            self.min_margin_sample = sample_index

    def merge(self, other: "IdResult"):
        self.passes += other.passes
        self.fails += other.fails
        self.undecided += other.undecided
        self.escalations += other.escalations
        if other.min_margin is not None and (
            self.min_margin is None
            or (other.min_margin, other.min_margin_sample) < (self.min_margin, self.min_margin_sample)
        ):
            self.min_margin = other.min_margin
            self.min_margin_precision = other.min_margin_precision
            self.min_margin_sample = other.min_margin_sample

    def to_json(self):
        return {
            "id": self.id,
            "passes": self.passes,
            "fails": self.fails,
            "undecided": self.undecided,
            "minMargin": self.min_margin,
            "minMarginPrecision": self.min_margin_precision,
            "minMarginSample": self.min_margin_sample,
            "escalations": self.escalations,
        }


@dataclass
class SuiteReport:
    seed: int
    config: dict
    results: dict[str, IdResult]
    wall_time: float = field(default=0.0, compare=False)

    @property
    def total_fails(self) -> int:
        return sum(r.fails + r.undecided for r in self.results.values())

    @property
    def passed(self) -> bool:
        return self.total_fails == 0 and all(
            r.min_margin is None or r.min_margin > 0 for r in self.results.values()
        )

    def to_json(self, include_timing: bool = True) -> dict:
        out = {
            "schema": REPORT_SCHEMA,
            "seed": self.seed,
            "config": self.config,
            "results": [self.results[k].to_json() for k in self.results],
            "passed": self.passed,
        }
        if include_timing:
            out["timing"] = {"wallSeconds": round(self.wall_time, 3)}
        return out


def evaluate_sample(sample: Sample, ids: Sequence[str], ladder: Sequence[int],
                    rows: list | None = None) -> dict[str, IdResult]:
    ctx = EvalContext(ladder[0])
    cache = MeanCache()
    out = {i: IdResult(i) for i in ids}
    for id in ids:
        for params in sample.params_for(id):
            if not REGISTRY[id].domain(params):
                continue
            res = check_inequality(id, sample.pair, ctx, params=params, ladder=ladder, cache=cache)
            out[id].add(res, sample.index)
            if rows is not None:
                rows.append((sample.index, id, repr(res.relative), res.precision, res.verdict))
    return out


def _evaluate_chunk(args):
    chunk, ids, ladder, want_rows = args
    rows = [] if want_rows else None
    merged = {i: IdResult(i) for i in ids}
    for sample in chunk:
        for id, res in evaluate_sample(sample, ids, ladder, rows).items():
            merged[id].merge(res)
    return merged, rows


def run_suite(config: SampleConfig, ids: Sequence[str] | None = None, *, jobs: int = 1,
              csv_path: str | None = None, progress: Callable[[int, int], None] | None = None) -> SuiteReport:
    """Check every id on the random samples plus the fixed adversarial set.

    Deterministic for a given config; violations are recorded, not raised.
    """
    ids = list(ids or ALL_IDS)
    for i in ids:
        if i not in REGISTRY:
            raise KeyError(f"unknown inequality {i!r}")
    start = time.perf_counter()
    samples = draw_samples(config) + adversarial_samples(config.samples)
    ladder = escalation_ladder(config.base_precision, config.escalation_precision)
    chunk_size = 64
    chunks = [samples[i:i + chunk_size] for i in range(0, len(samples), chunk_size)]
    tasks = [(c, ids, ladder, csv_path is not None) for c in chunks]
    results = {i: IdResult(i) for i in ids}
    rows: list = []
    if jobs > 1:
        import multiprocessing as mpc

        with mpc.get_context("spawn").Pool(jobs) as pool:
            outputs = pool.imap(_evaluate_chunk, tasks)
            for n, (part, part_rows) in enumerate(outputs, 1):
                for i in ids:
                    results[i].merge(part[i])
                if part_rows:
                    rows.extend(part_rows)
                if progress:
                    progress(n, len(tasks))
    else:
        for n, task in enumerate(tasks, 1):
            part, part_rows = _evaluate_chunk(task)
            for i in ids:
                results[i].merge(part[i])
            if part_rows:
                rows.extend(part_rows)
            if progress:
                progress(n, len(tasks))
    if csv_path is not None:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample", "id", "relative_margin", "precision", "verdict"])
            w.writerows(rows)
    cfg = {k: v for k, v in asdict(config).items()}
    cfg["ids"] = ids
    cfg["adversarialSamples"] = len(samples) - config.samples
    return SuiteReport(config.seed, cfg, results, time.perf_counter() - start)
