import warnings
from fractions import Fraction

import mpmath
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from mpmath import mp, mpf

from meanineq.means import _to_fraction
from meanineq.means import (
    EvalContext,
    ExtendedParam,
    PositivePair,
    check_identity_LC,
    eval_C,
    eval_gini,
    eval_L,
    eval_stolarsky,
    parse_positive,
)

CTX = EvalContext(256)
ULP = mpmath.ldexp(1, -256)


def rel(x, y):
    with mp.workprec(600):
        return abs(mpf(x) - mpf(y)) / abs(mpf(y))


def oracle_L(r, a, b, prec=1024):
    """Direct formula at high precision (independent reference)."""
    with mp.workprec(prec):
        r, a, b = (mpf(Fraction(x).numerator) / Fraction(x).denominator for x in (r, a, b))
        return +(((b ** r - a ** r) / (r * (b - a))) ** (1 / (r - 1)))


def oracle_C(r, a, b, prec=1024):
    with mp.workprec(prec):
        r, a, b = (mpf(Fraction(x).numerator) / Fraction(x).denominator for x in (r, a, b))
        return +(((b ** r + a ** r) / (b + a)) ** (1 / (r - 1)))


positive = st.fractions(min_value=Fraction(1, 1000), max_value=1000, max_denominator=1000)
orders = st.fractions(min_value=-30, max_value=30, max_denominator=64)


# --- closed-form anchors -----------------------------------------------------

def test_L_examples():
    assert eval_L(2, (1, 3)) == 2
    assert rel(eval_L(-1, (1, 4)), 2) < 4 * ULP
    with mp.workprec(300):
        assert rel(eval_L(1, (1, 2)), 4 / mpmath.e) < 4 * ULP
    assert eval_L("inf", (1, 3)) == 3
    assert eval_L("-inf", (1, 3)) == 1
    assert eval_L(0.37, (5, 5)) == 5


def test_C_examples():
    assert rel(eval_C(2, (1, 3)), mpf(5) / 2) < 4 * ULP
    assert eval_C(0, (1, 3)) == 2
    with mp.workprec(300):
        assert rel(eval_C(1, (1, 3)), mpmath.root(27, 4)) < 4 * ULP
    assert rel(eval_C(-1, (4, 9)), 6) < 4 * ULP


def test_L0_is_logarithmic_mean():
    with mp.workprec(300):
        e = mpmath.e
        pair = (1, _to_fraction(+e))
        b = mpmath.mpmathify(pair[1])
        expected = (b - 1) / mpmath.log(b)
    assert rel(eval_L(0, pair), expected) < 4 * ULP


def test_stolarsky_examples():
    assert rel(eval_stolarsky(2, 1, (1, 3)), 2) < 4 * ULP
    with mp.workprec(300):
        e = +mpmath.e
        expected = e - 1
    assert rel(eval_stolarsky(0, 0, (1, e)), expected) < 2 ** -240
    # E_{p,p} against L_1 of the powered pair
    with mp.workprec(280):
        alt = eval_L(1, (1, 4), EvalContext(280)) ** (mpf(1) / 2)
    assert rel(eval_stolarsky(2, 2, (1, 2)), alt) < 4 * ULP


def test_stolarsky_direct_formula():
    # E_{p,q} = (q (b^p - a^p) / (p (b^q - a^q)))^(1/(p-q))
    p, q, a, b = 3, Fraction(1, 2), 2, 7
    with mp.workprec(600):
        P, Q, A, B = mpf(p), mpf(1) / 2, mpf(a), mpf(b)
        direct = (Q * (B ** P - A ** P) / (P * (B ** Q - A ** Q))) ** (1 / (P - Q))
    assert rel(eval_stolarsky(p, q, (a, b)), direct) < 8 * ULP


def test_gini_examples():
    assert rel(eval_gini(2, 1, (1, 3)), mpf(5) / 2) < 4 * ULP
    assert eval_gini(0, 0, (1, 3)) == 2
    assert rel(eval_gini(-1, 1, (4, 9)), 6) < 4 * ULP


def test_gini_direct_formula():
    # G_{p,q} = ((b^p + a^p)/(b^q + a^q))^(1/(p-q))
    p, q, a, b = Fraction(5, 2), -1, 3, 11
    with mp.workprec(600):
        P, Q, A, B = mpf(5) / 2, mpf(-1), mpf(a), mpf(b)
        direct = ((B ** P + A ** P) / (B ** Q + A ** Q)) ** (1 / (P - Q))
    assert rel(eval_gini(p, q, (a, b)), direct) < 8 * ULP


def test_stolarsky_continuous_as_q_goes_to_zero():
    pair = (2, 9)
    at0 = eval_stolarsky(3, 0, pair)
    near = eval_stolarsky(3, Fraction(1, 2 ** 90), pair)
    assert rel(at0, near) < 2 ** -80


# --- identity L_r(a^2,b^2) = L_r C_r -----------------------------------------

def test_identity_at_r_zero():
    assert check_identity_LC(0, (1, 4)) < 2 ** -248


@given(orders, positive, positive)
def test_identity_residual(r, a, b):
    assume(a != b)
    assert check_identity_LC(r, (a, b)) < 2 ** -240


# --- symmetry, homogeneity, monotonicity ---------------------------------------

@given(orders, positive, positive)
def test_symmetry(r, a, b):
    assert eval_L(r, (a, b)) == eval_L(r, (b, a))
    assert eval_C(r, (a, b)) == eval_C(r, (b, a))


@given(orders, positive, positive, st.sampled_from([Fraction(1, 3), Fraction(2), Fraction(7)]))
def test_homogeneity(r, a, b, alpha):
    for fn in (eval_L, eval_C):
        scaled = fn(r, (alpha * a, alpha * b))
        with mp.workprec(600):
            base = fn(r, (a, b)) * mpf(alpha.numerator) / alpha.denominator
        assert rel(scaled, base) < 4 * ULP


@given(positive, positive, st.lists(orders, min_size=2, max_size=6, unique=True))
def test_strict_monotonicity_in_r(a, b, rs):
    assume(a != b)
    rs = sorted(rs)
    lo, hi = (mpf(x.numerator) / x.denominator for x in (min(a, b), max(a, b)))
    for fn in (eval_L, eval_C):
        vals = [fn(r, (a, b)) for r in rs]
        assert all(lo < v < hi for v in vals)
        assert all(v1 < v2 for v1, v2 in zip(vals, vals[1:]))


# --- accuracy against the raw formula ----------------------------------------

@given(orders, positive, positive)
def test_raw_formula_agreement(r, a, b):
    assume(abs(r - 1) > Fraction(1, 10) and abs(r) > Fraction(1, 10))
    assume(max(a, b) / min(a, b) > Fraction(11, 10))
    assert rel(eval_L(r, (a, b)), oracle_L(r, a, b, 512)) < 4 * ULP
    assert rel(eval_C(r, (a, b)), oracle_C(r, a, b, 512)) < 4 * ULP


@pytest.mark.parametrize("r", [Fraction(1, 2 ** 100), 1 + Fraction(1, 2 ** 100), 1 - Fraction(1, 2 ** 60),
                               Fraction(-1, 2 ** 70)])
@pytest.mark.parametrize("b", [2, 1 + Fraction(1, 2 ** 40), 10 ** 6])
def test_near_singular_orders(r, b):
    # the direct formula at 4096 bits still resolves these orders
    assert rel(eval_L(r, (1, b)), oracle_L(r, 1, b, 4096)) < 8 * ULP
    assert rel(eval_C(r, (1, b)), oracle_C(r, 1, b, 4096)) < 8 * ULP


@pytest.mark.parametrize("r", [2, Fraction(-3, 2), Fraction(1, 3), 50])
def test_nearly_equal_arguments(r):
    b = 1 + Fraction(1, 2 ** 80)
    assert rel(eval_L(r, (1, b)), oracle_L(r, 1, b, 4096)) < 8 * ULP
    assert rel(eval_C(r, (1, b)), oracle_C(r, 1, b, 4096)) < 8 * ULP


def test_continuity_across_series_switch():
    # both sides of each branch switch must agree with the direct formula
    ctx = EvalContext(256)
    thr = _to_fraction(ctx.singular_threshold)
    sides = (Fraction(99, 100), Fraction(101, 100))
    for centre in (0, 1):
        for k in sides:
            r = centre + thr * k
            assert rel(eval_L(r, (2, 5), ctx), oracle_L(r, 2, 5, 4096)) < 8 * ULP
            assert rel(eval_C(r, (2, 5), ctx), oracle_C(r, 2, 5, 4096)) < 8 * ULP
    # small-ratio switch: t * max(1, |r|) crosses the threshold
    for k in sides:
        t = thr * k
        with mp.workprec(400):
            b = _to_fraction(mpmath.exp(mpf(t.numerator) / t.denominator))
        assert rel(eval_L(3, (1, b), ctx), oracle_L(3, 1, b, 4096)) < 8 * ULP
        assert rel(eval_C(3, (1, b), ctx), oracle_C(3, 1, b, 4096)) < 8 * ULP


# --- edge cases ----------------------------------------------------------------

def test_huge_orders_fall_back_to_extremes_with_warning():
    with pytest.warns(UserWarning):
        assert eval_L(10 ** 7, (1, 3)) == 3
    with pytest.warns(UserWarning):
        assert eval_C(-(10 ** 7), (1, 3)) == 1
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        v = eval_L(10 ** 6, (1, 3))
    assert 2 < v < 3


def test_parse_positive_rejects_bad_input():
    for bad in ("-0", "-0.0", "-3", "0", "5e-324", "abc"):
        with pytest.raises(ValueError):
            parse_positive(bad)
    assert parse_positive("2.5") == Fraction(5, 2)
    assert parse_positive("7/3") == Fraction(7, 3)


def test_pair_and_param_validation():
    with pytest.raises(ValueError):
        PositivePair.of((0, 1))
    with pytest.raises(ValueError):
        PositivePair.of((-1, 1))
    assert -ExtendedParam.of("inf") == ExtendedParam.of("-inf")
    assert ExtendedParam.of("3/4").value == Fraction(3, 4)


def test_context_invariants():
    with pytest.raises(ValueError):
        EvalContext(32)
    with pytest.raises(ValueError):
        EvalContext(256, singular_threshold=0.5)
    with pytest.raises(ValueError):
        EvalContext(256, series_order=2)
    assert EvalContext(256).singular_threshold == 2.0 ** -64


def test_result_precision_follows_context():
    v = eval_L(Fraction(1, 3), (2, 3), EvalContext(64))
    hi = eval_L(Fraction(1, 3), (2, 3), EvalContext(512))
    assert rel(v, hi) < mpmath.ldexp(1, -62)
