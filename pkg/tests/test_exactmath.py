import json
from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from meanineq.exactmath import (
    INDEFINITE,
    NONNEG_ROOTS,
    POSITIVE,
    PolyParseError,
    PolyQ,
    PositivityCertificate,
    R,
    as_rational,
    certify_sign,
    count_distinct_roots,
    parse_poly,
    poly_arith,
    poly_equal,
    poly_eval_exact,
    poly_shift,
    positivity_on_open_interval,
    squarefree_factors,
    sturm_chain,
)

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=30)
small_polys = st.lists(st.integers(-20, 20), max_size=8).map(PolyQ)
rat_polys = st.lists(rationals, max_size=7).map(PolyQ)


def convolve(xs, ys):
    """Schoolbook product of coefficient lists, the oracle for PolyQ.__mul__."""
    if not xs or not ys:
        return []
    out = [Fraction(0)] * (len(xs) + len(ys) - 1)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            out[i + j] += x * y
    while out and out[-1] == 0:
        out.pop()
    return out


def to_sympy(p):
    r = sympy.Symbol("r")
    return sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(p.coeffs)] or [0], r)


# --- construction and canonical form ---------------------------------------

def test_zero_is_empty_with_degree_minus_one():
    z = PolyQ([0, 0, 0])
    assert z.coeffs == ()
    assert z.degree == -1
    assert z.is_zero()


def test_rationals_are_reduced():
    p = PolyQ([Fraction(2, 4), Fraction(-3, -6)])
    assert all(c.denominator > 0 for c in p.coeffs)
    assert p.coeffs == (Fraction(1, 2), Fraction(1, 2))


def test_as_rational_rejects_decimals_with_hint():
    with pytest.raises(ValueError, match="p/q"):
        as_rational("0.5")
    with pytest.raises(TypeError):
        as_rational(0.5)
    assert as_rational("3/2") == Fraction(3, 2)


# --- arithmetic --------------------------------------------------------------

def test_difference_of_squares():
    assert (R - 1) * (R + 1) == PolyQ([-1, 0, 1])


def test_additive_identity():
    p = parse_poly("3r^2-7r+1")
    assert p + PolyQ() == p


def test_expanded_boundary_matches_convolution_oracle():
    p = (R - 1) ** 2 * (R + 1) ** 2 * 16 * R
    factors = [[-1, 1], [-1, 1], [1, 1], [1, 1], [0, 16]]
    expect = [Fraction(1)]
    for f in factors:
        expect = convolve(expect, [Fraction(c) for c in f])
    assert list(p.coeffs) == expect == [0, 16, 0, -32, 0, 16]


@given(rat_polys, rat_polys)
def test_product_matches_convolution(p, q):
    assert list((p * q).coeffs) == convolve(list(p.coeffs), list(q.coeffs))


@given(rat_polys, rat_polys)
def test_arith_matches_sympy(p, q):
    for op, fn in (("add", lambda a, b: a + b), ("sub", lambda a, b: a - b), ("mul", lambda a, b: a * b)):
        got = to_sympy(poly_arith(p, q, op))
        assert (got - fn(to_sympy(p), to_sympy(q))).is_zero


@given(rat_polys, rat_polys.filter(lambda q: not q.is_zero()))
def test_divmod_reconstructs(p, q):
    quo, rem = divmod(p, q)
    assert quo * q + rem == p
    assert rem.degree < q.degree


@given(small_polys, small_polys, st.lists(rationals, min_size=100, max_size=100))
def test_evaluation_is_multiplicative(p, q, points):
    pq = p * q
    for r0 in points:
        assert poly_eval_exact(pq, r0) == poly_eval_exact(p, r0) * poly_eval_exact(q, r0)


def test_eval_printed_closed_forms():
    assert poly_eval_exact(parse_poly("16r(r-1)(r+1)^2"), 2) == 288
    assert poly_eval_exact(parse_poly("-4480r^3(r-1)^2(r+1)^2"), 2) == -322560


@given(rat_polys)
def test_eval_at_zero_is_constant_term(p):
    assert poly_eval_exact(p, 0) == p.coeff(0)


# --- shift -------------------------------------------------------------------

def test_shift_examples():
    assert poly_shift(R - 1, 1) == R
    assert poly_shift(R ** 2, 1) == PolyQ([1, 2, 1])
    shifted = poly_shift(R ** 2 + 3, 1)
    assert shifted == PolyQ([4, 2, 1])
    assert all(c > 0 for c in shifted.coeffs)


@given(rat_polys, rationals)
def test_shift_roundtrip(p, c):
    assert poly_shift(poly_shift(p, c), -c) == p


@given(rat_polys, rationals, rationals)
def test_shift_is_translation(p, c, t):
    assert poly_eval_exact(poly_shift(p, c), t) == poly_eval_exact(p, t + c)


# --- equality and parsing ----------------------------------------------------

def test_poly_equal_examples():
    assert poly_equal((R - 1) * (R + 1), R ** 2 - 1)
    assert poly_equal(PolyQ([0, 0, 1]), R ** 2 + 0 * R)


def test_parse_handles_braced_exponents_and_implicit_products():
    assert parse_poly("2r^{3}(r-1)") == 2 * R ** 3 * (R - 1)
    assert parse_poly("-(r^2 +6r -3)") == -(R ** 2 + 6 * R - 3)


def test_parse_rejects_missing_operator():
    with pytest.raises(PolyParseError):
        parse_poly("48r^{10}280r^{9}+1")


@given(rat_polys)
def test_str_parse_roundtrip_for_integer_polys(p):
    p = p.primitive() if not p.is_zero() else p
    assert parse_poly(str(p).replace("*", "")) == p


@given(rat_polys)
def test_json_roundtrip(p):
    assert PolyQ.from_json(json.loads(json.dumps(p.to_json()))) == p


# --- Sturm machinery ---------------------------------------------------------

@given(small_polys.filter(lambda p: p.degree >= 1), st.integers(-5, 5))
def test_root_count_matches_sympy(p, lo):
    roots = {x for x in sympy.real_roots(to_sympy(p)) if x > lo}
    assert count_distinct_roots(p, lo) == len(roots)


@given(small_polys.filter(lambda p: p.degree >= 1))
def test_squarefree_factors_multiply_back(p):
    parts = squarefree_factors(p)
    prod = PolyQ.const(1)
    for i, f in enumerate(parts, 1):
        prod = prod * f ** i
    assert prod.monic() == p.monic()


def test_sturm_chain_starts_with_p_and_derivative():
    p = (R - 2) * (R - 3) * (R + 1)
    chain = sturm_chain(p)
    assert chain[0] == p and chain[1] == p.derivative()


# --- positivity certificates -------------------------------------------------

W21_INNER = ("7668r^{12}+11718r^{11}+600358r^{10}+686665r^{9}+7482173r^{8}+6387346r^{7}"
             "+18275708r^{6}+11557147r^{5}+977689r^{4}+14673036r^{3}+16973484r^{2}+19238688r-319680")


def test_linear_positive_on_unit_ray():
    cert = positivity_on_open_interval(R - 1, 1)
    assert cert.verdict == POSITIVE
    assert cert.recheck(R - 1)


def test_w21_inner_factor_positive_and_sympy_agrees():
    p = parse_poly(W21_INNER)
    assert p.coeff(0) == -319680
    cert = positivity_on_open_interval(p, 1)
    assert cert.verdict == POSITIVE
    assert not [x for x in sympy.real_roots(to_sympy(p)) if x > 1]


def test_root_inside_interval_is_not_positive():
    assert positivity_on_open_interval(R - 2, 1).verdict == INDEFINITE
    assert positivity_on_open_interval((R - 2) ** 2, 1).verdict == NONNEG_ROOTS


def test_endpoint_roots_are_deflated():
    p = (R - 1) ** 3 * (R + 5)
    cert = positivity_on_open_interval(p, 1)
    assert cert.verdict == POSITIVE
    assert cert.deflation[0] == 3


def test_bounded_interval():
    p = (R - 3) * (R - 4)
    assert positivity_on_open_interval(p, 0, 2).verdict == POSITIVE
    assert positivity_on_open_interval(p, 0, 5).verdict == INDEFINITE


def test_certificate_json_roundtrip_and_tamper_detection():
    p = parse_poly(W21_INNER)
    cert = positivity_on_open_interval(p, 1)
    again = PositivityCertificate.from_json(json.loads(json.dumps(cert.to_json())))
    assert again.recheck(p)
    assert not again.recheck(p - 10 ** 9)


def test_certify_sign_negative_and_zero():
    assert certify_sign(-(R ** 2) - 1).sign == -1
    assert certify_sign(PolyQ()).sign == 0
    assert certify_sign(R - 2).sign is None


@given(small_polys.filter(lambda p: p.degree >= 1), st.integers(-3, 3))
def test_positive_verdict_implies_spot_values(p, lo):
    cert = positivity_on_open_interval(p, lo)
    if cert.verdict == POSITIVE:
        for k in (Fraction(1, 7), 1, 10, 1000):
            assert poly_eval_exact(p, lo + k) > 0


@given(small_polys.filter(lambda p: p.degree >= 1), st.integers(-3, 3))
def test_descartes_and_sturm_agree(p, lo):
    d = positivity_on_open_interval(p, lo, method="descartes")
    s = positivity_on_open_interval(p, lo, method="sturm")
    if d.verdict == POSITIVE:
        assert s.verdict == POSITIVE
    if s.verdict != POSITIVE:
        assert d.verdict != POSITIVE
