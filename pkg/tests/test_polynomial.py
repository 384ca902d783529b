import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ensys.polynomial import (
    Polynomial,
    PolynomialError,
    degree_in,
    evaluate,
    lemma1_gadget,
    parse_polynomial,
    serialize_polynomial,
)


def x(i, n=3):
    return Polynomial.variable(n, i)


def test_parse_and_evaluate():
    p = parse_polynomial("x1^2 - 4*x1 + 4")
    assert p.var_count == 1
    assert [evaluate(p, (v,)) for v in range(5)] == [4, 1, 0, 1, 4]


def test_serialize_is_canonical():
    p = parse_polynomial("4 + x1*x1 - 2*x1 - 2*x1")
    assert serialize_polynomial(p) == "x1^2 - 4*x1 + 4"


def test_grlex_order():
    p = parse_polynomial("x2 + x1 + x1*x2 + 3 + x1^2")
    assert serialize_polynomial(p) == "x1^2 + x1*x2 + x1 + x2 + 3"


def test_trailing_unused_variable_round_trips():
    p = parse_polynomial("x1 - 1", var_count=3)
    again = parse_polynomial(serialize_polynomial(p))
    assert again == p and again.var_count == 3


@pytest.mark.parametrize("text", ["x0 + 1", "x1^-2", "x1 +* 2", "", "x1 + (x2", "0"])
def test_parse_errors(text):
    with pytest.raises(PolynomialError):
        parse_polynomial(text)


def test_parse_error_reports_position():
    with pytest.raises(PolynomialError, match="position"):
        parse_polynomial("x1 + * x2")


def test_zero_with_explicit_arity():
    assert parse_polynomial("0", var_count=2).is_zero()


def test_evaluate_arity_mismatch():
    with pytest.raises(PolynomialError):
        evaluate(parse_polynomial("x1 + x2"), (1,))


def test_arithmetic():
    a, b = x(1), x(2)
    assert (a + b) ** 2 == a * a + 2 * a * b + b * b
    assert (a - a).is_zero()
    assert degree_in(a ** 3 * b, 1) == 3
    assert (a ** 3 * b).total_degree() == 4


def test_substitute_and_compose():
    p = parse_polynomial("x1*x2 + x3")
    assert p.substitute({2: 5}) == parse_polynomial("5*x1 + x3", var_count=3)
    t = Polynomial.variable(1, 1)
    assert p.compose([t, t + 1, Polynomial.constant(1, 2)]) == t * t + t + 2


def test_gadget_for_x_minus_2():
    d = parse_polynomial("x1 - 2")
    g = lemma1_gadget(d)
    assert g.var_count == 9
    zero = (2, 2, 0, 0, 0, 0, 0, 0, 0)
    assert evaluate(g, zero) == 0
    assert evaluate(g, (2, 1, 1, 1, 1, 0, 0, 0, 0)) == 0
    assert evaluate(g, (2, 1, 0, 0, 0, 0, 0, 0, 0)) != 0


def test_gadget_rejects_zero():
    with pytest.raises(PolynomialError):
        lemma1_gadget(Polynomial.constant(1, 0))


# -- properties -------------------------------------------------------------------

coeffs = st.integers(-10, 10)
terms = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2)), coeffs, max_size=6)


@st.composite
def polys(draw):
    return Polynomial(3, draw(terms))


@given(polys())
def test_round_trip(p):
    assert parse_polynomial(serialize_polynomial(p), var_count=3) == p
    if not p.is_zero():
        assert parse_polynomial(serialize_polynomial(p)) == p


@given(polys(), polys(), st.tuples(coeffs, coeffs, coeffs))
@settings(max_examples=60)
def test_ring_homomorphism(p, q, pt):
    assert evaluate(p * q, pt) == evaluate(p, pt) * evaluate(q, pt)
    assert evaluate(p - q, pt) == evaluate(p, pt) - evaluate(q, pt)


@given(polys())
@settings(max_examples=40)
def test_gadget_zero_iff_original_zero(p):
    if p.is_zero():
        return
    g = lemma1_gadget(p)
    for pt in itertools.product(range(-1, 2), repeat=3):
        val = evaluate(p, pt)
        # the gadget with all auxiliary squares zero vanishes iff D and |x|^2 both vanish
        aux = (0,) * 8
        assert (evaluate(g, pt + aux) == 0) == (val == 0 and all(v == 0 for v in pt))
