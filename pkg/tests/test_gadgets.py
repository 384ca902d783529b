import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import GADGET_CORPUS
from ensys.gadgets import (
    GadgetError,
    count_sum_of_squares,
    f_witness_chain,
    four_square_decompose,
    height_bound_via_count,
    hypercube_system,
    theorem2_system,
    theorem3_system,
    theorem3_threshold,
)
from ensys.polynomial import parse_polynomial
from ensys.solver import Finite, classify_finiteness, count_solutions
from ensys.system import EnSystem, parse_system


def r8_jacobi(m):
    """Jacobi: r8(m) = 16 * sum over d | m of (-1)^(m+d) d^3."""
    if m == 0:
        return 1
    return 16 * sum((-1) ** (m + d) * d ** 3 for d in range(1, m + 1) if m % d == 0)


def r_brute(m, k):
    top = math.isqrt(m)
    rng = range(-top, top + 1)
    return sum(1 for t in itertools.product(rng, repeat=k) if sum(v * v for v in t) == m)


def test_r8_of_four():
    assert count_sum_of_squares(4, 8) == 1136 == r8_jacobi(4) == 16 * 71


@pytest.mark.parametrize("m", range(0, 13))
def test_r8_matches_jacobi(m):
    assert count_sum_of_squares(m, 8) == r8_jacobi(m)


@pytest.mark.parametrize("m, k", [(5, 4), (9, 3), (4, 6), (3, 5)])
def test_sum_of_squares_brute(m, k):
    assert count_sum_of_squares(m, k) == r_brute(m, k)


def brute_decompose(m):
    top = math.isqrt(m)
    for t in itertools.product(range(top + 1), repeat=4):
        if list(t) == sorted(t) and sum(v * v for v in t) == m:
            return t


@pytest.mark.parametrize("m", list(range(0, 80)) + [30, 127, 1000])
def test_four_squares(m):
    dec = four_square_decompose(m)
    assert sum(v * v for v in dec) == m and list(dec) == sorted(dec)
    assert dec == brute_decompose(m)


def test_four_squares_thirty():
    assert four_square_decompose(30) == (0, 1, 2, 5)


def test_four_squares_negative():
    with pytest.raises(GadgetError):
        four_square_decompose(-1)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_hypercube(n):
    assert count_solutions(hypercube_system(n)) == 2 ** n


@pytest.mark.parametrize("n, height", [(2, 4), (3, 16), (4, 256)])
def test_f_chain(n, height):
    v = classify_finiteness(f_witness_chain(n))
    assert isinstance(v, Finite)
    assert len(v.solutions) == 2 and v.solutions.height == height


def test_theorem2_small():
    # s = 2 forces x1 = 6, so phi gives x2 = 36
    s = theorem2_system(parse_system("x1*x1=x2"))
    assert s.n == 5
    v = classify_finiteness(s)
    assert v.solutions.tuples == ((6, 36, 1, 2, 3),)


def test_theorem2_counter_alone():
    (sol,) = classify_finiteness(theorem2_system(EnSystem.of(1, []))).solutions
    assert sol == (4, 1, 2)


def test_theorem3_threshold():
    phi = EnSystem.of(2, [])
    assert theorem3_threshold(2) == 12
    with pytest.raises(GadgetError):
        theorem3_system(11, phi)


@pytest.mark.parametrize("u", [12, 13, 14, 20])
def test_theorem3_values(u):
    s = theorem3_system(u, parse_system("x1+x1=x2"))
    assert s.n == 2 + u // 3 + 2 < u
    (sol,) = classify_finiteness(s).solutions
    assert sol[:2] == (u, 2 * u)
    assert sol[4:] == tuple(3 * k for k in range(1, u // 3 + 1))


@pytest.mark.parametrize("text", GADGET_CORPUS)
def test_height_bound(text):
    res = height_bound_via_count(parse_polynomial(text))
    assert res.status == "bound"
    assert res.count > res.height


def test_height_bound_x_minus_two():
    res = height_bound_via_count(parse_polynomial("x1 - 2"))
    assert res.zeros == ((2,),) and res.count == 1136


def test_height_bound_empty_and_unstable():
    assert height_bound_via_count(parse_polynomial("x1^2 + 1")).status == "empty"
    assert height_bound_via_count(parse_polynomial("x1 - x2")).status == "undetermined"


@given(st.integers(0, 400))
@settings(max_examples=60)
def test_four_squares_property(m):
    a, b, c, e = four_square_decompose(m)
    assert a * a + b * b + c * c + e * e == m and a <= b <= c <= e


@pytest.mark.parametrize("s", [1, 2, 5])
def test_theorem3_systems_are_canonical(s):
    from ensys.system import validate

    phi = parse_system("x1*x1=x1; x1+x1=x2", n=s) if s >= 2 else EnSystem.of(1, [])
    for u in range(theorem3_threshold(s), theorem3_threshold(s) + 12):
        t3 = theorem3_system(u, phi)
        assert validate(t3) == []
        assert EnSystem.of(t3.n, t3.constraints) == t3


def test_theorem2_chain_grounded_by_propagation():
    from ensys.solver import propagate_ground
    from ensys.system import Constraint

    for s in range(1, 101):
        phi = EnSystem.of(s, [Constraint.unit(i) for i in range(2, s + 1)])
        ground = propagate_ground(theorem2_system(phi))
        assert ground is not None
        assert ground[1] == [2 * s + 2]
        assert [ground[s + i] for i in range(1, s + 2)] == [[i] for i in range(1, s + 2)]


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_f_chain_over_positive_integers(n):
    from ensys.solver import Domain

    v = classify_finiteness(f_witness_chain(n), Domain.POSITIVE)
    assert len(v.solutions) == 1 and v.solutions.tuples[0][0] == 2


def test_gadget_systems_validate_and_round_trip():
    from ensys.system import serialize_system, validate

    made = [hypercube_system(4), f_witness_chain(4), theorem2_system(parse_system("x1*x1=x2")),
            theorem3_system(20, parse_system("x1+x1=x2; x2*x2=x3"))]
    for s in made:
        assert validate(s) == []
        for fmt in ("text", "json"):
            assert parse_system(serialize_system(s, fmt), n=s.n) == s


@given(st.lists(st.integers(-3, 3), min_size=11, max_size=11), st.sampled_from(GADGET_CORPUS))
@settings(max_examples=80)
def test_gadget_zero_iff(values, text):
    from ensys.polynomial import evaluate, lemma1_gadget

    d = parse_polynomial(text)
    g = lemma1_gadget(d)
    p = d.var_count
    x, st_ = values[:p], values[p:p + 8]
    expected = evaluate(d, x) == 0 and sum(v * v for v in x) == sum(v * v for v in st_)
    assert (evaluate(g, x + st_) == 0) == expected


def test_gadget_zero_iff_on_a_genuine_zero():
    from ensys.polynomial import evaluate, lemma1_gadget

    g = lemma1_gadget(parse_polynomial("x1^2 + x2^2 - 5"))
    assert evaluate(g, [1, 2, 2, 1, 0, 0, 0, 0, 0, 0]) == 0
    assert evaluate(g, [1, 2, 2, 0, 0, 0, 0, 0, 0, 0]) != 0


def test_theorem2_three_variables():
    from ensys.solver import Box, Domain, enumerate_solutions

    s = theorem2_system(EnSystem.of(3, []))
    assert s.n == 7
    sols = enumerate_solutions(s, Domain.INTEGERS, Box.cube(7, 8)).tuples
    # x2 and x3 are free, the chain is not
    assert len(sols) == 17 * 17
    assert {t[0] for t in sols} == {8} and {t[3:] for t in sols} == {(1, 2, 3, 4)}
