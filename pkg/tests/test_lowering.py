import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import LOWERING_CORPUS
from ensys.lowering import (
    LoweringError,
    aux_box,
    constant_chain,
    encode_nonneg,
    lower_polynomial,
    zero_gadget,
)
from ensys.polynomial import Polynomial, evaluate, parse_polynomial
from ensys.solver import Box, Domain, classify_finiteness, enumerate_solutions
from ensys.system import Constraint, parse_system, validate

Z, N, NP = Domain.INTEGERS, Domain.NONNEGATIVE, Domain.POSITIVE


def zeros(d, dom, radius):
    lo = -radius if dom is Z else dom.lower
    return [pt for pt in itertools.product(range(lo, radius + 1), repeat=d.var_count)
            if evaluate(d, pt) == 0]


def lifted(lr, dom, radius):
    bounds = aux_box(lr, radius)
    lo = dom.lower
    box = Box(tuple((-b if lo is None else lo, b) for _, b in sorted(bounds.items())))
    return enumerate_solutions(lr.system, dom, box).tuples


def check_round_trip(d, dom, radius, share):
    lr = lower_polynomial(d, dom, share_cells=share)
    p = d.var_count
    sols = lifted(lr, dom, radius)
    heads = [s[:p] for s in sols]
    expected = zeros(d, dom, radius)
    assert sorted(heads) == expected
    assert len(set(heads)) == len(heads), "a zero has more than one extension"


def test_constant_chain_six():
    frag = constant_chain(6)
    assert frag.system == parse_system("x1=1; x1+x1=x2; x2+x1=x3; x3+x3=x4")
    assert frag.output == 4
    v = classify_finiteness(frag.system)
    assert v.solutions.tuples == ((1, 2, 3, 6),)


@pytest.mark.parametrize("c", [1, 2, 3, 7, 8, 100, 1023])
def test_constant_chain_values(c):
    frag = constant_chain(c)
    (sol,) = classify_finiteness(frag.system).solutions.tuples
    assert sol[frag.output - 1] == c
    assert len(frag.system) <= 2 * c.bit_length() - 1


def test_constant_chain_rejects_nonpositive():
    with pytest.raises(LoweringError):
        constant_chain(0)


def test_zero_gadget():
    s = zero_gadget().system
    assert classify_finiteness(s, Z).solutions.tuples == ((0,),)
    assert len(classify_finiteness(s, NP).solutions) == 0


def test_lower_square_example():
    lr = lower_polynomial(parse_polynomial("x1^2 - x2"))
    assert lr.input_positions == (1, 2)
    assert validate(lr.system) == []
    assert lifted(lr, Z, 3) == ((-1, 1, 1, 0), (0, 0, 0, 0), (1, 1, 1, 0))


def test_lowering_errors():
    with pytest.raises(LoweringError):
        lower_polynomial(Polynomial(2))
    with pytest.raises(LoweringError, match="degree 0"):
        lower_polynomial(parse_polynomial("x1 - 1", var_count=2))


@pytest.mark.parametrize("share", [False, True])
@pytest.mark.parametrize("text", LOWERING_CORPUS)
def test_round_trip_small_box(text, share):
    d = parse_polynomial(text)
    for dom in (Z, N):
        check_round_trip(d, dom, 2, share)


@pytest.mark.parametrize("text", ["x1 - 2", "x1*x2 - 6", "x1 + x2 - 3", "x1^2 - x2", "x1*x2*x3 - 2"])
def test_positive_domain_round_trip(text):
    d = parse_polynomial(text)
    check_round_trip(d, NP, 3, False)


def test_positive_one_sided_is_empty():
    lr = lower_polynomial(parse_polynomial("x1 + x2"), NP)
    assert lifted(lr, NP, 3) == ()


def test_aux_box_is_sound():
    lr = lower_polynomial(parse_polynomial("3*x1^2 - 5*x2 + x3 - 1"))
    bounds = aux_box(lr, 2)
    for s in lifted(lr, Z, 2):
        assert all(abs(v) <= bounds[i + 1] for i, v in enumerate(s))


def test_encode_nonneg():
    s = parse_system("x1+x1=x2")
    enc = encode_nonneg(s, [1])
    assert enc.n == 12 and len(enc) == 1 + 7
    box = Box(((-3, 3), (-6, 6)) + ((-2, 2),) * 4 + ((0, 4),) * 4 + ((0, 6),) * 2)
    heads = {t[:2] for t in enumerate_solutions(enc, Z, box).tuples}
    assert heads == {(0, 0), (1, 2), (2, 4), (3, 6)}


def test_encode_nonneg_range():
    with pytest.raises(LoweringError):
        encode_nonneg(parse_system("x1=1"), [2])


small_polys = st.dictionaries(
    st.tuples(st.integers(0, 2), st.integers(0, 2)), st.integers(-5, 5), min_size=1, max_size=4
).map(lambda t: Polynomial(2, t))


@given(small_polys, st.booleans(), st.sampled_from([Z, N]))
@settings(max_examples=40, deadline=None)
def test_random_round_trip(d, share, dom):
    from ensys.polynomial import degree_in

    if d.is_zero() or any(degree_in(d, i) == 0 for i in (1, 2)):
        return
    check_round_trip(d, dom, 2, share)


@pytest.mark.parametrize("text", LOWERING_CORPUS)
def test_every_aux_variable_has_one_defining_cell(text):
    lr = lower_polynomial(parse_polynomial(text), share_cells=True)
    p = len(lr.input_positions)
    defined = set(range(1, p + 1))
    for v, c in lr.defining:
        assert v not in defined and c.args[-1] == v
        assert all(a in defined for a in c.args[:-1]) or c.args == (v, v, v)
        defined.add(v)
    assert defined == set(range(1, lr.system.n + 1))
    assert set(lr.system.constraints) == {c for _, c in lr.defining} | set(lr.checks)


@given(st.integers(1, 40), st.integers(1, 40))
@settings(max_examples=30, deadline=None)
def test_spliced_constants_are_disjoint(a, b):
    # two constant chains live side by side; their values must not leak into each other
    d = parse_polynomial(f"{a}*x1 - {b}")
    lr = lower_polynomial(d)
    heads = [t[:1] for t in lifted(lr, Z, b)]
    assert heads == ([(b // a,)] if b % a == 0 else [])


def test_encode_nonneg_projection():
    # projecting the encoded system onto x1, x2 gives the original restricted to x1 >= 0
    enc = encode_nonneg(parse_system("x1*x1=x2"), [1])
    box = Box(((-3, 3), (-9, 9)) + ((-2, 2),) * 4 + ((0, 4),) * 4 + ((0, 6),) * 2)
    heads = sorted({t[:2] for t in enumerate_solutions(enc, Z, box).tuples})
    assert heads == [(0, 0), (1, 1), (2, 4), (3, 9)]


@pytest.mark.parametrize("forcing, extensions", [
    ("x1=1", 8),             # (+-1, 0, 0, 0) in any position
    ("x1+x1=x1", 1),          # x = 0
    ("x2=1; x1+x2=x3; x3+x3=x3", 0),  # x = -1 is not a sum of squares
])
def test_encode_nonneg_extension_counts(forcing, extensions):
    s = parse_system(forcing)
    enc = encode_nonneg(s, [1])
    box = Box(((-1, 1),) * s.n + ((-1, 1),) * 4 + ((0, 1),) * 4 + ((0, 2),) * 2)
    assert len(enumerate_solutions(enc, Z, box)) == extensions
