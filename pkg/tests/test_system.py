import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ensys.system import (
    Constraint,
    EnSystem,
    EnSystemError,
    canonical_form,
    full_universe,
    orbit,
    parse_system,
    serialize_system,
    system_from_json,
    validate,
)


def test_universe_sizes():
    # n unit equations plus n^2(n+1)/2 sums and as many products, up to i <= j
    for n in range(1, 5):
        assert len(full_universe(n)) == n + n * n * (n + 1)
    assert [len(full_universe(n)) for n in (1, 2, 3)] == [3, 14, 39]


def test_universe_matches_brute_force():
    n = 3
    brute = {Constraint.unit(i) for i in range(1, n + 1)}
    for i, j, k in itertools.product(range(1, n + 1), repeat=3):
        brute.add(Constraint.add(i, j, k))
        brute.add(Constraint.mul(i, j, k))
    assert set(full_universe(n)) == brute


def test_parse_text():
    s = parse_system("x1=1; x1+x1=x2\n# comment\nx2*x2=x3")
    assert s.n == 3 and len(s) == 3
    assert str(s) == "x1=1; x1+x1=x2; x2*x2=x3"


def test_parse_normalizes_pairs():
    assert parse_system("x2+x1=x3") == parse_system("x1+x2=x3")


def test_declared_n():
    s = parse_system("n=4; x1=1")
    assert s.n == 4
    assert serialize_system(s) == "n=4; x1=1"
    assert parse_system(serialize_system(s)) == s


def test_json_round_trip():
    s = parse_system("x1+x1=x2; x1*x1=x2")
    text = serialize_system(s, "json")
    assert text == '{"n": 2, "constraints": [["add", 1, 1, 2], ["mul", 1, 1, 2]]}'
    assert system_from_json(text) == s
    assert parse_system(text) == s
    assert system_from_json({"system": {"n": 2, "constraints": []}}) == EnSystem.of(2, [])


@pytest.mark.parametrize("text", ["x1=2", "x1-x2=x3", "x0=1", "x1+x2", "", "x1 ** x2 = x3"])
def test_rejects_non_equations(text):
    with pytest.raises(EnSystemError):
        parse_system(text)


def test_error_mentions_line():
    with pytest.raises(EnSystemError, match="line 2"):
        parse_system("x1=1\nx1=3")


def test_bad_json():
    with pytest.raises(EnSystemError, match="malformed JSON"):
        parse_system('{"n": 2, ')
    with pytest.raises(EnSystemError):
        system_from_json({"n": 2, "constraints": [["div", 1, 1, 1]]})


def test_validate_catches_problems():
    bad = EnSystem(2, (Constraint.add(1, 1, 3),))
    assert validate(bad)
    unnormalized = EnSystem(2, (Constraint(Constraint.add(1, 2, 1).kind, (2, 1, 1)),))
    assert validate(unnormalized)
    dup = EnSystem(1, (Constraint.unit(1), Constraint.unit(1)))
    assert validate(dup)
    assert validate(parse_system("x1=1; x1+x1=x2")) == []


def test_canonical_form_example():
    a = parse_system("x2=1; x2+x2=x1")
    b = parse_system("x1=1; x1+x1=x2")
    assert canonical_form(a) == canonical_form(b)


def test_canonical_limit():
    with pytest.raises(EnSystemError):
        canonical_form(EnSystem.of(9, []), limit=8)


def test_orbit_sizes_partition_power_set():
    # n = 2: orbit sizes over all canonical forms add up to 2^14
    universe = full_universe(2)
    seen = set()
    total = 0
    for mask in range(1 << len(universe)):
        s = EnSystem.of(2, [c for b, c in enumerate(universe) if mask >> b & 1])
        key = canonical_form(s).key
        if key not in seen:
            seen.add(key)
            total += len(orbit(s))
    assert total == 2 ** 14


@st.composite
def systems(draw, max_n=4):
    n = draw(st.integers(1, max_n))
    universe = full_universe(n)
    chosen = draw(st.lists(st.sampled_from(universe), max_size=6))
    return EnSystem.of(n, chosen)


@given(systems(), st.data())
@settings(max_examples=80)
def test_canonical_form_is_renaming_invariant(s, data):
    perm = data.draw(st.permutations(range(1, s.n + 1)))
    assert canonical_form(s.renamed(perm)) == canonical_form(s)


@given(systems(), st.data())
@settings(max_examples=60)
def test_renaming_preserves_solutions(s, data):
    perm = data.draw(st.permutations(range(1, s.n + 1)))
    pt = data.draw(st.tuples(*[st.integers(-3, 3)] * s.n))
    moved = [0] * s.n
    for i, v in enumerate(pt):
        moved[perm[i] - 1] = v
    assert s.holds(pt) == s.renamed(perm).holds(moved)


@given(systems())
def test_text_and_json_round_trip(s):
    assert parse_system(serialize_system(s, "text"), n=s.n) == s
    assert parse_system(serialize_system(s, "json")) == s


@given(systems(max_n=3))
@settings(max_examples=30)
def test_orbit_size_divides_group_order(s):
    assert math.factorial(s.n) % len(orbit(s)) == 0


@given(systems())
@settings(max_examples=60)
def test_canonical_form_is_idempotent(s):
    c = canonical_form(s)
    assert canonical_form(c) == c
    assert c.key in orbit(s)
