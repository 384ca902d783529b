"""Explicit systems: the hypercube, the doubly exponential chain, the
unary/ternary counter systems that pin x1 to a prescribed value, and the
count-versus-height transfer through the sum-of-eight-squares gadget.
"""

from __future__ import annotations

import itertools
import math
import operator
from dataclasses import dataclass

from .polynomial import Polynomial, PolynomialError, evaluate, lemma1_gadget
from .solver import Budget, DEFAULT_BUDGET
from .system import Constraint, EnSystem, EnSystemError, check_valid


class GadgetError(ValueError):
    pass


def hypercube_system(n: int) -> EnSystem:
    """x_i * x_i = x_i for every i; over Z the solutions are {0,1}^n."""
    if n < 1:
        raise GadgetError(f"hypercube needs n >= 1, got {n}")
    return EnSystem.of(n, [Constraint.mul(i, i, i) for i in range(1, n + 1)])


def f_witness_chain(n: int) -> EnSystem:
    """x1 + x1 = x2, x1 * x1 = x2, then x_{i+1} = x_i^2.

    Over Z the solutions are all-zero and (2, 4, 16, ..., 2^(2^(n-1))).
    """
    if n < 2:
        raise GadgetError(f"the chain needs n >= 2, got {n}")
    cons = [Constraint.add(1, 1, 2), Constraint.mul(1, 1, 2)]
    cons += [Constraint.mul(i, i, i + 1) for i in range(2, n)]
    return EnSystem.of(n, cons)


def _checked_phi(phi: EnSystem) -> int:
    try:
        check_valid(phi)
    except EnSystemError as exc:
        raise GadgetError(f"invalid phi: {exc}") from None
    return phi.n


def theorem2_system(phi: EnSystem) -> EnSystem:
    """Unary counter forcing x1 = 2s + 2, joined with phi over x1..xs.

    Layout: x1..xs keep their indices, t_1..t_{s+1} follow at s+1..2s+1.
    Constraints: t1 = 1, t1 + t1 = t2, t1 + t_i = t_{i+1} (2 <= i <= s),
    t_{s+1} + t_{s+1} = x1.
    """
    s = _checked_phi(phi)
    t = {i: s + i for i in range(1, s + 2)}
    cons = [Constraint.unit(t[1]), Constraint.add(t[1], t[1], t[2])]
    for i in range(2, s + 1):
        cons.append(Constraint.add(t[1], t[i], t[i + 1]))
    cons.append(Constraint.add(t[s + 1], t[s + 1], 1))
    return phi.with_constraints(cons, n=2 * s + 1)


def theorem3_threshold(s: int) -> int:
    return 3 * s + 6


def theorem3_system(u: int, phi: EnSystem) -> EnSystem:
    """Ternary counter forcing x1 = u, joined with phi over x1..xs.

    Layout: x1..xs, then a, b, d_1..d_q with q = u // 3, for a total of
    2 + q + s variables.  a = 1, b = 2, d_k = 3k, and x1 is d_q, d_q + a or
    d_q + b according to u mod 3.
    """
    s = _checked_phi(phi)
    v = theorem3_threshold(s)
    if u < v:
        raise GadgetError(f"u={u} is below the threshold v = 3s + 6 = {v} for s={s}")
    q = u // 3
    a, b = s + 1, s + 2
    d1, dq = s + 3, s + 2 + q
    cons = [Constraint.unit(a), Constraint.add(a, a, b), Constraint.add(a, b, d1)]
    cons += _ternary_chain(s, q)
    rest = u % 3
    if rest == 0:
        cons.append(Constraint.mul(a, dq, 1))
    elif rest == 1:
        cons.append(Constraint.add(a, dq, 1))
    else:
        cons.append(Constraint.add(b, dq, 1))
    # every counter constraint touches an index above s, so none repeats one of phi's
    merged = sorted(phi.constraints + tuple(cons), key=_CONSTRAINT_ORDER)
    return EnSystem(2 + q + s, tuple(merged))


_CONSTRAINT_ORDER = operator.attrgetter("kind", "args")
_chains: dict[int, list[Constraint]] = {}


def _ternary_chain(s: int, q: int) -> list[Constraint]:
    """d1 + d1 = d2 and d1 + d_k = d_{k+1} up to d_q, with d_k at index s + 2 + k."""
    chain = _chains.setdefault(s, [])
    d1 = s + 3
    while len(chain) < q - 1:
        k = len(chain) + 1
        chain.append(Constraint.add(d1, d1 + k - 1, d1 + k))
    return chain[: q - 1]


def four_square_decompose(m: int) -> tuple[int, int, int, int]:
    """Lexicographically least (a, b, c, e), a <= b <= c <= e, with a^2+b^2+c^2+e^2 = m."""
    if m < 0:
        raise GadgetError(f"negative integers are not sums of squares: {m}")
    top = math.isqrt(m)
    for a in range(0, top + 1):
        ra = m - a * a
        if ra < 3 * a * a:
            break
        for b in range(a, math.isqrt(ra) + 1):
            rb = ra - b * b
            if rb < 2 * b * b:
                break
            for c in range(b, math.isqrt(rb) + 1):
                rc = rb - c * c
                if rc < c * c:
                    break
                e = math.isqrt(rc)
                if e * e == rc:
                    out = (a, b, c, e)
                    assert sum(x * x for x in out) == m
                    return out
    raise AssertionError(f"no four-square decomposition found for {m}")


def count_sum_of_squares(m: int, k: int = 8) -> int:
    """Number of integer k-tuples whose squares sum to m (signs and order counted)."""
    if m < 0:
        return 0
    ways = [1] + [0] * m
    squares = [(r * r, 1 if r == 0 else 2) for r in range(math.isqrt(m) + 1)]
    for _ in range(k):
        nxt = [0] * (m + 1)
        for total, w in enumerate(ways):
            if not w:
                continue
            for sq, mult in squares:
                if total + sq > m:
                    break
                nxt[total + sq] += w * mult
        ways = nxt
    return ways[m]


def zeros_in_box(d: Polynomial, radius: int) -> list[tuple[int, ...]]:
    rng = range(-radius, radius + 1)
    return [pt for pt in itertools.product(rng, repeat=d.var_count) if evaluate(d, pt) == 0]


@dataclass(frozen=True)
class StableZeros:
    zeros: tuple[tuple[int, ...], ...]
    box: int
    stable: bool


def stable_zero_set(d: Polynomial, budget: Budget | None = None) -> StableZeros:
    """Double the box until the zero set stops changing and stays off the boundary."""
    budget = budget or DEFAULT_BUDGET
    radius = 2
    prev = zeros_in_box(d, radius)
    while True:
        nxt_radius = radius * 2
        if (2 * nxt_radius + 1) ** d.var_count > budget.nodes:
            return StableZeros(tuple(prev), radius, False)
        cur = zeros_in_box(d, nxt_radius)
        height = max((max(map(abs, z)) for z in cur), default=0)
        if cur == prev and height < radius:
            return StableZeros(tuple(cur), nxt_radius, True)
        radius, prev = nxt_radius, cur


@dataclass(frozen=True)
class CountBound:
    """Outcome of bounding heights through a solution count."""

    status: str                 # "bound", "empty" or "undetermined"
    count: int | None
    zeros: tuple[tuple[int, ...], ...]
    box: int

    @property
    def height(self) -> int:
        return max((max(map(abs, z)) for z in self.zeros), default=0)

    def to_json(self) -> dict:
        return {"status": self.status, "count": self.count, "height": self.height,
                "zeros": [list(z) for z in self.zeros], "box": self.box}


def gadget_solution_count(d: Polynomial, zeros) -> int:
    """Zeros of the eight-squares gadget, given the complete zero set of d."""
    return sum(count_sum_of_squares(sum(v * v for v in z), 8) for z in zeros)


def height_bound_via_count(d: Polynomial, budget: Budget | None = None) -> CountBound:
    """Count the gadget's integer solutions; the count exceeds every zero height of d.

    Only box-stable zero sets are accepted: finiteness of an arbitrary
    zero set cannot be certified, so a set that keeps moving as the box
    grows yields ``undetermined``.
    """
    if d.is_zero():
        raise PolynomialError("the gadget needs a nonzero polynomial")
    lemma1_gadget(d)  # validates the input the same way the gadget does
    found = stable_zero_set(d, budget)
    if not found.stable:
        return CountBound("undetermined", None, found.zeros, found.box)
    if not found.zeros:
        return CountBound("empty", None, (), found.box)
    return CountBound("bound", gadget_solution_count(d, found.zeros), found.zeros, found.box)
