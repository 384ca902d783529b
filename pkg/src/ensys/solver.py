"""Exact solving of E_n systems over Z, N and N\\{0}.

Three tools live here:

* ``enumerate_solutions`` lists every solution inside a finite box by
  depth-first assignment with forward propagation.
* ``propagate_ground`` tries to prove that every variable ranges over a
  finite candidate set (seeds, divisor and sign bounds, substitution of
  variables that occur linearly with unit coefficient, and resultants).
* ``classify_finiteness`` combines grounding with a search for parametric
  witnesses, and falls back to ``Undetermined`` with box evidence.

Every verdict carries evidence that can be re-checked independently.
"""

from __future__ import annotations

import enum
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .polynomial import Polynomial
from .system import Constraint, EnSystem, Kind, check_valid


class Domain(enum.Enum):
    INTEGERS = "Z"
    NONNEGATIVE = "N"
    POSITIVE = "N+"

    @property
    def lower(self) -> int | None:
        return {"Z": None, "N": 0, "N+": 1}[self.value]

    def contains(self, v: int) -> bool:
        lo = self.lower
        return lo is None or v >= lo

    @classmethod
    def parse(cls, text: str) -> Domain:
        aliases = {
            "z": cls.INTEGERS, "integers": cls.INTEGERS,
            "n": cls.NONNEGATIVE, "nonnegative": cls.NONNEGATIVE, "n0": cls.NONNEGATIVE,
            "n+": cls.POSITIVE, "positive": cls.POSITIVE, "n\\{0}": cls.POSITIVE,
        }
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown domain {text!r}; use Z, N or N+") from None


class BudgetExceeded(RuntimeError):
    def __init__(self, message: str, reached: int):
        super().__init__(message)
        self.reached = reached


@dataclass(frozen=True)
class Budget:
    """Resource limits; every search stops honestly when one is hit."""

    nodes: int = 2_000_000
    ground_nodes: int = 50_000
    witness_nodes: int = 20_000
    candidate_cap: int = 10**6
    max_box: int = 16
    seconds: float | None = None

    def deadline(self) -> float | None:
        return None if self.seconds is None else time.monotonic() + self.seconds


DEFAULT_BUDGET = Budget()


@dataclass(frozen=True)
class Box:
    """Closed integer interval per variable."""

    bounds: tuple[tuple[int, int], ...]

    @classmethod
    def cube(cls, n: int, radius: int, dom: Domain = Domain.INTEGERS) -> Box:
        return cls.from_radii([radius] * n, dom)

    @classmethod
    def from_radii(cls, radii: Sequence[int], dom: Domain = Domain.INTEGERS) -> Box:
        if any(r < 0 for r in radii):
            raise ValueError("box radii must be non-negative")
        lo = dom.lower
        return cls(tuple((-r if lo is None else lo, r) for r in radii))

    @property
    def n(self) -> int:
        return len(self.bounds)

    @property
    def radius(self) -> int:
        return max((max(abs(a), abs(b)) for a, b in self.bounds), default=0)

    def contains(self, point: Sequence[int]) -> bool:
        return all(a <= v <= b for v, (a, b) in zip(point, self.bounds))

    def size(self) -> int:
        return math.prod(max(0, b - a + 1) for a, b in self.bounds)

    def to_json(self) -> list:
        return [list(b) for b in self.bounds]


@dataclass(frozen=True)
class SolutionSet:
    tuples: tuple[tuple[int, ...], ...]
    box: Box
    exhaustive: bool = True

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self):
        return iter(self.tuples)

    @property
    def height(self) -> int:
        return max((max((abs(v) for v in t), default=0) for t in self.tuples), default=0)


# -- verdicts -------------------------------------------------------------------

@dataclass(frozen=True)
class Finite:
    solutions: SolutionSet
    proof: str

    def to_json(self) -> dict:
        return {"verdict": "finite", "proof": self.proof, "count": len(self.solutions),
                "solutions": [list(t) for t in self.solutions]}


@dataclass(frozen=True)
class Infinite:
    """Parametric family of solutions; t ranges over Z, or over N for N and N+."""

    witness: tuple[Polynomial, ...]

    def at(self, t: int) -> tuple[int, ...]:
        return tuple(w.compose([t]) for w in self.witness)

    def to_json(self) -> dict:
        return {"verdict": "infinite", "witness": [_t_text(w) for w in self.witness]}


def _t_text(w: Polynomial) -> str:
    if w.is_constant():
        return str(w.constant_term())
    return str(w).replace("x1", "t")


@dataclass(frozen=True)
class Undetermined:
    box: int
    found: int
    reason: str = ""

    def to_json(self) -> dict:
        return {"verdict": "undetermined", "largest_box": self.box,
                "solutions_in_box": self.found, "reason": self.reason}


FinitenessVerdict = Finite | Infinite | Undetermined


# -- box enumeration ---------------------------------------------------------------

def _unary_values(c: Constraint) -> set[int] | None:
    args = set(c.args)
    if len(args) != 1:
        return None
    if c.kind is Kind.UNIT:
        return {1}
    return {0} if c.kind is Kind.ADD else {0, 1}


class _Search:
    """Depth-first solver over explicit per-variable domains."""

    def __init__(self, sys: EnSystem, lows: list[int], highs: list[int],
                 allowed: list[frozenset | None], node_limit: int,
                 deadline: float | None = None):
        self.deadline = deadline
        self.sys = sys
        self.n = sys.n
        self.lows, self.highs, self.allowed = lows, highs, allowed
        self.node_limit = node_limit
        self.nodes = 0
        self.watch: list[list[Constraint]] = [[] for _ in range(self.n)]
        for c in sys.constraints:
            for a in set(c.args):
                self.watch[a - 1].append(c)
        self.squares = [[c for c in self.watch[v] if c.kind is Kind.MUL
                         and c.args[0] == c.args[1] == v + 1 and c.args[2] != v + 1]
                        for v in range(self.n)]
        self.out: list[tuple[int, ...]] = []

    def ok(self, v: int, x: int) -> bool:
        if not self.lows[v] <= x <= self.highs[v]:
            return False
        al = self.allowed[v]
        return al is None or x in al

    def propagate(self, vals: list, queue: list[int]) -> bool:
        while queue:
            v = queue.pop()
            for c in self.watch[v]:
                if c.kind is Kind.UNIT:
                    if vals[c.args[0] - 1] != 1:
                        return False
                    continue
                i, j, k = (a - 1 for a in c.args)
                a, b, r = vals[i], vals[j], vals[k]
                target = None
                if c.kind is Kind.ADD:
                    if a is not None and b is not None:
                        if r is None:
                            target = (k, a + b)
                        elif r != a + b:
                            return False
                    elif r is not None:
                        if a is not None:
                            target = (j, r - a)
                        elif b is not None:
                            target = (i, r - b)
                        elif i == j:
                            if r % 2:
                                return False
                            target = (i, r // 2)
                else:
                    if a is not None and b is not None:
                        if r is None:
                            target = (k, a * b)
                        elif r != a * b:
                            return False
                    elif a is not None or b is not None:
                        known, other = (a, j) if a is not None else (b, i)
                        if known == 0:
                            if r is None:
                                target = (k, 0)
                            elif r != 0:
                                return False
                        elif r is not None:
                            if r % known:
                                return False
                            target = (other, r // known)
                    elif r is not None and i == j:
                        if r < 0:
                            return False
                        s = math.isqrt(r)
                        if s * s != r:
                            return False
                if target is not None:
                    t, x = target
                    if vals[t] is None:
                        if not self.ok(t, x):
                            return False
                        vals[t] = x
                        queue.append(t)
                    elif vals[t] != x:
                        return False
        return True

    def choices(self, vals: list, v: int) -> Iterable[int]:
        for c in self.squares[v]:
            r = vals[c.args[2] - 1]
            if r is not None:
                s = math.isqrt(r) if r >= 0 else -1
                if s < 0 or s * s != r:
                    return []
                return [x for x in sorted({-s, s}) if self.ok(v, x)]
        al = self.allowed[v]
        if al is not None:
            return [x for x in sorted(al) if self.lows[v] <= x <= self.highs[v]]
        return range(self.lows[v], self.highs[v] + 1)

    def width(self, vals: list, v: int) -> int:
        for c in self.squares[v]:
            if vals[c.args[2] - 1] is not None:
                return 2
        al = self.allowed[v]
        if al is not None:
            return len(al)
        return max(0, self.highs[v] - self.lows[v] + 1)

    def run(self) -> list[tuple[int, ...]]:
        vals: list = [None] * self.n
        queue = []
        for v in range(self.n):
            if self.lows[v] > self.highs[v] or (self.allowed[v] is not None and not self.allowed[v]):
                return []
            if self.allowed[v] is not None and len(self.allowed[v]) == 1:
                (x,) = self.allowed[v]
                if not self.ok(v, x):
                    return []
                vals[v] = x
                queue.append(v)
            elif self.lows[v] == self.highs[v]:
                vals[v] = self.lows[v]
                queue.append(v)
        for c in self.sys.constraints:
            if c.kind is Kind.UNIT:
                v = c.args[0] - 1
                if vals[v] is None:
                    if not self.ok(v, 1):
                        return []
                    vals[v] = 1
                    queue.append(v)
        if not self.propagate(vals, queue):
            return []
        self.dfs(vals)
        self.out.sort()
        return self.out

    def dfs(self, vals: list) -> None:
        free = [v for v in range(self.n) if vals[v] is None]
        if not free:
            point = tuple(vals)
            if self.sys.holds(point):
                self.out.append(point)
            return
        v = min(free, key=lambda u: (self.width(vals, u), u))
        for x in self.choices(vals, v):
            self.nodes += 1
            if self.nodes > self.node_limit:
                raise BudgetExceeded(f"search node limit {self.node_limit} exceeded", self.nodes)
            if self.deadline is not None and self.nodes % 1024 == 0 and time.monotonic() > self.deadline:
                raise BudgetExceeded("search wall-time limit exceeded", self.nodes)
            nxt = list(vals)
            nxt[v] = x
            if self.propagate(nxt, [v]):
                self.dfs(nxt)


def _domains_for(sys: EnSystem, dom: Domain, box: Box):
    if box.n != sys.n:
        raise ValueError(f"box has {box.n} variables, system has {sys.n}")
    lows, highs = [], []
    allowed: list[frozenset | None] = [None] * sys.n
    for v, (a, b) in enumerate(box.bounds):
        lo = dom.lower
        lows.append(a if lo is None else max(a, lo))
        highs.append(b)
    for c in sys.constraints:
        vals = _unary_values(c)
        if vals is not None:
            v = c.args[0] - 1
            cur = allowed[v]
            allowed[v] = frozenset(vals if cur is None else cur & vals)
    return lows, highs, allowed


def _enumerate_chunk(args):
    sys, dom, box, budget = args
    lows, highs, allowed = _domains_for(sys, dom, box)
    return _Search(sys, lows, highs, allowed, budget.nodes, budget.deadline()).run()


def enumerate_solutions(sys: EnSystem, dom: Domain, box: Box,
                        budget: Budget | None = None, workers: int = 1) -> SolutionSet:
    """All solutions of ``sys`` over ``dom`` inside ``box``, sorted.

    With ``workers > 1`` the range of x1 is split into slices searched in
    separate processes; the merged result is identical to a serial run.
    """
    check_valid(sys)
    budget = budget or DEFAULT_BUDGET
    if workers > 1 and sys.n >= 1:
        lo, hi = box.bounds[0]
        if dom.lower is not None:
            lo = max(lo, dom.lower)
        width = hi - lo + 1
        if width > 1:
            step = -(-width // workers)
            jobs = []
            for start in range(lo, hi + 1, step):
                sub = Box(((start, min(hi, start + step - 1)),) + box.bounds[1:])
                jobs.append((sys, dom, sub, budget))
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_enumerate_chunk, jobs))
            found = sorted(set(itertools.chain.from_iterable(parts)))
            return SolutionSet(tuple(found), box, True)
    found = _enumerate_chunk((sys, dom, box, budget))
    return SolutionSet(tuple(found), box, True)


def enumerate_candidates(sys: EnSystem, dom: Domain, candidates: Sequence[Iterable[int]],
                         budget: Budget | None = None) -> list[tuple[int, ...]]:
    """Solutions inside the product of explicit per-variable candidate sets."""
    budget = budget or DEFAULT_BUDGET
    sets = [frozenset(c) for c in candidates]
    lows = [min(s, default=0) for s in sets]
    highs = [max(s, default=-1) for s in sets]
    lo = dom.lower
    if lo is not None:
        lows = [max(a, lo) for a in lows]
    allowed: list[frozenset | None] = list(sets)
    for c in sys.constraints:
        vals = _unary_values(c)
        if vals is not None:
            v = c.args[0] - 1
            allowed[v] = allowed[v] & vals
    return _Search(sys, lows, highs, allowed, budget.nodes, budget.deadline()).run()


# -- univariate helpers over Z ----------------------------------------------------

def _divisors(m: int) -> list[int]:
    """Positive divisors of |m| (m != 0)."""
    import sympy

    return [int(d) for d in sympy.divisors(abs(m))]


def integer_roots(coeffs: Sequence[int]) -> list[int]:
    """Sorted integer roots of sum(coeffs[k] * x^k); the zero polynomial is rejected."""
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if not coeffs:
        raise ValueError("zero polynomial has every integer as a root")
    roots = set()
    shift = 0
    while coeffs[shift] == 0:
        shift += 1
    if shift:
        roots.add(0)
    core = coeffs[shift:]
    deg = len(core) - 1
    if deg == 1:
        c0, c1 = core
        if c0 % c1 == 0:
            roots.add(-c0 // c1)
    elif deg == 2:
        c, b, a = core
        disc = b * b - 4 * a * c
        if disc >= 0:
            s = math.isqrt(disc)
            if s * s == disc:
                for num in (-b + s, -b - s):
                    if num % (2 * a) == 0:
                        roots.add(num // (2 * a))
    elif deg > 2:
        for r in _integer_roots_factored(tuple(core)):
            roots.add(r)
    return sorted(roots)


@lru_cache(maxsize=4096)
def _integer_roots_factored(core: tuple[int, ...]) -> tuple[int, ...]:
    import sympy

    x = sympy.Symbol("x")
    poly = sympy.Poly(list(reversed(core)), x, domain="ZZ")
    out = []
    for factor, _ in poly.factor_list()[1]:
        if factor.degree() == 1:
            a, b = (int(v) for v in factor.all_coeffs())
            if b % a == 0:
                out.append(-b // a)
    return tuple(sorted(set(out)))


def _univariate_coeffs(p: Polynomial, v: int) -> list[int]:
    out = [0] * (max(e[v - 1] for e in p.terms) + 1)
    for exp, c in p.terms.items():
        out[exp[v - 1]] += c
    return out


def _remainder(num: list[int], den: list[int]) -> list[int] | None:
    """Remainder of num by den over Z when den is monic up to sign, else None."""
    den = list(den)
    while den and den[-1] == 0:
        den.pop()
    if not den or abs(den[-1]) != 1:
        return None
    num = list(num)
    lead = den[-1]
    for k in range(len(num) - len(den), -1, -1):
        q = num[k + len(den) - 1] * lead
        if q:
            for idx, dv in enumerate(den):
                num[k + idx] -= q * dv
    rem = num[: len(den) - 1] or [0]
    while len(rem) > 1 and rem[-1] == 0:
        rem.pop()
    return rem


def _poly_divexact(a: Polynomial, b: Polynomial) -> Polynomial | None:
    """Exact quotient of univariate integer polynomials, or None."""
    num = a.coefficients()
    den = b.coefficients()
    if not den:
        return None
    if not num:
        return Polynomial(1)
    if len(num) < len(den):
        return None
    num = list(num)
    q = [0] * (len(num) - len(den) + 1)
    lead = den[-1]
    for k in range(len(q) - 1, -1, -1):
        top = num[k + len(den) - 1]
        if top % lead:
            return None
        q[k] = top // lead
        for idx, dv in enumerate(den):
            num[k + idx] -= q[k] * dv
    if any(num):
        return None
    return Polynomial.from_coefficients(q)


def _nonneg_on(dom: Domain, w: Polynomial) -> bool:
    """Sufficient test that w(t) stays inside ``dom`` for every admissible t."""
    if dom is Domain.INTEGERS:
        return True
    if any(c < 0 for c in w.terms.values()):
        return False
    return w.constant_term() >= dom.lower


def verify_witness(sys: EnSystem, dom: Domain, witness: Sequence[Polynomial]) -> bool:
    """Exact check of a parametric witness: identities in t plus domain membership."""
    if len(witness) != sys.n or not all(isinstance(w, Polynomial) and w.var_count == 1 for w in witness):
        return False
    if all(w.is_constant() for w in witness):
        return False
    for c in sys.constraints:
        if c.kind is Kind.UNIT:
            if witness[c.args[0] - 1] != 1:
                return False
            continue
        i, j, k = (witness[a - 1] for a in c.args)
        lhs = i + j if c.kind is Kind.ADD else i * j
        if lhs != k:
            return False
    return all(_nonneg_on(dom, w) for w in witness)


# -- grounding --------------------------------------------------------------------

class _Open(Exception):
    pass


@dataclass
class _GroundResult:
    kind: str                      # "finite" | "infinite" | "open"
    solutions: list = field(default_factory=list)
    witness: tuple | None = None


class _Grounder:
    def __init__(self, sys: EnSystem, dom: Domain, budget: Budget):
        self.sys = sys
        self.n = sys.n
        self.dom = dom
        self.budget = budget
        self.nodes = 0
        self.tags: set[str] = set()
        self.t = Polynomial.variable(1, 1)
        self.deadline = budget.deadline()

    def run(self) -> _GroundResult:
        forced = _forced_values(self.sys, self.dom)
        if forced is None:
            return _GroundResult("finite", [])
        polys = [c.polynomial(self.n) for c in self.sys.constraints]
        try:
            return self.ground(polys, forced, [])
        except _Open:
            return _GroundResult("open")

    def ground(self, polys: list[Polynomial], assigned: dict[int, int],
               defs: list[tuple[int, Polynomial]]) -> _GroundResult:
        self.nodes += 1
        if self.nodes > self.budget.ground_nodes:
            raise _Open
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _Open
        work = {}
        for p in polys:
            vs = p.variables()
            q = p.substitute({v: x for v, x in assigned.items() if v in vs})
            if q.is_zero():
                continue
            if q.is_constant():
                return _GroundResult("finite", [])
            q = _primitive(q)
            work[q] = None
        work = sorted(work, key=lambda q: (len(q.terms), tuple(q.terms.items())))
        if not work:
            return self.close(assigned, defs)

        cands = self.candidate_sets(work)
        if cands is not None:
            if any(not vals for vals in cands.values()):
                return _GroundResult("finite", [])
            v = min(cands, key=lambda u: (len(cands[u]), u))
            values = cands[v]
            if len(values) > self.budget.candidate_cap:
                raise _Open
            return self.branch(work, assigned, defs, v, values)

        sub = self.pick_substitution(work)
        if sub is not None:
            v, expr = sub
            self.tags.add("substitution")
            reduced = [q.substitute({v: expr}) for q in work]
            return self.ground(reduced, assigned, defs + [(v, expr)])

        split = self.split_factors(work)
        if split is not None:
            self.tags.add("factors")
            pos, factors = split
            found = []
            for f in factors:
                res = self.ground(work[:pos] + [f] + work[pos + 1:], assigned, defs)
                if res.kind == "infinite":
                    return res
                found.extend(res.solutions)
            return _GroundResult("finite", sorted(set(found)))

        derived = self.eliminate(work)
        if derived:
            self.tags.add("elimination")
            return self.ground(work + derived, assigned, defs)
        raise _Open

    def branch(self, work, assigned, defs, v, values) -> _GroundResult:
        found = []
        for x in values:
            res = self.ground(work, {**assigned, v: x}, defs)
            if res.kind == "infinite":
                return res
            found.extend(res.solutions)
        return _GroundResult("finite", sorted(set(found)))

    # candidate rules -----------------------------------------------------------

    def candidate_sets(self, work: list[Polynomial]) -> dict[int, list[int]] | None:
        cands: dict[int, set[int]] = {}

        def merge(v: int, vals: Iterable[int]):
            vals = {x for x in vals if self.dom.contains(x)}
            cands[v] = vals if v not in cands else cands[v] & vals

        for q in work:
            vs = q.variables()
            if len(vs) == 1:
                (v,) = vs
                self.tags.add("roots")
                merge(v, integer_roots(_univariate_coeffs(q, v)))
                continue
            div = self.divisor_rule(q)
            if div is None:
                div = self.linear_divisor_rule(q)
            if div is not None:
                self.tags.add("divisors")
                for v, vals in div.items():
                    merge(v, vals)
                continue
            sign = self.sign_rule(q)
            if sign is not None:
                self.tags.add("bounds")
                for v, vals in sign.items():
                    merge(v, vals)
        if not cands:
            return None
        return {v: sorted(vals) for v, vals in cands.items()}

    def divisor_rule(self, q: Polynomial) -> dict[int, list[int]] | None:
        # c*m + c0 = 0 with one nonconstant monomial m and c0 != 0
        c0 = q.constant_term()
        if not c0 or len(q.terms) != 2:
            return None
        (exp, c), = [(e, c) for e, c in q.terms.items() if any(e)]
        if c0 % c:
            return {v: [] for v in q.variables()}
        target = abs(c0 // c)
        if target.bit_length() > 200:
            raise _Open
        divs = _divisors(target)
        out = {}
        for idx, e in enumerate(exp, start=1):
            if e:
                ok = [d for d in divs if target % (d ** e) == 0]
                out[idx] = sorted({s * d for d in ok for s in (1, -1)})
        return out

    def linear_divisor_rule(self, q: Polynomial) -> dict[int, list[int]] | None:
        # A(x_i) * x_j + B(x_i) = 0 with B = Q*A + R, R a nonzero constant:
        # A(x_i) must divide R
        vs = q.variables()
        if len(vs) != 2:
            return None
        for j in sorted(vs):
            parts = q.collect(j)
            if set(parts) - {0, 1} or 1 not in parts:
                continue
            a = parts[1]
            if a.is_constant():
                continue
            (i,) = vs - {j}
            b = parts.get(0, Polynomial(self.n))
            a_co = _univariate_coeffs(a, i)
            b_co = _univariate_coeffs(b, i) if not b.is_zero() else [0]
            rem = _remainder(b_co, a_co)
            if rem is None or any(rem[1:]) or not rem or rem[0] == 0:
                continue
            r = rem[0]
            if r.bit_length() > 200:
                raise _Open
            vals = set()
            for dv in _divisors(r):
                for target in (dv, -dv):
                    shifted = list(a_co)
                    shifted[0] -= target
                    if any(shifted):
                        vals.update(integer_roots(shifted))
            return {i: sorted(vals)}
        return None

    def sign_rule(self, q: Polynomial) -> dict[int, list[int]] | None:
        # sum of same-signed non-negative monomials equals a constant
        c0 = q.constant_term()
        rest = [(e, c) for e, c in q.terms.items() if any(e)]
        natural = self.dom is not Domain.INTEGERS
        if not all(natural or all(x % 2 == 0 for x in e) for e, _ in rest):
            return None
        signs = {c > 0 for _, c in rest}
        if len(signs) != 1:
            return None
        positive = signs.pop()
        if c0 and (c0 > 0) == positive:
            return {v: [] for v in q.variables()}
        room = abs(c0)
        out = {}
        for e, c in rest:
            used = [(i + 1, x) for i, x in enumerate(e) if x]
            if len(used) != 1:
                continue
            v, power = used[0]
            cap = _iroot(room // abs(c), power)
            if cap > self.budget.candidate_cap:
                continue
            lo = 0 if natural else -cap
            vals = list(range(lo, cap + 1))
            out[v] = vals if v not in out else sorted(set(out[v]) & set(vals))
        return out or None

    # substitution and elimination ---------------------------------------------

    def pick_substitution(self, work: list[Polynomial]) -> tuple[int, Polynomial] | None:
        best = None
        for pos, q in enumerate(work):
            for v in sorted(q.variables()):
                parts = q.collect(v)
                if set(parts) != {0, 1} and set(parts) != {1}:
                    continue
                lead = parts[1]
                if not lead.is_constant() or abs(lead.constant_term()) != 1:
                    continue
                rest = parts.get(0, Polynomial(self.n))
                expr = rest * (-lead.constant_term())
                natural_ok = all(c > 0 for c in expr.terms.values())
                key = (not natural_ok, len(expr.terms), expr.total_degree(), v, pos)
                if best is None or key < best[0]:
                    best = (key, v, expr)
        if best is None:
            return None
        return best[1], best[2]

    def split_factors(self, work: list[Polynomial]) -> tuple[int, list[Polynomial]] | None:
        for pos, q in enumerate(work):
            if q.total_degree() < 2:
                continue
            factors = _factor(q)
            if len(factors) > 1 or factors[0] != q:
                return pos, factors
        return None

    def eliminate(self, work: list[Polynomial]) -> list[Polynomial]:
        derived = []
        seen = set(work)
        for p, q in itertools.combinations(work, 2):
            common = p.variables() & q.variables()
            if not common or len(p.variables() | q.variables()) > 2:
                continue
            for v in sorted(common):
                r = _resultant(p, q, v)
                if r.is_zero() or r.is_constant():
                    if r.is_constant() and not r.is_zero():
                        derived.append(r)
                    continue
                r = _primitive(r)
                if len(r.variables()) == 1 and r not in seen:
                    seen.add(r)
                    derived.append(r)
        return derived

    # closing a branch ------------------------------------------------------------

    def close(self, assigned: dict[int, int], defs: list[tuple[int, Polynomial]]) -> _GroundResult:
        defined = {v for v, _ in defs}
        free = [v for v in range(1, self.n + 1) if v not in assigned and v not in defined]
        if not free:
            values: dict[int, int] = dict(assigned)
            for v, expr in reversed(defs):
                values[v] = _eval_partial(expr, values)
            point = tuple(values[v] for v in range(1, self.n + 1))
            if all(self.dom.contains(x) for x in point) and self.sys.holds(point):
                return _GroundResult("finite", [point])
            return _GroundResult("finite", [])
        base = 0 if self.dom is not Domain.POSITIVE else 1
        for param in free:
            for shift in (0, 1, 2):
                images: dict[int, Polynomial] = {v: Polynomial.constant(1, x) for v, x in assigned.items()}
                for v in free:
                    images[v] = Polynomial.constant(1, base)
                images[param] = self.t + (base + shift)
                for v, expr in reversed(defs):
                    images[v] = expr.compose([images.get(u, Polynomial.constant(1, 0))
                                              for u in range(1, self.n + 1)])
                    if not isinstance(images[v], Polynomial):
                        images[v] = Polynomial.constant(1, images[v])
                witness = tuple(images[v] for v in range(1, self.n + 1))
                if verify_witness(self.sys, self.dom, witness):
                    self.tags.add("free-variable")
                    return _GroundResult("infinite", witness=witness)
        raise _Open


def _forced_values(sys: EnSystem, dom: Domain) -> dict[int, int] | None:
    """Values implied by plain forward reasoning on the constraints; None on contradiction.

    Unit fixes a variable, Add fixes any one of its three places from the
    other two, Mul fixes the product or a factor dividing a known product.
    """
    vals: dict[int, int] = {}

    def put(v: int, x: int) -> bool:
        if v in vals:
            return vals[v] == x
        if not dom.contains(x):
            return False
        vals[v] = x
        return True

    changed = True
    while changed:
        changed = False
        for c in sys.constraints:
            if c.kind is Kind.UNIT:
                v = c.args[0]
                if v not in vals:
                    changed = True
                if not put(v, 1):
                    return None
                continue
            i, j, k = c.args
            known = (i in vals, j in vals, k in vals)
            if all(known):
                a, b, r = vals[i], vals[j], vals[k]
                if (a + b if c.kind is Kind.ADD else a * b) != r:
                    return None
                continue
            if known[0] and known[1]:
                ok, changed = put(k, vals[i] + vals[j] if c.kind is Kind.ADD else vals[i] * vals[j]), True
            elif known[2] and (known[0] or known[1]):
                have, other = (i, j) if known[0] else (j, i)
                if c.kind is Kind.ADD:
                    ok, changed = put(other, vals[k] - vals[have]), True
                elif vals[have] != 0:
                    if vals[k] % vals[have]:
                        return None
                    ok, changed = put(other, vals[k] // vals[have]), True
                else:
                    continue
            elif known[2] and i == j and c.kind is Kind.ADD:
                if vals[k] % 2:
                    return None
                ok, changed = put(i, vals[k] // 2), True
            else:
                continue
            if not ok:
                return None
    return vals


def _eval_partial(expr: Polynomial, values: dict[int, int]) -> int:
    point = [values.get(v, 0) for v in range(1, expr.var_count + 1)]
    return expr.compose(point)


def _primitive(q: Polynomial) -> Polynomial:
    g = 0
    for c in q.terms.values():
        g = math.gcd(g, c)
    lead = next(iter(q.terms.values()))
    if lead < 0:
        g = -g
    if g in (0, 1):
        return q
    return Polynomial(q.var_count, {e: c // g for e, c in q.terms.items()})


def _iroot(m: int, k: int) -> int:
    if m <= 0:
        return 0
    if k == 1:
        return m
    if k == 2:
        return math.isqrt(m)
    r = int(round(m ** (1.0 / k)))
    while r ** k > m:
        r -= 1
    while (r + 1) ** k <= m:
        r += 1
    return r


def _sympy_gens(n: int):
    import sympy

    return sympy.symbols(f"x1:{n + 1}")


@lru_cache(maxsize=8192)
def _factor(q: Polynomial) -> list[Polynomial]:
    """Distinct nonconstant irreducible factors of q over Z."""
    import sympy

    gens = _sympy_gens(q.var_count)
    sp = sympy.Poly.from_dict(dict(q.terms), *gens, domain="ZZ")
    out = []
    for factor, _ in sp.factor_list()[1]:
        fp = Polynomial(q.var_count, {tuple(int(x) for x in e): int(c) for e, c in factor.terms()})
        if not fp.is_constant():
            out.append(_primitive(fp))
    return sorted(set(out), key=lambda f: (len(f.terms), str(f))) or [q]


def _resultant(p: Polynomial, q: Polynomial, v: int) -> Polynomial:
    import sympy

    n = p.var_count
    gens = sympy.symbols(f"x1:{n + 1}")
    sp = sympy.Poly.from_dict({e: c for e, c in p.terms.items()}, *gens, domain="ZZ")
    sq = sympy.Poly.from_dict({e: c for e, c in q.terms.items()}, *gens, domain="ZZ")
    res = sympy.resultant(sp.as_expr(), sq.as_expr(), gens[v - 1])
    if res == 0:
        return Polynomial(n)
    rp = sympy.Poly(res, *gens, domain="ZZ")
    return Polynomial(n, {tuple(int(x) for x in e): int(c) for e, c in rp.terms()})


def propagate_ground(sys: EnSystem, dom: Domain = Domain.INTEGERS,
                     budget: Budget | None = None) -> dict[int, list[int]] | None:
    """Finite candidate set per variable, or None when the system is not grounded.

    The true solution set is always contained in the product of the sets.
    """
    check_valid(sys)
    res = _Grounder(sys, dom, budget or DEFAULT_BUDGET).run()
    if res.kind != "finite":
        return None
    return {v: sorted({t[v - 1] for t in res.solutions}) for v in range(1, sys.n + 1)}


# -- parametric witnesses -----------------------------------------------------------

def _families(dom: Domain, degree: int) -> list[Polynomial]:
    t = Polynomial.variable(1, 1)
    one = Polynomial.constant(1, 1)
    if dom is Domain.INTEGERS:
        consts, slopes, offsets = [0, 1, -1, 2, -2], [1, -1, 2, -2], [0, 1, -1, 2, -2]
        quad = [(a, b, c) for a in (1, -1, 2, -2) for b in (0, 1, -1) for c in (0, 1, -1)]
    elif dom is Domain.NONNEGATIVE:
        consts, slopes, offsets = [0, 1, 2], [1, 2], [0, 1, 2]
        quad = [(a, b, c) for a in (1, 2) for b in (0, 1) for c in (0, 1)]
    else:
        consts, slopes, offsets = [1, 2], [1, 2], [1, 2]
        quad = [(a, b, c) for a in (1, 2) for b in (0, 1) for c in (1, 2)]
    first = t * slopes[0] + offsets[0]
    out = [first] + [one * c for c in consts]
    out += [t * a + b for a in slopes for b in offsets if (t * a + b) != first]
    if degree >= 2:
        out += [t * t * a + t * b + c for a, b, c in quad]
    return out


class _WitnessSearch:
    def __init__(self, sys: EnSystem, dom: Domain, node_limit: int):
        self.sys = sys
        self.n = sys.n
        self.dom = dom
        self.node_limit = node_limit
        self.nodes = 0
        self.watch: list[list[Constraint]] = [[] for _ in range(self.n)]
        for c in sys.constraints:
            for a in set(c.args):
                self.watch[a - 1].append(c)
        # most constrained variables first
        self.order = sorted(range(self.n), key=lambda v: (-len(self.watch[v]), v))

    def assign(self, vals, t, x, queue) -> bool:
        if vals[t] is None:
            if not _nonneg_on(self.dom, x):
                return False
            vals[t] = x
            queue.append(t)
            return True
        return vals[t] == x

    def propagate(self, vals, queue) -> bool:
        one = Polynomial.constant(1, 1)
        while queue:
            v = queue.pop()
            for c in self.watch[v]:
                if c.kind is Kind.UNIT:
                    if vals[c.args[0] - 1] != one:
                        return False
                    continue
                i, j, k = (a - 1 for a in c.args)
                a, b, r = vals[i], vals[j], vals[k]
                if c.kind is Kind.ADD:
                    if a is not None and b is not None:
                        if not self.assign(vals, k, a + b, queue):
                            return False
                    elif r is not None and a is not None:
                        if not self.assign(vals, j, r - a, queue):
                            return False
                    elif r is not None and b is not None:
                        if not self.assign(vals, i, r - b, queue):
                            return False
                    elif r is not None and i == j:
                        if any(x % 2 for x in r.terms.values()):
                            return False
                        half = Polynomial(1, {e: x // 2 for e, x in r.terms.items()})
                        if not self.assign(vals, i, half, queue):
                            return False
                else:
                    if a is not None and b is not None:
                        if not self.assign(vals, k, a * b, queue):
                            return False
                    elif r is not None and (a is not None or b is not None):
                        known, other = (a, j) if a is not None else (b, i)
                        if known.is_zero():
                            if not r.is_zero():
                                return False
                            continue
                        quo = _poly_divexact(r, known)
                        if quo is None or not self.assign(vals, other, quo, queue):
                            return False
        return True

    def search(self, degree: int, first: int) -> tuple[Polynomial, ...] | None:
        self.families = _families(self.dom, degree)
        self.seq = [first] + [v for v in self.order if v != first]
        vals: list = [None] * self.n
        queue = []
        one = Polynomial.constant(1, 1)
        for c in self.sys.constraints:
            if c.kind is Kind.UNIT and not self.assign(vals, c.args[0] - 1, one, queue):
                return None
        if not self.propagate(vals, queue):
            return None
        return self.dfs(vals)

    def dfs(self, vals):
        free = [v for v in self.seq if vals[v] is None]
        if not free:
            w = tuple(vals)
            return w if verify_witness(self.sys, self.dom, w) else None
        v = free[0]
        for x in self.families:
            self.nodes += 1
            if self.nodes > self.node_limit:
                return None
            nxt = list(vals)
            if not self.assign(nxt, v, x, []):
                continue
            if self.propagate(nxt, [v]):
                found = self.dfs(nxt)
                if found is not None:
                    return found
        return None


def find_witness(sys: EnSystem, dom: Domain = Domain.INTEGERS,
                 budget: Budget | None = None) -> tuple[Polynomial, ...] | None:
    """Search affine families first, then degree-2 families.

    Each pass is repeated with every variable in turn receiving the first
    family value; the node budget is shared by all passes.
    """
    budget = budget or DEFAULT_BUDGET
    search = _WitnessSearch(sys, dom, budget.witness_nodes)
    for degree in (1, 2):
        for first in search.order:
            found = search.search(degree, first)
            if found is not None:
                return found
            if search.nodes > search.node_limit:
                return None
    return None


# -- classification -----------------------------------------------------------------

def classify_finiteness(sys: EnSystem, dom: Domain = Domain.INTEGERS,
                        budget: Budget | None = None) -> FinitenessVerdict:
    check_valid(sys)
    budget = budget or DEFAULT_BUDGET
    grounder = _Grounder(sys, dom, budget)
    res = grounder.run()
    if res.kind == "finite":
        return _finite_from(sys, dom, res.solutions, grounder.tags, budget)
    if res.kind == "infinite":
        return Infinite(res.witness)
    witness = find_witness(sys, dom, budget)
    if witness is not None:
        return Infinite(witness)
    return _box_evidence(sys, dom, budget)


def _finite_from(sys, dom, solutions, tags, budget) -> Finite:
    cands = [sorted({t[v] for t in solutions}) for v in range(sys.n)]
    product = enumerate_candidates(sys, dom, cands, budget)
    if sorted(product) != sorted(solutions):
        raise AssertionError(f"grounding and candidate enumeration disagree for {sys}")
    if solutions:
        bounds = tuple((min(c), max(c)) for c in cands)
    else:
        base = dom.lower or 0
        bounds = tuple((base, base) for _ in range(sys.n))
    proof = "grounding" + ("+" + "+".join(sorted(tags)) if tags else "")
    return Finite(SolutionSet(tuple(sorted(solutions)), Box(bounds), True), proof)


def _box_evidence(sys, dom, budget) -> Undetermined:
    radius, found, reached = 0, 0, 0
    r = 1
    while r <= budget.max_box:
        try:
            sols = enumerate_solutions(sys, dom, Box.cube(sys.n, r, dom), budget)
        except BudgetExceeded:
            break
        reached, found = r, len(sols)
        r *= 2
    radius = reached
    return Undetermined(radius, found, "no grounding proof and no parametric witness")


def count_solutions(sys: EnSystem, dom: Domain = Domain.INTEGERS,
                    budget: Budget | None = None) -> int | Infinite | Undetermined:
    verdict = classify_finiteness(sys, dom, budget)
    if isinstance(verdict, Finite):
        return len(verdict.solutions)
    return verdict
