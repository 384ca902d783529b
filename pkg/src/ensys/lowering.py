"""Compile a polynomial equation D = 0 into an E_n system.

The original variables keep indices 1..p.  Every auxiliary variable is the
output of exactly one defining cell whose inputs are already defined, so a
zero of D extends to a solution in exactly one way.  The polynomial is
split as D = P - Q with P, Q having non-negative coefficients; monomials
become chains of Mul cells, coefficients come from constant chains, sums
from Add cells, and the two sides are finally equated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .polynomial import Polynomial, degree_in
from .solver import Domain
from .system import Constraint, EnSystem, Kind, check_valid


class LoweringError(ValueError):
    pass


@dataclass(frozen=True)
class Fragment:
    """A small system with a designated output variable."""

    system: EnSystem
    output: int


def constant_chain(c: int) -> Fragment:
    """Fragment whose only solution gives the output the value ``c`` (binary double-and-add)."""
    if c <= 0:
        raise LoweringError(f"constant_chain needs c >= 1, got {c}")
    cons = [Constraint.unit(1)]
    one = acc = 1
    top = 1
    for bit in bin(c)[3:]:
        top += 1
        cons.append(Constraint.add(acc, acc, top))
        acc = top
        if bit == "1":
            top += 1
            cons.append(Constraint.add(acc, one, top))
            acc = top
    return Fragment(EnSystem.of(top, cons), acc)


def zero_gadget() -> Fragment:
    """``z + z = z``: forces z = 0 over Z and N, unsatisfiable over N\\{0}."""
    return Fragment(EnSystem.of(1, [Constraint.add(1, 1, 1)]), 1)


@dataclass(frozen=True)
class LoweringResult:
    system: EnSystem
    input_positions: tuple[int, ...]
    domain: Domain
    defining: tuple[tuple[int, Constraint], ...]
    checks: tuple[Constraint, ...]

    @property
    def aux_variables(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.defining)

    def aux_bound(self, radius: int) -> dict[int, int]:
        """Absolute bound on each auxiliary variable when every |x_i| <= radius."""
        return aux_box(self, radius)


def aux_box(lr: LoweringResult, radius: int) -> dict[int, int]:
    """Interval bounds for all variables, propagated through the defining cells in order."""
    if radius < 0:
        raise LoweringError("radius must be non-negative")
    bound = {v: radius for v in lr.input_positions}
    for v, c in lr.defining:
        if c.kind is Kind.UNIT:
            bound[v] = 1
        elif c.kind is Kind.ADD:
            i, j, _ = c.args
            bound[v] = 0 if i == j == v else bound[i] + bound[j]
        else:
            i, j, _ = c.args
            bound[v] = bound[i] * bound[j]
    return {v: bound[v] for v in sorted(bound)}


class _Builder:
    def __init__(self, p: int, share: bool):
        self.p = p
        self.top = p
        self.share = share
        self.cells: list[tuple[int, Constraint]] = []
        self.cache: dict[tuple, int] = {}

    def fresh(self) -> int:
        self.top += 1
        return self.top

    def cell(self, kind: Kind, a: int, b: int) -> int:
        key = (kind, min(a, b), max(a, b))
        if self.share and key in self.cache:
            return self.cache[key]
        v = self.fresh()
        self.cells.append((v, Constraint(kind, (min(a, b), max(a, b), v))))
        self.cache[key] = v
        return v

    def splice(self, frag: Fragment, key: tuple | None = None) -> int:
        if self.share and key is not None and key in self.cache:
            return self.cache[key]
        offset = self.top
        self.top += frag.system.n
        # fragments are stored sorted; replay cells in definition order
        for c in sorted(frag.system.constraints, key=lambda c: c.args[-1]):
            args = tuple(a + offset for a in c.args)
            self.cells.append((args[-1], Constraint(c.kind, args)))
        out = frag.output + offset
        if key is not None:
            self.cache[key] = out
        return out

    def constant(self, c: int) -> int:
        return self.splice(constant_chain(c), ("const", c))

    def monomial(self, exp: tuple[int, ...]) -> int | None:
        factors = [i + 1 for i, e in enumerate(exp) for _ in range(e)]
        if not factors:
            return None
        cur = factors[0]
        for f in factors[1:]:
            cur = self.cell(Kind.MUL, cur, f)
        return cur

    def term(self, exp: tuple[int, ...], coeff: int) -> int:
        mono = self.monomial(exp)
        if mono is None:
            return self.constant(coeff)
        if coeff == 1:
            return mono
        return self.cell(Kind.MUL, self.constant(coeff), mono)

    def side(self, terms: Iterable[tuple[tuple[int, ...], int]]) -> int | None:
        acc = None
        for exp, coeff in terms:
            v = self.term(exp, coeff)
            acc = v if acc is None else self.cell(Kind.ADD, acc, v)
        return acc


def lower_polynomial(d: Polynomial, domain: Domain = Domain.INTEGERS,
                     share_cells: bool = False) -> LoweringResult:
    """Lower ``d = 0`` to an E_n system with the same solutions on x1..xp.

    Over Z and N the two sides are equated through the zero cell
    ``z + z = z``; over N\\{0}, where that cell has no solution, the cell
    computing one side is redirected to write into the other side's
    variable instead.
    """
    if d.is_zero():
        raise LoweringError("cannot lower the zero polynomial")
    p = d.var_count
    if p < 1:
        raise LoweringError("polynomial has no variables")
    flat = [i for i in range(1, p + 1) if degree_in(d, i) == 0]
    if flat:
        names = ", ".join(f"x{i}" for i in flat)
        raise LoweringError(f"variables of degree 0 must be eliminated before lowering: {names}")

    b = _Builder(p, share_cells)
    plus = [(e, c) for e, c in d.terms.items() if c > 0]
    minus = [(e, -c) for e, c in d.terms.items() if c < 0]
    vp = b.side(plus)
    vq = b.side(minus)
    checks: list[Constraint] = []

    if domain is Domain.POSITIVE:
        if vp is None or vq is None:
            # one-sided: a sum of positive terms never vanishes on N\{0}
            z = b.fresh()
            b.cells.append((z, Constraint.add(z, z, z)))
        else:
            _merge_sides(b, vp, vq, checks)
    else:
        z = b.splice(zero_gadget())
        left = z if vp is None else vp
        right = z if vq is None else vq
        checks.append(Constraint.add(left, z, right))

    return _finish(b, p, domain, checks)


def _merge_sides(b: _Builder, vp: int, vq: int, checks: list[Constraint]) -> None:
    for src, dst in ((vq, vp), (vp, vq)):
        if src <= b.p:
            continue
        pos = next(idx for idx, (v, _) in enumerate(b.cells) if v == src)
        cell = b.cells[pos][1]
        # a Unit cell or a shared cell cannot be redirected, and at least
        # one auxiliary variable has to survive
        if cell.kind is Kind.UNIT or any(src in c.args[:-1] for _, c in b.cells):
            continue
        if len(b.cells) == 1:
            continue
        del b.cells[pos]
        i, j, _ = cell.args
        checks.append(Constraint(cell.kind, (i, j, dst)))
        return
    one = b.fresh()
    b.cells.append((one, Constraint.unit(one)))
    checks.append(Constraint.mul(vp, one, vq))


def _finish(b: _Builder, p: int, domain: Domain, checks: list[Constraint]) -> LoweringResult:
    used = set(range(1, p + 1))
    for v, c in b.cells:
        used.update(c.args)
    for c in checks:
        used.update(c.args)
    order = sorted(used)
    rename = {v: i for i, v in enumerate(order, start=1)}

    def relabel(c: Constraint) -> Constraint:
        args = tuple(rename[a] for a in c.args)
        if c.kind is Kind.UNIT:
            return Constraint.unit(*args)
        return Constraint(c.kind, (min(args[0], args[1]), max(args[0], args[1]), args[2]))

    defining = tuple((rename[v], relabel(c)) for v, c in b.cells)
    check_cons = tuple(relabel(c) for c in checks)
    n = len(order)
    system = EnSystem.of(n, [c for _, c in defining] + list(check_cons))
    check_valid(system)
    if n <= p:
        raise LoweringError("lowering produced no auxiliary variable")
    return LoweringResult(system, tuple(range(1, p + 1)), domain, defining, check_cons)


def encode_nonneg(sys: EnSystem, variables: Iterable[int]) -> EnSystem:
    """Append x = a^2 + b^2 + c^2 + e^2 for every selected variable x.

    Ten fresh variables per selected x: four roots, four squares and two
    partial sums.  Over Z this restricts the selected variables to x >= 0
    and nothing else.
    """
    check_valid(sys)
    chosen = sorted(set(variables))
    for v in chosen:
        if not 1 <= v <= sys.n:
            raise LoweringError(f"variable x{v} out of range 1..{sys.n}")
    n = sys.n
    extra = []
    for x in chosen:
        roots = [n + 1, n + 2, n + 3, n + 4]
        squares = [n + 5, n + 6, n + 7, n + 8]
        s1, s2 = n + 9, n + 10
        n += 10
        for r, sq in zip(roots, squares):
            extra.append(Constraint.mul(r, r, sq))
        extra.append(Constraint.add(squares[0], squares[1], s1))
        extra.append(Constraint.add(s1, squares[2], s2))
        extra.append(Constraint.add(s2, squares[3], x))
    return sys.with_constraints(extra, n=n)
