"""The E_n constraint language.

A system is a duplicate-free, canonically ordered set of constraints of
three shapes over variables x1..xn:

    x_i = 1            Constraint.unit(i)
    x_i + x_j = x_k    Constraint.add(i, j, k)
    x_i * x_j = x_k    Constraint.mul(i, j, k)

Add and Mul are commutative in (i, j), so the helpers store i <= j.
"""

from __future__ import annotations

import functools
import itertools
import json
import re
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

from .polynomial import Polynomial


class EnSystemError(ValueError):
    """Malformed E_n system text, JSON, or an invalid request on a system."""


class Kind(IntEnum):
    UNIT = 0
    ADD = 1
    MUL = 2

    # Enum hashes by name in Python code; the int hash is equivalent and much faster
    __hash__ = int.__hash__


_KIND_NAMES = {Kind.UNIT: "unit", Kind.ADD: "add", Kind.MUL: "mul"}
_NAME_KINDS = {v: k for k, v in _KIND_NAMES.items()}


@dataclass(frozen=True, order=True)
class Constraint:
    kind: Kind
    args: tuple[int, ...]

    @classmethod
    def unit(cls, i: int) -> Constraint:
        return _interned(Kind.UNIT, (i,))

    @classmethod
    def add(cls, i: int, j: int, k: int) -> Constraint:
        return _interned(Kind.ADD, (i, j, k) if i <= j else (j, i, k))

    @classmethod
    def mul(cls, i: int, j: int, k: int) -> Constraint:
        return _interned(Kind.MUL, (i, j, k) if i <= j else (j, i, k))

    @property
    def key(self) -> tuple[int, ...]:
        return (int(self.kind),) + self.args

    def renamed(self, perm: Sequence[int]) -> Constraint:
        """Apply a renaming; ``perm[i-1]`` is the new index of x_i."""
        new = tuple(perm[a - 1] for a in self.args)
        if self.kind is Kind.UNIT:
            return Constraint.unit(new[0])
        return Constraint(self.kind, (min(new[0], new[1]), max(new[0], new[1]), new[2]))

    def holds(self, values: Sequence[int]) -> bool:
        if self.kind is Kind.UNIT:
            return values[self.args[0] - 1] == 1
        i, j, k = self.args
        a, b, c = values[i - 1], values[j - 1], values[k - 1]
        return a + b == c if self.kind is Kind.ADD else a * b == c

    def polynomial(self, n: int) -> Polynomial:
        """Left side minus right side, as a polynomial in x1..xn."""
        xs = [Polynomial.variable(n, a) for a in self.args]
        if self.kind is Kind.UNIT:
            return xs[0] - 1
        if self.kind is Kind.ADD:
            return xs[0] + xs[1] - xs[2]
        return xs[0] * xs[1] - xs[2]

    def to_json(self) -> list:
        return [_KIND_NAMES[self.kind], *self.args]

    def __str__(self) -> str:
        if self.kind is Kind.UNIT:
            return f"x{self.args[0]}=1"
        i, j, k = self.args
        op = "+" if self.kind is Kind.ADD else "*"
        return f"x{i}{op}x{j}=x{k}"


@functools.lru_cache(maxsize=1 << 16)
def _interned(kind: Kind, args: tuple[int, ...]) -> Constraint:
    # large gadget systems repeat the same constraints many times
    return Constraint(kind, args)


def _sort_key(c: Constraint) -> tuple:
    return (c.kind, c.args)


@dataclass(frozen=True)
class EnSystem:
    """A subsystem of E_n; build with :meth:`of` to get the canonical layout."""

    n: int
    constraints: tuple[Constraint, ...]

    @classmethod
    def of(cls, n: int, constraints: Iterable[Constraint]) -> EnSystem:
        # sorting on the plain tuple key is equivalent to the dataclass order, and faster
        return cls(n, tuple(sorted(set(constraints), key=_sort_key)))

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self) -> int:
        return len(self.constraints)

    @property
    def key(self) -> tuple:
        return tuple(c.key for c in self.constraints)

    def with_constraints(self, extra: Iterable[Constraint], n: int | None = None) -> EnSystem:
        return EnSystem.of(self.n if n is None else n, list(self.constraints) + list(extra))

    def renamed(self, perm: Sequence[int]) -> EnSystem:
        return EnSystem.of(self.n, (c.renamed(perm) for c in self.constraints))

    def holds(self, values: Sequence[int]) -> bool:
        for c in self.constraints:
            args = c.args
            if c.kind is Kind.UNIT:
                if values[args[0] - 1] != 1:
                    return False
                continue
            a, b, r = values[args[0] - 1], values[args[1] - 1], values[args[2] - 1]
            if (a + b if c.kind is Kind.ADD else a * b) != r:
                return False
        return True

    def polynomials(self) -> list[Polynomial]:
        return [c.polynomial(self.n) for c in self.constraints]

    def used_variables(self) -> frozenset[int]:
        return frozenset(a for c in self.constraints for a in c.args)

    def __str__(self) -> str:
        return serialize_system(self, "text")


def full_universe(n: int) -> list[Constraint]:
    """All of E_n under the i <= j normalization, in canonical order."""
    if n < 1:
        raise EnSystemError("n must be positive")
    out = [Constraint.unit(i) for i in range(1, n + 1)]
    for kind in (Kind.ADD, Kind.MUL):
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                for k in range(1, n + 1):
                    out.append(Constraint(kind, (i, j, k)))
    return sorted(out)


def validate(sys: EnSystem) -> list[str]:
    """Every invariant violation of ``sys``; an empty list means valid."""
    problems = []
    if sys.n < 1:
        problems.append(f"n must be positive, got {sys.n}")
    seen = set()
    for pos, c in enumerate(sys.constraints):
        expected = 1 if c.kind is Kind.UNIT else 3
        if len(c.args) != expected:
            problems.append(f"constraint {pos}: {c.kind.name.lower()} takes {expected} indices, got {len(c.args)}")
            continue
        for a in c.args:
            if a < 1:
                problems.append(f"constraint {pos} ({c}): index {a} < 1")
            elif a > sys.n:
                problems.append(f"constraint {pos} ({c}): index {a} > n={sys.n}")
        if c.kind is not Kind.UNIT and c.args[0] > c.args[1]:
            problems.append(f"constraint {pos} ({c}): unnormalized pair ({c.args[0]},{c.args[1]})")
        if c in seen:
            problems.append(f"constraint {pos} ({c}): duplicate")
        seen.add(c)
    for pos in range(1, len(sys.constraints)):
        if _sort_key(sys.constraints[pos - 1]) > _sort_key(sys.constraints[pos]):
            problems.append(f"constraints {pos - 1} and {pos} out of canonical order")
    return problems


def check_valid(sys: EnSystem) -> None:
    problems = validate(sys)
    if problems:
        raise EnSystemError("invalid system: " + "; ".join(problems))


PERMUTATION_LIMIT = 8


def canonical_form(sys: EnSystem, limit: int = PERMUTATION_LIMIT) -> EnSystem:
    """Least image of ``sys`` over all renamings of x1..xn."""
    if sys.n > limit:
        raise EnSystemError(f"canonical form refused: n={sys.n} exceeds permutation limit {limit}")
    best = None
    best_key = None
    for perm in itertools.permutations(range(1, sys.n + 1)):
        image = sys.renamed(perm)
        key = image.key
        if best_key is None or key < best_key:
            best, best_key = image, key
    return best


def orbit(sys: EnSystem) -> set[tuple]:
    """Keys of all distinct renamings of ``sys``."""
    return {sys.renamed(p).key for p in itertools.permutations(range(1, sys.n + 1))}


# -- text and JSON formats ---------------------------------------------------

_VAR = r"\s*x(\d+)\s*"
_UNIT_RE = re.compile(rf"^{_VAR}=\s*1\s*$")
_BIN_RE = re.compile(rf"^{_VAR}([+*]){_VAR}={_VAR}$")
_DECL_RE = re.compile(r"^\s*n\s*=\s*(\d+)\s*$")


def parse_constraint(text: str) -> Constraint:
    m = _UNIT_RE.match(text)
    if m:
        return Constraint.unit(int(m.group(1)))
    m = _BIN_RE.match(text)
    if m:
        i, op, j, k = int(m.group(1)), m.group(2), int(m.group(3)), int(m.group(4))
        return Constraint.add(i, j, k) if op == "+" else Constraint.mul(i, j, k)
    raise EnSystemError(f"not an E_n equation: {text.strip()!r} (allowed: xi=1, xi+xj=xk, xi*xj=xk)")


def parse_system(text: str, n: int | None = None) -> EnSystem:
    """Parse ``"x1=1; x1+x1=x2"``; an optional item ``n=K`` fixes the variable count."""
    text = text.strip()
    if text.startswith("{"):
        return system_from_json(text)
    constraints = []
    declared = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for item in line.split(";"):
            if not item.strip():
                continue
            m = _DECL_RE.match(item)
            if m:
                declared = int(m.group(1))
                continue
            try:
                constraints.append(parse_constraint(item))
            except EnSystemError as exc:
                raise EnSystemError(f"line {lineno}: {exc}") from None
    for c in constraints:
        if min(c.args) < 1:
            raise EnSystemError(f"variable index 0 in {c}; variables start at x1")
    highest = max((a for c in constraints for a in c.args), default=0)
    size = n if n is not None else declared if declared is not None else highest
    if size < 1:
        raise EnSystemError("empty system needs an explicit variable count (n=K)")
    sys = EnSystem.of(size, constraints)
    check_valid(sys)
    return sys


def system_to_json(sys: EnSystem) -> dict:
    return {"n": sys.n, "constraints": [c.to_json() for c in sys.constraints]}


def system_from_json(data: str | dict) -> EnSystem:
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise EnSystemError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if "system" in data and "constraints" not in data:
        data = data["system"]
    try:
        n = int(data["n"])
        raw = data["constraints"]
    except (KeyError, TypeError, ValueError):
        raise EnSystemError("system JSON needs integer 'n' and list 'constraints'") from None
    constraints = []
    for entry in raw:
        if not isinstance(entry, list) or not entry or entry[0] not in _NAME_KINDS:
            raise EnSystemError(f"bad constraint entry {entry!r}")
        kind = _NAME_KINDS[entry[0]]
        args = entry[1:]
        if len(args) != (1 if kind is Kind.UNIT else 3) or not all(isinstance(a, int) for a in args):
            raise EnSystemError(f"bad constraint entry {entry!r}")
        if kind is Kind.UNIT:
            constraints.append(Constraint.unit(args[0]))
        elif kind is Kind.ADD:
            constraints.append(Constraint.add(*args))
        else:
            constraints.append(Constraint.mul(*args))
    sys = EnSystem.of(n, constraints)
    check_valid(sys)
    return sys


def serialize_system(sys: EnSystem, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(system_to_json(sys), separators=(", ", ": "))
    if fmt != "text":
        raise EnSystemError(f"unknown format {fmt!r}")
    items = [str(c) for c in sys.constraints]
    if max((a for c in sys.constraints for a in c.args), default=0) < sys.n:
        items.insert(0, f"n={sys.n}")
    return "; ".join(items)
