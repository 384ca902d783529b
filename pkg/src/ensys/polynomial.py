"""Sparse multivariate polynomials with integer coefficients.

A polynomial over variables x1..xp is stored as a mapping from exponent
tuples (length p) to nonzero Python ints, so arithmetic never overflows.
Terms are kept in descending graded-lexicographic order; two equal
polynomials therefore print identically.

    x1^2 - x2   ->   {(2, 0): 1, (0, 1): -1}
"""

from __future__ import annotations

import re
from typing import Iterable, Mapping, Sequence

Exponent = tuple[int, ...]


class PolynomialError(ValueError):
    """Raised for malformed expressions and invalid polynomial operations."""


def _order_key(exp: Exponent) -> tuple:
    # descending grlex: higher total degree first, then lexicographically larger
    return (-sum(exp), tuple(-e for e in exp))


class Polynomial:
    """Immutable sparse polynomial in ``var_count`` variables."""

    __slots__ = ("var_count", "terms", "_hash", "_vars")

    def __init__(self, var_count: int, terms: Mapping[Exponent, int] | None = None):
        if var_count < 0:
            raise PolynomialError("var_count must be non-negative")
        clean: dict[Exponent, int] = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(exp)
            if len(exp) != var_count:
                raise PolynomialError(f"exponent {exp} has length {len(exp)}, expected {var_count}")
            if any(e < 0 for e in exp):
                raise PolynomialError(f"negative exponent in {exp}")
            if coeff:
                clean[exp] = clean.get(exp, 0) + int(coeff)
        ordered = sorted((e for e in clean if clean[e]), key=_order_key)
        object.__setattr__(self, "var_count", var_count)
        object.__setattr__(self, "terms", {e: clean[e] for e in ordered})
        object.__setattr__(self, "_hash", None)
        object.__setattr__(self, "_vars", None)

    def __reduce__(self):
        return (Polynomial, (self.var_count, self.terms))

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, var_count: int, value: int) -> Polynomial:
        return cls(var_count, {(0,) * var_count: value})

    @classmethod
    def variable(cls, var_count: int, index: int) -> Polynomial:
        """The polynomial ``x_index`` (1-based)."""
        if not 1 <= index <= var_count:
            raise PolynomialError(f"variable index {index} out of range 1..{var_count}")
        exp = [0] * var_count
        exp[index - 1] = 1
        return cls(var_count, {tuple(exp): 1})

    @classmethod
    def from_coefficients(cls, coeffs: Sequence[int]) -> Polynomial:
        """Univariate polynomial sum(coeffs[k] * x1^k)."""
        return cls(1, {(k,): c for k, c in enumerate(coeffs)})

    # -- basic queries ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> int:
        return self.terms.get((0,) * self.var_count, 0)

    def variables(self) -> frozenset[int]:
        """1-based indices of variables that occur with positive exponent."""
        if self._vars is None:
            found = set()
            for exp in self.terms:
                for i, e in enumerate(exp):
                    if e:
                        found.add(i + 1)
            object.__setattr__(self, "_vars", frozenset(found))
        return self._vars

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def coefficients(self) -> list[int]:
        """Dense coefficient list of a univariate polynomial, lowest degree first."""
        if self.var_count != 1:
            raise PolynomialError("coefficients() needs a univariate polynomial")
        if not self.terms:
            return []
        out = [0] * (self.total_degree() + 1)
        for (e,), c in self.terms.items():
            out[e] = c
        return out

    def with_var_count(self, var_count: int) -> Polynomial:
        """Re-embed in ``var_count`` variables (padding or dropping unused trailing ones)."""
        if var_count >= self.var_count:
            pad = (0,) * (var_count - self.var_count)
            return Polynomial(var_count, {e + pad: c for e, c in self.terms.items()})
        if any(any(e[var_count:]) for e in self.terms):
            raise PolynomialError("cannot drop a variable that occurs")
        return Polynomial(var_count, {e[:var_count]: c for e, c in self.terms.items()})

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other.var_count != self.var_count:
                n = max(self.var_count, other.var_count)
                return other.with_var_count(n)
            return other
        if isinstance(other, int):
            return Polynomial.constant(self.var_count, other)
        return NotImplemented

    def _lift(self, other: Polynomial) -> Polynomial:
        return self.with_var_count(other.var_count) if other.var_count > self.var_count else self

    def __add__(self, other) -> Polynomial:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        me = self._lift(other)
        out = dict(me.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return Polynomial(me.var_count, out)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial(self.var_count, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> Polynomial:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> Polynomial:
        return (-self) + other

    def __mul__(self, other) -> Polynomial:
        if isinstance(other, int):
            return Polynomial(self.var_count, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        me = self._lift(other)
        out: dict[Exponent, int] = {}
        for ea, ca in me.terms.items():
            for eb, cb in other.terms.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = out.get(e, 0) + ca * cb
        return Polynomial(me.var_count, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Polynomial:
        if k < 0:
            raise PolynomialError("negative exponent")
        result = Polynomial.constant(self.var_count, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = Polynomial.constant(self.var_count, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.var_count == other.var_count and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            object.__setattr__(self, "_hash", hash((self.var_count, tuple(self.terms.items()))))
        return self._hash

    # -- substitution -------------------------------------------------------

    def substitute(self, values: Mapping[int, "int | Polynomial"]) -> Polynomial:
        """Replace x_i by ``values[i]`` (an int or a polynomial in the same variables).

        The variable count is unchanged; substituted variables simply vanish.
        """
        if not values:
            return self
        n = self.var_count
        out = Polynomial(n)
        int_only = all(isinstance(v, int) for v in values.values())
        if int_only:
            acc: dict[Exponent, int] = {}
            for exp, coeff in self.terms.items():
                c = coeff
                new = list(exp)
                for i, v in values.items():
                    e = exp[i - 1]
                    if e:
                        c *= v ** e
                        new[i - 1] = 0
                        if not c:
                            break
                if c:
                    key = tuple(new)
                    acc[key] = acc.get(key, 0) + c
            return Polynomial(n, acc)
        for exp, coeff in self.terms.items():
            rest = list(exp)
            term: Polynomial | int = coeff
            for i, v in values.items():
                e = exp[i - 1]
                if e:
                    rest[i - 1] = 0
                    term = term * (v ** e if isinstance(v, Polynomial) else v ** e)
            mono = Polynomial(n, {tuple(rest): 1})
            out = out + mono * term
        return out

    def compose(self, images: Sequence["int | Polynomial"]) -> "int | Polynomial":
        """Evaluate with every variable replaced by an int or a polynomial."""
        if len(images) != self.var_count:
            raise PolynomialError(f"expected {self.var_count} images, got {len(images)}")
        total: int | Polynomial = 0
        for exp, coeff in self.terms.items():
            term: int | Polynomial = coeff
            for v, e in zip(images, exp):
                if e:
                    term = term * v ** e
            total = total + term
        return total

    def collect(self, index: int) -> dict[int, Polynomial]:
        """View as a polynomial in x_index: power -> coefficient polynomial."""
        out: dict[int, dict[Exponent, int]] = {}
        for exp, c in self.terms.items():
            k = exp[index - 1]
            rest = exp[: index - 1] + (0,) + exp[index:]
            out.setdefault(k, {})[rest] = c
        return {k: Polynomial(self.var_count, t) for k, t in out.items()}

    def __str__(self) -> str:
        return serialize_polynomial(self)

    def __repr__(self) -> str:
        return f"Polynomial({self.var_count}, {serialize_polynomial(self)!r})"


def evaluate(p: Polynomial, point: Sequence[int]) -> int:
    """Exact value of ``p`` at an integer point."""
    if len(point) != p.var_count:
        raise PolynomialError(f"arity mismatch: polynomial has {p.var_count} variables, got {len(point)} values")
    total = 0
    for exp, coeff in p.terms.items():
        term = coeff
        for v, e in zip(point, exp):
            if e:
                term *= v ** e
        total += term
    return total


def degree_in(p: Polynomial, i: int) -> int:
    if not 1 <= i <= p.var_count:
        raise PolynomialError(f"variable index {i} out of range 1..{p.var_count}")
    return max((exp[i - 1] for exp in p.terms), default=0)


# -- text format ----------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|x(?P<var>\d+)|(?P<op>[-+*^()]))")


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    tokens = []
    pos = 0
    stripped = text.rstrip()
    while pos < len(stripped):
        m = _TOKEN.match(stripped, pos)
        if not m:
            col = pos + len(stripped[pos:]) - len(stripped[pos:].lstrip())
            raise PolynomialError(f"syntax error at position {col}: unexpected {stripped[col]!r}")
        start = m.start(m.lastgroup)
        if m.group("int") is not None:
            tokens.append(("int", int(m.group("int")), start))
        elif m.group("var") is not None:
            idx = int(m.group("var"))
            if idx == 0:
                raise PolynomialError(f"variable index 0 at position {start}; variables start at x1")
            tokens.append(("var", idx, start))
        else:
            tokens.append(("op", m.group("op"), start))
        pos = m.end()
    tokens.append(("end", None, len(stripped)))
    return tokens


class _Parser:
    # expr := term (('+'|'-') term)* ; term := unary ('*' unary)*
    # unary := ('+'|'-') unary | power ; power := atom ('^' int)?
    # atom := int | var | '(' expr ')'

    def __init__(self, text: str, var_count: int):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.n = var_count

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, msg: str):
        kind, val, at = self.peek()
        shown = "end of input" if kind == "end" else repr(val)
        raise PolynomialError(f"syntax error at position {at}: {msg}, found {shown}")

    def parse(self) -> Polynomial:
        p = self.expr()
        if self.peek()[0] != "end":
            self.fail("expected operator")
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Polynomial:
        p = self.unary()
        while self.peek()[:2] == ("op", "*"):
            self.take()
            p = p * self.unary()
        return p

    def unary(self) -> Polynomial:
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            q = self.unary()
            return -q if val == "-" else q
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, val, at = self.peek()
            if kind == "op" and val == "-":
                raise PolynomialError(f"exponent negative at position {at}")
            if kind != "int":
                self.fail("expected non-negative integer exponent")
            self.take()
            return base ** val
        return base

    def atom(self) -> Polynomial:
        kind, val, _ = self.peek()
        if kind == "int":
            self.take()
            return Polynomial.constant(self.n, val)
        if kind == "var":
            self.take()
            return Polynomial.variable(self.n, val)
        if (kind, val) == ("op", "("):
            self.take()
            p = self.expr()
            if self.peek()[:2] != ("op", ")"):
                self.fail("expected ')'")
            self.take()
            return p
        self.fail("expected number, variable or '('")


def parse_polynomial(text: str, var_count: int | None = None) -> Polynomial:
    """Parse and expand an expression such as ``"(x1 - 2)^2 + 3*x2"``.

    ``var_count`` defaults to the highest variable index mentioned; an
    expression mentioning no variable at all needs it explicitly.
    """
    tokens = _tokenize(text)
    highest = max((v for k, v, _ in tokens if k == "var"), default=0)
    if var_count is None:
        if highest == 0:
            raise PolynomialError("expression mentions no variable; var_count cannot be inferred")
        var_count = highest
    elif var_count < highest:
        raise PolynomialError(f"expression mentions x{highest} but var_count is {var_count}")
    return _Parser(text, var_count).parse()


def _monomial_text(exp: Exponent) -> str:
    parts = []
    for i, e in enumerate(exp, start=1):
        if e == 1:
            parts.append(f"x{i}")
        elif e > 1:
            parts.append(f"x{i}^{e}")
    return "*".join(parts)


def serialize_polynomial(p: Polynomial) -> str:
    """Canonical text; ``parse_polynomial`` inverts it exactly (var_count included)."""
    chunks: list[str] = []
    for exp, coeff in p.terms.items():
        mono = _monomial_text(exp)
        mag = abs(coeff)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        if not chunks:
            chunks.append(body if coeff > 0 else f"-{body}")
        else:
            chunks.append(("+ " if coeff > 0 else "- ") + body)
    mentioned = max(p.variables(), default=0)
    if mentioned < p.var_count:
        chunks.append(f"0*x{p.var_count}" if not chunks else f"+ 0*x{p.var_count}")
    if not chunks:
        return "0"
    return " ".join(chunks)


# -- the sum-of-eight-squares gadget -------------------------------------------

def squared_norm(var_count: int, indices: Iterable[int]) -> Polynomial:
    total = Polynomial(var_count)
    for i in indices:
        x = Polynomial.variable(var_count, i)
        total = total + x * x
    return total


def lemma1_gadget(d: Polynomial) -> Polynomial:
    """Return D^2 + (x1^2+..+xp^2 - s1^2-..-s4^2 - t1^2-..-t4^2)^2.

    The eight new variables s1..s4, t1..t4 sit at indices p+1..p+8.  Each
    integer zero x of D contributes exactly r8(|x|^2) zeros of the result,
    so a finite non-empty zero set of D yields strictly more zeros than
    its largest height.
    """
    if d.is_zero():
        raise PolynomialError("the gadget needs a nonzero polynomial")
    p = d.var_count
    n = p + 8
    big_d = d.with_var_count(n)
    split = squared_norm(n, range(1, p + 1)) - squared_norm(n, range(p + 1, n + 1))
    return big_d * big_d + split * split
