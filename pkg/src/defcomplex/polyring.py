"""Exact multivariate polynomial arithmetic over QQ and prime fields.

Coefficients are either `fractions.Fraction` (characteristic 0) or plain
ints in ``[0, p)`` (characteristic p).  A polynomial is a dict mapping
exponent tuples to nonzero coefficients; all arithmetic is exact and no
floating point appears anywhere.
"""

from __future__ import annotations

import re
from fractions import Fraction


# ---------------------------------------------------------------------------
# coefficient fields


class Rationals:
    """The field QQ, elements are Fraction."""

    characteristic = 0

    def zero(self):
        return Fraction(0)

    def one(self):
        return Fraction(1)

    def of_int(self, n):
        return Fraction(n)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of 0")
        return 1 / Fraction(a)

    def div(self, a, b):
        return Fraction(a) / Fraction(b)

    def coeff_str(self, a):
        return str(a)

    def __eq__(self, other):
        return isinstance(other, Rationals)

    def __hash__(self):
        return hash("QQ")

    def __repr__(self):
        return "QQ"


class PrimeField:
    """The field F_p for a prime p < 2**31, elements are ints in [0, p)."""

    def __init__(self, p: int):
        if p < 2 or p >= 2**31 or not _is_prime(p):
            raise ValueError(f"characteristic must be a prime < 2^31, got {p}")
        self.p = p
        self.characteristic = p

    def zero(self):
        return 0

    def one(self):
        return 1

    def of_int(self, n):
        return n % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError("inverse of 0")
        return pow(a, -1, self.p)

    def div(self, a, b):
        return (a * self.inv(b)) % self.p

    def coeff_str(self, a):
        return str(a)

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self):
        return hash(("Fp", self.p))

    def __repr__(self):
        return f"F{self.p}"


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


QQ = Rationals()


def field_of(kind: str, characteristic: int = 0):
    """Build a field from a tag: ('rationals', 0) or ('prime-field', p)."""
    if kind == "rationals":
        if characteristic != 0:
            raise ValueError("rationals have characteristic 0")
        return QQ
    if kind == "prime-field":
        return PrimeField(characteristic)
    raise ValueError(f"unknown field kind {kind!r}")


# ---------------------------------------------------------------------------
# monomial orders
#
# An order exposes key(exps) -> sortable such that sorting by the key
# ascending lists monomials from smallest to largest.  All orders here
# refine divisibility, so they are well-orders on monomials.


class Grevlex:
    name = "grevlex"

    def key(self, e):
        return (sum(e), tuple(-x for x in reversed(e)))

    def __eq__(self, other):
        return isinstance(other, Grevlex)

    def __hash__(self):
        return hash("grevlex")

    def __repr__(self):
        return "grevlex"


class Lex:
    name = "lex"

    def key(self, e):
        return tuple(e)

    def __eq__(self, other):
        return isinstance(other, Lex)

    def __hash__(self):
        return hash("lex")

    def __repr__(self):
        return "lex"


class BlockOrder:
    """Elimination order: the first `split` variables dominate the rest.

    Within each block the comparison is grevlex.  Any monomial involving a
    first-block variable is larger than any monomial in the remaining
    variables alone, so the first-block variables get eliminated.
    """

    def __init__(self, split: int):
        self.split = split
        self.name = f"block{split}"
        self._inner = Grevlex()

    def key(self, e):
        a, b = e[: self.split], e[self.split :]
        return (self._inner.key(a), self._inner.key(b))

    def __eq__(self, other):
        return isinstance(other, BlockOrder) and other.split == self.split

    def __hash__(self):
        return hash(("block", self.split))

    def __repr__(self):
        return self.name


def order_of(name: str):
    if name == "grevlex":
        return Grevlex()
    if name == "lex":
        return Lex()
    m = re.fullmatch(r"block(\d+)", name)
    if m:
        return BlockOrder(int(m.group(1)))
    raise ValueError(f"unknown monomial order {name!r}")


# ---------------------------------------------------------------------------
# exponent-vector helpers


def exp_mul(a, b):
    return tuple(x + y for x, y in zip(a, b))


def exp_divides(a, b):
    """Does x^a divide x^b?"""
    return all(x <= y for x, y in zip(a, b))


def exp_div(b, a):
    """Exponent of x^b / x^a, assuming divisibility."""
    return tuple(y - x for x, y in zip(a, b))


def exp_lcm(a, b):
    return tuple(max(x, y) for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# polynomial rings and polynomials


class PolyRing:
    """k[x_1..x_n] with a fixed monomial order.

    Immutable; two rings compare equal when field, variable names and order
    agree, so polynomials of independently built rings interoperate.
    """

    def __init__(self, field, names, order=None):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        for nm in names:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", nm):
                raise ValueError(f"bad variable name {nm!r}")
        self.field = field
        self.names = names
        self.nvars = len(names)
        self.order = order if order is not None else Grevlex()
        self._zero_exp = (0,) * self.nvars

    def __eq__(self, other):
        return (
            isinstance(other, PolyRing)
            and other.field == self.field
            and other.names == self.names
            and other.order == self.order
        )

    def __hash__(self):
        return hash((self.field, self.names, self.order))

    def __repr__(self):
        return f"{self.field!r}[{','.join(self.names)}]<{self.order!r}>"

    # constructors

    def zero(self) -> "Poly":
        return Poly(self, {})

    def one(self) -> "Poly":
        return Poly(self, {self._zero_exp: self.field.one()})

    def const(self, c) -> "Poly":
        if isinstance(c, int):
            c = self.field.of_int(c)
        if c == self.field.zero():
            return self.zero()
        return Poly(self, {self._zero_exp: c})

    def var(self, i: int) -> "Poly":
        e = [0] * self.nvars
        e[i] = 1
        return Poly(self, {tuple(e): self.field.one()})

    def gens(self):
        return [self.var(i) for i in range(self.nvars)]

    def monomial(self, exps, coeff=None) -> "Poly":
        coeff = self.field.one() if coeff is None else coeff
        if coeff == self.field.zero():
            return self.zero()
        return Poly(self, {tuple(exps): coeff})

    def from_terms(self, terms: dict) -> "Poly":
        zero = self.field.zero()
        return Poly(self, {e: c for e, c in terms.items() if c != zero})

    def with_order(self, order) -> "PolyRing":
        return PolyRing(self.field, self.names, order)

    def parse(self, text: str) -> "Poly":
        return parse_poly(self, text)


class Poly:
    """Element of a PolyRing; immutable by convention."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: PolyRing, terms: dict):
        self.ring = ring
        self.terms = terms

    # predicates

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and self.ring._zero_exp in self.terms)

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ring.const(other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def __hash__(self):
        return hash((self.ring, frozenset(self.terms.items())))

    # arithmetic

    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.ring != self.ring:
                raise ValueError("polynomials from different rings")
            return other
        if isinstance(other, (int, Fraction)):
            return self.ring.const(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        f = self.ring.field
        zero = f.zero()
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = f.add(out.get(e, zero), c)
            if s == zero:
                out.pop(e, None)
            else:
                out[e] = s
        return Poly(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        f = self.ring.field
        return Poly(self.ring, {e: f.neg(c) for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        f = self.ring.field
        zero = f.zero()
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = exp_mul(e1, e2)
                s = f.add(out.get(e, zero), f.mul(c1, c2))
                if s == zero:
                    out.pop(e, None)
                else:
                    out[e] = s
        return Poly(self.ring, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        result = self.ring.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c) -> "Poly":
        """Multiply by a raw field element."""
        f = self.ring.field
        if c == f.zero():
            return self.ring.zero()
        return Poly(self.ring, {e: f.mul(c, v) for e, v in self.terms.items()})

    def mul_term(self, exps, coeff) -> "Poly":
        f = self.ring.field
        if coeff == f.zero():
            return self.ring.zero()
        return Poly(
            self.ring,
            {exp_mul(e, exps): f.mul(coeff, v) for e, v in self.terms.items()},
        )

    # structure

    def lead(self):
        """(exponent, coefficient) of the leading term for the ring order."""
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        key = self.ring.order.key
        e = max(self.terms, key=key)
        return e, self.terms[e]

    def lead_exp(self):
        return self.lead()[0]

    def monic(self) -> "Poly":
        if not self.terms:
            return self
        _, c = self.lead()
        return self.scale(self.ring.field.inv(c))

    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def constant_coeff(self):
        return self.terms.get(self.ring._zero_exp, self.ring.field.zero())

    def sorted_terms(self):
        """Terms sorted descending in the ring order (canonical)."""
        key = self.ring.order.key
        return sorted(self.terms.items(), key=lambda t: key(t[0]), reverse=True)

    # calculus and substitution

    def derivative(self, i: int) -> "Poly":
        f = self.ring.field
        zero = f.zero()
        out = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            c2 = f.mul(c, f.of_int(e[i]))
            if c2 == zero:
                continue
            e2 = list(e)
            e2[i] -= 1
            out[tuple(e2)] = c2
        return Poly(self.ring, out)

    def substitute(self, target_ring: PolyRing, images) -> "Poly":
        """Apply the ring map sending variable i to images[i] (Poly over target).

        The coefficient fields must agree.
        """
        if target_ring.field != self.ring.field:
            raise ValueError("substitution requires the same coefficient field")
        result = target_ring.zero()
        for e, c in self.terms.items():
            term = target_ring.const(c)
            for i, a in enumerate(e):
                if a:
                    term = term * (images[i] ** a)
            result = result + term
        return result

    def rename(self, target_ring: PolyRing, var_map=None) -> "Poly":
        """Reindex variables into target_ring.

        var_map[i] is the target index of source variable i; by default
        variables are matched by name.
        """
        if var_map is None:
            var_map = [target_ring.names.index(nm) for nm in self.ring.names]
        out = {}
        for e, c in self.terms.items():
            e2 = [0] * target_ring.nvars
            for i, a in enumerate(e):
                if a:
                    e2[var_map[i]] += a
            out[tuple(e2)] = c
        return Poly(target_ring, out)

    # rendering

    def __repr__(self):
        return self.__str__()

    def __str__(self):
        if not self.terms:
            return "0"
        field = self.ring.field
        one = field.one()
        minus_one = field.neg(one)
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                f"{self.ring.names[i]}^{a}" if a > 1 else self.ring.names[i]
                for i, a in enumerate(e)
                if a
            )
            if not mono:
                body = field.coeff_str(c)
                sign = "-" if body.startswith("-") else "+"
                parts.append((sign, body.lstrip("-")))
                continue
            if c == one:
                body = mono
                sign = "+"
            elif c == minus_one and field.characteristic == 0:
                body = mono
                sign = "-"
            else:
                cs = field.coeff_str(c)
                sign = "-" if cs.startswith("-") else "+"
                body = f"{cs.lstrip('-')}*{mono}"
            parts.append((sign, body))
        first_sign, first_body = parts[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text


# ---------------------------------------------------------------------------
# polynomial parsing
#
# Grammar: integer or a/b coefficients, ^ for powers, * optional (adjacency
# multiplies), parentheses and unary minus allowed.


class PolyParseError(ValueError):
    def __init__(self, message, pos=None):
        super().__init__(message)
        self.pos = pos


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*^()/]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise PolyParseError(f"bad character {text[pos]!r} in polynomial", pos)
        if m.group("num"):
            tokens.append(("num", int(m.group("num")), m.start()))
        elif m.group("name"):
            tokens.append(("name", m.group("name"), m.start()))
        else:
            tokens.append(("op", m.group("op"), m.start()))
        pos = m.end()
    return tokens


class _PolyParser:
    def __init__(self, ring, tokens):
        self.ring = ring
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("end", None, -1)

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self):
        p = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise PolyParseError(f"unexpected {val!r} in polynomial", pos)
        return p

    def expr(self):
        sign = 1
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.next()
            sign = -1 if val == "-" else 1
        p = self.term()
        if sign < 0:
            p = -p
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                q = self.term()
                p = p - q if val == "-" else p + q
            else:
                return p

    def term(self):
        # factors separated by explicit '*', '/', or by adjacency
        p = self.factor()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val == "*":
                self.next()
                p = p * self.factor()
            elif kind == "op" and val == "/":
                self.next()
                kind2, val2, pos2 = self.next()
                if kind2 != "num":
                    raise PolyParseError("denominator must be an integer", pos2)
                exp = 1
                k3, v3, _ = self.peek()
                if k3 == "op" and v3 == "^":
                    self.next()
                    k4, v4, pos4 = self.next()
                    if k4 != "num":
                        raise PolyParseError("exponent must be an integer", pos4)
                    exp = v4
                field = self.ring.field
                denom = field.of_int(val2**exp)
                if denom == field.zero():
                    raise PolyParseError("division by zero in coefficient", pos2)
                p = p.scale(field.inv(denom))
            elif kind in ("num", "name") or (kind == "op" and val == "("):
                p = p * self.factor()
            else:
                return p

    def factor(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.next()
            k, v, pos = self.next()
            if k != "num":
                raise PolyParseError("exponent must be an integer", pos)
            return base**v
        return base

    def atom(self):
        kind, val, pos = self.next()
        if kind == "num":
            return self.ring.const(val)
        if kind == "name":
            if val not in self.ring.names:
                raise PolyParseError(f"unknown variable {val!r}", pos)
            return self.ring.var(self.ring.names.index(val))
        if kind == "op" and val == "(":
            p = self.expr()
            k, v, pos2 = self.next()
            if not (k == "op" and v == ")"):
                raise PolyParseError("missing ')'", pos2)
            return p
        if kind == "op" and val == "-":
            return -self.atom()
        raise PolyParseError(f"unexpected {val!r} in polynomial", pos)


def parse_poly(ring: PolyRing, text: str) -> Poly:
    """Parse `text` into a polynomial of `ring`.

    Accepts integer and a/b coefficients, ^ powers, optional * and
    parentheses, e.g. ``x^2*y - 3`` or ``1/2 x y^3 + (x - y)^2``.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise PolyParseError("empty polynomial")
    return _PolyParser(ring, tokens).parse()
