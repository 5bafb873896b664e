"""Exact scalar arithmetic over Gaussian-rational function fields.

The coefficient domain everywhere in the engine is K = Q(i)(p_1, ..., p_m):
rational functions in finitely many declared real parameters, with
Gaussian-rational coefficients.  Arithmetic is exact, equality and the zero
test are decidable, and conjugation negates the imaginary unit while fixing
every parameter.

Elements are kept in a canonical reduced form (gcd-cancelled fraction with a
normalized leading coefficient), so structural equality is semantic equality.
The string grammar accepted by :meth:`ScalarField.parse` and emitted by
:meth:`ScalarField.to_string`:

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' integer)?
    atom   := NUMBER | IDENT | '(' expr ')'
    NUMBER := digits ('/' digits)? 'i'?    (e.g. 3, 5/2, 2i, 3/4i, i)

`i` is the imaginary unit and is reserved; identifiers must be declared
parameters.  Exponents are (possibly negative) integers.
"""

from __future__ import annotations

import random
import re
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from sympy.polys.domains import QQ_I
from sympy.polys.fields import field as _make_frac_field


class FieldError(Exception):
    """Base class for scalar-field errors."""


class DivisionByZero(FieldError):
    """Exact division by the zero element."""


class PoleAtAssignment(FieldError):
    """A denominator vanishes at the requested parameter assignment."""


class ParseError(FieldError):
    """Malformed input to the expression parser."""


class UnknownParameter(FieldError):
    """Reference to a parameter the field does not declare."""


_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:/\d+)?i?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)

Rationalish = Union[int, Fraction]


def _mpq_to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


class Elem:
    """One element of a :class:`ScalarField`.

    Thin wrapper around a canonical sympy fraction; supports field arithmetic
    with automatic coercion of ints and :class:`fractions.Fraction`.
    """

    __slots__ = ("field", "raw")

    def __init__(self, field: "ScalarField", raw):
        self.field = field
        self.raw = raw

    # -- coercion -----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Elem):
            if other.field is not self.field:
                raise TypeError("elements belong to different scalar fields")
            return other.raw
        if isinstance(other, int):
            return self.field._raw_field(other)
        if isinstance(other, Fraction):
            return self.field._raw_rational(other)
        return None

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        r = self._coerce(other)
        if r is None:
            return NotImplemented
        return Elem(self.field, self.raw + r)

    __radd__ = __add__

    def __sub__(self, other):
        r = self._coerce(other)
        if r is None:
            return NotImplemented
        return Elem(self.field, self.raw - r)

    def __rsub__(self, other):
        r = self._coerce(other)
        if r is None:
            return NotImplemented
        return Elem(self.field, r - self.raw)

    def __mul__(self, other):
        r = self._coerce(other)
        if r is None:
            return NotImplemented
        return Elem(self.field, self.raw * r)

    __rmul__ = __mul__

    def __truediv__(self, other):
        r = self._coerce(other)
        if r is None:
            return NotImplemented
        if not r:
            raise DivisionByZero("division by zero element")
        return Elem(self.field, self.raw / r)

    def __rtruediv__(self, other):
        r = self._coerce(other)
        if r is None:
            return NotImplemented
        if not self.raw:
            raise DivisionByZero("division by zero element")
        return Elem(self.field, r / self.raw)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0 and not self.raw:
            raise DivisionByZero("negative power of zero")
        return Elem(self.field, self.raw ** n)

    def __neg__(self):
        return Elem(self.field, -self.raw)

    def __pos__(self):
        return self

    # -- predicates ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.raw

    @property
    def is_one(self) -> bool:
        return self.raw == self.field._raw_field.one

    def __bool__(self) -> bool:
        return bool(self.raw)

    def __eq__(self, other) -> bool:
        r = self._coerce(other) if not isinstance(other, Elem) else (
            other.raw if other.field is self.field else None)
        if r is None:
            return NotImplemented
        return self.raw == r

    def __hash__(self):
        return hash(self.raw)

    def conj(self) -> "Elem":
        return self.field.conj(self)

    @property
    def is_real(self) -> bool:
        return self.raw == self.field.conj(self).raw

    def real_part(self) -> "Elem":
        h = self.field.from_rational(Fraction(1, 2))
        return (self + self.conj()) * h

    def imag_part(self) -> "Elem":
        # (x - conj x) / (2i)
        tw = self.field.i * 2
        return (self - self.conj()) / tw

    def constant_value(self) -> tuple[Fraction, Fraction]:
        """Return (re, im) when the element is a Gaussian-rational constant."""
        num, den = self.raw.numer, self.raw.denom
        if num.is_ground is False or den.is_ground is False:
            raise FieldError("element is not constant")
        cn = num.coeff(1) if num else QQ_I.zero
        cd = den.coeff(1)
        re_n, im_n = _mpq_to_fraction(cn.x), _mpq_to_fraction(cn.y)
        re_d, im_d = _mpq_to_fraction(cd.x), _mpq_to_fraction(cd.y)
        mag = re_d * re_d + im_d * im_d
        return ((re_n * re_d + im_n * im_d) / mag,
                (im_n * re_d - re_n * im_d) / mag)

    def __str__(self) -> str:
        return self.field.to_string(self)

    def __repr__(self) -> str:
        return self.field.to_string(self)


class ScalarField:
    """The exact field K = Q(i)(params) with declared real parameters."""

    def __init__(self, params: Sequence[str] = ()):
        params = tuple(params)
        seen = set()
        for name in params:
            if not _NAME_RE.match(name):
                raise FieldError(f"bad parameter name {name!r}")
            if name == "i":
                raise FieldError("'i' is reserved for the imaginary unit")
            if name in seen:
                raise FieldError(f"duplicate parameter {name!r}")
            seen.add(name)
        self.params = params
        made = _make_frac_field(list(params), QQ_I)
        self._raw_field = made[0]
        self._gens = tuple(made[1:])
        self._ring = self._raw_field.ring
        self.zero = Elem(self, self._raw_field.zero)
        self.one = Elem(self, self._raw_field.one)
        self.i = Elem(self, self._raw_field(QQ_I(0, 1)))
        self._by_name = {n: Elem(self, g) for n, g in zip(params, self._gens)}

    # -- constructors -------------------------------------------------------

    def param(self, name: str) -> Elem:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownParameter(f"unknown parameter {name!r}") from None

    def _raw_rational(self, q: Fraction):
        return self._raw_field(q.numerator) / self._raw_field(q.denominator)

    def from_rational(self, q: Rationalish) -> Elem:
        if isinstance(q, int):
            return Elem(self, self._raw_field(q))
        return Elem(self, self._raw_rational(q))

    def gaussian(self, re: Rationalish, im: Rationalish = 0) -> Elem:
        return self.from_rational(Fraction(re)) + self.i * self.from_rational(
            Fraction(im))

    def coerce(self, x) -> Elem:
        if isinstance(x, Elem):
            if x.field is not self:
                raise TypeError("element belongs to a different scalar field")
            return x
        if isinstance(x, (int, Fraction)):
            return self.from_rational(x)
        if isinstance(x, str):
            return self.parse(x)
        raise TypeError(f"cannot coerce {type(x).__name__} into scalar field")

    # -- conjugation --------------------------------------------------------

    def _conj_poly(self, p):
        return self._ring.from_dict(
            {m: QQ_I(c.x, -c.y) for m, c in p.items()})

    def conj(self, e: Elem) -> Elem:
        num = self._raw_field(self._conj_poly(e.raw.numer))
        den = self._raw_field(self._conj_poly(e.raw.denom))
        return Elem(self, num / den)

    # -- evaluation ---------------------------------------------------------

    def _check_assign_keys(self, assign: Mapping[str, object],
                           need_all: bool) -> None:
        for k in assign:
            if k not in self._by_name:
                raise UnknownParameter(f"unknown parameter {k!r}")
        if need_all:
            missing = [p for p in self.params if p not in assign]
            if missing:
                raise UnknownParameter(f"missing parameters {missing}")

    def _eval_poly_complex(self, p, vals: Sequence[complex]) -> complex:
        total = 0j
        for monom, c in p.items():
            term = complex(float(c.x), float(c.y))
            for g, e in zip(vals, monom):
                if e:
                    term *= g ** e
            total += term
        return total

    def eval_numeric(self, e: Elem, assign: Mapping[str, object]) -> complex:
        """Evaluate at a full parameter assignment; raises at a pole."""
        self._check_assign_keys(assign, need_all=True)
        vals = [complex(assign[p]) for p in self.params]
        den = self._eval_poly_complex(e.raw.denom, vals)
        if den == 0:
            raise PoleAtAssignment("denominator vanishes at assignment")
        return self._eval_poly_complex(e.raw.numer, vals) / den

    def substitute(self, e: Elem, assign: Mapping[str, object]) -> Elem:
        """Exact substitution of field elements/rationals for parameters.

        Unassigned parameters stay symbolic; the result lives in this field.
        """
        self._check_assign_keys(assign, need_all=False)
        vals = []
        for p in self.params:
            if p in assign:
                vals.append(self.coerce(assign[p]))
            else:
                vals.append(self._by_name[p])

        def eval_poly(poly) -> Elem:
            total = self.zero
            for monom, c in poly.items():
                term = Elem(self, self._raw_field(c))
                for g, k in zip(vals, monom):
                    if k:
                        term = term * g ** k
                total = total + term
            return total

        den = eval_poly(e.raw.denom)
        if den.is_zero:
            raise PoleAtAssignment("denominator vanishes at assignment")
        return eval_poly(e.raw.numer) / den

    # -- parsing ------------------------------------------------------------

    def parse(self, text: str) -> Elem:
        tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                if text[pos:].strip() == "":
                    break
                raise ParseError(f"bad character at position {pos}: "
                                 f"{text[pos:pos + 8]!r}")
            pos = m.end()
            if m.lastgroup == "number":
                tokens.append(("num", m.group("number")))
            elif m.lastgroup == "name":
                tokens.append(("name", m.group("name")))
            else:
                tokens.append(("op", m.group("op")))
        tokens.append(("end", ""))
        state = {"k": 0}

        def peek():
            return tokens[state["k"]]

        def advance():
            tok = tokens[state["k"]]
            state["k"] += 1
            return tok

        def expect_op(ch):
            kind, val = advance()
            if kind != "op" or val != ch:
                raise ParseError(f"expected {ch!r}, got {val!r}")

        def parse_number(text_num: str) -> Elem:
            imag = text_num.endswith("i")
            if imag:
                text_num = text_num[:-1]
            q = Fraction(text_num) if text_num else Fraction(1)
            e = self.from_rational(q)
            return e * self.i if imag else e

        def atom() -> Elem:
            kind, val = advance()
            if kind == "num":
                return parse_number(val)
            if kind == "name":
                if val == "i":
                    return self.i
                if val not in self._by_name:
                    raise UnknownParameter(f"unknown parameter {val!r}")
                return self._by_name[val]
            if kind == "op" and val == "(":
                e = expr()
                expect_op(")")
                return e
            raise ParseError(f"unexpected token {val!r}")

        def power() -> Elem:
            base = atom()
            kind, val = peek()
            if kind == "op" and val == "^":
                advance()
                sign = 1
                kind, val = peek()
                if kind == "op" and val in "+-":
                    advance()
                    sign = -1 if val == "-" else 1
                kind, val = advance()
                if kind != "num" or val.endswith("i"):
                    raise ParseError("exponent must be an integer")
                if "/" in val:
                    # "t^2/4" reads as (t^2)/4: the slash binds to the
                    # result, not the exponent
                    num, den = val.split("/")
                    return base ** (sign * int(num)) / int(den)
                return base ** (sign * int(val))
            return base

        def unary() -> Elem:
            kind, val = peek()
            if kind == "op" and val in "+-":
                advance()
                e = unary()
                return -e if val == "-" else e
            return power()

        def term() -> Elem:
            e = unary()
            while True:
                kind, val = peek()
                if kind == "op" and val in "*/":
                    advance()
                    rhs = unary()
                    e = e * rhs if val == "*" else e / rhs
                else:
                    return e

        def expr() -> Elem:
            e = term()
            while True:
                kind, val = peek()
                if kind == "op" and val in "+-":
                    advance()
                    rhs = term()
                    e = e + rhs if val == "+" else e - rhs
                else:
                    return e

        result = expr()
        if peek()[0] != "end":
            raise ParseError(f"trailing input {peek()[1]!r}")
        return result

    # -- printing -----------------------------------------------------------

    def _coeff_str(self, c) -> tuple[str, bool]:
        """Render a Gaussian rational; second item: needs '*' when prefixing."""
        re_p = _mpq_to_fraction(c.x)
        im_p = _mpq_to_fraction(c.y)
        if im_p == 0:
            return str(re_p), True
        if re_p == 0:
            if im_p == 1:
                return "i", True
            if im_p == -1:
                return "-i", True
            return f"{im_p}i", True
        im_abs = -im_p if im_p < 0 else im_p
        im_s = "i" if im_abs == 1 else f"{im_abs}i"
        sign = "-" if im_p < 0 else "+"
        return f"({re_p}{sign}{im_s})", True

    def _monom_str(self, monom) -> str:
        parts = []
        for name, e in zip(self.params, monom):
            if e == 1:
                parts.append(name)
            elif e:
                parts.append(f"{name}^{e}")
        return "*".join(parts)

    def _poly_str(self, p) -> str:
        if not p:
            return "0"
        items = sorted(p.items(), reverse=True)
        parts = []
        for monom, c in items:
            mstr = self._monom_str(monom)
            cstr, _ = self._coeff_str(c)
            if not mstr:
                parts.append(cstr)
            elif cstr == "1":
                parts.append(mstr)
            elif cstr == "-1":
                parts.append(f"-{mstr}")
            else:
                parts.append(f"{cstr}*{mstr}")
        out = parts[0]
        for piece in parts[1:]:
            if piece.startswith("-") and not piece.startswith("(-"):
                out += " - " + piece[1:]
            else:
                out += " + " + piece
        return out

    def to_string(self, e: Elem) -> str:
        num, den = e.raw.numer, e.raw.denom
        if den == self._ring.one:
            return self._poly_str(num)
        return f"({self._poly_str(num)})/({self._poly_str(den)})"

    # -- random sampling ----------------------------------------------------

    def random_element(self, rng: random.Random, degree: int = 2,
                       terms: int = 3, denominator: bool = True) -> Elem:
        """Reproducible random element for property testing."""

        def rand_coeff() -> Elem:
            re_p = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
            im_p = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
            return self.gaussian(re_p, im_p)

        def rand_poly(nterms: int) -> Elem:
            total = self.zero
            for _ in range(nterms):
                term = rand_coeff()
                for g in self._by_name.values():
                    term = term * g ** rng.randint(0, degree)
                total = total + term
            return total

        num = rand_poly(terms)
        if not denominator:
            return num
        den = self.zero
        while den.is_zero:
            den = rand_poly(max(1, terms - 1))
        return num / den


def as_fraction(x: Union[int, float, str, Fraction]) -> Fraction:
    """Exact Fraction from user input; decimal strings convert exactly."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)
