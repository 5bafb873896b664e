"""Invariant exterior calculus on a (1,0)-coframe with formal scalar jets.

A :class:`CoframeAlgebra` is determined by a complex dimension n, a scalar
field of parameters, and a differential table giving d of each holomorphic
coframe 1-form phi^1..phi^n as a combination of wedge products of coframe
letters and their conjugates.  Integrability (no (0,2) component in any
d(phi^k)) and d∘d = 0 are validated at construction.

Letters are integers 0..2n-1: letter k < n is phi^{k+1}, letter n+k is its
conjugate.  Invariant forms are stored sparsely as {(I, J): coefficient} with
I, J strictly increasing tuples; coefficients are :class:`ScalarExpr`,
polynomials in formal jets of registered scalars with exact field constants.

Jets of a formal scalar u are written u[W] for a word W of letters, meaning
the letters of W applied to u innermost first.  Reordering a word into
canonical (sorted) form uses the frame commutators read off the differential
table, so second derivatives automatically pick up the first-order correction
terms the structure constants dictate.  Registered multiplicative characters
carry exact first-derivative data instead: each frame derivative multiplies
the character by a declared field constant.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .field import Elem, FieldError, ParseError, ScalarField, UnknownParameter


class CoframeError(Exception):
    """Base class for coframe-algebra errors."""


class NotIntegrable(CoframeError):
    """The differential table produces a (0,2) component on a (1,0)-form."""


class JacobiFailure(CoframeError):
    """The differential table violates d∘d = 0."""


class JetOrderExceeded(CoframeError):
    """A jet word grew beyond the supported order."""


class UnsupportedAverage(CoframeError):
    """Invariant average requested for an expression it is not defined on."""


AVG = None  # marker word for the invariant average of a scalar


def _merge_sign(left: Sequence[int], right: Sequence[int]):
    """Merge two strictly increasing tuples; return (merged, sign) or None."""
    merged = []
    sign = 1
    i = j = 0
    while i < len(left) and j < len(right):
        a, b = left[i], right[j]
        if a == b:
            return None
        if a < b:
            merged.append(a)
            i += 1
        else:
            merged.append(b)
            j += 1
            if (len(left) - i) % 2:
                sign = -sign
    merged.extend(left[i:])
    merged.extend(right[j:])
    return tuple(merged), sign


def _factor_sort_key(factor):
    name, word = factor
    if word is AVG:
        return (name, 0, ())
    return (name, 1, word)


class ScalarExpr:
    """Polynomial in jets of registered scalars with exact field constants.

    Terms map a monomial (sorted tuple of (scalar, word) factors) to a field
    element.  The empty monomial carries the constant part, so the field
    embeds.  Conjugation bars every letter of every word and conjugates the
    constants.
    """

    __slots__ = ("alg", "terms")

    def __init__(self, alg: "CoframeAlgebra", terms: Optional[dict] = None):
        self.alg = alg
        self.terms = terms if terms is not None else {}

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def constant(alg: "CoframeAlgebra", value) -> "ScalarExpr":
        v = alg.field.coerce(value)
        return ScalarExpr(alg, {(): v} if not v.is_zero else {})

    def _coerce(self, other) -> Optional["ScalarExpr"]:
        if isinstance(other, ScalarExpr):
            if other.alg is not self.alg:
                raise TypeError("expressions from different algebras")
            return other
        if isinstance(other, (int, Fraction, Elem)):
            return ScalarExpr.constant(self.alg, other)
        return None

    # -- ring operations ------------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for mon, c in o.terms.items():
            acc = out.get(mon)
            s = c if acc is None else acc + c
            if s.is_zero:
                out.pop(mon, None)
            else:
                out[mon] = s
        return ScalarExpr(self.alg, out)

    __radd__ = __add__

    def __neg__(self):
        return ScalarExpr(self.alg, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                mon = tuple(sorted(m1 + m2, key=_factor_sort_key))
                c = c1 * c2
                acc = out.get(mon)
                s = c if acc is None else acc + c
                if s.is_zero:
                    out.pop(mon, None)
                else:
                    out[mon] = s
        return ScalarExpr(self.alg, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, Elem)):
            d = self.alg.field.coerce(other)
            return ScalarExpr(self.alg,
                              {m: c / d for m, c in self.terms.items()})
        if isinstance(other, ScalarExpr):
            e = other.as_constant()
            return self / e
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = ScalarExpr.constant(self.alg, 1)
        for _ in range(k):
            out = out * self
        return out

    # -- predicates -----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).is_zero

    def __hash__(self):
        return hash(frozenset((m, c.raw) for m, c in self.terms.items()))

    def is_constant(self) -> bool:
        return all(m == () for m in self.terms)

    def as_constant(self) -> Elem:
        if self.is_zero:
            return self.alg.field.zero
        if not self.is_constant():
            raise CoframeError("expression has jet content")
        return self.terms[()]

    # -- calculus -------------------------------------------------------------

    def derive(self, letter: int) -> "ScalarExpr":
        """Frame derivative along the given letter (product rule on factors)."""
        alg = self.alg
        out = ScalarExpr(alg, {})
        for mon, coeff in self.terms.items():
            for idx, (name, word) in enumerate(mon):
                rest = mon[:idx] + mon[idx + 1:]
                kind = alg._scalar_kind(name)
                if word is AVG:
                    continue
                if kind == "character":
                    mu = alg._characters[name][letter]
                    if mu.is_zero:
                        continue
                    piece = ScalarExpr(alg, {mon: coeff * mu})
                    out = out + piece
                    continue
                new_word = word + (letter,)
                if len(new_word) > alg.jet_order:
                    raise JetOrderExceeded(
                        f"jet word of order {len(new_word)} exceeds cap "
                        f"{alg.jet_order}")
                for cword, cc in alg._canonical_word(new_word).items():
                    factor = (name, cword)
                    new_mon = tuple(sorted(rest + (factor,),
                                           key=_factor_sort_key))
                    out = out + ScalarExpr(alg, {new_mon: coeff * cc})
        return out

    def conj(self) -> "ScalarExpr":
        alg = self.alg
        out = ScalarExpr(alg, {})
        for mon, coeff in self.terms.items():
            pieces = ScalarExpr.constant(alg, coeff.conj())
            for name, word in mon:
                kind = alg._scalar_kind(name)
                if word is AVG:
                    factor_expr = ScalarExpr(alg, {((name, AVG),):
                                                   alg.field.one})
                elif kind == "character":
                    cname = alg._conj_character(name)
                    factor_expr = ScalarExpr(alg, {((cname, ()),):
                                                   alg.field.one})
                else:
                    barred = tuple(alg.bar(x) for x in word)
                    factor_expr = ScalarExpr(alg, {})
                    for cword, cc in alg._canonical_word(barred).items():
                        factor_expr = factor_expr + ScalarExpr(
                            alg, {((name, cword),): cc})
                pieces = pieces * factor_expr
            out = out + pieces
        return out

    def average(self) -> "ScalarExpr":
        """Invariant integral against the normalized volume.

        Frame derivatives of anything integrate to zero (the frame fields are
        divergence free for a unimodular algebra), a bare scalar becomes its
        formal average, and nontrivial characters integrate to zero.  Products
        of several non-constant factors are not reducible and raise.
        """
        alg = self.alg
        if not alg.unimodular:
            raise UnsupportedAverage("algebra is not unimodular")
        out = ScalarExpr(alg, {})
        for mon, coeff in self.terms.items():
            if mon == ():
                out = out + ScalarExpr(alg, {(): coeff})
                continue
            if len(mon) > 1:
                raise UnsupportedAverage(
                    "average of a product of scalars is not reducible")
            name, word = mon[0]
            kind = alg._scalar_kind(name)
            if word is AVG:
                out = out + ScalarExpr(alg, {mon: coeff})
            elif kind == "character":
                continue  # nontrivial character averages to zero
            elif len(word) == 0:
                out = out + ScalarExpr(alg, {((name, AVG),): coeff})
            else:
                continue  # average of a frame derivative vanishes
        return out

    # -- printing ---------------------------------------------------------

    def _letter_str(self, x: int) -> str:
        n = self.alg.n
        return f"{x + 1}" if x < n else f"{x - n + 1}bar"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mon in sorted(self.terms, key=lambda m: tuple(map(_factor_sort_key,
                                                              m))):
            coeff = self.terms[mon]
            bits = []
            for name, word in mon:
                if word is AVG:
                    bits.append(f"avg({name})")
                elif word == ():
                    bits.append(name)
                else:
                    bits.append(
                        f"{name}[{','.join(self._letter_str(x) for x in word)}]")
            mstr = "*".join(bits)
            cstr = str(coeff)
            if not mstr:
                parts.append(f"({cstr})")
            else:
                parts.append(f"({cstr})*{mstr}" if cstr != "1" else mstr)
        return " + ".join(parts)

    __repr__ = __str__


class InvForm:
    """Invariant differential form, sparse over the (I, J) wedge basis."""

    __slots__ = ("alg", "terms")

    def __init__(self, alg: "CoframeAlgebra", terms: Optional[dict] = None):
        self.alg = alg
        self.terms = terms if terms is not None else {}

    # -- basics -----------------------------------------------------------

    @staticmethod
    def zero(alg: "CoframeAlgebra") -> "InvForm":
        return InvForm(alg, {})

    @staticmethod
    def from_key(alg: "CoframeAlgebra", key, coeff=1) -> "InvForm":
        c = coeff if isinstance(coeff, ScalarExpr) else ScalarExpr.constant(
            alg, coeff)
        if c.is_zero:
            return InvForm(alg, {})
        return InvForm(alg, {key: c})

    @staticmethod
    def scalar(alg: "CoframeAlgebra", value) -> "InvForm":
        return InvForm.from_key(alg, ((), ()), value)

    def copy_terms(self) -> dict:
        return dict(self.terms)

    def __getitem__(self, key) -> ScalarExpr:
        return self.terms.get(key, ScalarExpr(self.alg, {}))

    def items(self):
        return self.terms.items()

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def bidegrees(self):
        return sorted({(len(I), len(J)) for I, J in self.terms})

    def bidegree_part(self, p: int, q: int) -> "InvForm":
        return InvForm(self.alg, {k: c for k, c in self.terms.items()
                                  if (len(k[0]), len(k[1])) == (p, q)})

    def homogeneous_bidegree(self):
        degs = self.bidegrees()
        if len(degs) != 1:
            raise CoframeError(f"form is not homogeneous: {degs}")
        return degs[0]

    # -- linear structure ---------------------------------------------------

    def _add_term(self, out: dict, key, coeff: ScalarExpr):
        acc = out.get(key)
        s = coeff if acc is None else acc + coeff
        if s.is_zero:
            out.pop(key, None)
        else:
            out[key] = s

    def __add__(self, other):
        if not isinstance(other, InvForm):
            return NotImplemented
        if other.alg is not self.alg:
            raise TypeError("forms from different algebras")
        out = dict(self.terms)
        for k, c in other.terms.items():
            self._add_term(out, k, c)
        return InvForm(self.alg, out)

    def __neg__(self):
        return InvForm(self.alg, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, InvForm):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, InvForm):
            return self.wedge(other)
        if isinstance(other, (int, Fraction, Elem, ScalarExpr)):
            c = other if isinstance(other, ScalarExpr) else \
                ScalarExpr.constant(self.alg, other)
            out = {}
            for k, v in self.terms.items():
                s = v * c
                if not s.is_zero:
                    out[k] = s
            return InvForm(self.alg, out)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, Elem, ScalarExpr)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, Elem)):
            return self * (self.alg.field.one / self.alg.field.coerce(other))
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, InvForm):
            return NotImplemented
        return (self - other).is_zero

    def __hash__(self):
        raise TypeError("forms are mutable containers; not hashable")

    # -- multiplication ------------------------------------------------------

    def wedge(self, other: "InvForm") -> "InvForm":
        if other.alg is not self.alg:
            raise TypeError("forms from different algebras")
        out: dict = {}
        for (I1, J1), c1 in self.terms.items():
            for (I2, J2), c2 in other.terms.items():
                mi = _merge_sign(I1, I2)
                if mi is None:
                    continue
                mj = _merge_sign(J1, J2)
                if mj is None:
                    continue
                I, si = mi
                J, sj = mj
                sign = si * sj * (-1 if (len(J1) * len(I2)) % 2 else 1)
                coeff = c1 * c2
                if sign < 0:
                    coeff = -coeff
                self._add_term(out, (I, J), coeff)
        return InvForm(self.alg, out)

    def wedge_power(self, k: int) -> "InvForm":
        out = InvForm.scalar(self.alg, 1)
        for _ in range(k):
            out = out.wedge(self)
        return out

    def conj(self) -> "InvForm":
        out: dict = {}
        for (I, J), c in self.terms.items():
            sign = -1 if (len(I) * len(J)) % 2 else 1
            cc = c.conj()
            if sign < 0:
                cc = -cc
            self._add_term(out, (J, I), cc)
        return InvForm(self.alg, out)

    @property
    def is_real(self) -> bool:
        return (self - self.conj()).is_zero

    # -- exterior differential -------------------------------------------------

    def d(self) -> "InvForm":
        alg = self.alg
        out = InvForm.zero(alg)
        for key, coeff in self.terms.items():
            base = InvForm.from_key(alg, key, 1)
            dcoeff = alg._d_scalar(coeff)
            out = out + dcoeff.wedge(base)
            dbase = alg._d_basis(key)
            if not dbase.is_zero:
                out = out + dbase * coeff
        return out

    def del_(self) -> "InvForm":
        out = InvForm.zero(self.alg)
        for p, q in self.bidegrees():
            out = out + self.bidegree_part(p, q).d().bidegree_part(p + 1, q)
        return out

    def delbar(self) -> "InvForm":
        out = InvForm.zero(self.alg)
        for p, q in self.bidegrees():
            out = out + self.bidegree_part(p, q).d().bidegree_part(p, q + 1)
        return out

    # -- printing ---------------------------------------------------------

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        n = self.alg.n
        parts = []
        for I, J in sorted(self.terms, key=lambda k: (len(k[0]) + len(k[1]),
                                                      k)):
            c = self.terms[(I, J)]
            names = [f"phi{i + 1}" for i in I] + [f"phi{j + 1}bar" for j in J]
            base = "^".join(names) if names else "1"
            parts.append(f"({c})*{base}")
        return " + ".join(parts)

    __repr__ = __str__


class InvVector:
    """Invariant vector field: components over the 2n frame letters."""

    __slots__ = ("alg", "comps")

    def __init__(self, alg: "CoframeAlgebra",
                 comps: Optional[Mapping[int, ScalarExpr]] = None):
        self.alg = alg
        self.comps = {}
        if comps:
            for letter, c in comps.items():
                cc = c if isinstance(c, ScalarExpr) else ScalarExpr.constant(
                    alg, c)
                if not cc.is_zero:
                    self.comps[letter] = cc

    def __add__(self, other: "InvVector") -> "InvVector":
        out = dict(self.comps)
        for x, c in other.comps.items():
            s = out.get(x)
            s = c if s is None else s + c
            if s.is_zero:
                out.pop(x, None)
            else:
                out[x] = s
        return InvVector(self.alg, out)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Elem, ScalarExpr)):
            c = other if isinstance(other, ScalarExpr) else \
                ScalarExpr.constant(self.alg, other)
            return InvVector(self.alg,
                             {x: v * c for x, v in self.comps.items()})
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1)

    def __sub__(self, other):
        return self + (-other)

    def conj(self) -> "InvVector":
        return InvVector(self.alg, {self.alg.bar(x): c.conj()
                                    for x, c in self.comps.items()})

    @property
    def is_zero(self) -> bool:
        return not self.comps

    def contract(self, form: InvForm) -> InvForm:
        """Interior product of this vector into the form."""
        alg = self.alg
        out = InvForm.zero(alg)
        for (I, J), coeff in form.terms.items():
            word = list(I) + [alg.bar(j) for j in J]
            for r, letter in enumerate(word):
                zc = self.comps.get(letter)
                if zc is None:
                    continue
                if r < len(I):
                    newkey = (I[:r] + I[r + 1:], J)
                else:
                    rj = r - len(I)
                    newkey = (I, J[:rj] + J[rj + 1:])
                c = coeff * zc
                if r % 2:
                    c = -c
                out = out + InvForm.from_key(alg, newkey, c)
        return out

    def apply(self, expr: ScalarExpr) -> ScalarExpr:
        """Directional derivative of a scalar expression."""
        out = ScalarExpr(self.alg, {})
        for letter, c in self.comps.items():
            out = out + expr.derive(letter) * c
        return out

    def __str__(self):
        if not self.comps:
            return "0"
        n = self.alg.n
        bits = []
        for x in sorted(self.comps):
            nm = f"Z{x + 1}" if x < n else f"Z{x - n + 1}bar"
            bits.append(f"({self.comps[x]})*{nm}")
        return " + ".join(bits)

    __repr__ = __str__


_PHI_RE = re.compile(r"phi(\d+)(bar)?\Z")

_FORM_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:/\d+)?i?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


class CoframeAlgebra:
    """Invariant coframe with differential table, forms, jets, characters."""

    def __init__(self, n: int, field: ScalarField,
                 d_table: Mapping[int, Mapping[tuple, object]],
                 jet_order: int = 4):
        if n < 1:
            raise CoframeError("need at least one coframe direction")
        self.n = n
        self.field = field
        self.jet_order = jet_order
        self._formal: set = set()
        self._characters: dict = {}
        self._char_conj: dict = {}
        self._word_memo: dict = {}
        self._dbasis_memo: dict = {}

        # Normalize the table: D[c][(x, y)] = coefficient, x < y, over all
        # 2n letters; rows for conjugate letters are the conjugated rows.
        D: dict = {c: {} for c in range(2 * n)}
        for c, row in d_table.items():
            if not (0 <= c < n):
                raise CoframeError(f"d-table row {c} out of range")
            for (x, y), val in row.items():
                v = field.coerce(val)
                if v.is_zero:
                    continue
                if x == y:
                    raise CoframeError("repeated letter in wedge pair")
                if x > y:
                    x, y, v = y, x, -v
                if x >= n and y >= n:
                    raise NotIntegrable(
                        f"d(phi{c + 1}) has a (0,2) component on "
                        f"({x - n + 1}bar,{y - n + 1}bar)")
                prev = D[c].get((x, y), field.zero)
                s = prev + v
                if s.is_zero:
                    D[c].pop((x, y), None)
                else:
                    D[c][(x, y)] = s
        for c in range(n):
            row = {}
            for (x, y), v in D[c].items():
                bx, by = self.bar_static(x, n), self.bar_static(y, n)
                vv = v.conj()
                if bx > by:
                    bx, by, vv = by, bx, -vv
                row[(bx, by)] = vv
            D[c + n] = row
        self.D = D

        self._dphi_forms = {}
        for c in range(2 * n):
            f = InvForm.zero(self)
            for (x, y), v in D[c].items():
                f = f + self._pair_to_form(x, y, v)
            self._dphi_forms[c] = f

        # d∘d = 0 on every coframe letter.
        for c in range(2 * n):
            dd = self.phi(c).d().d()
            if not dd.is_zero:
                raise JacobiFailure(
                    f"d(d(phi-letter {c})) = {dd} is nonzero")

        # Unimodularity: every frame field is divergence free iff the trace
        # of each adjoint map vanishes; needed for invariant averaging.
        self.unimodular = True
        for a in range(2 * n):
            tr = field.zero
            for b in range(2 * n):
                tr = tr + self.bracket(a, b).get(b, field.zero)
            if not tr.is_zero:
                self.unimodular = False
                break

    # -- letters ------------------------------------------------------------

    @staticmethod
    def bar_static(x: int, n: int) -> int:
        return x + n if x < n else x - n

    def bar(self, x: int) -> int:
        return self.bar_static(x, self.n)

    def letter_key(self, x: int):
        """Basis key of the 1-form phi^x (barred when x >= n)."""
        if x < self.n:
            return ((x,), ())
        return ((), (x - self.n,))

    def _pair_to_form(self, x: int, y: int, coeff: Elem) -> InvForm:
        return InvForm.from_key(self, self.letter_key(x), coeff).wedge(
            InvForm.from_key(self, self.letter_key(y), 1))

    def phi(self, x: int) -> InvForm:
        return InvForm.from_key(self, self.letter_key(x), 1)

    def frame_vector(self, x: int) -> InvVector:
        return InvVector(self, {x: ScalarExpr.constant(self, 1)})

    def basis_keys(self, p: int, q: int):
        """All (I, J) keys of bidegree (p, q), lexicographically ordered."""
        from itertools import combinations
        return [(I, J) for I in combinations(range(self.n), p)
                for J in combinations(range(self.n), q)]

    def top_key(self):
        full = tuple(range(self.n))
        return (full, full)

    # -- structure constants ---------------------------------------------------

    def bracket(self, x: int, y: int) -> dict:
        """Commutator [Z_x, Z_y] as {letter: coefficient}."""
        if x == y:
            return {}
        sign = 1
        if x > y:
            x, y, sign = y, x, -1
        out = {}
        for c in range(2 * self.n):
            v = self.D[c].get((x, y))
            if v is not None and not v.is_zero:
                out[c] = -v if sign > 0 else v
        return out

    # -- differential of basis elements -----------------------------------------

    def _d_basis(self, key) -> InvForm:
        cached = self._dbasis_memo.get(key)
        if cached is not None:
            return cached
        I, J = key
        word = list(I) + [j + self.n for j in J]
        out = InvForm.zero(self)
        for r, letter in enumerate(word):
            dphi = self._dphi_forms[letter]
            if dphi.is_zero:
                continue
            prefix = word[:r]
            suffix = word[r + 1:]
            pf = self._word_to_form(prefix)
            sf = self._word_to_form(suffix)
            term = pf.wedge(dphi).wedge(sf)
            if r % 2:
                term = -term
            out = out + term
        self._dbasis_memo[key] = out
        return out

    def _word_to_form(self, letters: Sequence[int]) -> InvForm:
        I = tuple(x for x in letters if x < self.n)
        J = tuple(x - self.n for x in letters if x >= self.n)
        return InvForm.from_key(self, (I, J), 1)

    def _d_scalar(self, expr: ScalarExpr) -> InvForm:
        out = InvForm.zero(self)
        for a in range(2 * self.n):
            da = expr.derive(a)
            if not da.is_zero:
                out = out + InvForm.from_key(self, self.letter_key(a), da)
        return out

    def d_scalar(self, expr: ScalarExpr) -> InvForm:
        return self._d_scalar(expr)

    # -- jets -------------------------------------------------------------------

    def _canonical_word(self, word: tuple) -> dict:
        """Rewrite a jet word as a combination of sorted words.

        The adjacent swap rule is read off the differential table: for
        letters a > b, u[..ab..] = u[..ba..] - sum_c D^c_{ba} u[..c..],
        which is the frame commutator expanded through d(phi^c).
        """
        cached = self._word_memo.get(word)
        if cached is not None:
            return cached
        k = next((idx for idx in range(len(word) - 1)
                  if word[idx] > word[idx + 1]), None)
        if k is None:
            result = {word: self.field.one}
        else:
            a, b = word[k], word[k + 1]
            swapped = word[:k] + (b, a) + word[k + 2:]
            result = dict(self._canonical_word(swapped))
            for c, dcoef in self.D.items():
                v = dcoef.get((b, a))
                if v is None or v.is_zero:
                    continue
                shorter = word[:k] + (c,) + word[k + 2:]
                for w2, c2 in self._canonical_word(shorter).items():
                    prev = result.get(w2, self.field.zero)
                    s = prev - v * c2
                    if s.is_zero:
                        result.pop(w2, None)
                    else:
                        result[w2] = s
        self._word_memo[word] = result
        return result

    # -- scalar registry ----------------------------------------------------------

    def register_scalar(self, name: str) -> ScalarExpr:
        """Declare a formal real scalar; returns it as an expression."""
        if name in self._formal or name in self._characters:
            raise CoframeError(f"scalar {name!r} already registered")
        self._formal.add(name)
        return ScalarExpr(self, {((name, ()),): self.field.one})

    def register_character(self, name: str,
                           mu: Sequence) -> ScalarExpr:
        """Declare a multiplicative character: Z_a(f) = mu[a] * f.

        Consistency demands sum_a mu_a d(phi^a) = 0; violations raise.
        """
        if name in self._formal or name in self._characters:
            raise CoframeError(f"scalar {name!r} already registered")
        mu = [self.field.coerce(m) for m in mu]
        if len(mu) != 2 * self.n:
            raise CoframeError("character needs one eigenvalue per letter")
        check = InvForm.zero(self)
        for a in range(2 * self.n):
            check = check + self._dphi_forms[a] * mu[a]
        if not check.is_zero:
            raise CoframeError(
                "character eigenvalues are inconsistent with the "
                "differential table (d of the character would not square "
                "to zero)")
        self._characters[name] = mu
        return ScalarExpr(self, {((name, ()),): self.field.one})

    def jet(self, name: str, word: Sequence[int]) -> ScalarExpr:
        """The jet u[word] as an expression (word canonicalized)."""
        if name not in self._formal:
            raise CoframeError(f"unknown formal scalar {name!r}")
        out = ScalarExpr(self, {})
        for w2, c in self._canonical_word(tuple(word)).items():
            out = out + ScalarExpr(self, {((name, w2),): c})
        return out

    def _scalar_kind(self, name: str) -> str:
        if name in self._characters:
            return "character"
        if name in self._formal:
            return "formal"
        raise CoframeError(f"unknown scalar {name!r}")

    def _conj_character(self, name: str) -> str:
        """Name of the conjugate character, registering it if needed."""
        cached = self._char_conj.get(name)
        if cached is not None:
            return cached
        mu = self._characters[name]
        target = [mu[self.bar(a)].conj() for a in range(2 * self.n)]
        for other, omu in self._characters.items():
            if all((omu[a] - target[a]).is_zero for a in range(2 * self.n)):
                self._char_conj[name] = other
                self._char_conj[other] = name
                return other
        cname = name + "_conj"
        self._characters[cname] = target
        self._char_conj[name] = cname
        self._char_conj[cname] = name
        return cname

    # -- parsing ---------------------------------------------------------------

    def parse_form(self, text: str) -> InvForm:
        """Parse a form expression: field grammar plus phiK / phiKbar atoms.

        `^` is exponentiation when followed by an integer and wedge product
        otherwise; `*` multiplies (wedge when both sides are forms).
        """
        tokens = []
        pos = 0
        while pos < len(text):
            m = _FORM_TOKEN_RE.match(text, pos)
            if not m:
                if text[pos:].strip() == "":
                    break
                raise ParseError(f"bad character in form at {pos}: "
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

        def parse_number(txt: str) -> InvForm:
            imag = txt.endswith("i")
            if imag:
                txt = txt[:-1]
            q = Fraction(txt) if txt else Fraction(1)
            e = self.field.from_rational(q)
            if imag:
                e = e * self.field.i
            return InvForm.scalar(self, e)

        def atom() -> InvForm:
            kind, val = advance()
            if kind == "num":
                return parse_number(val)
            if kind == "name":
                if val == "i":
                    return InvForm.scalar(self, self.field.i)
                pm = _PHI_RE.match(val)
                if pm:
                    idx = int(pm.group(1)) - 1
                    if not (0 <= idx < self.n):
                        raise ParseError(f"coframe index out of range: {val}")
                    letter = idx + (self.n if pm.group(2) else 0)
                    return self.phi(letter)
                try:
                    return InvForm.scalar(self, self.field.param(val))
                except UnknownParameter:
                    raise UnknownParameter(
                        f"unknown name {val!r} in form expression") from None
            if kind == "op" and val == "(":
                e = expr()
                kind, val = advance()
                if (kind, val) != ("op", ")"):
                    raise ParseError("expected ')'")
                return e
            raise ParseError(f"unexpected token {val!r} in form expression")

        def power() -> InvForm:
            base = atom()
            while True:
                kind, val = peek()
                if kind == "op" and val == "^":
                    nk, nv = tokens[state["k"] + 1]
                    is_num = nk == "num"
                    neg = (nk == "op" and nv == "-")
                    if is_num:
                        if nv.endswith("i"):
                            raise ParseError("exponent must be an integer")
                        advance()
                        _, nv = advance()
                        if "/" in nv:
                            # slash binds to the result, not the exponent
                            whole, den = nv.split("/")
                            base = base.wedge_power(int(whole)) / int(den)
                        else:
                            base = base.wedge_power(int(nv))
                    elif neg:
                        advance()
                        advance()
                        nk2, nv2 = advance()
                        if nk2 != "num" or nv2.endswith("i") or "/" in nv2:
                            raise ParseError("exponent must be an integer")
                        if len(base.terms) != 1 or ((), ()) not in base.terms:
                            raise ParseError("negative power of a form")
                        e = base[((), ())].as_constant()
                        base = InvForm.scalar(self, e ** (-int(nv2)))
                    else:
                        advance()
                        rhs = atom()
                        base = base.wedge(rhs)
                else:
                    return base

        def unary() -> InvForm:
            kind, val = peek()
            if kind == "op" and val in "+-":
                advance()
                e = unary()
                return -e if val == "-" else e
            return power()

        def term() -> InvForm:
            e = unary()
            while True:
                kind, val = peek()
                if kind == "op" and val in "*/":
                    advance()
                    rhs = unary()
                    if val == "*":
                        e = e.wedge(rhs)
                    else:
                        if len(rhs.terms) == 1 and ((), ()) in rhs.terms:
                            e = e * (self.field.one /
                                     rhs[((), ())].as_constant())
                        else:
                            raise ParseError("division by a non-scalar form")
                else:
                    return e

        def expr() -> InvForm:
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

    # -- convenience --------------------------------------------------------------

    def random_form(self, rng, p: int, q: int, jets=()) -> InvForm:
        """Random invariant (p,q)-form; optional jet factors of named scalars."""
        out = InvForm.zero(self)
        for key in self.basis_keys(p, q):
            if rng.random() < 0.5:
                continue
            coeff = ScalarExpr.constant(self,
                                        self.field.random_element(
                                            rng, degree=1, terms=2,
                                            denominator=False))
            for name in jets:
                if rng.random() < 0.5:
                    word = tuple(rng.randint(0, 2 * self.n - 1)
                                 for _ in range(rng.randint(0, 2)))
                    coeff = coeff * self.jet(name, word)
            out = out + InvForm.from_key(self, key, coeff)
        return out


def algebra_from_strings(n: int, field: ScalarField,
                         d_strings: Mapping[int, str],
                         jet_order: int = 4) -> CoframeAlgebra:
    """Build an algebra from textual d-table rows, e.g. {2: "phi1^phi2"}.

    Rows are parsed against a temporary torus algebra (all d = 0), then the
    genuine algebra is constructed and validated.
    """
    flat = CoframeAlgebra(n, field, {})
    table: dict = {}
    for c, txt in d_strings.items():
        form = flat.parse_form(txt)
        row: dict = {}
        for (I, J), coeff in form.terms.items():
            letters = list(I) + [j + n for j in J]
            if len(letters) != 2:
                raise CoframeError(
                    f"d-table entry for phi{c + 1} is not a 2-form")
            row[(letters[0], letters[1])] = coeff.as_constant()
        table[c] = row
    return CoframeAlgebra(n, field, table, jet_order=jet_order)
