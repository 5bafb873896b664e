"""Hermitian metric structures on an invariant coframe.

A :class:`HermitianStructure` pins a positive Hermitian matrix g and exposes
the associated (1,1)-form omega = (i/2) g_{ab} phi^a ^ phibar^b, the induced
inner product on forms, the star operator defined by the pairing
alpha ^ star(gamma) = <alpha, conj(gamma)> vol with vol = omega^n/n!, the
wedge operator L and its adjoint, codifferentials, Laplacians, the torsion
1-form of omega^{n-1}, and structure predicates.

The inner product is sesquilinear (linear in the first slot) with
<phi^a, phi^b> twice the inverse-transpose metric entry, so a flat holomorphic
differential has squared norm 2 and |omega|^2 = n.

Positivity of g is certified by sampling: every leading principal minor must
be a positive rational at 32 exact rational points of the parameter box
[1/2, 2]^k.  That is a design decision, not a proof of positivity for all
parameter values.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

from .field import Elem, FieldError, PoleAtAssignment, ScalarField
from .coframe import (
    CoframeAlgebra,
    CoframeError,
    InvForm,
    ScalarExpr,
    _merge_sign,
)


class HodgeError(Exception):
    """Base class for metric-structure errors."""


class NotHermitian(HodgeError):
    pass


class NotPositive(HodgeError):
    pass


class RootFailure(HodgeError):
    """No positive root metric could be produced."""


# -- exact dense linear algebra over the scalar field -------------------------


def mat_mul(A, B):
    rows, inner, cols = len(A), len(B), len(B[0])
    return [[sum((A[r][k] * B[k][c] for k in range(1, inner)),
                 A[r][0] * B[0][c]) for c in range(cols)]
            for r in range(rows)]


def mat_conj_t(A):
    return [[A[r][c].conj() for r in range(len(A))] for c in range(len(A[0]))]


def mat_det(field: ScalarField, A) -> Elem:
    """Fraction-free Gaussian elimination (Bareiss) determinant."""
    n = len(A)
    if n == 0:
        return field.one
    M = [row[:] for row in A]
    sign = 1
    prev = field.one
    for k in range(n - 1):
        if M[k][k].is_zero:
            pivot_row = next((r for r in range(k + 1, n)
                              if not M[r][k].is_zero), None)
            if pivot_row is None:
                return field.zero
            M[k], M[pivot_row] = M[pivot_row], M[k]
            sign = -sign
        for r in range(k + 1, n):
            for c in range(k + 1, n):
                M[r][c] = (M[r][c] * M[k][k] - M[r][k] * M[k][c]) / prev
            M[r][k] = field.zero
        prev = M[k][k]
    det = M[n - 1][n - 1]
    return det if sign > 0 else -det


def mat_solve(field: ScalarField, A, B):
    """Solve A X = B exactly (A square invertible, B a list of rows)."""
    n = len(A)
    m = len(B[0])
    M = [A[r][:] + B[r][:] for r in range(n)]
    for k in range(n):
        if M[k][k].is_zero:
            pivot_row = next((r for r in range(k + 1, n)
                              if not M[r][k].is_zero), None)
            if pivot_row is None:
                raise HodgeError("singular matrix")
            M[k], M[pivot_row] = M[pivot_row], M[k]
        inv = field.one / M[k][k]
        M[k] = [x * inv for x in M[k]]
        for r in range(n):
            if r != k and not M[r][k].is_zero:
                f = M[r][k]
                M[r] = [x - f * y for x, y in zip(M[r], M[k])]
    return [row[n:] for row in M]


def mat_inv(field: ScalarField, A):
    n = len(A)
    eye = [[field.one if r == c else field.zero for c in range(n)]
           for r in range(n)]
    return mat_solve(field, A, eye)


def _det_sub(field: ScalarField, M, rows, cols) -> Elem:
    """Determinant of the submatrix M[rows][cols] by recursive expansion."""
    k = len(rows)
    if k == 0:
        return field.one
    if k == 1:
        return M[rows[0]][cols[0]]
    if k == 2:
        return (M[rows[0]][cols[0]] * M[rows[1]][cols[1]]
                - M[rows[0]][cols[1]] * M[rows[1]][cols[0]])
    acc = field.zero
    for idx, c in enumerate(cols):
        a = M[rows[0]][c]
        if a.is_zero:
            continue
        minor = _det_sub(field, M, rows[1:], cols[:idx] + cols[idx + 1:])
        term = a * minor
        acc = acc + (term if idx % 2 == 0 else -term)
    return acc


def _sample_box(field: ScalarField, rng: random.Random) -> dict:
    return {name: Fraction(rng.randint(2, 8), 4) for name in field.params}


def check_positive_definite(field: ScalarField, M, samples: int = 32,
                            seed: int = 11):
    """Sampled positivity certificate for a Hermitian matrix over the field.

    Leading principal minors must be positive rationals at every sampled
    rational assignment of the parameters; raises NotPositive otherwise.
    """
    rng = random.Random(seed)
    n = len(M)
    minors = [_det_sub(field, M, tuple(range(k + 1)),
                       tuple(range(k + 1))) for k in range(n)]
    done = 0
    attempts = 0
    while done < samples and attempts < samples * 4:
        attempts += 1
        assign = _sample_box(field, rng)
        try:
            for m in minors:
                val = field.substitute(m, assign) if assign else m
                re, im = val.constant_value()
                if im != 0 or re <= 0:
                    raise NotPositive(
                        f"leading minor {m} is not positive at {assign}")
        except PoleAtAssignment:
            continue
        done += 1
    if done < samples:
        raise NotPositive("could not sample the parameter box")


class HermitianStructure:
    """Invariant Hermitian metric and its full Hodge-theoretic toolkit."""

    def __init__(self, alg: CoframeAlgebra, g, check_positive: bool = True,
                 samples: int = 32, seed: int = 11):
        self.alg = alg
        n = alg.n
        field = alg.field
        self.field = field
        if len(g) != n or any(len(row) != n for row in g):
            raise HodgeError(f"metric must be {n}x{n}")
        G = [[field.coerce(x) for x in row] for row in g]
        for a in range(n):
            for b in range(n):
                if not (G[b][a] - G[a][b].conj()).is_zero:
                    raise NotHermitian(
                        f"entry ({b},{a}) is not the conjugate of ({a},{b})")
        self.G = G
        if check_positive:
            self._check_positive(samples, seed)
        self.Ginv = mat_inv(field, G)
        two = field.coerce(2)
        # Gram of the (1,0)-coframe; transpose because the dual basis of a
        # sesquilinear Gram A has Gram A^{-T}
        self.H = [[self.Ginv[b][a] * two for b in range(n)] for a in range(n)]
        self.Hbar = [[self.H[a][b].conj() for b in range(n)] for a in range(n)]

        ihalf = field.i / 2
        om = InvForm.zero(alg)
        for a in range(n):
            for b in range(n):
                if not G[a][b].is_zero:
                    om = om + InvForm.from_key(alg, ((a,), (b,)),
                                               ScalarExpr.constant(
                                                   alg, G[a][b] * ihalf))
        self.omega = om
        self._om_pows = [InvForm.scalar(alg, 1)]
        for _ in range(n):
            self._om_pows.append(self._om_pows[-1].wedge(om))
        fact = 1
        for k in range(2, n + 1):
            fact *= k
        self.vol = self._om_pows[n] / fact
        vt = self.vol[alg.top_key()]
        self.v_top = vt.as_constant()
        if self.v_top.is_zero:
            raise NotPositive("volume form vanishes")
        self._lee = None

    # -- validation ------------------------------------------------------------

    def _check_positive(self, samples: int, seed: int):
        check_positive_definite(self.field, self.G, samples, seed)

    # -- inner product ---------------------------------------------------------

    def _basis_inner(self, key1, key2) -> Elem:
        (I, J), (K, L) = key1, key2
        field = self.field
        return _det_sub(field, self.H, I, K) * _det_sub(field, self.Hbar,
                                                        J, L)

    def inner(self, a: InvForm, b: InvForm) -> ScalarExpr:
        """Sesquilinear inner product, linear in the first argument."""
        out = ScalarExpr(self.alg, {})
        bconj = {k: c.conj() for k, c in b.terms.items()}
        for (I, J), ca in a.terms.items():
            p, q = len(I), len(J)
            for (K, L), cbj in bconj.items():
                if (len(K), len(L)) != (p, q):
                    continue
                m = self._basis_inner((I, J), (K, L))
                if m.is_zero:
                    continue
                out = out + ca * cbj * m
        return out

    def norm2(self, a: InvForm) -> ScalarExpr:
        return self.inner(a, a)

    # -- star --------------------------------------------------------------------

    def star(self, form: InvForm) -> InvForm:
        """Complex-linear star: alpha ^ star(gamma) = <alpha, conj gamma> vol."""
        alg = self.alg
        n = alg.n
        field = self.field
        full = tuple(range(n))
        out = InvForm.zero(alg)
        for a, b in form.bidegrees():
            comp = form.bidegree_part(a, b)
            sign_ab = -1 if (a * b) % 2 else 1
            for I in combinations(range(n), b):
                for J in combinations(range(n), a):
                    acc = ScalarExpr(alg, {})
                    for (K, L), c in comp.terms.items():
                        m = _det_sub(field, self.H, I, L) * _det_sub(
                            field, self.Hbar, J, K)
                        if m.is_zero:
                            continue
                        acc = acc + c * m
                    if acc.is_zero:
                        continue
                    if sign_ab < 0:
                        acc = -acc
                    Ic = tuple(x for x in full if x not in I)
                    Jc = tuple(x for x in full if x not in J)
                    # pairing sign of e_{I,J} ^ e_{Ic,Jc} against the top form
                    _, si = _merge_sign(I, Ic)
                    _, sj = _merge_sign(J, Jc)
                    psign = si * sj * (-1 if (len(J) * len(Ic)) % 2 else 1)
                    coeff = acc * (self.v_top if psign > 0 else -self.v_top)
                    out = out + InvForm.from_key(alg, (Ic, Jc), coeff)
        return out

    def star_inv(self, form: InvForm) -> InvForm:
        out = InvForm.zero(self.alg)
        for p, q in form.bidegrees():
            part = self.star(form.bidegree_part(p, q))
            if (p + q) % 2:
                part = -part
            out = out + part
        return out

    # -- Lefschetz pair -----------------------------------------------------------

    def L(self, form: InvForm) -> InvForm:
        return self.omega.wedge(form)

    def lam(self, form: InvForm) -> InvForm:
        return self.star_inv(self.L(self.star(form)))

    def lam2(self, form: InvForm) -> InvForm:
        return self.lam(self.lam(form))

    def trace11(self, form: InvForm) -> ScalarExpr:
        """n (alpha ^ omega^{n-1}) / omega^n for a (1,1)-form alpha."""
        n = self.alg.n
        top = form.wedge(self._om_pows[n - 1])[self.alg.top_key()]
        den = self._om_pows[n][self.alg.top_key()].as_constant()
        return top * n / den

    # -- codifferentials and Laplacians ---------------------------------------------

    def d_star(self, form: InvForm) -> InvForm:
        return -self.star(self.star(form).d())

    def del_star(self, form: InvForm) -> InvForm:
        return -self.star(self.star(form).delbar())

    def delbar_star(self, form: InvForm) -> InvForm:
        return -self.star(self.star(form).del_())

    def lap_d(self, form: InvForm) -> InvForm:
        return self.d_star(form.d()) + self.d_star(form).d()

    def lap_del(self, form: InvForm) -> InvForm:
        return (self.del_star(form.del_()) + self.del_star(form).del_())

    def lap_delbar(self, form: InvForm) -> InvForm:
        return (self.delbar_star(form.delbar())
                + self.delbar_star(form).delbar())

    def lap_trace(self, u: ScalarExpr) -> ScalarExpr:
        """Trace Laplacian of a scalar: contraction of i del delbar u."""
        f = InvForm.from_key(self.alg, ((), ()), u)
        dd = f.delbar().del_() * self.field.i
        return self.trace11(dd)

    # -- torsion of the codifferential structure ---------------------------------------

    def torsion_form(self) -> InvForm:
        return self.omega.del_()

    def torsion_norm2(self) -> ScalarExpr:
        t = self.torsion_form()
        return self.inner(t, t)

    def lee_form(self) -> InvForm:
        """The 1-form theta with d(omega^{n-1}) = theta ^ omega^{n-1}."""
        if self._lee is not None:
            return self._lee
        alg = self.alg
        n = alg.n
        field = self.field
        om_n1 = self._om_pows[n - 1]
        target = om_n1.d().bidegree_part(n, n - 1)
        keys = alg.basis_keys(n, n - 1)
        cols = []
        for a in range(n):
            w = alg.phi(a).wedge(om_n1)
            cols.append([w[k].as_constant() for k in keys])
        A = [[cols[a][r] for a in range(n)] for r in range(len(keys))]
        B = [[target[k].as_constant()] for k in keys]
        sol = mat_solve(field, A, B)
        theta10 = InvForm.zero(alg)
        for a in range(n):
            theta10 = theta10 + alg.phi(a) * sol[a][0]
        theta = theta10 + theta10.conj()
        if not (theta.wedge(om_n1) - om_n1.d()).is_zero:
            raise HodgeError("torsion 1-form equation has no solution")
        self._lee = theta
        return theta

    # -- predicates ---------------------------------------------------------------

    @property
    def is_kahler(self) -> bool:
        return self.omega.d().is_zero

    @property
    def is_balanced(self) -> bool:
        n = self.alg.n
        return self._om_pows[n - 1].d().is_zero

    @property
    def is_astheno(self) -> bool:
        n = self.alg.n
        if n < 3:
            return self.is_pluriclosed
        return self._om_pows[n - 2].del_().delbar().is_zero

    @property
    def is_gauduchon(self) -> bool:
        n = self.alg.n
        return self._om_pows[n - 1].del_().delbar().is_zero

    @property
    def is_pluriclosed(self) -> bool:
        return self.omega.del_().delbar().is_zero


# -- root of the multilinear power map -------------------------------------------


class RootResult:
    """Result of the (n-1,n-1)-root computation.

    Either `g` is an exact metric matrix over the field (`exact` True), or
    `g_numeric` is a complex Hermitian matrix for the given parameter
    assignment together with a residual bound certifying the root.
    """

    def __init__(self, exact: bool, g=None, g_numeric=None, residual=None):
        self.exact = exact
        self.g = g
        self.g_numeric = g_numeric
        self.residual = residual


def _nth_root_elem(field: ScalarField, value: Elem, k: int) -> Optional[Elem]:
    """Exact k-th root of a field element, if one exists in the field.

    Parameters are treated as positive reals when simplifying the candidate;
    the candidate is then verified exactly (up to a fourth root of unity)
    before being returned, so a sloppy simplification can only miss roots,
    never fabricate one.
    """
    import sympy

    if value.is_zero:
        return field.zero
    if k == 1:
        return value
    syms = {s: sympy.Symbol(s, positive=True) for s in field.params}

    def to_expr(poly) -> object:
        acc = sympy.Integer(0)
        for mono, coeff in poly.terms():
            re = Fraction(int(coeff.x.numerator), int(coeff.x.denominator))
            im = Fraction(int(coeff.y.numerator), int(coeff.y.denominator))
            term = sympy.Rational(re.numerator, re.denominator) + \
                sympy.I * sympy.Rational(im.numerator, im.denominator)
            for name, e_ in zip(field.params, mono):
                term *= syms[name] ** int(e_)
            acc += term
        return acc

    expr = to_expr(value.raw.numer) / to_expr(value.raw.denom)
    cand_expr = sympy.powsimp(sympy.nsimplify(sympy.simplify(
        sympy.root(sympy.factor(expr, extension=sympy.I), k))))
    try:
        cand = _sympy_to_elem(field, cand_expr, syms)
    except Exception:
        return None
    for j in range(4):
        adj = cand * (field.i ** j)
        if (adj ** k - value).is_zero:
            return adj
    return None


def _sympy_to_elem(field: ScalarField, expr, syms) -> Elem:
    """Convert a sympy rational expression in the field generators."""
    import sympy

    num, den = sympy.fraction(sympy.cancel(sympy.together(expr)))

    def poly_part(e) -> Elem:
        e = sympy.expand(e)
        if not field.params:
            g = sympy.nsimplify(e)
            re = sympy.Rational(sympy.re(g))
            im = sympy.Rational(sympy.im(g))
            return field.gaussian(Fraction(re.p, re.q), Fraction(im.p, im.q))
        from sympy.polys.domains import QQ_I as _QQ_I

        p = sympy.Poly(e, *[syms[s] for s in field.params], domain="QQ_I")
        acc = field.zero
        for mono, raw_coeff in p.terms():
            coeff = _QQ_I.convert(raw_coeff)
            re = Fraction(int(coeff.x.numerator), int(coeff.x.denominator))
            im = Fraction(int(coeff.y.numerator), int(coeff.y.denominator))
            term = field.gaussian(re, im)
            for name, e_ in zip(field.params, mono):
                term = term * field.param(name) ** int(e_)
            acc = acc + term
        return acc

    return poly_part(num) / poly_part(den)


def power_form_matrix(alg: CoframeAlgebra, psi: InvForm):
    """Extract the coefficient matrix of an (n-1,n-1)-form.

    For psi = omega^{n-1}/(n-1)! the returned matrix is the cofactor matrix
    of the metric: entry (a,b) is (-1)^{a+b} times the minor of g with row a
    and column b removed, up to the universal factor (i/2)^{n-1} and the
    sign from reordering the wedge letters, both of which are stripped here.
    """
    n = alg.n
    field = alg.field
    full = tuple(range(n))
    s0 = -1 if ((n - 1) * (n - 2) // 2) % 2 else 1
    ifac = (field.i / 2) ** (n - 1)
    C = [[field.zero] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            key = (tuple(x for x in full if x != a),
                   tuple(x for x in full if x != b))
            coeff = psi[key]
            if coeff.is_zero:
                continue
            minor = coeff.as_constant() / ifac
            if s0 < 0:
                minor = -minor
            C[a][b] = minor if (a + b) % 2 == 0 else -minor
    return C


def cofactor_form(alg: CoframeAlgebra, C) -> InvForm:
    """Inverse of :func:`power_form_matrix`.

    Builds the (n-1,n-1)-form whose coefficient matrix is C, so that
    power_form_matrix(alg, cofactor_form(alg, C)) == C entrywise.
    """
    n = alg.n
    field = alg.field
    full = tuple(range(n))
    s0 = -1 if ((n - 1) * (n - 2) // 2) % 2 else 1
    ifac = (field.i / 2) ** (n - 1)
    out = InvForm.zero(alg)
    for a in range(n):
        for b in range(n):
            entry = field.coerce(C[a][b])
            if entry.is_zero:
                continue
            coeff = entry * ifac
            if s0 < 0:
                coeff = -coeff
            if (a + b) % 2:
                coeff = -coeff
            key = (tuple(x for x in full if x != a),
                   tuple(x for x in full if x != b))
            out = out + InvForm.from_key(alg, key, coeff)
    return out


class SignReport:
    """Sign verdict for a trace expression, exact when parameter-free.

    verdict is True/False when the scalar is a constant of the field, and
    None when it still depends on parameters; condition then carries the
    inequality left for the caller to decide.
    """

    def __init__(self, scalar: Elem, verdict: Optional[bool], condition: str):
        self.scalar = scalar
        self.verdict = verdict
        self.condition = condition

    def __repr__(self):
        return f"SignReport(scalar={self.scalar}, verdict={self.verdict})"


def trace_sign_report(h: HermitianStructure, form: InvForm) -> SignReport:
    """Report on Lambda^{n-1}(i del delbar form) <= 0 for an (n-2,n-2)-form."""
    field = h.field
    n = h.alg.n
    ipp = form.delbar().del_() * field.i
    for _ in range(n - 1):
        ipp = h.lam(ipp)
    scalar = ipp[((), ())].as_constant()
    try:
        re, im = scalar.constant_value()
        return SignReport(scalar, im == 0 and re <= 0, f"{scalar} <= 0")
    except FieldError:
        return SignReport(scalar, None, f"{scalar} <= 0")


def metric_predicates(h: HermitianStructure, Omega: Optional[InvForm] = None):
    """Exact structure predicates of a metric, plus an optional trace report.

    When Omega is given, the returned dict also carries the sign report for
    Lambda^{n-1}(i del delbar Omega) computed against h.
    """
    out = {
        "balanced": h.is_balanced,
        "astheno_kahler": h.is_astheno,
        "pluriclosed": h.is_pluriclosed,
    }
    if Omega is not None:
        out["plurinegative_Omega"] = trace_sign_report(h, Omega)
    return out


def michelsohn_root(alg: CoframeAlgebra, psi: InvForm,
                    assign: Optional[dict] = None,
                    check_positive: bool = True) -> RootResult:
    """Invert g -> omega_g^{n-1}/(n-1)! on a strictly positive input.

    The exact route extracts the cofactor matrix C, takes the exact
    (n-1)-th root of det C for det g, and returns g = det(g) C^{-T}.  When
    the root does not exist in the field, a numeric Hermitian root is
    computed for the supplied parameter assignment and certified by the
    residual of the round trip.
    """
    n = alg.n
    field = alg.field
    C = power_form_matrix(alg, psi)
    detC = mat_det(field, C)
    if detC.is_zero:
        raise RootFailure("degenerate input form")
    detg = _nth_root_elem(field, detC, n - 1)
    if detg is not None:
        Cinv = mat_inv(field, C)
        g = [[Cinv[b][a] * detg for b in range(n)] for a in range(n)]
        try:
            struct = HermitianStructure(alg, g,
                                        check_positive=check_positive)
        except NotPositive:
            g = [[-x for x in row] for row in g]
            struct = HermitianStructure(alg, g,
                                        check_positive=check_positive)
        fact = 1
        for k in range(2, n):
            fact *= k
        back = struct._om_pows[n - 1] / fact
        if not (back - psi).is_zero:
            raise RootFailure("round trip failed on the exact root")
        return RootResult(True, g=struct.G)

    # numeric fallback for a concrete parameter assignment
    import numpy as np

    assign = dict(assign or {})
    Cn = np.array([[complex(field.eval_numeric(C[a][b], assign))
                    for b in range(n)] for a in range(n)])
    detCn = np.linalg.det(Cn)
    detgn = detCn ** (1.0 / (n - 1))
    best = None
    for j in range(2 * (n - 1)):
        cand = detgn * np.exp(2j * np.pi * j / (2 * (n - 1)))
        gn = cand * np.linalg.inv(Cn).T
        herm = np.max(np.abs(gn - gn.conj().T))
        eig = np.linalg.eigvalsh((gn + gn.conj().T) / 2)
        if herm < 1e-9 and np.min(eig) > 0:
            cof = np.linalg.det(gn) * np.linalg.inv(gn).T
            residual = float(np.max(np.abs(cof - Cn)))
            if best is None or residual < best[1]:
                best = (gn, residual)
    if best is None:
        raise RootFailure("no positive numeric root on this assignment")
    return RootResult(False, g_numeric=best[0], residual=best[1])


def random_metric(alg: CoframeAlgebra, rng: random.Random,
                  check_positive: bool = False) -> HermitianStructure:
    """Random Hermitian metric B B* + n Id with small Gaussian-rational B."""
    n = alg.n
    field = alg.field
    B = [[field.gaussian(Fraction(rng.randint(-2, 2), rng.randint(1, 3)),
                         Fraction(rng.randint(-2, 2), rng.randint(1, 3)))
          for _ in range(n)] for _ in range(n)]
    Bt = mat_conj_t(B)
    G = mat_mul(B, Bt)
    for a in range(n):
        G[a][a] = G[a][a] + n
    return HermitianStructure(alg, G, check_positive=check_positive)
