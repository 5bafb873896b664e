"""Chern connection of an invariant Hermitian structure.

The (0,1) part of the connection is the holomorphic-bundle operator and is
metric independent: on the invariant frame it is the (1,0) projection of the
mixed brackets.  The (1,0) part is pinned by metric compatibility.  Both
families of coefficients are exact field constants.

Curvature is computed two ways, as the matrix of 2-forms dGamma + Gamma^Gamma
and as frame commutators of covariant derivatives; agreement is a test-level
invariant, not assumed.  The first Ricci form is i times the curvature trace;
its sign convention makes the standard negatively curved 1-dimensional
example come out negative.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, List

from .field import Elem
from .coframe import CoframeAlgebra, InvForm, ScalarExpr
from .hodge import HermitianStructure, mat_inv, mat_solve


def eval_two_form(form: InvForm, x: int, y: int) -> ScalarExpr:
    """Value of a 2-form on the frame pair (Z_x, Z_y)."""
    alg = form.alg
    n = alg.n
    sign = 1
    if x == y:
        return ScalarExpr(alg, {})
    if x > y:
        x, y, sign = y, x, -1
    if y < n:
        key = ((x, y), ())
    elif x >= n:
        key = ((), (x - n, y - n))
    else:
        key = ((x,), (y - n,))
    c = form[key]
    return c if sign > 0 else -c


class ChernConnection:
    """Connection, torsion and curvature data of a Hermitian structure."""

    def __init__(self, h: HermitianStructure):
        self.h = h
        alg = h.alg
        self.alg = alg
        field = h.field
        self.field = field
        n = alg.n
        G, Ginv = h.G, h.Ginv

        # q[m][i][k]: Z_m coefficient of the (1,0) part of [Zbar_i, Z_k]
        q = [[[field.zero] * n for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for k in range(n):
                br = alg.bracket(n + i, k)
                for m, v in br.items():
                    if m < n:
                        q[m][i][k] = v
        self.q = q

        # gamma01[k][i][j]: nabla_{Zbar_i} Z_j = gamma01[k][i][j] Z_k
        self.gamma01 = [[[q[k][i][j] for j in range(n)] for i in range(n)]
                        for k in range(n)]

        # gamma10[l][i][j] from sum_l gamma10[l][i][j] g_{l kbar} =
        #   - sum_m g_{j mbar} conj(q[m][i][k])
        gamma10 = [[[field.zero] * n for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                rhs = [[-sum((G[j][m] * q[m][i][k].conj()
                              for m in range(1, n)),
                             G[j][0] * q[0][i][k].conj())]
                       for k in range(n)]
                sol = mat_solve(field, [[G[l][k] for l in range(n)]
                                        for k in range(n)], rhs)
                for l in range(n):
                    gamma10[l][i][j] = sol[l][0]
        self.gamma10 = gamma10

        # connection 1-forms Gamma^k_j
        self.gamma_form = [[InvForm.zero(alg) for _ in range(n)]
                           for _ in range(n)]
        for k in range(n):
            for j in range(n):
                f = InvForm.zero(alg)
                for i in range(n):
                    if not gamma10[k][i][j].is_zero:
                        f = f + alg.phi(i) * gamma10[k][i][j]
                    if not q[k][i][j].is_zero:
                        f = f + alg.phi(n + i) * q[k][i][j]
                self.gamma_form[k][j] = f

        # torsion coefficients T^k_{ij} and torsion 2-forms
        a = [[[field.zero] * n for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                for k, v in alg.bracket(i, j).items():
                    a[k][i][j] = v
                    a[k][j][i] = -v
        self.torsion = [[[gamma10[k][i][j] - gamma10[k][j][i] - a[k][i][j]
                          for j in range(n)] for i in range(n)]
                        for k in range(n)]
        self.torsion_forms = []
        for k in range(n):
            f = alg.phi(k).d()
            for j in range(n):
                f = f + self.gamma_form[k][j].wedge(alg.phi(j))
            self.torsion_forms.append(f)

        # curvature matrix of 2-forms
        self.curvature = [[self.gamma_form[k][j].d() for j in range(n)]
                          for k in range(n)]
        for k in range(n):
            for j in range(n):
                acc = self.curvature[k][j]
                for m in range(n):
                    acc = acc + self.gamma_form[k][m].wedge(
                        self.gamma_form[m][j])
                self.curvature[k][j] = acc

        tr = InvForm.zero(alg)
        for k in range(n):
            tr = tr + self.curvature[k][k]
        self.ricci_form = tr * field.i

    # -- connection matrices over all 2n letters ---------------------------------

    def gamma_matrix(self, x: int):
        """2n x 2n matrix M with nabla_{Z_x} Z_b = sum_c M[c][b] Z_c."""
        alg = self.alg
        n = alg.n
        field = self.field
        M = [[field.zero] * (2 * n) for _ in range(2 * n)]
        for b in range(n):
            for c in range(n):
                if x < n:
                    M[c][b] = self.gamma10[c][x][b]
                else:
                    M[c][b] = self.gamma01[c][x - n][b]
        # conjugate bundle: nabla_x conj(Z_b) = conj(nabla_{bar x} Z_b)
        xb = alg.bar(x)
        for b in range(n):
            for c in range(n):
                v = self.gamma10[c][xb][b] if xb < n else \
                    self.gamma01[c][xb - n][b]
                M[c + n][b + n] = v.conj()
        return M

    def curvature_operator(self, x: int, y: int):
        """R(Z_x, Z_y) on the (1,0) frame via covariant commutators."""
        alg = self.alg
        n = alg.n
        field = self.field

        def block(letter):
            M = self.gamma_matrix(letter)
            return [[M[c][b] for b in range(n)] for c in range(n)]

        A, B = block(x), block(y)

        def mul(P, Q):
            return [[sum((P[r][m] * Q[m][c] for m in range(1, n)),
                         P[r][0] * Q[0][c]) for c in range(n)]
                    for r in range(n)]

        R = mul(A, B)
        BA = mul(B, A)
        for r in range(n):
            for c in range(n):
                R[r][c] = R[r][c] - BA[r][c]
        for letter, coeff in alg.bracket(x, y).items():
            Gm = block(letter)
            for r in range(n):
                for c in range(n):
                    R[r][c] = R[r][c] - coeff * Gm[r][c]
        return R

    # -- Ricci data -----------------------------------------------------------------

    def ricci_matrix(self) -> List[List[Elem]]:
        """First Ricci contraction: trace on the endomorphism slots."""
        n = self.alg.n
        tr = self.ricci_form * (-self.field.i)
        return [[eval_two_form(tr, i, self.alg.n + j).as_constant()
                 for j in range(n)] for i in range(n)]

    def _full_lowered(self, k, l_bar, i, j):
        # R_{k lbar i jbar} = g_{m jbar} Omega^m_i(Z_k, Zbar_l)
        n = self.alg.n
        acc = self.field.zero
        for m in range(n):
            if self.h.G[m][j].is_zero:
                continue
            v = eval_two_form(self.curvature[m][i], k, n + l_bar)
            acc = acc + v.as_constant() * self.h.G[m][j]
        return acc

    def ricci2_matrix(self) -> List[List[Elem]]:
        """Second contraction: metric trace on the 2-form slots."""
        n = self.alg.n
        Ginv = self.h.Ginv
        out = [[self.field.zero] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                acc = self.field.zero
                for k in range(n):
                    for l in range(n):
                        up = Ginv[l][k]  # g^{k lbar}
                        if up.is_zero:
                            continue
                        acc = acc + up * self._full_lowered(k, l, i, j)
                out[i][j] = acc
        return out

    def ricci3_matrix(self) -> List[List[Elem]]:
        n = self.alg.n
        Ginv = self.h.Ginv
        return [[sum((Ginv[l][k] * self._full_lowered(i, l, k, j)
                      for k in range(n) for l in range(n)
                      if not Ginv[l][k].is_zero), self.field.zero)
                 for j in range(n)] for i in range(n)]

    def form_from_matrix(self, M) -> InvForm:
        """Real (1,1)-form i sum M_{ij} phi^i ^ phibar^j from a matrix."""
        alg = self.alg
        out = InvForm.zero(alg)
        for i in range(alg.n):
            for j in range(alg.n):
                if not M[i][j].is_zero:
                    out = out + InvForm.from_key(
                        alg, ((i,), (j,)),
                        ScalarExpr.constant(alg, M[i][j] * self.field.i))
        return out

    def scalar_curvature(self) -> Elem:
        return self.h.trace11(self.ricci_form).as_constant()

    def scalar_curvature_inner_route(self) -> Elem:
        return self.h.inner(self.ricci_form, self.h.omega).as_constant()

    # -- torsion contractions -----------------------------------------------------------

    def torsion_lowered(self):
        """T_{i j kbar} = g_{l kbar} T^l_{ij} (no half)."""
        n = self.alg.n
        G = self.h.G
        return [[[sum((G[l][k] * self.torsion[l][i][j]
                       for l in range(1, n)),
                      G[0][k] * self.torsion[0][i][j])
                  for k in range(n)] for j in range(n)] for i in range(n)]

    def torsion_square_matrix(self) -> List[List[Elem]]:
        """Q2_{i jbar}: full metric contraction of T with conj T."""
        n = self.alg.n
        Ginv = self.h.Ginv
        Tl = self.torsion_lowered()
        out = [[self.field.zero] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                acc = self.field.zero
                for l in range(n):
                    for k in range(n):
                        up1 = Ginv[k][l]  # g^{l kbar}
                        if up1.is_zero:
                            continue
                        for p in range(n):
                            for qq in range(n):
                                up2 = Ginv[qq][p]  # g^{p qbar}
                                if up2.is_zero:
                                    continue
                                t1 = Tl[l][p][j]
                                if t1.is_zero:
                                    continue
                                t2 = Tl[k][qq][i]
                                if t2.is_zero:
                                    continue
                                acc = acc + up1 * up2 * t1 * t2.conj()
                out[i][j] = acc
        return out

    def torsion_square_via_forms(self) -> List[List[ScalarExpr]]:
        """Gram matrix of the vector-contracted conjugate torsion forms.

        Contracting the value slot of the conjugated torsion against Z_i
        through the metric pairing gives an (0,2)-form for each i; their
        inner products reproduce half of Q2 (a checked normalization).
        """
        n = self.alg.n
        alg = self.alg
        jT = []
        for i in range(n):
            f = InvForm.zero(alg)
            for k in range(n):
                c = self.h.G[i][k] / 2
                if not c.is_zero:
                    f = f + self.torsion_forms[k].conj() * c
            jT.append(f)
        return [[self.h.inner(jT[i], jT[j]) for j in range(n)]
                for i in range(n)]

    def xi_form(self) -> InvForm:
        """The real (1,1)-form built from Q2."""
        return self.form_from_matrix(self.torsion_square_matrix())


class NotBalanced(Exception):
    """The requested computation needs a balanced metric."""


def _as_connection(g) -> ChernConnection:
    return g if isinstance(g, ChernConnection) else ChernConnection(g)


def torsion_quadratics(g):
    """(Q2 matrix, Xi form, squared torsion norm) of a structure."""
    conn = _as_connection(g)
    return (conn.torsion_square_matrix(), conn.xi_form(),
            conn.h.torsion_norm2())


def ricci3_equals_ricci1_balanced(g) -> bool:
    """Exact comparison of the first and third Ricci contractions."""
    conn = _as_connection(g)
    if not conn.h.is_balanced:
        raise NotBalanced("third-Ricci comparison needs a balanced metric")
    M1 = conn.ricci_matrix()
    M3 = conn.ricci3_matrix()
    n = conn.alg.n
    return all((M1[i][j] - M3[i][j]).is_zero
               for i in range(n) for j in range(n))


class IdentityReport:
    """Pass/fail record for a family of exact identities.

    ``residuals`` keeps the nonzero left-minus-right differences so a
    failure can be inspected; ``passed`` is True only when every single
    component vanished exactly.
    """

    def __init__(self, results, residuals=None):
        self.results = dict(results)
        self.residuals = dict(residuals or {})

    @property
    def passed(self) -> bool:
        return all(self.results.values())

    def __bool__(self) -> bool:
        return self.passed

    def as_json(self) -> dict:
        return {"passed": self.passed,
                "identities": {k: bool(v) for k, v in self.results.items()},
                "residuals": {k: str(v) for k, v in self.residuals.items()}}


def bianchi_identities(g) -> IdentityReport:
    """Contracted differential identities of the two Ricci contractions.

    Checks, with s the (constant) scalar trace, R1 the first and R2 the
    second Ricci form:

      div_first_ricci      dbar* R1 = i del s - (i/2) L2(R1 ^ del w)
      div_second_ricci     dbar* R2 = i del s - (i/2) L2(R2 ^ del w)
                                      - i L(del R2)
      laplace_first_ricci  i del* dbar* R1 = Lap s - g(R1, del* del w)
      laplace_second_ricci i del* dbar* R2 = Lap s - (1/2) L2(i del dbar R2)
                                      + 2 Re g(del R2, del w)
                                      - g(R2, del* del w)

    Every identity is evaluated as left minus right on the invariant
    frame; the report passes only if all components are exactly zero.
    """
    conn = _as_connection(g)
    h = conn.h
    if not h.is_balanced:
        raise NotBalanced("identity family needs a balanced metric")
    alg, field = conn.alg, conn.field
    i_ = field.i
    half = Fraction(1, 2)
    zero_key = ((), ())
    ric = conn.ricci_form
    ric2 = conn.form_from_matrix(conn.ricci2_matrix())
    s = conn.scalar_curvature()
    s_form = InvForm.from_key(alg, zero_key, ScalarExpr.constant(alg, s))
    dl = h.omega.del_()

    i_del_s = s_form.del_() * i_
    lap_s = h.lap_trace(ScalarExpr.constant(alg, s))

    results, residuals = {}, {}

    d1 = h.delbar_star(ric) - i_del_s \
        + h.lam2(ric.wedge(dl)) * (i_ * half)
    results["div_first_ricci"] = d1.is_zero
    if not d1.is_zero:
        residuals["div_first_ricci"] = d1

    d2 = h.delbar_star(ric2) - i_del_s \
        + h.lam2(ric2.wedge(dl)) * (i_ * half) \
        + h.lam(ric2.del_()) * i_
    results["div_second_ricci"] = d2.is_zero
    if not d2.is_zero:
        residuals["div_second_ricci"] = d2

    lhs3 = (h.del_star(h.delbar_star(ric)) * i_)[zero_key]
    rhs3 = lap_s - h.inner(ric, h.del_star(dl))
    d3 = lhs3 - rhs3
    results["laplace_first_ricci"] = d3.is_zero
    if not d3.is_zero:
        residuals["laplace_first_ricci"] = d3

    lhs4 = (h.del_star(h.delbar_star(ric2)) * i_)[zero_key]
    cross = h.inner(ric2.del_(), dl)
    rhs4 = lap_s \
        - (h.lam2(ric2.delbar().del_() * i_) * half)[zero_key] \
        + cross + cross.conj() \
        - h.inner(ric2, h.del_star(dl))
    d4 = lhs4 - rhs4
    results["laplace_second_ricci"] = d4.is_zero
    if not d4.is_zero:
        residuals["laplace_second_ricci"] = d4

    return IdentityReport(results, residuals)


# -- one-parameter canonical connection family ---------------------------------------

def _eval_three_form(form: InvForm, x: int, y: int, z: int) -> Elem:
    """Value of an invariant 3-form on the frame triple (Z_x, Z_y, Z_z)."""
    alg = form.alg
    n = alg.n
    field = alg.field
    args = (x, y, z)
    total = field.zero
    for (I, J), coeff in form.items():
        letters = list(I) + [n + j for j in J]
        acc = 0
        for perm in itertools.permutations(range(3)):
            if all(letters[s] == args[perm[s]] for s in range(3)):
                par = sum(1 for a in range(3) for b in range(a + 1, 3)
                          if perm[a] > perm[b])
                acc += -1 if par % 2 else 1
        if acc:
            total = total + coeff.as_constant() * Fraction(acc)
    return total


def canonical_family_matrices(h: HermitianStructure, t):
    """Connection matrices N[x] of the metric family member at parameter t.

    The family interpolates through the metric-compatible connections
    whose torsion is controlled by the two skew corrections below; t = 1
    reproduces the holomorphic-frame connection exactly (a checked
    calibration) and t = -1 the one with skew-symmetric torsion.
    Coefficients are real-frame Koszul data plus the two corrections
    built from i(dbar - del) of the fundamental form.
    """
    alg = h.alg
    n = alg.n
    field = h.field
    G = h.G
    m = 2 * n
    half = Fraction(1, 2)
    # real pairing of the complexified frame: <Z_i, conj Z_j> = G_ij / 2
    gram = [[field.zero] * m for _ in range(m)]
    for i in range(n):
        for j in range(n):
            gram[i][n + j] = G[i][j] * half
            gram[n + j][i] = G[i][j] * half
    gram_inv = mat_inv(field, gram)
    dc = (h.omega.delbar() - h.omega.del_()) * field.i

    def j_factor(x):
        return field.i if x < n else -field.i

    tf1 = field.coerce(Fraction(t - 1, 4) if isinstance(t, int)
                       else (Fraction(t) - 1) / 4)
    tf2 = field.coerce(Fraction(t + 1, 4) if isinstance(t, int)
                       else (Fraction(t) + 1) / 4)

    def koszul(a, b, c):
        acc = field.zero
        for mm, v in alg.bracket(a, b).items():
            acc = acc + v * gram[mm][c]
        for mm, v in alg.bracket(b, c).items():
            acc = acc - v * gram[mm][a]
        for mm, v in alg.bracket(c, a).items():
            acc = acc + v * gram[mm][b]
        return acc * half

    N = []
    for a in range(m):
        mat = [[field.zero] * m for _ in range(m)]
        for b in range(m):
            vals = []
            for c in range(m):
                e3 = _eval_three_form(dc, a, b, c)
                v = koszul(a, b, c)
                if not e3.is_zero:
                    v = v + tf1 * e3 \
                        + tf2 * e3 * j_factor(b) * j_factor(c)
                vals.append(v)
            for cc in range(m):
                acc = field.zero
                for dd in range(m):
                    if not vals[dd].is_zero:
                        acc = acc + vals[dd] * gram_inv[dd][cc]
                mat[cc][b] = acc
        N.append(mat)
    return N


def canonical_family_ricci(h: HermitianStructure, t):
    """First Ricci form of the family member at t, as values on frame pairs.

    Returns a dict (a, b) -> Elem for a < b over all 2n letters: minus one
    half of the trace of the complex structure composed with the curvature
    commutator of the connection matrices.
    """
    alg = h.alg
    n = alg.n
    field = h.field
    m = 2 * n
    N = canonical_family_matrices(h, t)

    def j_factor(x):
        return field.i if x < n else -field.i

    out = {}
    for a in range(m):
        for b in range(a + 1, m):
            R = [[field.zero] * m for _ in range(m)]
            for r in range(m):
                for c in range(m):
                    acc = field.zero
                    for k in range(m):
                        acc = acc + N[a][r][k] * N[b][k][c]
                        acc = acc - N[b][r][k] * N[a][k][c]
                    R[r][c] = acc
            for mm, v in alg.bracket(a, b).items():
                for r in range(m):
                    for c in range(m):
                        R[r][c] = R[r][c] - v * N[mm][r][c]
            tr = field.zero
            for p in range(m):
                tr = tr + j_factor(p) * R[p][p]
            out[(a, b)] = tr * Fraction(-1, 2)
    return out


class FamilyRicciReport:
    """Outcome of comparing the family Ricci forms with the reference one."""

    def __init__(self, equal: bool, witness_t=None, per_t=None):
        self.equal = equal
        self.witness_t = witness_t
        self.per_t = dict(per_t or {})

    def __bool__(self) -> bool:
        return self.equal

    def as_json(self) -> dict:
        return {"equal": self.equal,
                "witness_t": None if self.witness_t is None
                else str(self.witness_t),
                "per_t": {str(k): bool(v) for k, v in self.per_t.items()}}


def gauduchon_ricci_equal(g, t_values) -> FamilyRicciReport:
    """Whether the family Ricci form agrees with the reference one at each t.

    The reference is the first Ricci form of the holomorphic-frame
    connection.  Agreement at every real t characterizes balanced metrics,
    so a non-balanced input is expected to produce a witness t.
    """
    conn = _as_connection(g)
    h = conn.h
    ref = conn.ricci_form
    per_t = {}
    witness = None
    for t in t_values:
        ric_t = canonical_family_ricci(h, t)
        ok = True
        for (a, b), v in ric_t.items():
            w = eval_two_form(ref, a, b).as_constant()
            if not (v - w).is_zero:
                ok = False
                break
        per_t[t] = ok
        if not ok and witness is None:
            witness = t
    return FamilyRicciReport(witness is None, witness, per_t)
