"""Metric-structure checks: star, adjointness, torsion norms, root map."""

import random
from fractions import Fraction

import pytest

from invherm.field import ScalarField
from invherm.coframe import InvForm, ScalarExpr, algebra_from_strings
from invherm.hodge import (
    HermitianStructure,
    NotHermitian,
    NotPositive,
    michelsohn_root,
    power_form_matrix,
    random_metric,
)


@pytest.fixture(scope="module")
def field():
    return ScalarField(["t", "lam", "pi"])


@pytest.fixture(scope="module")
def iwasawa(field):
    return algebra_from_strings(3, field, {2: "phi1^phi2"})


@pytest.fixture(scope="module")
def h_t(iwasawa, field):
    t = field.param("t")
    z, o = field.zero, field.one
    return HermitianStructure(iwasawa, [[o, z, z], [z, o, z], [z, z, t * t]])


@pytest.fixture(scope="module")
def h_rand(iwasawa):
    return random_metric(iwasawa, random.Random(5))


def test_validation(iwasawa, field):
    z, o = field.zero, field.one
    with pytest.raises(NotHermitian):
        HermitianStructure(iwasawa, [[o, o, z], [z, o, z], [z, z, o]])
    with pytest.raises(NotPositive):
        HermitianStructure(iwasawa, [[o, z, z], [z, -o, z], [z, z, o]])
    with pytest.raises(NotPositive):
        # positive diagonal but indefinite (large off-diagonal pair)
        g = [[o, 2 * o, z], [2 * o, o, z], [z, z, o]]
        HermitianStructure(iwasawa, g)


def test_omega_norm_is_dimension(h_t, h_rand, field):
    assert h_t.norm2(h_t.omega) == ScalarExpr.constant(h_t.alg, 3)
    assert h_rand.norm2(h_rand.omega) == ScalarExpr.constant(h_rand.alg, 3)
    fgv = algebra_from_strings(
        4, field,
        {3: "phi1^phi1bar + (1+i)*phi2^phi2bar - (2+i)*phi3^phi3bar"})
    I4 = [[field.one if a == b else field.zero for b in range(4)]
          for a in range(4)]
    h4 = HermitianStructure(fgv, I4)
    assert h4.norm2(h4.omega) == ScalarExpr.constant(fgv, 4)


def test_unit_and_volume(h_t):
    alg = h_t.alg
    one = InvForm.scalar(alg, 1)
    assert h_t.inner(one, one) == ScalarExpr.constant(alg, 1)
    assert h_t.star(one) == h_t.vol
    assert h_t.star(h_t.vol) == one
    # vol = omega^3 / 3! has top coefficient i t^2 / 8
    t = h_t.field.param("t")
    assert h_t.v_top == h_t.field.i * t * t / 8


def test_star_pairing_property(h_t, h_rand, iwasawa):
    rng = random.Random(1)
    for h in (h_t, h_rand):
        for _ in range(10):
            a_, b_ = rng.randint(0, 3), rng.randint(0, 3)
            alpha = iwasawa.random_form(rng, b_, a_)
            gamma = iwasawa.random_form(rng, a_, b_)
            lhs = alpha.wedge(h.star(gamma))
            rhs = h.vol * h.inner(alpha, gamma.conj())
            assert (lhs - rhs).is_zero


def test_star_involution(h_t, iwasawa):
    rng = random.Random(2)
    for p, q in [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (3, 2), (3, 3)]:
        a = iwasawa.random_form(rng, p, q)
        assert h_t.star(h_t.star(a)) == a * ((-1) ** (p + q))
        assert h_t.star_inv(h_t.star(a)) == a


def test_lefschetz_adjointness(h_t, h_rand, iwasawa):
    rng = random.Random(3)
    for h in (h_t, h_rand):
        for _ in range(6):
            p, q = rng.randint(1, 3), rng.randint(1, 3)
            a = iwasawa.random_form(rng, p - 1, q - 1)
            b = iwasawa.random_form(rng, p, q)
            assert h.inner(h.L(a), b) == h.inner(a, h.lam(b))
        assert h.lam(h.omega) == InvForm.scalar(iwasawa, 3)


def test_lam_is_trace_on_11(h_t, h_rand, iwasawa):
    rng = random.Random(4)
    for h in (h_t, h_rand):
        for _ in range(6):
            a = iwasawa.random_form(rng, 1, 1)
            assert h.lam(a) == InvForm.from_key(iwasawa, ((), ()),
                                                h.trace11(a))


def test_lam2_against_wedge_route(h_t, h_rand, iwasawa):
    # n = 3: Lam^2(beta) vol = 2 beta ^ omega for any (2,2)-form
    rng = random.Random(6)
    for h in (h_t, h_rand):
        for _ in range(4):
            b = iwasawa.random_form(rng, 2, 2)
            sc = h.lam2(b)[((), ())]
            assert (h.vol * sc - b.wedge(h.omega) * 2).is_zero


def test_codifferential_adjointness(h_t, h_rand, iwasawa):
    rng = random.Random(7)
    for h in (h_t, h_rand):
        for _ in range(6):
            p, q = rng.randint(0, 2), rng.randint(0, 2)
            a = iwasawa.random_form(rng, p, q)
            b = iwasawa.random_form(rng, p, q + 1)
            assert h.inner(a.delbar(), b) == h.inner(a, h.delbar_star(b))
            c = iwasawa.random_form(rng, p + 1, q)
            assert h.inner(a.del_(), c) == h.inner(a, h.del_star(c))
            assert h.d_star(c) == h.del_star(c) + h.delbar_star(c)


def test_star_of_torsion_form(h_t, h_rand):
    # del(omega) is primitive here, so star acts as multiplication by i
    for h in (h_t, h_rand):
        dom = h.omega.del_()
        assert h.lam(dom).is_zero
        assert h.star(dom) == dom * h.field.i


def test_torsion_norm(h_t, field):
    t = field.param("t")
    assert h_t.torsion_norm2() == ScalarExpr.constant(h_t.alg, 2 * t ** 2)


def test_scalar_laplacians_flat(field):
    F2 = ScalarField(["pi"])
    T = algebra_from_strings(2, F2, {})
    pi, i = F2.param("pi"), F2.i
    k = [F2.coerce(1), F2.coerce(2)]
    mu = [pi * i * k[0].conj(), pi * i * k[1].conj(),
          pi * i * k[0], pi * i * k[1]]
    chi = T.register_character("chi", mu)
    hT = HermitianStructure(T, [[F2.one, F2.zero], [F2.zero, F2.one]])
    # trace Laplacian eigenvalue -2 pi^2 |k|^2 (here |k|^2 = 5)
    assert hT.lap_trace(chi) == chi * (-10) * pi * pi
    lb = hT.lap_delbar(InvForm.from_key(T, ((), ()), chi))[((), ())]
    assert (lb + hT.lap_trace(chi)).is_zero


def test_lap_delbar_is_minus_trace_on_balanced(h_t):
    alg = h_t.alg
    name = "hl_u"
    if name not in alg._formal:
        alg.register_scalar(name)
    u = ScalarExpr(alg, {((name, ()),): alg.field.one})
    lapb = h_t.lap_delbar(InvForm.from_key(alg, ((), ()), u))[((), ())]
    assert (lapb + h_t.lap_trace(u)).is_zero


def test_balanced_predicates(h_t, h_rand, field):
    assert h_t.is_balanced and h_t.lee_form().is_zero
    assert not h_t.is_kahler
    # every invariant metric on this coframe is balanced
    assert h_rand.is_balanced
    # a coframe with nonvanishing trace part is not balanced at the identity
    agl = algebra_from_strings(3, field,
                               {2: "phi1^phi1bar + i*phi2^phi2bar"})
    I3 = [[field.one if a == b else field.zero for b in range(3)]
          for a in range(3)]
    h = HermitianStructure(agl, I3)
    assert not h.is_balanced
    theta = h.lee_form()
    one = field.one
    expected = (agl.phi(2) * (one - field.i)
                + agl.phi(5) * (one + field.i))
    assert theta == expected
    assert h.is_gauduchon
    assert (theta.wedge(h._om_pows[2]) - h._om_pows[2].d()).is_zero


def test_astheno_balanced_pair(field):
    fgv = algebra_from_strings(
        4, field,
        {3: "phi1^phi1bar + (1+i)*phi2^phi2bar - (2+i)*phi3^phi3bar"})
    I4 = [[field.one if a == b else field.zero for b in range(4)]
          for a in range(4)]
    h1 = HermitianStructure(fgv, I4)
    g2 = [row[:] for row in I4]
    g2[2][2] = field.coerce(5)
    h2 = HermitianStructure(fgv, g2)
    assert h1.is_balanced and not h1.is_astheno
    assert h2.is_astheno and not h2.is_balanced
    assert h1.is_gauduchon and h2.is_gauduchon


def test_michelsohn_root_exact(h_t, h_rand, iwasawa):
    for h in (h_t, h_rand):
        psi = h._om_pows[2] / 2
        res = michelsohn_root(iwasawa, psi)
        assert res.exact
        assert all((res.g[a][b] - h.G[a][b]).is_zero
                   for a in range(3) for b in range(3))


def test_michelsohn_root_numeric(iwasawa, field):
    # cofactor matrix diag(1,1,2): det = 2 has no exact square root
    s0 = -1
    ifac = (field.i / 2) ** 2
    Cv = [[field.one, field.zero, field.zero],
          [field.zero, field.one, field.zero],
          [field.zero, field.zero, field.coerce(2)]]
    full = (0, 1, 2)
    psi = InvForm.zero(iwasawa)
    for a in range(3):
        for b in range(3):
            if Cv[a][b].is_zero:
                continue
            key = (tuple(x for x in full if x != a),
                   tuple(x for x in full if x != b))
            minor = Cv[a][b] if (a + b) % 2 == 0 else -Cv[a][b]
            psi = psi + InvForm.from_key(
                iwasawa, key, ScalarExpr.constant(iwasawa, minor * ifac * s0))
    back = power_form_matrix(iwasawa, psi)
    assert all((back[a][b] - Cv[a][b]).is_zero
               for a in range(3) for b in range(3))
    res = michelsohn_root(iwasawa, psi, assign={"t": 1, "lam": 1, "pi": 1})
    assert not res.exact
    assert res.residual < 1e-10
    import numpy as np
    eig = np.linalg.eigvalsh(res.g_numeric)
    assert np.min(eig) > 0
