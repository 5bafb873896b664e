"""Exterior-calculus and jet-calculus checks on small nilpotent coframes."""

import random

import pytest

from invherm.field import ScalarField, ParseError, UnknownParameter
from invherm.coframe import (
    AVG,
    CoframeAlgebra,
    CoframeError,
    InvForm,
    InvVector,
    JacobiFailure,
    JetOrderExceeded,
    NotIntegrable,
    ScalarExpr,
    UnsupportedAverage,
    algebra_from_strings,
)


@pytest.fixture(scope="module")
def field():
    return ScalarField(["t", "lam", "s", "pi"])


@pytest.fixture(scope="module")
def iwasawa(field):
    return algebra_from_strings(3, field, {2: "phi1^phi2"})


@pytest.fixture(scope="module")
def nakamura(field):
    return algebra_from_strings(3, field, {
        1: "-(lam/2)*(phi1+phi1bar)^phi2",
        2: "(lam/2)*(phi1+phi1bar)^phi3",
    })


@pytest.fixture(scope="module")
def torus(field):
    return CoframeAlgebra(2, field, {})


def test_structure_equations(iwasawa):
    alg = iwasawa
    assert alg.phi(0).d().is_zero
    assert alg.phi(1).d().is_zero
    assert alg.phi(2).d() == alg.parse_form("phi1^phi2")
    assert alg.phi(5).d() == alg.parse_form("phi1bar^phi2bar")


def test_torus_is_flat(torus):
    for x in range(4):
        assert torus.phi(x).d().is_zero
        for y in range(4):
            assert torus.bracket(x, y) == {}
    assert torus.unimodular


def test_not_integrable(field):
    with pytest.raises(NotIntegrable):
        algebra_from_strings(3, field, {0: "phi1bar^phi2bar"})


def test_jacobi_failure(field):
    with pytest.raises(JacobiFailure):
        algebra_from_strings(3, field, {0: "phi2^phi3", 1: "phi1^phi2"})


def test_bad_table_rows(field):
    with pytest.raises(CoframeError):
        CoframeAlgebra(2, field, {0: {(1, 1): field.one}})
    with pytest.raises(CoframeError):
        CoframeAlgebra(2, field, {5: {(0, 1): field.one}})
    with pytest.raises(CoframeError):
        algebra_from_strings(2, field, {0: "phi1^phi2^phi1bar"})


def test_wedge_signs(iwasawa):
    alg = iwasawa
    a, b = alg.phi(0), alg.phi(3)          # phi1, phi1bar
    assert a.wedge(b) == -(b.wedge(a))
    assert a.wedge(a).is_zero
    # frozen: phi1 ^ phi1bar carries key ((0,), (0,)) with coefficient 1
    w = a.wedge(b)
    assert list(w.terms) == [((0,), (0,))]
    assert w[((0,), (0,))] == 1
    # moving a barred letter past an unbarred one flips the sign
    c = alg.phi(3).wedge(alg.phi(1))       # phi1bar ^ phi2
    assert c[((1,), (0,))] == -1


def test_wedge_associative_random(iwasawa):
    rng = random.Random(20260816)
    for _ in range(10):
        a = iwasawa.random_form(rng, rng.randint(0, 2), rng.randint(0, 2))
        b = iwasawa.random_form(rng, rng.randint(0, 1), rng.randint(0, 1))
        c = iwasawa.random_form(rng, rng.randint(0, 1), rng.randint(0, 1))
        assert a.wedge(b).wedge(c) == a.wedge(b.wedge(c))


def test_conj_signs(iwasawa):
    alg = iwasawa
    g = alg.phi(0).wedge(alg.phi(4))       # phi1 ^ phi2bar
    assert g.conj() == -(alg.phi(1).wedge(alg.phi(3)))
    rng = random.Random(3)
    u = alg.register_scalar("cj_u") if "cj_u" not in alg._formal else None
    for _ in range(8):
        a = alg.random_form(rng, rng.randint(0, 2), rng.randint(0, 2),
                            jets=("cj_u",))
        b = alg.random_form(rng, rng.randint(0, 1), rng.randint(0, 1))
        assert a.conj().conj() == a
        assert a.wedge(b).conj() == a.conj().wedge(b.conj())


def test_d_leibniz_and_square_zero(iwasawa, nakamura):
    rng = random.Random(99)
    for alg, uname in ((iwasawa, "lz_u"), (nakamura, "lz_u")):
        alg.register_scalar(uname)
        for _ in range(12):
            p, q = rng.randint(0, 2), rng.randint(0, 2)
            a = alg.random_form(rng, p, q, jets=(uname,))
            b = alg.random_form(rng, rng.randint(0, 1), rng.randint(0, 1),
                                jets=(uname,))
            assert a.d().d().is_zero
            lhs = a.wedge(b).d()
            rhs = a.d().wedge(b) + a.wedge(b.d()) * ((-1) ** (p + q))
            assert lhs == rhs


def test_bidegree_split(iwasawa):
    alg = iwasawa
    f = alg.phi(2).wedge(alg.phi(5))       # phi3 ^ phi3bar
    assert f.del_() == alg.parse_form("phi1^phi2^phi3bar")
    assert f.delbar() == alg.parse_form("-phi3^phi1bar^phi2bar")
    assert f.d() == f.del_() + f.delbar()
    # del, delbar anticommute and square to zero here
    assert f.del_().del_().is_zero
    assert f.delbar().delbar().is_zero
    assert (f.del_().delbar() + f.delbar().del_()).is_zero


def test_jet_swap_rule(iwasawa):
    alg = iwasawa
    if "u" not in alg._formal:
        alg.register_scalar("u")
    # Z2 then Z1 applied to u: reordering costs the bracket [Z1, Z2] = -Z3
    j = alg.jet("u", (1, 0))
    assert j.terms == {(("u", (0, 1)),): alg.field.one,
                       (("u", (2,)),): -alg.field.one}
    # barred pair commutes with its unbarred partner on this coframe
    assert alg.jet("u", (3, 0)) == alg.jet("u", (0, 3))
    # derivative route agrees with the jet constructor
    u = ScalarExpr(alg, {(("u", ()),): alg.field.one})
    assert u.derive(1).derive(0) == j


def test_formal_scalar_ddu_zero(iwasawa, nakamura, field):
    solv = algebra_from_strings(2, field, {0: "phi1^phi2"})
    assert not solv.unimodular
    for alg in (iwasawa, nakamura, solv):
        name = "w_dd"
        if name not in alg._formal:
            alg.register_scalar(name)
        u = ScalarExpr(alg, {((name, ()),): alg.field.one})
        assert alg.d_scalar(u).d().is_zero


def test_jet_order_cap(iwasawa):
    if "u" not in iwasawa._formal:
        iwasawa.register_scalar("u")
    with pytest.raises(JetOrderExceeded):
        iwasawa.jet("u", (0, 0, 0, 0)).derive(1)


def test_characters(iwasawa, field):
    alg = iwasawa
    pi = field.param("pi")
    i = field.i
    with pytest.raises(CoframeError):
        alg.register_character("badchi", [0, 0, 1, 0, 0, 0])
    # admissible: no component along the non-closed letter
    mu = [pi * i, 2 * pi * i, field.zero,
          3 * pi * i, 4 * pi * i, field.zero]
    chi = alg.register_character("chi", mu)
    assert chi.derive(0) == chi * (pi * i)
    assert chi.derive(4) == chi * (4 * pi * i)
    assert chi.derive(2).is_zero
    # d of the character squares to zero through the form machinery
    assert alg.d_scalar(chi).d().is_zero
    # conjugate character is distinct here and involutive
    cc = chi.conj()
    assert cc != chi
    assert cc.conj() == chi
    assert chi.average().is_zero
    # eigenvalues of the conjugate: bar the letter, conjugate the value
    (name, _), = list(cc.terms)[0]
    assert alg._characters[name][0] == (mu[3]).conj()
    assert alg._characters[name][4] == (mu[1]).conj()


def test_average(iwasawa, field):
    alg = iwasawa
    name = "av_u"
    if name not in alg._formal:
        alg.register_scalar(name)
    u = ScalarExpr(alg, {((name, ()),): alg.field.one})
    assert u.average().terms == {((name, AVG),): field.one}
    assert u.derive(0).average().is_zero
    assert u.derive(3).derive(0).average().is_zero
    expr = u.derive(0) * 3 + u - 2
    avg = expr.average()
    assert avg.terms == {(): field.coerce(-2), ((name, AVG),): field.one}
    with pytest.raises(UnsupportedAverage):
        (u * u).average()
    # averaging needs unimodularity
    solv = algebra_from_strings(2, field, {0: "phi1^phi2"})
    v = solv.register_scalar("v")
    with pytest.raises(UnsupportedAverage):
        v.average()


def test_contraction(iwasawa):
    alg = iwasawa
    Z1 = alg.frame_vector(0)
    f = alg.parse_form("phi1^phi2bar + 2*phi2^phi3")
    assert Z1.contract(f) == alg.parse_form("phi2bar")
    Z1b = alg.frame_vector(3)
    assert Z1b.contract(alg.parse_form("phi1^phi1bar")) == \
        alg.parse_form("-phi1")
    # antiderivation property on random forms
    rng = random.Random(5)
    for _ in range(8):
        p, q = rng.randint(0, 2), rng.randint(0, 2)
        a = alg.random_form(rng, p, q)
        b = alg.random_form(rng, rng.randint(0, 1), rng.randint(0, 1))
        lhs = Z1.contract(a.wedge(b))
        rhs = Z1.contract(a).wedge(b) + a.wedge(Z1.contract(b)) * (
            (-1) ** (p + q))
        assert lhs == rhs


def test_vector_conj_and_apply(iwasawa):
    alg = iwasawa
    Z = alg.frame_vector(0) + alg.frame_vector(4) * alg.field.i
    W = Z.conj()
    assert W.comps.keys() == {3, 1}
    name = "vec_u"
    if name not in alg._formal:
        alg.register_scalar(name)
    u = ScalarExpr(alg, {((name, ()),): alg.field.one})
    assert Z.apply(u) == u.derive(0) + u.derive(4) * alg.field.i


def test_parse_forms(iwasawa, field):
    alg = iwasawa
    t = field.param("t")
    om = alg.parse_form("i/2*(phi1^phi1bar + phi2^phi2bar + t^2*phi3^phi3bar)")
    assert om.is_real
    assert om.homogeneous_bidegree() == (1, 1)
    top = om.wedge_power(3)
    key = alg.top_key()
    assert top[key] == field.i * t * t * 3 / 4
    assert alg.parse_form("(1+i)^2")[((), ())] == field.gaussian(0, 2)
    assert alg.parse_form("t^-1")[((), ())].as_constant() == field.one / t
    # the slash after an exponent divides the result
    om11 = alg.parse_form("phi1^phi1bar + phi2^phi2bar")
    assert alg.parse_form("(phi1^phi1bar + phi2^phi2bar)^2/2") == \
        alg.parse_form("phi1^phi1bar^phi2^phi2bar")
    assert om11.wedge_power(2) / 2 == alg.parse_form(
        "phi1^phi1bar^phi2^phi2bar")
    with pytest.raises(ParseError):
        alg.parse_form("phi1 phi2")
    with pytest.raises(UnknownParameter):
        alg.parse_form("q*phi1")
    with pytest.raises(ParseError):
        alg.parse_form("phi1^-1")
    with pytest.raises(ParseError):
        alg.parse_form("2/phi1")
    with pytest.raises(ParseError):
        alg.parse_form("phi9^phi1")


def test_brackets(iwasawa, nakamura, field):
    lam = field.param("lam")
    assert iwasawa.bracket(0, 1) == {2: -field.one}
    assert iwasawa.bracket(1, 0) == {2: field.one}
    assert iwasawa.bracket(0, 3) == {}
    assert nakamura.bracket(0, 1) == {1: lam / 2}
    assert nakamura.bracket(3, 1) == {1: lam / 2}
    assert nakamura.bracket(0, 2) == {2: -(lam / 2)}


def test_scalar_expr_ring(iwasawa, field):
    alg = iwasawa
    name = "ring_u"
    if name not in alg._formal:
        alg.register_scalar(name)
    u = ScalarExpr(alg, {((name, ()),): alg.field.one})
    t = field.param("t")
    e = (u + 1) * (u - 1)
    assert e == u * u - 1
    assert (e - u * u + 1).is_zero
    assert (u * t) / t == u
    f = u.derive(0) * u.derive(3)
    assert f.conj() == u.derive(3) * u.derive(0)
    assert (u ** 2) == u * u
    with pytest.raises(CoframeError):
        (u + 1).as_constant()
    assert ScalarExpr.constant(alg, 7).as_constant() == field.coerce(7)
