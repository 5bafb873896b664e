"""Builders for the standard invariant examples, with load-time verification.

Each entry couples a coframe algebra with named metrics, distinguished forms
(including the holomorphic volume form), and optional fibration metadata.
Nothing is trusted: declared metric properties (balanced, astheno, Chern-Ricci
flat, ...) are re-checked exactly when the entry is built, and the volume form
must be d- and delbar-closed.  A randomized search utility produces exactly
balanced rational metrics for any algebra, used to feed nontrivial inputs to
the identity test-suites.

Entry ids: iwasawa, nakamura, latorre_ugarte, lu4, fgv, agl, torus.  Entries
are immutable after construction; the search derives one RNG stream per trial
from the seed, so runs are reproducible and trials could be distributed.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional, Sequence

from .field import Elem, FieldError, PoleAtAssignment, ScalarField
from .coframe import CoframeAlgebra, InvForm, algebra_from_strings
from .hodge import (
    HermitianStructure,
    NotPositive,
    _det_sub,
    check_positive_definite,
    cofactor_form,
    mat_det,
    mat_inv,
    power_form_matrix,
    trace_sign_report,
)
from .chern import ChernConnection


class CatalogError(Exception):
    """Base error for catalog construction and lookup."""


class ConstraintViolation(CatalogError):
    """A builder parameter violates the family's stated constraint."""


class NoFibration(CatalogError):
    """The entry carries no holomorphic-fibration metadata."""


class Fibration:
    """Projection metadata: which coframe letters span base and fiber."""

    def __init__(self, base_letters: Sequence[int], fiber_letters: Sequence[int]):
        self.base_letters = tuple(base_letters)
        self.fiber_letters = tuple(fiber_letters)

    def __repr__(self):
        return f"Fibration(base={self.base_letters}, fiber={self.fiber_letters})"


_PRED_NAMES = ("balanced", "astheno", "kahler", "pluriclosed",
               "ricci_flat", "plurinegative")


class CatalogEntry:
    """A verified example: algebra + named metrics + distinguished forms.

    properties maps a metric name to the tuple of predicates it must satisfy;
    all of them are re-verified exactly in the constructor, which raises
    CatalogError on any mismatch.  Entries are immutable after that.
    """

    def __init__(self, id: str, alg: CoframeAlgebra, metrics: dict,
                 properties: dict, forms: dict,
                 fibration: Optional[Fibration] = None,
                 default_metric: Optional[str] = None,
                 info: Optional[dict] = None):
        self.id = id
        self.alg = alg
        self.field = alg.field
        self.metrics = dict(metrics)
        self.properties = {k: tuple(v) for k, v in properties.items()}
        self.forms = dict(forms)
        self.fibration = fibration
        self.default_metric = default_metric or next(iter(self.metrics))
        self.info = dict(info or {})
        self._structures: dict = {}
        self._verify()

    # -- access ---------------------------------------------------------------

    def structure(self, metric: Optional[str] = None) -> HermitianStructure:
        name = metric or self.default_metric
        if name not in self._structures:
            if name not in self.metrics:
                raise CatalogError(f"{self.id}: no metric named {name!r}")
            self._structures[name] = HermitianStructure(
                self.alg, self.metrics[name], samples=6, seed=11)
        return self._structures[name]

    def connection(self, metric: Optional[str] = None) -> ChernConnection:
        return ChernConnection(self.structure(metric))

    @property
    def theta(self) -> InvForm:
        return self.forms["theta"]

    # -- load-time verification -------------------------------------------

    def _verify(self):
        theta = self.forms.get("theta")
        if theta is not None:
            if not theta.d().is_zero:
                raise CatalogError(f"{self.id}: volume form is not d-closed")
            if not theta.delbar().is_zero:
                raise CatalogError(
                    f"{self.id}: volume form is not delbar-closed")
        for name in self.metrics:
            h = self.structure(name)
            for prop in self.properties.get(name, ()):
                if not self._holds(prop, h):
                    raise CatalogError(
                        f"{self.id}: metric {name!r} fails declared "
                        f"property {prop!r}")

    def _holds(self, prop: str, h: HermitianStructure) -> bool:
        if prop == "balanced":
            return h.is_balanced
        if prop == "astheno":
            return h.is_astheno
        if prop == "kahler":
            return h.is_kahler
        if prop == "pluriclosed":
            return h.is_pluriclosed
        if prop == "ricci_flat":
            return ChernConnection(h).ricci_form.is_zero
        if prop == "plurinegative":
            return trace_sign_report(h, h.omega).verdict is True
        raise CatalogError(f"{self.id}: unknown declared property {prop!r}")

    def __repr__(self):
        return (f"CatalogEntry({self.id!r}, n={self.alg.n}, "
                f"metrics={sorted(self.metrics)})")


# -- small constructors --------------------------------------------------------


def _diag(field: ScalarField, entries) -> list:
    n = len(entries)
    g = [[field.zero] * n for _ in range(n)]
    for k, e in enumerate(entries):
        g[k][k] = field.coerce(e)
    return g


def _identity_form(alg: CoframeAlgebra) -> InvForm:
    field = alg.field
    out = InvForm.zero(alg)
    for k in range(alg.n):
        out = out + InvForm.from_key(alg, ((k,), (k,)), field.i / 2)
    return out


def _theta(alg: CoframeAlgebra) -> InvForm:
    return InvForm.from_key(alg, (tuple(range(alg.n)), ()), alg.field.one)


def _gaussian_parts(x) -> tuple:
    """Coerce x to (re, im) Fractions; raises ConstraintViolation otherwise."""
    try:
        if isinstance(x, (tuple, list)) and len(x) == 2:
            return Fraction(x[0]), Fraction(x[1])
        if isinstance(x, complex):
            return Fraction(x.real), Fraction(x.imag)
        return Fraction(x), Fraction(0)
    except (TypeError, ValueError) as exc:
        raise ConstraintViolation(
            f"parameter {x!r} is not a Gaussian rational") from exc


def _fmt_gaussian(field: ScalarField, re: Fraction, im: Fraction) -> str:
    return f"({field.gaussian(re, im)})"


# -- builders -------------------------------------------------------------------


def iwasawa() -> CatalogEntry:
    """Complex Heisenberg quotient: d(phi3) = phi1 ^ phi2, metrics diag(1,1,t^2).

    The metric family is balanced and Chern-Ricci flat for every t, and the
    manifold fibers holomorphically over a four-torus with one-dimensional
    fibers spanned by the third coframe letter.
    """
    field = ScalarField(["t"])
    alg = algebra_from_strings(3, field, {2: "phi1^phi2"})
    t = field.param("t")
    g = _diag(field, [field.one, field.one, t * t])
    return CatalogEntry(
        "iwasawa", alg,
        metrics={"omega_t": g},
        properties={"omega_t": ("balanced", "ricci_flat")},
        forms={"theta": _theta(alg)},
        fibration=Fibration((0, 1), (2,)),
        default_metric="omega_t",
        info={"lattice": "Gaussian-integer Heisenberg lattice; "
                         "metadata only, never used in computations"})


def nakamura(n: int = 2, lambdas: Optional[Sequence] = None) -> CatalogEntry:
    """Completely solvable quotient with weights lambda_1..lambda_n summing to 0.

    Structure rows: d(phi^{j}) = -(lambda_j/2)(phi^0 + phibar^0) ^ phi^j in
    zero-based letters 1..n, with letter 0 spanning the direction transverse
    to the abelian part.  With lambdas omitted and n = 2 the weights are kept
    symbolic as (lam, -lam).  The volume form is closed exactly because the
    weights sum to zero, and its norm is constant.
    """
    if not isinstance(n, int) or n < 2:
        raise ConstraintViolation("nakamura requires n >= 2")
    if lambdas is None:
        if n != 2:
            raise ConstraintViolation(
                "symbolic weights are only kept for n = 2; "
                "pass explicit rational lambdas for larger n")
        field = ScalarField(["t", "lam"])
        rows = {1: "-(lam/2)*(phi1+phi1bar)^phi2",
                2: "(lam/2)*(phi1+phi1bar)^phi3"}
        info = {"lambdas": "symbolic (lam, -lam)"}
    else:
        try:
            if any(isinstance(l, float) for l in lambdas):
                raise TypeError("float weight")
            lams = [Fraction(l) for l in lambdas]
        except (TypeError, ValueError) as exc:
            raise ConstraintViolation(
                "lambdas must be rationals") from exc
        if len(lams) != n:
            raise ConstraintViolation("nakamura needs n weights")
        if sum(lams) != 0:
            raise ConstraintViolation("sum(lambda_j) = 0 is required")
        if all(l == 0 for l in lams):
            raise ConstraintViolation(
                "at least one lambda_j must be nonzero")
        field = ScalarField(["t"])
        rows = {}
        for j, l in enumerate(lams, start=1):
            if l == 0:
                continue
            c = field.from_rational(-l / 2)
            rows[j] = f"({c})*(phi1+phi1bar)^phi{j + 1}"
        info = {"lambdas": tuple(lams)}
    alg = algebra_from_strings(n + 1, field, rows)
    t = field.param("t")
    g = _diag(field, [t * t] + [field.one] * n)
    info["lattice"] = ("semidirect-product lattice from a totally real "
                       "unit (tau) and a Gaussian-integer ideal (P); "
                       "metadata only")
    return CatalogEntry(
        "nakamura", alg,
        metrics={"omega_t": g},
        properties={"omega_t": ("balanced", "ricci_flat")},
        forms={"theta": _theta(alg)},
        fibration=Fibration(tuple(range(1, n + 1)), (0,)),
        default_metric="omega_t",
        info=info)


def _diagonal_astheno_candidate(alg: CoframeAlgebra) -> Optional[list]:
    """Search the diagonal family for an astheno metric, one slot at a time.

    The astheno form del delbar (omega^{n-2}) has coefficients multilinear in
    the diagonal entries, so fixing all but one slot leaves a linear equation;
    each slot is tried in turn and the first consistent positive solution is
    returned as a Fraction diagonal, None when no slot works.
    """
    field = alg.field
    n = alg.n

    def cond(diag):
        om = InvForm.zero(alg)
        for k, dk in enumerate(diag):
            if dk:
                om = om + InvForm.from_key(
                    alg, ((k,), (k,)), field.from_rational(dk) * field.i / 2)
        f = om.wedge_power(n - 2).delbar().del_()
        return {key: expr.as_constant() for key, expr in f.terms.items()}

    order = list(range(n - 2, -1, -1)) + [n - 1]
    for slot in order:
        diag = [Fraction(1)] * n
        diag[slot] = Fraction(0)
        c0 = cond(diag)
        diag[slot] = Fraction(1)
        c1 = cond(diag)
        keys = set(c0) | set(c1)
        if not keys:
            return [Fraction(1)] * n
        sol = None
        consistent = True
        for key in keys:
            a0 = c0.get(key, field.zero)
            a1 = c1.get(key, field.zero)
            slope = a1 - a0
            if slope.is_zero:
                if not a0.is_zero:
                    consistent = False
                    break
                continue
            re, im = (-(a0 / slope)).constant_value()
            if im != 0 or (sol is not None and sol != re):
                consistent = False
                break
            sol = re
        if consistent and sol is not None and sol > 0:
            diag[slot] = sol
            return diag
    return None


def latorre_ugarte(n: int = 4, a: Sequence = (1, 1, -2)) -> CatalogEntry:
    """Nilpotent family in dimension n >= 4 with one non-closed coframe letter.

    d(phi^n) = sum_i a_i phi^i ^ phibar^i with nonzero rational a_i summing
    to zero.  The identity metric is balanced and Chern-Ricci flat; when the
    diagonal family contains an astheno metric (it does for the default
    weights), it is attached under the name "astheno".
    """
    if not isinstance(n, int) or n < 4:
        raise ConstraintViolation("latorre_ugarte requires n >= 4")
    try:
        if any(isinstance(x, float) for x in a):
            raise TypeError("float weight")
        aa = [Fraction(x) for x in a]
    except (TypeError, ValueError) as exc:
        raise ConstraintViolation("weights a_i must be rationals") from exc
    if len(aa) != n - 1:
        raise ConstraintViolation("a must have n - 1 entries")
    if any(x == 0 for x in aa):
        raise ConstraintViolation("a_i != 0 is required for every i")
    if sum(aa) != 0:
        raise ConstraintViolation("sum(a_i) = 0 is required")
    field = ScalarField([])
    row = " + ".join(
        f"({field.from_rational(x)})*phi{i + 1}^phi{i + 1}bar"
        for i, x in enumerate(aa))
    alg = algebra_from_strings(n, field, {n - 1: row})
    metrics = {"identity": _diag(field, [field.one] * n)}
    properties = {"identity": ("balanced", "ricci_flat")}
    cand = _diagonal_astheno_candidate(alg)
    if cand is not None:
        metrics["astheno"] = _diag(field, [field.from_rational(x)
                                           for x in cand])
        properties["astheno"] = ("astheno", "ricci_flat")
    return CatalogEntry(
        "latorre_ugarte", alg, metrics, properties,
        forms={"theta": _theta(alg)},
        fibration=Fibration(tuple(range(n - 1)), (n - 1,)),
        default_metric="identity",
        info={"a": tuple(aa)})


def lu4(A=1, B=1, C=1) -> CatalogEntry:
    """Three-parameter four-dimensional nilpotent family over Q(i).

    d(phi^4) = A phi^{12} + B phi^{13} + C phi^{23}
               + phi^{1 1bar} + phi^{2 2bar} - 2 phi^{3 3bar}.
    The identity metric is balanced and Chern-Ricci flat for every choice of
    the parameters; a diagonal astheno metric is attached when the linear
    slot-search finds one (the (2,0)-coefficients shift its location).
    """
    field = ScalarField([])
    parts = []
    for coeff, mono in ((A, "phi1^phi2"), (B, "phi1^phi3"), (C, "phi2^phi3")):
        re, im = _gaussian_parts(coeff)
        if re == 0 and im == 0:
            continue
        parts.append(f"{_fmt_gaussian(field, re, im)}*{mono}")
    parts.append("phi1^phi1bar + phi2^phi2bar - 2*phi3^phi3bar")
    alg = algebra_from_strings(4, field, {3: " + ".join(parts)})
    metrics = {"identity": _diag(field, [field.one] * 4)}
    properties = {"identity": ("balanced", "ricci_flat")}
    cand = _diagonal_astheno_candidate(alg)
    if cand is not None:
        metrics["astheno"] = _diag(field, [field.from_rational(x)
                                           for x in cand])
        properties["astheno"] = ("astheno", "ricci_flat")
    return CatalogEntry(
        "lu4", alg, metrics, properties,
        forms={"theta": _theta(alg)},
        fibration=Fibration((0, 1, 2), (3,)),
        default_metric="identity",
        info={"A": A, "B": B, "C": C})


def fgv() -> CatalogEntry:
    """Two-torus principal bundle over a six-torus, encoded by its coframe.

    Derivation of the structure constants: let theta^1, theta^2 be connection
    one-forms on the total space whose curvatures are the pullbacks of the two
    integral characteristic forms

        c_1 = e^{1 1bar} + e^{2 2bar} - 2 e^{3 3bar},
        c_2 = e^{2 2bar} - e^{3 3bar},

    written in the flat base coframe e^1, e^2, e^3.  The complex combination
    phi^4 := theta^1 + i theta^2 then satisfies

        d(phi^4) = pi^* c_1 + i pi^* c_2
                 = phi^{1 1bar} + (1+i) phi^{2 2bar} - (2+i) phi^{3 3bar},

    which is the single structure row below; no surface geometry enters.  The
    two named metrics are pi^*(flat) + theta^1 ^ theta^2 and
    pi^*diag(1,1,5) + theta^1 ^ theta^2, using theta^1 ^ theta^2 =
    (i/2) phi^4 ^ phibar^4; the first is balanced, the second astheno, and
    both are Chern-Ricci flat.
    """
    field = ScalarField([])
    alg = algebra_from_strings(
        4, field,
        {3: "phi1^phi1bar + (1+i)*phi2^phi2bar - (2+i)*phi3^phi3bar"})
    one = field.one
    metrics = {
        "omega_1": _diag(field, [one, one, one, one]),
        "omega_2": _diag(field, [one, one, field.coerce(5), one]),
    }
    properties = {
        "omega_1": ("balanced", "ricci_flat"),
        "omega_2": ("astheno", "ricci_flat"),
    }
    return CatalogEntry(
        "fgv", alg, metrics, properties,
        forms={"theta": _theta(alg)},
        fibration=Fibration((0, 1, 2), (3,)),
        default_metric="omega_1")


def agl(rho: int = 1, lam=0, D=-1) -> CatalogEntry:
    """Six-real-dimensional nilpotent family with one non-closed letter.

    d(phi^3) = rho phi^{12} + phi^{1 1bar} + lam phi^{1 2bar} + D phi^{2 2bar}
    with rho in {0, 1}, rational lam >= 0 and Gaussian-rational D with
    Im(D) >= 0.  Every invariant metric is Chern-Ricci flat.  A balanced
    metric exists precisely when the inverse-matrix condition
    G'_{11} + D G'_{22} + lam conj(G'_{12}) = 0 has a positive-definite
    solution, which happens for lam = 0, D real negative (take the identity
    scaled along the first slot) and for lam^4 > 4 Re(D) lam^2 + 4 Im(D)^2;
    it is attached as "balanced" when present.  Every invariant metric is
    plurinegative exactly when lam^2 - 2 Re(D) + 1 <= 0, in which case the
    identity fundamental form is attached as the distinguished form
    "omega_prime".
    """
    if rho not in (0, 1):
        raise ConstraintViolation("rho must be 0 or 1")
    try:
        lamq = Fraction(lam)
    except (TypeError, ValueError) as exc:
        raise ConstraintViolation("lam must be rational") from exc
    if lamq < 0:
        raise ConstraintViolation("lam >= 0 is required")
    dr, di = _gaussian_parts(D)
    if di < 0:
        raise ConstraintViolation("Im(D) >= 0 is required")
    field = ScalarField([])
    parts = []
    if rho:
        parts.append("phi1^phi2")
    parts.append("phi1^phi1bar")
    if lamq != 0:
        parts.append(f"({field.from_rational(lamq)})*phi1^phi2bar")
    if dr != 0 or di != 0:
        parts.append(f"{_fmt_gaussian(field, dr, di)}*phi2^phi2bar")
    alg = algebra_from_strings(3, field, {2: " + ".join(parts)})
    one = field.one
    metrics = {"identity": _diag(field, [one, one, one])}
    properties = {"identity": ("ricci_flat",)}
    forms = {"theta": _theta(alg)}
    default = "identity"

    gprime = None
    if lamq == 0:
        if di == 0 and dr < 0:
            gprime = _diag(field, [field.from_rational(-dr), one, one])
    elif lamq ** 4 > 4 * dr * lamq ** 2 + 4 * di ** 2:
        half = Fraction(1, 2)
        gprime = [
            [field.from_rational(-dr + half * lamq ** 2),
             field.gaussian(-half * lamq, di / lamq), field.zero],
            [field.gaussian(-half * lamq, -di / lamq), one, field.zero],
            [field.zero, field.zero, one]]
    if gprime is not None:
        metrics["balanced"] = mat_inv(field, gprime)
        properties["balanced"] = ("balanced", "ricci_flat")
        default = "balanced"

    if lamq ** 2 - 2 * dr + 1 <= 0:
        forms["omega_prime"] = _identity_form(alg)
        properties["identity"] = ("ricci_flat", "plurinegative")

    return CatalogEntry(
        "agl", alg, metrics, properties, forms,
        fibration=Fibration((0, 1), (2,)),
        default_metric=default,
        info={"rho": rho, "lam": lamq, "D": (dr, di)})


def torus(n: int = 3) -> CatalogEntry:
    """Flat abelian quotient: every structure row vanishes."""
    if not isinstance(n, int) or n < 1:
        raise ConstraintViolation("torus requires n >= 1")
    field = ScalarField([])
    alg = algebra_from_strings(n, field, {})
    props = ["kahler", "balanced", "pluriclosed", "ricci_flat"]
    if n >= 3:
        props.append("astheno")
    return CatalogEntry(
        "torus", alg,
        metrics={"flat": _diag(field, [field.one] * n)},
        properties={"flat": tuple(props)},
        forms={"theta": _theta(alg)},
        fibration=None,
        default_metric="flat")


_BUILDERS = {
    "iwasawa": iwasawa,
    "nakamura": nakamura,
    "latorre_ugarte": latorre_ugarte,
    "lu4": lu4,
    "fgv": fgv,
    "agl": agl,
    "torus": torus,
}

_SUMMARIES = {
    "iwasawa": "complex Heisenberg quotient, metrics diag(1,1,t^2)",
    "nakamura": "completely solvable quotient with weights summing to zero",
    "latorre_ugarte": "nilpotent family, n >= 4, one non-closed letter",
    "lu4": "three-parameter four-dimensional nilpotent family over Q(i)",
    "fgv": "two-torus bundle over a six-torus via characteristic classes",
    "agl": "six-real-dimensional nilpotent family with plurinegative range",
    "torus": "flat abelian quotient",
}


def list_examples() -> list:
    """Sorted (id, one-line summary) pairs for every registered builder."""
    return [(k, _SUMMARIES[k]) for k in sorted(_BUILDERS)]


def build_example(id: str, **params) -> CatalogEntry:
    """Dispatch to the named builder; parameters are builder-specific."""
    if id not in _BUILDERS:
        known = ", ".join(sorted(_BUILDERS))
        raise CatalogError(f"unknown example id {id!r}; known ids: {known}")
    return _BUILDERS[id](**params)


# -- fibration form -------------------------------------------------------------


class FibrationReport:
    """Result of the fibration form construction with its three checks."""

    def __init__(self, form: InvForm, closed: bool, wedge_positive: bool,
                 trace_ok: bool, trace_scalar: Elem, messages: list):
        self.form = form
        self.closed = closed
        self.wedge_positive = wedge_positive
        self.trace_ok = trace_ok
        self.trace_scalar = trace_scalar
        self.messages = list(messages)

    @property
    def ok(self) -> bool:
        return self.closed and self.wedge_positive and self.trace_ok

    def __repr__(self):
        flags = (f"closed={self.closed}, wedge_positive={self.wedge_positive}"
                 f", trace_ok={self.trace_ok}")
        return f"FibrationReport({flags})"


def _nonpositive_at_samples(field: ScalarField, e: Elem,
                            samples: int = 12, seed: int = 7) -> bool:
    """True when the element is real and <= 0 at every sampled assignment."""
    try:
        re, im = e.constant_value()
        return im == 0 and re <= 0
    except FieldError:
        pass
    rng = random.Random(seed)
    done = 0
    attempts = 0
    while done < samples and attempts < samples * 4:
        attempts += 1
        assign = {name: Fraction(rng.randint(2, 8), 4)
                  for name in field.params}
        try:
            re, im = field.substitute(e, assign).constant_value()
        except PoleAtAssignment:
            continue
        if im != 0 or re > 0:
            return False
        done += 1
    return done > 0


def fibration_omega(entry: CatalogEntry,
                    metric: Optional[str] = None) -> FibrationReport:
    """Candidate (n-2,n-2)-form pulled back from the fibration base.

    Builds ((i/2) sum over base letters of phi^{a abar})^{n-2} and reports
    whether it is closed, whether its wedge with the entry's metric form is
    positive at sampled assignments, and whether the trace of its i del delbar
    against that metric is nonpositive.  Raises NoFibration when the entry
    has no fibration metadata.
    """
    if entry.fibration is None:
        raise NoFibration(f"{entry.id} has no fibration metadata")
    alg = entry.alg
    field = entry.field
    n = alg.n
    base = InvForm.zero(alg)
    for a in entry.fibration.base_letters:
        base = base + InvForm.from_key(alg, ((a,), (a,)), field.i / 2)
    form = base.wedge_power(n - 2)
    h = entry.structure(metric)
    messages = []

    closed = form.d().is_zero
    if not closed:
        messages.append("candidate form is not closed")

    Cmat = power_form_matrix(alg, h.omega.wedge(form))
    try:
        check_positive_definite(field, Cmat, samples=8, seed=3)
        wedge_positive = True
    except NotPositive as exc:
        wedge_positive = False
        messages.append(f"wedge positivity fails: {exc}")

    rep = trace_sign_report(h, form)
    if rep.verdict is not None:
        trace_ok = rep.verdict
    else:
        trace_ok = _nonpositive_at_samples(field, rep.scalar)
    if not trace_ok:
        messages.append(
            f"trace condition fails at sampled parameters: {rep.condition}")
    return FibrationReport(form, closed, wedge_positive, trace_ok,
                           rep.scalar, messages)


# -- randomized balanced search --------------------------------------------------


def _mpq_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def _elem_monomials(e: Elem) -> dict:
    """Split a field element into {parameter monomial: (re, im) Fractions}.

    The denominator must be parameter-free; catalog structure rows always
    satisfy that.
    """
    raw = e.raw
    num, den = raw.numer, raw.denom
    if not den.is_ground:
        raise CatalogError("element denominator carries parameters")
    dc = den.LC
    if hasattr(dc, "x"):
        dx, dy = _mpq_fraction(dc.x), _mpq_fraction(dc.y)
    else:
        dx, dy = _mpq_fraction(dc), Fraction(0)
    nrm = dx * dx + dy * dy
    out = {}
    for monom, c in num.terms():
        if hasattr(c, "x"):
            cx, cy = _mpq_fraction(c.x), _mpq_fraction(c.y)
        else:
            cx, cy = _mpq_fraction(c), Fraction(0)
        out[monom] = ((cx * dx + cy * dy) / nrm, (cy * dx - cx * dy) / nrm)
    return out


def _hermitian_basis(field: ScalarField, n: int) -> list:
    """Real basis of Hermitian matrices: n diagonal units first, then the
    symmetric and antisymmetric off-diagonal pairs."""
    basis = []
    for k in range(n):
        M = [[field.zero] * n for _ in range(n)]
        M[k][k] = field.one
        basis.append(M)
    for a in range(n):
        for b in range(a + 1, n):
            M = [[field.zero] * n for _ in range(n)]
            M[a][b] = field.one
            M[b][a] = field.one
            basis.append(M)
            M2 = [[field.zero] * n for _ in range(n)]
            M2[a][b] = field.i
            M2[b][a] = -field.i
            basis.append(M2)
    return basis


def _closedness_rows(alg: CoframeAlgebra, basis: list) -> list:
    """Rational linear system expressing d(cofactor_form(C)) = 0 in the
    Hermitian coordinates of C."""
    m = len(basis)
    rows = {}
    for k, B in enumerate(basis):
        dpsi = cofactor_form(alg, B).d()
        for key, expr in dpsi.terms.items():
            for monom, (re, im) in _elem_monomials(expr.as_constant()).items():
                if re != 0:
                    rows.setdefault((key, monom, 0),
                                    [Fraction(0)] * m)[k] = re
                if im != 0:
                    rows.setdefault((key, monom, 1),
                                    [Fraction(0)] * m)[k] = im
    return list(rows.values())


def _rational_kernel(rows: list, m: int) -> list:
    """Basis of the null space of the given rational rows in Q^m."""
    if not rows:
        out = []
        for k in range(m):
            v = [Fraction(0)] * m
            v[k] = Fraction(1)
            out.append(v)
        return out
    mat = [r[:] for r in rows]
    pivots = []
    r = 0
    for c in range(m):
        piv = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = mat[r][c]
        mat[r] = [x / inv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    free = [c for c in range(m) if c not in pivots]
    out = []
    for fc in free:
        v = [Fraction(0)] * m
        v[fc] = Fraction(1)
        for rr, pc in enumerate(pivots):
            v[pc] = -mat[rr][fc]
        out.append(v)
    return out


def _positive_const(field: ScalarField, M) -> bool:
    """Exact positive-definiteness of a constant Hermitian matrix via
    leading principal minors."""
    n = len(M)
    for k in range(n):
        idx = tuple(range(k + 1))
        try:
            re, im = _det_sub(field, M, idx, idx).constant_value()
        except FieldError:
            return False
        if im != 0 or re <= 0:
            return False
    return True


def _assemble(field: ScalarField, basis: list, vec: Sequence) -> list:
    n = len(basis[0])
    M = [[field.zero] * n for _ in range(n)]
    for k, ck in enumerate(vec):
        if ck == 0:
            continue
        ce = field.from_rational(ck)
        Bk = basis[k]
        for a in range(n):
            for b in range(n):
                if not Bk[a][b].is_zero:
                    M[a][b] = M[a][b] + ce * Bk[a][b]
    return M


def _positive_kernel_member(field: ScalarField, basis: list,
                            kernel_diag: list, kernel: list):
    """A positive-definite matrix inside the closed cone, when a simple
    combination of kernel vectors yields one; used to shift random candidates
    into the positive cone."""
    m = len(basis)
    candidates = []
    for vecs in (kernel_diag, kernel):
        if vecs:
            for sgn in (1, -1):
                candidates.append([sgn * sum(v[k] for v in vecs)
                                   for k in range(m)])
            for v in vecs:
                candidates.append(v)
                candidates.append([-x for x in v])
    for vec in candidates:
        M = _assemble(field, basis, vec)
        if _positive_const(field, M):
            return M
    return None


def random_balanced_search(alg: CoframeAlgebra, trials: int,
                           seed: int = 0) -> list:
    """Random exactly-balanced rational metrics on the given algebra.

    Candidates are random rational Hermitian positive matrices built so that
    the top-power form they induce lies in the closed cone (the metric g is
    recovered from a closed positive (n-1,n-1)-form C via g = det(C) C^{-T});
    every candidate is then filtered by the exact balanced predicate before
    being returned.  Odd trials restrict the sampling to diagonal matrices so
    diagonal family members show up alongside generic ones.  One RNG stream
    is derived per trial from the seed, making runs reproducible trial by
    trial.
    """
    if trials < 1:
        raise CatalogError("trials must be >= 1")
    field = alg.field
    n = alg.n
    basis = _hermitian_basis(field, n)
    rows = _closedness_rows(alg, basis)
    kernel = _rational_kernel(rows, len(basis))
    kernel_diag = [v + [Fraction(0)] * (len(basis) - n)
                   for v in _rational_kernel([r[:n] for r in rows], n)]
    booster = _positive_kernel_member(field, basis, kernel_diag, kernel)
    results = []
    for tr in range(trials):
        rng = random.Random(f"{seed}:{tr}")
        vecs = kernel_diag if tr % 2 else kernel
        if not vecs:
            vecs = kernel
        if not vecs:
            continue
        C = None
        # rejection-resample inside the trial until the candidate is
        # positive, shifting along a positive cone member when one exists
        for _ in range(8):
            coeffs = [Fraction(rng.randint(-6, 6), rng.choice((1, 2, 3)))
                      for _ in vecs]
            comb = [sum((c * v[k] for c, v in zip(coeffs, vecs)),
                        Fraction(0)) for k in range(len(basis))]
            cand = _assemble(field, basis, comb)
            if _positive_const(field, cand):
                C = cand
                break
            if booster is not None:
                for mfac in (2, 4, 8, 16, 32):
                    mf = field.coerce(mfac)
                    shifted = [[cand[a][b] + mf * booster[a][b]
                                for b in range(n)] for a in range(n)]
                    if _positive_const(field, shifted):
                        C = shifted
                        break
            if C is not None:
                break
        if C is None:
            continue
        detC = mat_det(field, C)
        Cinv = mat_inv(field, C)
        g = [[Cinv[b][a] * detC for b in range(n)] for a in range(n)]
        h = HermitianStructure(alg, g, check_positive=False)
        if h.is_balanced:
            results.append(g)
    return results


# -- serialization ----------------------------------------------------------------


def form_to_string(form: InvForm) -> str:
    """Canonical parseable text for an invariant form with constant
    coefficients."""
    bits = []
    for key in sorted(form.terms):
        I, J = key
        coeff = form.terms[key].as_constant()
        letters = [f"phi{k + 1}" for k in I] + [f"phi{k + 1}bar" for k in J]
        if letters:
            bits.append(f"({coeff})*" + "^".join(letters))
        else:
            bits.append(f"({coeff})")
    return " + ".join(bits) if bits else "0"


def to_manifold_spec(entry: CatalogEntry) -> dict:
    """Entry's algebra as a manifold-spec mapping: n, parameters, d-rows."""
    alg = entry.alg
    d = {}
    for k in range(alg.n):
        row = alg.phi(k).d()
        if not row.is_zero:
            d[f"phi{k + 1}"] = form_to_string(row)
    return {"n": alg.n,
            "parameters": list(entry.field.params),
            "d": d}


def metric_json(entry: CatalogEntry, metric: Optional[str] = None) -> dict:
    """Named metric as a parseable string matrix."""
    name = metric or entry.default_metric
    if name not in entry.metrics:
        raise CatalogError(f"{entry.id}: no metric named {name!r}")
    g = entry.metrics[name]
    return {"g": [[str(e) for e in row] for row in g]}
