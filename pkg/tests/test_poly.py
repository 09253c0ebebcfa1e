import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charvol.gaussian import GaussianRational, I as GI, ONE
from charvol.poly import (CompiledSystem, Polynomial, PolySystem, ResultantError,
                          SymMatrix2, VariableMismatchError, exact_div, poly_gcd,
                          resultant, squarefree_part, trace_poly, word_matrix)

V = ("x", "y", "z")


def var(name, power=1):
    return Polynomial.variable(name, V, power=power)


def const(c):
    return Polynomial.constant(c, V)


coef = st.integers(min_value=-4, max_value=4)
exponent = st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2))


@st.composite
def polys(draw, max_terms=5):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        e = draw(exponent)
        c = GaussianRational(draw(coef), draw(coef))
        if c:
            terms[e] = c
    return Polynomial(V, terms)


# -- gaussian rationals ------------------------------------------------------

def test_gaussian_field_ops():
    a = GaussianRational(1, 2)
    b = GaussianRational("1/3", "-2/7")
    assert (a * b) * b.inverse() == a
    assert (a + b) - b == a
    assert complex(GI * GI) == -1
    assert a * a.inverse() == ONE


def test_gaussian_rejects_inexact_floats():
    with pytest.raises(TypeError):
        GaussianRational(0.5)
    assert GaussianRational(2.0) == GaussianRational(2)


# -- arithmetic --------------------------------------------------------------

def test_add_cancels():
    x = var("x")
    assert (x + (-x)).is_zero()


def test_gaussian_product():
    x = var("x")
    p = (x + const(GI)) * (x - const(GI))
    assert p == x * x + const(1)


def test_laurent_unit_product():
    W = ("m",)
    m = Polynomial.variable("m", W, laurent=frozenset({"m"}))
    minv = Polynomial.variable("m", W, laurent=frozenset({"m"}), power=-1)
    assert (m * minv) == Polynomial.constant(1, W, frozenset({"m"}))


def test_variable_mismatch_raises():
    p = var("x")
    q = Polynomial.variable("x", ("x", "y"))
    with pytest.raises(VariableMismatchError):
        p + q


@settings(max_examples=60)
@given(polys(), polys(), polys())
def test_ring_axioms(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert p * (q + r) == p * q + p * r
    assert (p * q) * r == p * (q * r)
    assert p * q == q * p


# -- evaluation ---------------------------------------------------------------

def test_evaluate_examples():
    x = var("x")
    assert abs((x * x + const(1)).evaluate([1j, 0, 0])) < 1e-15
    W = ("m",)
    m = Polynomial.variable("m", W, laurent=frozenset({"m"}))
    minv = Polynomial.variable("m", W, laurent=frozenset({"m"}), power=-1)
    assert abs((m + minv).evaluate([1.0]) - 2) < 1e-15


def test_evaluate_zero_laurent_raises():
    W = ("m",)
    minv = Polynomial.variable("m", W, laurent=frozenset({"m"}), power=-1)
    with pytest.raises(ZeroDivisionError):
        minv.evaluate([0.0])


@settings(max_examples=40)
@given(polys())
def test_evaluate_matches_term_sum_oracle(p):
    rng = np.random.default_rng(11)
    pt = rng.normal(size=3) + 1j * rng.normal(size=3)
    # brute-force term-by-term oracle
    expected = 0j
    for e, c in p.terms.items():
        term = complex(c)
        for z, k in zip(pt, e):
            term *= z ** k
        expected += term
    assert abs(p.evaluate(pt) - expected) <= 1e-9 * max(1.0, abs(expected))


# -- differentiation -----------------------------------------------------------

def test_differentiate_laurent():
    W = ("m",)
    lau = frozenset({"m"})
    m = Polynomial.variable("m", W, laurent=lau)
    minv = Polynomial.variable("m", W, laurent=lau, power=-1)
    d = (m + minv).differentiate("m")
    expect = Polynomial.constant(1, W, lau) - Polynomial(
        W, {(-2,): ONE}, lau)
    assert d == expect


def test_differentiate_constant_and_unknown_var():
    assert const(7).differentiate("x").is_zero()
    with pytest.raises(ValueError):
        const(7).differentiate("w")


@settings(max_examples=30)
@given(polys())
def test_differentiate_matches_central_difference(p):
    rng = np.random.default_rng(5)
    pt = rng.normal(size=3) + 1j * rng.normal(size=3)
    h = 1e-6
    d = p.differentiate("x")
    up = p.evaluate([pt[0] + h, pt[1], pt[2]])
    dn = p.evaluate([pt[0] - h, pt[1], pt[2]])
    fd = (up - dn) / (2 * h)
    exact = d.evaluate(pt)
    assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


@settings(max_examples=30)
@given(polys(), polys())
def test_derivative_linearity_and_product_rule(p, q):
    dx = lambda f: f.differentiate("y")
    assert dx(p + q) == dx(p) + dx(q)
    assert dx(p * q) == dx(p) * q + p * dx(q)


# -- division, gcd, resultants ---------------------------------------------------

def test_exact_div_roundtrip():
    x, y = var("x"), var("y")
    f = (x + y) * (x * x - const(GI) * y)
    assert exact_div(f, x + y) == x * x - const(GI) * y
    with pytest.raises(ValueError):
        exact_div(x * x + const(1), x + const(1))


def test_poly_gcd_common_factor():
    x, y = var("x"), var("y")
    g = x * y - const(2)
    f1 = g * (x + const(1))
    f2 = g * (y + const(GI))
    got = poly_gcd(f1, f2)
    lead = max(g.terms)
    assert got == g.scale(g.terms[lead].inverse())


def test_squarefree_part():
    x, y = var("x"), var("y")
    p = (x - y) * (x - y) * (x + const(2))
    sq = squarefree_part(p, "x")
    assert sq.degree("x") == 2
    assert exact_div(p, x - y).degree("x") == 2


def test_resultant_linear_pair():
    W = ("x", "a", "b")
    x = Polynomial.variable("x", W)
    a = Polynomial.variable("a", W)
    b = Polynomial.variable("b", W)
    r = resultant(x - a, x - b, "x")
    assert r == a - b or r == b - a


def test_resultant_quadratic():
    W = ("x", "c", "d")
    x = Polynomial.variable("x", W)
    c = Polynomial.variable("c", W)
    d = Polynomial.variable("d", W)
    r = resultant(x * x - c, x - d, "x")
    assert r == d * d - c


def test_resultant_degree_zero_errors():
    x = var("x")
    with pytest.raises(ResultantError):
        resultant(x, const(3), "x")


def test_resultant_vanishes_iff_common_root():
    x, y = var("x"), var("y")
    f = (x - y) * (x + const(1))
    g = (x - y) * (x - const(2))
    assert resultant(f, g, "x").is_zero()
    g2 = (x + y) * (x - const(2))
    r = resultant(f, g2, "x")
    assert not r.is_zero()


# -- matrices and words -----------------------------------------------------------

def _gauge_gens():
    W = ("s", "p", "t")
    lau = frozenset({"s", "p"})
    s = Polynomial.variable("s", W, lau)
    sinv = Polynomial.variable("s", W, lau, power=-1)
    p = Polynomial.variable("p", W, lau)
    pinv = Polynomial.variable("p", W, lau, power=-1)
    t = Polynomial.variable("t", W, lau)
    one = Polynomial.constant(1, W, lau)
    zero = Polynomial.constant(0, W, lau)
    return [SymMatrix2(s, one, zero, sinv), SymMatrix2(p, zero, t, pinv)]


def test_word_matrix_identity_and_inverse():
    gens = _gauge_gens()
    E = word_matrix((), gens)
    assert E.a == Polynomial.constant(1, E.a.vars, E.a.laurent)
    assert E.b.is_zero() and E.c.is_zero()
    AAinv = word_matrix((1, -1), gens)
    assert AAinv.a == E.a and AAinv.b.is_zero() and AAinv.c.is_zero()
    single = word_matrix((1,), gens)
    assert single.a == gens[0].a and single.b == gens[0].b


def test_trace_examples():
    gens = _gauge_gens()
    assert trace_poly((), gens) == Polynomial.constant(2, gens[0].a.vars, gens[0].a.laurent)
    tr = trace_poly((1,), gens)
    s = Polynomial.variable("s", tr.vars, tr.laurent)
    sinv = Polynomial.variable("s", tr.vars, tr.laurent, power=-1)
    assert tr == s + sinv


def test_trace_conjugation_invariance_numeric():
    """tr(w) equals tr of the reversed-inverse conjugate at random points."""
    gens = _gauge_gens()
    rng = np.random.default_rng(2)
    w = (1, 2, -1, 2, 2, -1)
    winv = tuple(-g for g in reversed(w))
    t1 = trace_poly(w, gens)
    t2 = trace_poly(winv, gens)
    for _ in range(10):
        pt = rng.normal(size=3) + 1j * rng.normal(size=3)
        assert abs(t1.evaluate(pt) - t2.evaluate(pt)) < 1e-9 * max(1, abs(t1.evaluate(pt)))


# -- systems, serialization, compilation ----------------------------------------

def test_polysystem_shares_ordering():
    with pytest.raises(VariableMismatchError):
        PolySystem([var("x"), Polynomial.variable("x", ("x",))], V)


def test_serialization_roundtrip():
    p = var("x") * const(GaussianRational("3/7", "-1/2")) + var("y") ** 3
    d = p.to_json()
    assert d["vars"] == list(V)
    q = Polynomial.from_json(d)
    assert q == p


def test_compiled_system_matches_evaluate():
    rng = np.random.default_rng(9)
    x, y, z = (var(n) for n in V)
    ps = [x * y - z ** 2 + const(GI), (x + y + const(1)) ** 2]
    cs = CompiledSystem(ps, V)
    for _ in range(5):
        pt = rng.normal(size=3) + 1j * rng.normal(size=3)
        vals, J = cs.values_and_jacobian(pt)
        for k, p in enumerate(ps):
            assert abs(vals[k] - p.evaluate(pt)) < 1e-12 * max(1, abs(vals[k]))
            for j, name in enumerate(V):
                d = p.differentiate(name).evaluate(pt)
                assert abs(J[k, j] - d) < 1e-12 * max(1, abs(d))
