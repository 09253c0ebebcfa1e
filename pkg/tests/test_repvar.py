import json

import numpy as np
import pytest

from charvol.fixtures import fixture_text, load_fixture
from charvol.manifold import parse_spec
from charvol.matrices import random_sl2, regauge, numeric_word_matrix, sl2_inverse
from charvol.repvar import (GaugedSystem, NoCompleteStructureError, RepVarError,
                            apply_twist, enumerate_twists, find_complete,
                            irreducibility_defect, make_character_point, on_V,
                            restriction_traces, thurston_rank)


def test_build_gauged_system_fig8(fig8_system):
    # one relator in balanced form: four entry equations over (s, p, t)
    assert fig8_system.vars == ("s", "p", "t")
    assert len(fig8_system.system) == 4
    assert fig8_system.has_slots


def test_build_gauged_free_group():
    doc = json.loads(fixture_text("abelian"))
    doc["relators"] = []
    doc["cusps"] = [{"meridian": [1], "longitude": [1]}]
    doc["name"] = "free2"
    spec = parse_spec(json.dumps(doc))
    gs = GaugedSystem(spec)
    # no relators: only the gauge parametrization, a 3-dimensional slice
    assert len(gs.system) == 0
    assert len(gs.vars) == 3


def test_build_gauged_rejects_one_generator():
    doc = json.loads(fixture_text("abelian"))
    doc.update(name="rank1", generators=1, relators=[],
               cusps=[{"meridian": [1], "longitude": [1]}])
    spec = parse_spec(json.dumps(doc))
    with pytest.raises(RepVarError):
        GaugedSystem(spec)


def test_third_generator_gets_det_equation():
    doc = json.loads(fixture_text("abelian"))
    doc.update(name="threegen", generators=3,
               relators=[[1, 2, -1, -2], [3, 1, -3, -1]],
               cusps=[{"meridian": [1], "longitude": [2]}])
    spec = parse_spec(json.dumps(doc))
    gs = GaugedSystem(spec)
    assert len(gs.vars) == 7
    assert len(gs.system) == 2 * 4 + 1  # two relators + det - 1


# -- complete structures -----------------------------------------------------

def test_fig8_complete(fig8_spec, fig8_system, fig8_complete):
    pt = fig8_complete
    assert pt.residual < 1e-12
    assert pt.orientation == 1
    for c in pt.cusps:
        assert abs(c.trace_m ** 2 - 4) < 1e-10
        assert abs(c.trace_l ** 2 - 4) < 1e-10
    assert pt.validate()
    assert on_V(pt)


def test_wlink_complete(wlink_complete):
    assert wlink_complete.residual < 1e-12
    assert len(wlink_complete.cusps) == 2
    assert all(abs(c.trace_m ** 2 - 4) < 1e-10 for c in wlink_complete.cusps)


def test_complete_conjugate_seed_flagged(fig8_spec, fig8_system):
    conj = tuple(np.conj(M) for M in fig8_spec.seed_representation)
    pt = find_complete(fig8_spec, fig8_system, start_matrices=conj)
    assert pt.orientation == -1


def test_complete_thurston_rank(fig8_spec, fig8_system, fig8_complete,
                                wlink_spec, wlink_system, wlink_complete):
    assert thurston_rank(fig8_system, fig8_complete) == 1
    assert thurston_rank(wlink_system, wlink_complete) == 2


@pytest.mark.parametrize("name", ["abelian", "nonhyp"])
def test_controls_have_no_complete_structure(name):
    spec = load_fixture(name)
    with pytest.raises(NoCompleteStructureError):
        find_complete(spec, GaugedSystem(spec), multistart=20)


def test_newton_reconverges_from_perturbation(fig8_system, fig8_complete):
    """The boundary-parabolic system (all unit slots pinned) is full rank at
    the complete structure; a 1e-3 perturbation reconverges to the point."""
    rng = np.random.default_rng(0)
    x0 = fig8_complete.coords + 1e-3 * (rng.normal(size=3) + 1j * rng.normal(size=3))
    from charvol.repvar import _newton_lstsq
    from charvol.poly import CompiledSystem, Polynomial
    V, lau = fig8_system.vars, fig8_system.laurent
    pins = [Polynomial.variable(n, V, lau) - Polynomial.constant(1, V, lau)
            for n in ("s", "p")]
    x, res = _newton_lstsq([fig8_system.compiled, CompiledSystem(pins, V)], x0)
    assert res < 1e-12
    assert np.max(np.abs(x - fig8_complete.coords)) < 1e-10


# -- traces, V, character points ------------------------------------------------

def test_restriction_traces_vector(fig8_complete):
    z = restriction_traces(fig8_complete)
    assert z.shape == (3,)
    assert abs(z[0] - 2) < 1e-10 and abs(z[1] + 2) < 1e-10


def test_restriction_traces_conjugation_invariant(fig8_system, fig8_fillings):
    # conjugate a generic (non-parabolic) representation and re-gauge; the
    # parabolic complete structure has defective eigenvectors and no gauge
    rng = np.random.default_rng(4)
    _, filled, _ = fig8_fillings[0]
    mats = fig8_system.matrices(filled.coords)
    C = random_sl2(rng)
    conj = [C @ M @ sl2_inverse(C) for M in mats]
    coords = regauge(conj)
    pt = make_character_point(fig8_system, coords)
    assert np.max(np.abs(restriction_traces(pt) -
                         restriction_traces(filled))) < 1e-8


def test_on_V_cases(fig8_complete, fig8_fillings):
    assert on_V(fig8_complete)
    _, filled, path = fig8_fillings[0]
    assert not on_V(filled)
    # a point with meridian trace well away from +-2 is off V
    mid = path.points[len(path) // 2]
    assert not on_V(mid)


def test_diagonal_representation_traces():
    z, w = 0.7 + 0.4j, 1.3 - 0.2j
    A = np.diag([z, 1 / z])
    B = np.diag([w, 1 / w])
    assert abs(np.trace(numeric_word_matrix((1,), [A, B])) - (z + 1 / z)) < 1e-12


# -- twists ---------------------------------------------------------------------

def test_enumerate_twists_counts(fig8_spec, wlink_spec):
    assert len(enumerate_twists(fig8_spec)) == 2
    assert len(enumerate_twists(wlink_spec)) == 4


def test_enumerate_twists_trivial_only():
    doc = json.loads(fixture_text("abelian"))
    doc.update(name="killed", relators=[[1], [2]],
               cusps=[{"meridian": [1], "longitude": [2]}])
    spec = parse_spec(json.dumps(doc))
    tws = enumerate_twists(spec)
    assert len(tws) == 1 and tws[0].is_trivial()


def test_apply_twist_involution_and_signs(fig8_spec, fig8_system, fig8_complete):
    tw = [t for t in enumerate_twists(fig8_spec) if not t.is_trivial()][0]
    pt2 = apply_twist(fig8_complete, tw, fig8_system)
    sm = tw.on_word(fig8_system.cusps[0].meridian)
    assert abs(pt2.cusps[0].trace_m - sm * fig8_complete.cusps[0].trace_m) < 1e-12
    assert pt2.residual < 1e-10
    pt3 = apply_twist(pt2, tw, fig8_system)
    assert np.max(np.abs(pt3.coords - fig8_complete.coords)) < 1e-12


def test_apply_twist_trivial_identity(fig8_spec, fig8_system, fig8_complete):
    triv = [t for t in enumerate_twists(fig8_spec) if t.is_trivial()][0]
    pt = apply_twist(fig8_complete, triv, fig8_system)
    assert np.max(np.abs(pt.coords - fig8_complete.coords)) == 0


def test_apply_twist_preserves_even_sign_words(fig8_spec, fig8_system, fig8_fillings):
    """Traces of words on which the sign character is trivial are preserved."""
    from charvol.poly import trace_poly
    _, pt, _ = fig8_fillings[0]
    tw = [t for t in enumerate_twists(fig8_spec) if not t.is_trivial()][0]
    pt2 = apply_twist(pt, tw, fig8_system)
    for w in [(1, 2), (1, -2), (1, 1), (1, 2, 1, 2), (2, -1, -2, 1)]:
        if tw.on_word(w) != 1:
            continue
        tp = trace_poly(w, fig8_system.gen_syms)
        assert abs(tp.evaluate(pt.coords) - tp.evaluate(pt2.coords)) < 1e-9


def test_apply_twist_same_psl2_character(fig8_spec, fig8_system, fig8_fillings):
    """Twisting scales every trace by +-1: squares of traces are preserved."""
    _, pt, _ = fig8_fillings[0]
    tw = [t for t in enumerate_twists(fig8_spec) if not t.is_trivial()][0]
    pt2 = apply_twist(pt, tw, fig8_system)
    k1 = fig8_system.char_key(pt.coords)
    k2 = fig8_system.char_key(pt2.coords)
    assert np.max(np.abs(k1 ** 2 - k2 ** 2)) < 1e-9


def test_irreducibility_defect(fig8_system, fig8_complete):
    assert irreducibility_defect(fig8_system, fig8_complete.coords) > 1e-3
