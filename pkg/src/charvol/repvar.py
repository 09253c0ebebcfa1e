"""Gauge-fixed SL2(C) representation variety of a presented group.

The documented gauge puts generator 1 upper-triangular with unit upper-right
entry and generator 2 lower-triangular; any further generators stay full 2x2
matrices with det - 1 adjoined.  Its zero locus is a slice of the
representation variety on which conjugation freedom is spent, so generic
irreducible characters appear finitely often.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .manifold import ManifoldSpec, relator_matrix, gf2_nullspace
from .matrices import (GaugeError, eigenvector_pairing, gauge_coord_names,
                       gauge_matrices, numeric_word_matrix, regauge)
from .poly import (CompiledSystem, Polynomial, PolySystem, SymMatrix2,
                   trace_poly, word_matrix)
from .words import Word, invert_word, sign_character

TWO_PI_I = 2j * cmath.pi


class RepVarError(ValueError):
    pass


class NoCompleteStructureError(RepVarError):
    pass


def build_gauged_system(spec: ManifoldSpec) -> "GaugedSystem":
    """Construct the gauge-fixed representation-variety system for a spec."""
    return GaugedSystem(spec)


def _balanced_relator_split(r: Word) -> tuple[Word, Word]:
    """Split r = r1 * r2' and return (r1, inverse(r2')); the equations
    W(r1) - W(inv r2') = 0 cut the same locus as W(r) = E at half the degree."""
    half = (len(r) + 1) // 2
    return tuple(r[:half]), invert_word(r[half:])


@dataclass
class CuspFunctions:
    """Peripheral data attached to one cusp of a gauged system."""
    index: int
    meridian: Word
    longitude: Word
    trace_m: Polynomial
    trace_l: Polynomial
    trace_ml: Polynomial
    # eigenvalue slot data: (m, l) are read along a coordinate eigenvector
    # (e1 for a generator-1 meridian, e2 for a generator-2 meridian)
    m_poly: Optional[Polynomial] = None
    l_poly: Optional[Polynomial] = None


class GaugedSystem:
    """Polynomial system cutting out the gauge slice, plus peripheral machinery."""

    def __init__(self, spec: ManifoldSpec):
        n = spec.generators
        if n < 2:
            raise RepVarError("gauge needs at least two generators")
        self.spec = spec
        self.vars = gauge_coord_names(n)
        lau = frozenset({"s", "p"})
        self.laurent = lau
        V = self.vars

        def var(name, power=1):
            return Polynomial.variable(name, V, lau, power)

        one = Polynomial.constant(1, V, lau)
        zero = Polynomial.constant(0, V, lau)
        g1 = SymMatrix2(var("s"), one, zero, var("s", -1))
        g2 = SymMatrix2(var("p"), zero, var("t"), var("p", -1))
        gens = [g1, g2]
        for j in range(3, n + 1):
            gens.append(SymMatrix2(var(f"a{j}"), var(f"b{j}"), var(f"c{j}"), var(f"d{j}")))
        self.gen_syms = gens

        polys: list[Polynomial] = []
        for r in spec.relators:
            r1, r2 = _balanced_relator_split(r)
            A = word_matrix(r1, gens)
            B = word_matrix(r2, gens)
            polys.extend((A.a - B.a, A.b - B.b, A.c - B.c, A.d - B.d))
        for j in range(3, n + 1):
            polys.append(gens[j - 1].det() - one)
        self.system = PolySystem(polys, V, description=(
            f"gauge slice of the SL2(C) representation variety of {spec.name}: "
            "generator 1 = [[s,1],[0,1/s]], generator 2 = [[p,0],[t,1/p]]"))
        self.compiled = CompiledSystem(polys, V)

        self.cusps: list[CuspFunctions] = []
        for c in spec.cusps:
            tm = trace_poly(c.meridian, gens)
            tl = trace_poly(c.longitude, gens)
            tml = trace_poly(tuple(c.meridian) + tuple(c.longitude), gens)
            m_poly = l_poly = None
            slot = self._meridian_slot(c.meridian)
            if slot is not None:
                name, power, entry = slot
                m_poly = var(name, power)
                L = word_matrix(c.longitude, gens)
                l_poly = L.a if entry == 0 else L.d
            self.cusps.append(CuspFunctions(
                index=c.index, meridian=c.meridian, longitude=c.longitude,
                trace_m=tm, trace_l=tl, trace_ml=tml,
                m_poly=m_poly, l_poly=l_poly))
        trace_polys = []
        for cf in self.cusps:
            trace_polys.extend((cf.trace_m, cf.trace_l, cf.trace_ml))
        self.compiled_traces = CompiledSystem(trace_polys, V)
        ml = []
        self.has_slots = all(cf.m_poly is not None for cf in self.cusps)
        if self.has_slots:
            for cf in self.cusps:
                ml.extend((cf.m_poly, cf.l_poly))
            self.compiled_ml = CompiledSystem(ml, V)
        else:
            self.compiled_ml = None
        # character separation: generator, pair and commutator traces
        key_words: list[Word] = [(i,) for i in range(1, n + 1)]
        key_words += [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        key_words.append((1, 2, -1, -2))
        self.key_words = key_words
        self.compiled_key = CompiledSystem([trace_poly(w, gens) for w in key_words], V)

    @staticmethod
    def _meridian_slot(w: Word):
        """(var name, eigenvalue power, diagonal entry index) when the meridian
        is a bare gauge generator; the common eigenvector is then a coordinate
        vector and both peripheral eigenvalues are read off matrix entries."""
        if w == (1,):
            return ("s", 1, 0)
        if w == (-1,):
            return ("s", -1, 0)
        if w == (2,):
            return ("p", -1, 1)
        if w == (-2,):
            return ("p", 1, 1)
        return None

    # -- numeric helpers ---------------------------------------------------
    def matrices(self, coords) -> list[np.ndarray]:
        return gauge_matrices(np.asarray(coords, dtype=complex), self.spec.generators)

    def residual(self, coords) -> float:
        vals = self.compiled.values(coords)
        return float(np.max(np.abs(vals))) if len(vals) else 0.0

    def trace_values(self, coords) -> np.ndarray:
        return self.compiled_traces.values(coords)

    def ml_values(self, coords) -> np.ndarray:
        """(m_1, l_1, ..., m_h, l_h) along the slot eigenvectors."""
        if self.compiled_ml is not None:
            return self.compiled_ml.values(coords)
        mats = self.matrices(coords)
        out = []
        for cf in self.cusps:
            A = numeric_word_matrix(cf.meridian, mats)
            B = numeric_word_matrix(cf.longitude, mats)
            m, l, _ = eigenvector_pairing(A, B)
            out.extend((m, l))
        return np.array(out, dtype=complex)

    def char_key(self, coords) -> np.ndarray:
        return self.compiled_key.values(coords)

    def tangent_basis(self, coords, rtol=1e-8) -> np.ndarray:
        """Orthonormal basis of the numerical null space of the system Jacobian."""
        J = self.compiled.jacobian(coords)
        if J.shape[0] == 0:
            return np.eye(len(self.vars), dtype=complex)
        u, sv, vh = np.linalg.svd(J)
        cut = rtol * max(1.0, sv[0] if len(sv) else 1.0)
        null_dim = sum(1 for x in sv if x <= cut) + max(0, J.shape[1] - len(sv))
        return vh.conj().T[:, J.shape[1] - null_dim:]


# ---------------------------------------------------------------------------
# character points
# ---------------------------------------------------------------------------

@dataclass
class PeripheralState:
    """Branch-lifted peripheral coordinates of one cusp at one point."""
    u: complex
    v: complex
    m: complex
    l: complex
    trace_m: complex
    trace_l: complex
    trace_ml: complex
    base_u: complex = 0j
    base_v: complex = 0j

    def to_json(self):
        c = lambda z: [z.real, z.imag]
        return {"u": c(self.u), "v": c(self.v), "m": c(self.m), "l": c(self.l),
                "I_M": c(self.trace_m), "I_L": c(self.trace_l), "I_ML": c(self.trace_ml),
                "base_u": c(self.base_u), "base_v": c(self.base_v)}


@dataclass
class CharacterPoint:
    coords: np.ndarray
    cusps: list[PeripheralState]
    residual: float
    orientation: int = 0           # +1 positively oriented, -1 conjugate, 0 unknown
    label: str = ""

    def trace_vector(self) -> np.ndarray:
        out = []
        for c in self.cusps:
            out.extend((c.trace_m, c.trace_l, c.trace_ml))
        return np.array(out, dtype=complex)

    def validate(self, tol_exp=1e-9, tol_trace=1e-8, tol_res=1e-10):
        for c in self.cusps:
            if abs(cmath.exp(c.u) - c.m) >= tol_exp:
                raise RepVarError(f"branch lift broken: |exp(u) - m| = {abs(cmath.exp(c.u) - c.m):.2e}")
            if abs(cmath.exp(c.v) - c.l) >= tol_exp:
                raise RepVarError(f"branch lift broken: |exp(v) - l| = {abs(cmath.exp(c.v) - c.l):.2e}")
            for val, tr in ((c.m, c.trace_m), (c.l, c.trace_l), (c.m * c.l, c.trace_ml)):
                if abs(val + 1 / val - tr) >= tol_trace:
                    raise RepVarError(f"eigenvalue/trace mismatch: {abs(val + 1/val - tr):.2e}")
        if self.residual >= tol_res:
            raise RepVarError(f"system residual {self.residual:.2e} too large")
        return True

    def to_json(self) -> dict:
        c = lambda z: [z.real, z.imag]
        return {
            "coords": [c(z) for z in self.coords],
            "cusps": [st.to_json() for st in self.cusps],
            "residual": self.residual,
            "orientation": self.orientation,
            "label": self.label,
        }


def make_character_point(system: GaugedSystem, coords, prev: Optional[CharacterPoint] = None,
                         label: str = "") -> CharacterPoint:
    """Build a CharacterPoint at the given gauge coordinates.

    Branch lifts continue from `prev` when given (the increment of each log
    stays in the principal strip); otherwise principal logs are taken.
    """
    coords = np.asarray(coords, dtype=complex)
    traces = system.trace_values(coords)
    ml = system.ml_values(coords)
    states = []
    for i, cf in enumerate(system.cusps):
        m, l = ml[2 * i], ml[2 * i + 1]
        if prev is not None:
            pc = prev.cusps[i]
            u = pc.u + cmath.log(m / pc.m)
            v = pc.v + cmath.log(l / pc.l)
            base_u, base_v = pc.base_u, pc.base_v
        else:
            u = cmath.log(m)
            v = cmath.log(l)
            # lift reference: the point's own log when the eigenvalue sits at
            # +-1 (so parabolic points have zero normalized logs exactly),
            # otherwise 0 or i*pi by sign
            base_u = u if abs(m * m - 1) < 1e-9 else (1j * cmath.pi if m.real < 0 else 0j)
            base_v = v if abs(l * l - 1) < 1e-9 else (1j * cmath.pi if l.real < 0 else 0j)
        states.append(PeripheralState(
            u=u, v=v, m=m, l=l,
            trace_m=traces[3 * i], trace_l=traces[3 * i + 1], trace_ml=traces[3 * i + 2],
            base_u=base_u, base_v=base_v))
    return CharacterPoint(coords=coords, cusps=states, residual=system.residual(coords),
                          label=label)


def restriction_traces(pt: CharacterPoint) -> np.ndarray:
    """The boundary-trace vector (I_M, I_L, I_ML per cusp): the image r(chi)."""
    return pt.trace_vector()


def on_V(pt: CharacterPoint, tol: float = 1e-6) -> bool:
    """True when some cusp has both peripheral traces within tol of +-2."""
    for c in pt.cusps:
        if abs(c.trace_m ** 2 - 4) < tol and abs(c.trace_l ** 2 - 4) < tol:
            return True
    return False


# ---------------------------------------------------------------------------
# sign twists
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignTwist:
    epsilon: tuple[int, ...]

    def on_word(self, w: Word) -> int:
        return sign_character(w, self.epsilon)

    def is_trivial(self) -> bool:
        return all(e == 1 for e in self.epsilon)


def enumerate_twists(spec: ManifoldSpec) -> list[SignTwist]:
    """All homomorphisms pi_1 -> {+-1}: sign assignments killing the relators mod 2."""
    rows = [[x % 2 for x in r] for r in relator_matrix(spec)]
    basis = gf2_nullspace(rows, spec.generators)
    twists = set()
    for mask in range(2 ** len(basis)):
        v = [0] * spec.generators
        for b, vec in enumerate(basis):
            if (mask >> b) & 1:
                v = [(x + y) % 2 for x, y in zip(v, vec)]
        twists.add(tuple(-1 if x else 1 for x in v))
    out = [SignTwist(t) for t in sorted(twists, reverse=True)]
    for tw in out:
        for r in spec.relators:
            if tw.on_word(r) != 1:
                raise RepVarError("enumerated twist violates a relator sign")
    return out


def apply_twist(pt: CharacterPoint, tw: SignTwist, system: GaugedSystem) -> CharacterPoint:
    """Scale each generator matrix by its sign and re-gauge.

    In gauge coordinates: s -> e1 s, p -> e2 p, t -> e1 e2 t and each extra
    generator scales as (a,b,c,d) -> (e a, e e1 b, e e1 c, e d).  Peripheral
    traces pick up the sign of the corresponding word; eigenvalue branches
    shift by i*pi where the sign is -1.
    """
    eps = tw.epsilon
    for r in system.spec.relators:
        if tw.on_word(r) != 1:
            raise RepVarError("twist is not a homomorphism for this presentation")
    e1, e2 = eps[0], eps[1]
    coords = np.array(pt.coords, dtype=complex)
    coords[0] *= e1
    coords[1] *= e2
    coords[2] *= e1 * e2
    for j in range(3, system.spec.generators + 1):
        e = eps[j - 1]
        base = 3 + 4 * (j - 3)
        coords[base] *= e
        coords[base + 1] *= e * e1
        coords[base + 2] *= e * e1
        coords[base + 3] *= e
    states = []
    for cf, st in zip(system.cusps, pt.cusps):
        sm = tw.on_word(cf.meridian)
        sl = tw.on_word(cf.longitude)
        shift_m = 0j if sm == 1 else 1j * cmath.pi
        shift_l = 0j if sl == 1 else 1j * cmath.pi
        states.append(PeripheralState(
            u=st.u + shift_m, v=st.v + shift_l,
            m=sm * st.m, l=sl * st.l,
            trace_m=sm * st.trace_m, trace_l=sl * st.trace_l,
            trace_ml=sm * sl * st.trace_ml,
            base_u=st.base_u + shift_m, base_v=st.base_v + shift_l))
    return CharacterPoint(coords=coords, cusps=states,
                          residual=system.residual(coords),
                          orientation=pt.orientation, label=pt.label)


# ---------------------------------------------------------------------------
# the complete structure
# ---------------------------------------------------------------------------

def _newton_lstsq(compiled_parts, coords0, tol=1e-12, maxiter=80):
    """Damped Gauss-Newton on stacked compiled systems; returns (x, residual)."""
    x = np.asarray(coords0, dtype=complex).copy()
    best = None
    for _ in range(maxiter):
        vals = np.concatenate([c.values(x) for c in compiled_parts])
        res = float(np.max(np.abs(vals))) if len(vals) else 0.0
        if not np.isfinite(res):
            break
        if best is None or res < best[1]:
            best = (x.copy(), res)
        if res < tol:
            return x, res
        J = np.vstack([c.jacobian(x) for c in compiled_parts])
        dx, *_ = np.linalg.lstsq(J, -vals, rcond=None)
        if not np.all(np.isfinite(dx)):
            break
        ndx = float(np.linalg.norm(dx))
        if ndx > 5.0:
            dx *= 5.0 / ndx
        x = x + dx
    if best is None:
        return x, float("inf")
    return best


def _polish_unit_slots(system: GaugedSystem, x, pins, tol):
    """Re-solve with every near-unit eigenvalue slot pinned exactly.

    At a boundary-parabolic solution the eigenvalue branches of the gauge
    slice cross, so the plain pinned system is rank-deficient and Newton only
    reaches square-root accuracy in the branch direction; pinning each gauge
    eigenvalue that sits at +-1 restores a full-rank system."""
    V, lau = system.vars, system.laurent
    extra = list(pins)
    for name in ("s", "p"):
        idx = V.index(name)
        for sign in (1, -1):
            if abs(x[idx] - sign) < 1e-3:
                extra.append(Polynomial.variable(name, V, lau) -
                             Polynomial.constant(sign, V, lau))
    if len(extra) == len(pins):
        return x, system.residual(x)
    x2, res = _newton_lstsq([system.compiled, CompiledSystem(extra, V)], x, tol=tol)
    if res < tol:
        return x2, res
    return x, system.residual(x)


def irreducibility_defect(system: GaugedSystem, coords) -> float:
    """min over generator pairs of |tr[gi, gj] - 2|; 0 iff globally reducible."""
    mats = system.matrices(coords)
    worst = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            K = mats[i] @ mats[j] @ np.linalg.inv(mats[i]) @ np.linalg.inv(mats[j])
            worst = max(worst, abs(np.trace(K) - 2))
    return worst


def thurston_rank(system: GaugedSystem, pt: CharacterPoint, threshold=1e-6) -> int:
    """Rank of the log-eigenvalue coordinate differentials (du_1,...,du_h)
    restricted to the tangent space of the gauge slice."""
    T = system.tangent_basis(pt.coords)
    rows = []
    if system.compiled_ml is None:
        raise RepVarError("Thurston rank needs eigenvalue slots")
    J = system.compiled_ml.jacobian(pt.coords)
    ml = system.compiled_ml.values(pt.coords)
    for i in range(len(system.cusps)):
        rows.append(J[2 * i] / ml[2 * i])
    M = np.array(rows) @ T
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > threshold))


def find_complete(spec: ManifoldSpec, system: Optional[GaugedSystem] = None,
                  start_matrices=None, multistart: int = 40,
                  rng=None, tol: float = 1e-12) -> CharacterPoint:
    """Newton-refine the boundary-parabolic locus and select the discrete
    faithful character matching the shipped seed's orientation.

    Parabolicity is imposed per lift sign: for each sign vector the meridian
    eigenvalue slots are pinned to +-1 (the square trace condition I^2 = 4
    vanishes doubly along the deformation direction, so the slot equations
    are the transversal formulation; all 2^h sign choices are solved).
    """
    system = system or GaugedSystem(spec)
    if not system.has_slots:
        raise RepVarError(
            "find_complete requires each meridian to be a bare gauge generator "
            "(eigenvalue slot); general meridian words are not supported")
    rng = rng or np.random.default_rng(0)
    h = spec.cusp_count

    starts = []
    if start_matrices is not None:
        starts.append(regauge(start_matrices))
    elif spec.seed_representation is not None:
        starts.append(regauge(spec.seed_representation))
    else:
        nv = len(system.vars)
        for _ in range(multistart):
            starts.append(rng.normal(size=nv) + 1j * rng.normal(size=nv))

    seed_key = None
    if spec.seed_representation is not None:
        try:
            seed_key = system.char_key(regauge(spec.seed_representation))
        except GaugeError:
            seed_key = None

    V = system.vars
    lau = system.laurent
    candidates = []
    diagnostics = []
    for mask in range(2 ** h):
        eps = [1 - 2 * ((mask >> i) & 1) for i in range(h)]
        pins = []
        for i, cf in enumerate(system.cusps):
            # slot variable equals eps^(power sign); both give var = eps
            name = "s" if cf.m_poly.support_vars() == {"s"} else "p"
            pins.append(Polynomial.variable(name, V, lau) -
                        Polynomial.constant(eps[i], V, lau))
        pinned = CompiledSystem(pins, V)
        for x0 in starts:
            x, res = _newton_lstsq([system.compiled, pinned], x0, tol=tol)
            if res >= tol:
                diagnostics.append(f"eps={eps}: residual {res:.2e}")
                continue
            x, res = _polish_unit_slots(system, x, pins, tol)
            if res >= tol:
                diagnostics.append(f"eps={eps}: polish failed ({res:.2e})")
                continue
            defect = irreducibility_defect(system, x)
            if defect < 1e-6:
                diagnostics.append(f"eps={eps}: converged but reducible (defect {defect:.2e})")
                continue
            if any(abs(system.char_key(x) - system.char_key(c[0])).max() < 1e-8
                   for c in candidates):
                continue
            candidates.append((x, eps, res))
    if not candidates:
        raise NoCompleteStructureError(
            f"{spec.name}: no irreducible boundary-parabolic solution found "
            f"({len(diagnostics)} attempts); " + "; ".join(diagnostics[:4]))

    def orient(x):
        if seed_key is None:
            return 0
        key = system.char_key(x)
        if np.max(np.abs(key - seed_key)) < 1e-6:
            return 1
        if np.max(np.abs(key - np.conj(seed_key))) < 1e-6:
            return -1
        return 0

    oriented = [(x, eps, res, orient(x)) for x, eps, res in candidates]
    oriented.sort(key=lambda q: -q[3])
    x, eps, res, ori = oriented[0]
    pt = make_character_point(system, x, label=f"complete:{spec.name}")
    pt.orientation = ori if ori != 0 else 1
    # parabolic traces certificate
    for c in pt.cusps:
        if abs(c.trace_m ** 2 - 4) >= 1e-10:
            raise NoCompleteStructureError(
                f"{spec.name}: candidate meridian trace defect {abs(c.trace_m**2-4):.2e}")
    return pt
