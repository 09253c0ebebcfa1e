"""Exact multivariate (Laurent) polynomial arithmetic over Q(i).

Polynomials are stored as maps from exponent vectors to GaussianRational
coefficients over a fixed ordered variable tuple.  Variables carrying a
"unit" tag may appear with negative exponents; everything else is ordinary
polynomial support.  All elimination work (resultants, gcds, exact
division) happens on cleared, non-Laurent representatives.
"""

from __future__ import annotations

import numpy as np

from .gaussian import GaussianRational, ONE, ZERO
from .words import Word

Exponents = tuple[int, ...]


class VariableMismatchError(ValueError):
    pass


class Polynomial:
    """Element of Q(i)[vars], Laurent in the unit-tagged variables."""

    __slots__ = ("vars", "laurent", "terms")

    def __init__(self, vars: tuple[str, ...], terms: dict[Exponents, GaussianRational],
                 laurent: frozenset[str] = frozenset()):
        self.vars = tuple(vars)
        self.laurent = frozenset(laurent)
        clean = {}
        for e, c in terms.items():
            if not c:
                continue
            if len(e) != len(self.vars):
                raise ValueError("exponent arity does not match variable count")
            for x, name in zip(e, self.vars):
                if x < 0 and name not in self.laurent:
                    raise ValueError(f"negative exponent on non-unit variable {name}")
            clean[tuple(e)] = c
        self.terms = clean

    # -- constructors ---------------------------------------------------
    @classmethod
    def constant(cls, c, vars, laurent=frozenset()) -> "Polynomial":
        c = c if isinstance(c, GaussianRational) else GaussianRational(c)
        z = tuple(0 for _ in vars)
        return cls(vars, {z: c}, laurent)

    @classmethod
    def variable(cls, name: str, vars, laurent=frozenset(), power: int = 1) -> "Polynomial":
        i = tuple(vars).index(name)
        e = tuple(power if j == i else 0 for j in range(len(vars)))
        return cls(vars, {e: ONE}, laurent)

    # -- helpers ----------------------------------------------------------
    def _check(self, other: "Polynomial"):
        if self.vars != other.vars:
            raise VariableMismatchError(
                f"variable orderings differ: {self.vars} vs {other.vars}")

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self, var: str) -> int:
        """Maximum exponent of var (0 for the zero polynomial)."""
        i = self.vars.index(var)
        return max((e[i] for e in self.terms), default=0)

    def min_degree(self, var: str) -> int:
        i = self.vars.index(var)
        return min((e[i] for e in self.terms), default=0)

    def total_terms(self) -> int:
        return len(self.terms)

    def support_vars(self) -> set[str]:
        out = set()
        for e in self.terms:
            for x, name in zip(e, self.vars):
                if x != 0:
                    out.add(name)
        return out

    # -- ring operations ---------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        self._check(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            s = terms.get(e, ZERO) + c
            if s:
                terms[e] = s
            else:
                terms.pop(e, None)
        return Polynomial(self.vars, terms, self.laurent | other.laurent)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.vars, {e: -c for e, c in self.terms.items()}, self.laurent)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        self._check(other)
        terms: dict[Exponents, GaussianRational] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                c = c1 * c2
                s = terms.get(e)
                s = c if s is None else s + c
                if s:
                    terms[e] = s
                else:
                    terms.pop(e, None)
        return Polynomial(self.vars, terms, self.laurent | other.laurent)

    __rmul__ = __mul__

    def scale(self, c) -> "Polynomial":
        c = c if isinstance(c, GaussianRational) else GaussianRational(c)
        return Polynomial(self.vars, {e: c * v for e, v in self.terms.items()}, self.laurent)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative polynomial power")
        out = Polynomial.constant(1, self.vars, self.laurent)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            return other
        return Polynomial.constant(other, self.vars, self.laurent)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    # -- calculus ---------------------------------------------------------
    def differentiate(self, var: str) -> "Polynomial":
        """Formal partial derivative; Laurent exponents differentiate as d/dx x^k = k x^(k-1)."""
        if var not in self.vars:
            raise ValueError(f"unknown variable {var}")
        i = self.vars.index(var)
        terms = {}
        for e, c in self.terms.items():
            k = e[i]
            if k == 0:
                continue
            e2 = e[:i] + (k - 1,) + e[i + 1:]
            nc = c * k
            s = terms.get(e2, ZERO) + nc
            if s:
                terms[e2] = s
            else:
                terms.pop(e2, None)
        return Polynomial(self.vars, terms, self.laurent)

    # -- evaluation ---------------------------------------------------------
    def evaluate_exact(self, assignment: dict) -> GaussianRational:
        """Exact evaluation; assignment maps each live variable to a
        GaussianRational (negative exponents use the exact inverse)."""
        total = ZERO
        for e, c in self.terms.items():
            val = c
            for name, k in zip(self.vars, e):
                if k:
                    val = val * (assignment[name] ** k)
            total = total + val
        return total

    def evaluate(self, point) -> complex:
        """Evaluate at a complex vector (ordered as self.vars)."""
        pt = [complex(x) for x in point]
        if len(pt) != len(self.vars):
            raise ValueError("point arity does not match variable count")
        for i, name in enumerate(self.vars):
            if name in self.laurent and pt[i] == 0 and any(e[i] < 0 for e in self.terms):
                raise ZeroDivisionError(f"unit variable {name} evaluated at zero")
        total = 0j
        for e, c in self.terms.items():
            v = complex(c)
            for x, k in zip(pt, e):
                if k:
                    v *= x ** k
            total += v
        return total

    # -- Laurent clearing / substitution -------------------------------------
    def clear_laurent(self) -> tuple["Polynomial", Exponents]:
        """Multiply by the minimal monomial making all exponents nonnegative.

        Returns (cleared polynomial, shift) with shift[i] >= 0 the power of
        vars[i] that was multiplied in.
        """
        if not self.terms:
            return self, tuple(0 for _ in self.vars)
        shift = tuple(max(0, -min(e[i] for e in self.terms)) for i in range(len(self.vars)))
        if not any(shift):
            return Polynomial(self.vars, self.terms, frozenset()), shift
        terms = {tuple(x + s for x, s in zip(e, shift)): c for e, c in self.terms.items()}
        return Polynomial(self.vars, terms, frozenset()), shift

    def strip_monomial_content(self, restrict_to=None) -> tuple["Polynomial", Exponents]:
        """Divide out the largest common monomial; returns (primitive, removed
        exponents).  With restrict_to, only the named variables are stripped
        (stripping an ordinary variable would discard its zero locus)."""
        if not self.terms:
            return self, tuple(0 for _ in self.vars)
        rem = tuple(
            min(e[i] for e in self.terms)
            if (restrict_to is None or self.vars[i] in restrict_to) else 0
            for i in range(len(self.vars)))
        if not any(rem):
            return self, rem
        terms = {tuple(x - r for x, r in zip(e, rem)): c for e, c in self.terms.items()}
        return Polynomial(self.vars, terms, self.laurent), rem

    def subs_var(self, var: str, value: "Polynomial") -> "Polynomial":
        """Substitute value for var.  Negative powers of var require value
        to be an invertible monomial."""
        i = self.vars.index(var)
        if value.vars != self.vars:
            raise VariableMismatchError("substitution value must share the variable ordering")
        negs = any(e[i] < 0 for e in self.terms)
        inv = None
        if negs:
            if len(value.terms) != 1:
                raise ValueError("negative powers need a monomial substitution value")
            (ve, vc), = value.terms.items()
            inv_terms = {tuple(-x for x in ve): vc.inverse()}
            inv = Polynomial(self.vars, inv_terms, self.laurent | value.laurent | set(
                n for n, x in zip(self.vars, ve) if x != 0))
        groups: dict[int, dict[Exponents, GaussianRational]] = {}
        for e, c in self.terms.items():
            k = e[i]
            e0 = e[:i] + (0,) + e[i + 1:]
            groups.setdefault(k, {})[e0] = c
        out = Polynomial.constant(0, self.vars, self.laurent | value.laurent)
        for k, terms in groups.items():
            base = Polynomial(self.vars, terms, self.laurent)
            factor = (value ** k) if k >= 0 else (inv ** (-k))
            out = out + base * factor
        return out

    # -- printing / serialization ----------------------------------------------
    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: t[0])

    def __repr__(self):
        return f"Polynomial({self.as_text()})"

    def as_text(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                (f"{n}^{k}" if k != 1 else n)
                for n, k in zip(self.vars, e) if k != 0
            )
            cs = str(c)
            bits.append(f"{cs}*{mono}" if mono else cs)
        return " + ".join(bits)

    def to_json(self) -> dict:
        return {
            "vars": list(self.vars),
            "laurent": sorted(self.laurent),
            "terms": [
                {"exp": list(e), "re": str(c.re), "im": str(c.im)}
                for e, c in self.sorted_terms()
            ],
        }

    @staticmethod
    def from_json(d: dict) -> "Polynomial":
        terms = {
            tuple(t["exp"]): GaussianRational.parse(t["re"], t.get("im", "0"))
            for t in d["terms"]
        }
        return Polynomial(tuple(d["vars"]), terms, frozenset(d.get("laurent", ())))


# ---------------------------------------------------------------------------
# exact division, gcd, resultants (on cleared polynomials)
# ---------------------------------------------------------------------------

def exact_div(f: Polynomial, d: Polynomial) -> Polynomial:
    """Exact polynomial division f / d; raises ValueError if not exact."""
    f._check(d)
    if d.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    fc, fshift = f.clear_laurent()
    dc, dshift = d.clear_laurent()
    q = _exact_div_cleared(fc, dc)
    shift = tuple(a - b for a, b in zip(fshift, dshift))
    if any(shift):
        mono = {tuple(-s for s in shift): ONE}
        lau = f.laurent | d.laurent | frozenset(
            n for n, s in zip(f.vars, shift) if s > 0)
        q = q * Polynomial(f.vars, mono, lau)
    return q


def _leading_term(p: Polynomial, i: int):
    """Leading term of p in variable index i, ties broken by full lex order."""
    return max(p.terms, key=lambda e: (e[i],) + e)


def _exact_div_cleared(f: Polynomial, d: Polynomial) -> Polynomial:
    vars = f.vars
    if f.is_zero():
        return f
    # main variable: first one d actually uses; constants divide termwise
    main = next((i for i in range(len(vars)) if any(e[i] > 0 for e in d.terms)), None)
    if main is None:
        if len(d.terms) != 1:
            raise ValueError("inexact division")
        (de, dc), = d.terms.items()
        if any(de):
            raise ValueError("inexact division")
        return f.scale(dc.inverse())
    rem = f
    qterms: dict[Exponents, GaussianRational] = {}
    dlead = _leading_term(d, main)
    dlc = d.terms[dlead]
    while not rem.is_zero():
        rlead = _leading_term(rem, main)
        qe = tuple(a - b for a, b in zip(rlead, dlead))
        if any(x < 0 for x in qe):
            raise ValueError("inexact division")
        qc = rem.terms[rlead] / dlc
        qterms[qe] = qterms.get(qe, ZERO) + qc
        mono = Polynomial(vars, {qe: qc})
        rem = rem - mono * d
    return Polynomial(vars, qterms)


def pseudo_rem(f: Polynomial, g: Polynomial, var: str) -> Polynomial:
    """Pseudo-remainder of f by g in var: lc(g)^(df-dg+1) f = q g + r."""
    i = f.vars.index(var)
    df, dg = f.degree(var), g.degree(var)
    if dg == 0:
        return Polynomial.constant(0, f.vars, f.laurent)
    glc = _coeff_of(g, var, dg)
    rem = f
    while not rem.is_zero() and rem.degree(var) >= dg:
        dr = rem.degree(var)
        rlc = _coeff_of(rem, var, dr)
        shift = Polynomial.variable(var, f.vars, power=dr - dg) if dr > dg else \
            Polynomial.constant(1, f.vars)
        rem = rem * glc - g * rlc * shift
    return rem


def _coeff_of(p: Polynomial, var: str, k: int) -> Polynomial:
    i = p.vars.index(var)
    terms = {e[:i] + (0,) + e[i + 1:]: c for e, c in p.terms.items() if e[i] == k}
    return Polynomial(p.vars, terms, p.laurent)


def coefficients_in(p: Polynomial, var: str) -> list[Polynomial]:
    """Coefficient list [c_0, ..., c_d] of p viewed in var (p must be cleared in var)."""
    d = p.degree(var)
    return [_coeff_of(p, var, k) for k in range(d + 1)]


def _normalize(p: Polynomial) -> Polynomial:
    """Scale so the lexicographically leading coefficient is 1."""
    if p.is_zero():
        return p
    lead = max(p.terms)
    return p.scale(p.terms[lead].inverse())


def poly_gcd(f: Polynomial, g: Polynomial, size_cap: int = 20000) -> Polynomial:
    """Primitive-PRS gcd (modular for two variables), normalized to
    lex-leading coefficient 1.

    Works on the cleared representatives; correct up to monomial factors in
    unit variables, which is the right notion for zero sets off the
    coordinate hyperplanes.  Oversized inputs return the trivial divisor 1
    rather than risking runaway intermediate growth: every caller treats the
    gcd as a best-effort reduction.
    """
    f._check(g)
    fc, _ = f.clear_laurent()
    gc, _ = g.clear_laurent()
    fc, _ = fc.strip_monomial_content()
    gc, _ = gc.strip_monomial_content()
    live = fc.support_vars() | gc.support_vars()
    cost = min(fc.total_terms(), gc.total_terms()) * max(1, len(live) - 1)
    if len(live) > 2 and cost > 400:
        return Polynomial.constant(1, f.vars)
    if cost > size_cap:
        return Polynomial.constant(1, f.vars)
    return _normalize(_gcd_cleared(fc, gc))


def _gcd_cleared(f: Polynomial, g: Polynomial) -> Polynomial:
    if f.is_zero():
        return g
    if g.is_zero():
        return f
    vars = f.vars
    used = [i for i in range(len(vars))
            if any(e[i] > 0 for e in f.terms) or any(e[i] > 0 for e in g.terms)]
    if not used:
        return Polynomial.constant(1, vars)
    if len(used) == 1:
        return _gcd_univar_monic(f, g, vars[used[0]])
    if len(used) == 2:
        got = _gcd_bivariate_modular(f, g, vars[used[0]], vars[used[1]])
        if got is not None:
            return got
    main = vars[used[-1]]
    cf, pf = _content_and_primitive(f, main)
    cg, pg = _content_and_primitive(g, main)
    cont = _gcd_cleared(cf, cg)
    a, b = pf, pg
    if a.degree(main) < b.degree(main):
        a, b = b, a
    while not b.is_zero():
        r = pseudo_rem(a, b, main)
        if r.is_zero():
            a, b = b, r
            break
        r, _ = r.strip_monomial_content()
        _, r = _content_and_primitive(r, main)
        a, b = b, r
    _, prim = _content_and_primitive(a, main)
    return cont * prim


def _gcd_univar_monic(f: Polynomial, g: Polynomial, var: str) -> Polynomial:
    """Euclid with field division for single-variable inputs; pseudo-division
    PRS growth is exponential in the degree here, monic Euclid is not."""
    i = f.vars.index(var)

    def coeffs(p):
        d = p.degree(var)
        out = [ZERO] * (d + 1)
        for e, c in p.terms.items():
            out[e[i]] = c
        return out

    def trim(cs):
        while cs and not cs[-1]:
            cs.pop()
        return cs

    a, b = trim(coeffs(f)), trim(coeffs(g))
    if len(a) < len(b):
        a, b = b, a
    while b:
        inv = b[-1].inverse()
        bm = [c * inv for c in b]
        r = list(a)
        for k in range(len(r) - 1, len(bm) - 2, -1):
            lead = r[k]
            if not lead:
                continue
            off = k - (len(bm) - 1)
            for j in range(len(bm)):
                r[off + j] = r[off + j] - lead * bm[j]
        a, b = bm, trim(r[: len(bm) - 1])
    inv = a[-1].inverse()
    terms = {}
    for k, c in enumerate(a):
        if c:
            e = [0] * len(f.vars)
            e[i] = k
            terms[tuple(e)] = c * inv
    return Polynomial(f.vars, terms)


def _eval_coeffs_at(p: Polynomial, outer: str, main: str, r: GaussianRational) -> Polynomial:
    """p(outer = r) as a univariate polynomial in main (p cleared, two live vars)."""
    io = p.vars.index(outer)
    im = p.vars.index(main)
    acc: dict[int, GaussianRational] = {}
    for e, c in p.terms.items():
        val = c * (r ** e[io])
        k = e[im]
        s = acc.get(k, ZERO) + val
        if s:
            acc[k] = s
        else:
            acc.pop(k, None)
    terms = {}
    for k, c in acc.items():
        ee = [0] * len(p.vars)
        ee[im] = k
        terms[tuple(ee)] = c
    return Polynomial(p.vars, terms)


def _gcd_bivariate_modular(f: Polynomial, g: Polynomial, outer: str, main: str):
    """Brown-style evaluation/interpolation gcd for two live variables.

    Computes univariate gcds at sample values of `outer`, scales them to the
    gcd of the leading coefficients, interpolates, and verifies by exact
    division.  Returns None when the verification keeps failing (callers fall
    back to the primitive PRS)."""
    if min(f.degree(main), g.degree(main)) == 0:
        return None
    cont_f, pf = _content_and_primitive_univar(f, main, outer)
    cont_g, pg = _content_and_primitive_univar(g, main, outer)
    if cont_f is None or cont_g is None:
        return None
    cont = _gcd_cleared(cont_f, cont_g)
    lc_f = _coeff_of(pf, main, pf.degree(main))
    lc_g = _coeff_of(pg, main, pg.degree(main))
    lc_gcd = _gcd_cleared(lc_f, lc_g)  # univariate in outer (or constant)

    do_bound = min(pf.degree(outer), pg.degree(outer))
    if do_bound > 90:
        return None
    samples: list[tuple[GaussianRational, list[GaussianRational]]] = []
    best_deg = None
    r_int = 1
    tries = 0
    need = do_bound + lc_gcd.degree(outer) + 2
    while len(samples) < need and tries < 8 * need + 40:
        tries += 1
        r_int += 1
        r = GaussianRational(r_int)
        fu = _eval_coeffs_at(pf, outer, main, r)
        gu = _eval_coeffs_at(pg, outer, main, r)
        if fu.degree(main) != pf.degree(main) or gu.degree(main) != pg.degree(main):
            continue
        h = _gcd_univar_monic(fu, gu, main)
        d = h.degree(main)
        if best_deg is None or d < best_deg:
            best_deg = d
            samples = []
        if d == best_deg:
            scale = lc_gcd.evaluate_exact({outer: r})
            coeffs = [ZERO] * (d + 1)
            im = f.vars.index(main)
            for e, c in h.terms.items():
                coeffs[e[im]] = c * scale
            samples.append((r, coeffs))
        if best_deg == 0:
            return _normalize(cont)
    if best_deg is None or len(samples) < need:
        return None
    # Lagrange interpolation of each main-coefficient in the outer variable
    pts = samples[:need]
    io = f.vars.index(outer)
    im = f.vars.index(main)
    terms: dict[Exponents, GaussianRational] = {}
    xs = [r for r, _ in pts]
    for k in range(best_deg + 1):
        ys = [cs[k] for _, cs in pts]
        poly_coeffs = _lagrange(xs, ys)
        for j, c in enumerate(poly_coeffs):
            if not c:
                continue
            e = [0] * len(f.vars)
            e[io] = j
            e[im] = k
            terms[tuple(e)] = c
    G = Polynomial(f.vars, terms)
    G, _ = G.strip_monomial_content()
    gc, gp = _content_and_primitive_univar(G, main, outer)
    if gp is not None:
        G = gp
    try:
        _exact_div_cleared(pf, G)
        _exact_div_cleared(pg, G)
    except ValueError:
        return None
    return _normalize(cont * G)


def _content_and_primitive_univar(p: Polynomial, main: str, outer: str):
    """Content/primitive split when the main-variable coefficients are
    univariate in `outer`; returns (None, None) on unexpected support."""
    coeffs = [c for c in coefficients_in(p, main) if not c.is_zero()]
    cont = coeffs[0]
    for c in coeffs[1:]:
        if not cont.support_vars():
            break
        cont = _gcd_cleared(cont, c)
    cont = _normalize(cont)
    try:
        prim = _exact_div_cleared(p, cont)
    except ValueError:
        return None, None
    return cont, prim


def _lagrange(xs: list[GaussianRational], ys: list[GaussianRational]) -> list[GaussianRational]:
    """Coefficients of the interpolating polynomial through (xs, ys)."""
    n = len(xs)
    coeffs = [ZERO] * n
    for i in range(n):
        # basis polynomial prod_{j != i} (x - xs[j]) / (xs[i] - xs[j])
        denom = ONE
        basis = [ONE]
        for j in range(n):
            if j == i:
                continue
            denom = denom * (xs[i] - xs[j])
            new = [ZERO] * (len(basis) + 1)
            for k, c in enumerate(basis):
                new[k + 1] = new[k + 1] + c
                new[k] = new[k] - c * xs[j]
            basis = new
        w = ys[i] / denom
        for k, c in enumerate(basis):
            coeffs[k] = coeffs[k] + c * w
    return coeffs


def _content_and_primitive(p: Polynomial, var: str) -> tuple[Polynomial, Polynomial]:
    coeffs = [c for c in coefficients_in(p, var) if not c.is_zero()]
    cont = coeffs[0]
    for c in coeffs[1:]:
        if cont.total_terms() == 1 and not any(cont.terms):
            break
        cont = _gcd_cleared(cont, c)
    cont = _normalize(cont)
    return cont, exact_div(p, cont)


def squarefree_part(p: Polynomial, var: str) -> Polynomial:
    """p divided by gcd(p, dp/dvar): repeated factors in var collapse to one.
    Oversized multivariate inputs are returned unreduced."""
    pc, _ = p.clear_laurent()
    pc, _ = pc.strip_monomial_content()
    if len(pc.support_vars()) > 2 and pc.total_terms() > 200:
        return _normalize(pc)
    dp = pc.differentiate(var)
    if dp.is_zero():
        return _normalize(pc)
    g = poly_gcd(pc, dp)
    if g.degree(var) == 0 and len(g.support_vars()) == 0:
        return _normalize(pc)
    return _normalize(exact_div(pc, g))


class ResultantError(ValueError):
    pass


def resultant(p: Polynomial, q: Polynomial, var: str) -> Polynomial:
    """Sylvester resultant of p and q with respect to var.

    Inputs are cleared of Laurent denominators first; the caller is
    responsible for tracking any cleared monomials.  Raises ResultantError
    for inputs of degree 0 in var.
    """
    p._check(q)
    pc, _ = p.clear_laurent()
    qc, _ = q.clear_laurent()
    dp, dq = pc.degree(var), qc.degree(var)
    if dp == 0 or dq == 0:
        raise ResultantError(f"resultant needs positive degree in {var}")
    a = coefficients_in(pc, var)
    b = coefficients_in(qc, var)
    n = dp + dq
    zero = Polynomial.constant(0, p.vars)
    M = [[zero] * n for _ in range(n)]
    for r in range(dq):
        for k, c in enumerate(reversed(a)):
            M[r][r + k] = c
    for r in range(dp):
        for k, c in enumerate(reversed(b)):
            M[dq + r][r + k] = c
    return _bareiss_det(M)


def _bareiss_det(M: list[list[Polynomial]]) -> Polynomial:
    n = len(M)
    if n == 0:
        raise ValueError("empty matrix")
    vars = M[0][0].vars
    sign = 1
    prev = Polynomial.constant(1, vars)
    M = [row[:] for row in M]
    for k in range(n - 1):
        if M[k][k].is_zero():
            piv = next((i for i in range(k + 1, n) if not M[i][k].is_zero()), None)
            if piv is None:
                return Polynomial.constant(0, vars)
            M[k], M[piv] = M[piv], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = M[k][k] * M[i][j] - M[i][k] * M[k][j]
                M[i][j] = _exact_div_cleared(num, prev) if not num.is_zero() else num
            M[i][k] = Polynomial.constant(0, vars)
        prev = M[k][k]
    det = M[n - 1][n - 1]
    return det if sign == 1 else -det


# ---------------------------------------------------------------------------
# polynomial systems and symbolic 2x2 matrices
# ---------------------------------------------------------------------------

class PolySystem:
    """A list of polynomials over one shared variable ordering."""

    def __init__(self, polynomials: list[Polynomial], variable_names: tuple[str, ...],
                 description: str = ""):
        for p in polynomials:
            if p.vars != tuple(variable_names):
                raise VariableMismatchError("system polynomials must share the variable ordering")
        self.polynomials = list(polynomials)
        self.variable_names = tuple(variable_names)
        self.description = description

    def __len__(self):
        return len(self.polynomials)

    def evaluate(self, point) -> np.ndarray:
        return np.array([p.evaluate(point) for p in self.polynomials], dtype=complex)

    def residual(self, point) -> float:
        vals = self.evaluate(point)
        return float(np.max(np.abs(vals))) if len(vals) else 0.0

    def to_json(self) -> dict:
        return {
            "description": self.description,
            "vars": list(self.variable_names),
            "polynomials": [p.to_json() for p in self.polynomials],
        }


class SymMatrix2:
    """2x2 matrix with Polynomial entries."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: Polynomial, b: Polynomial, c: Polynomial, d: Polynomial):
        self.a, self.b, self.c, self.d = a, b, c, d

    @classmethod
    def identity(cls, vars, laurent=frozenset()) -> "SymMatrix2":
        one = Polynomial.constant(1, vars, laurent)
        zero = Polynomial.constant(0, vars, laurent)
        return cls(one, zero, zero, one)

    def __matmul__(self, o: "SymMatrix2") -> "SymMatrix2":
        return SymMatrix2(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )

    def adjugate(self) -> "SymMatrix2":
        """Inverse modulo det = 1."""
        return SymMatrix2(self.d, -self.b, -self.c, self.a)

    def det(self) -> Polynomial:
        return self.a * self.d - self.b * self.c

    def trace(self) -> Polynomial:
        return self.a + self.d

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def evaluate(self, point) -> np.ndarray:
        return np.array([[self.a.evaluate(point), self.b.evaluate(point)],
                         [self.c.evaluate(point), self.d.evaluate(point)]])


def word_matrix(w: Word, gen_matrices: list[SymMatrix2]) -> SymMatrix2:
    """Symbolic product over a signed word; inverses use the adjugate (det = 1)."""
    if not gen_matrices:
        raise ValueError("need at least one generator matrix")
    vars = gen_matrices[0].a.vars
    lau = gen_matrices[0].a.laurent
    out = SymMatrix2.identity(vars, lau)
    for g in w:
        if not 1 <= abs(g) <= len(gen_matrices):
            raise ValueError(f"word letter {g} out of range")
        A = gen_matrices[abs(g) - 1]
        out = out @ (A if g > 0 else A.adjugate())
    return out


def trace_poly(w: Word, gen_matrices: list[SymMatrix2]) -> Polynomial:
    return word_matrix(w, gen_matrices).trace()


# ---------------------------------------------------------------------------
# compiled numeric evaluation
# ---------------------------------------------------------------------------

class CompiledSystem:
    """Vectorized complex evaluation of a list of polynomials and their Jacobian."""

    def __init__(self, polys: list[Polynomial], vars: tuple[str, ...]):
        self.vars = tuple(vars)
        self.npolys = len(polys)
        self.nvars = len(vars)
        for p in polys:
            if p.vars != self.vars:
                raise VariableMismatchError("compiled polynomials must share variables")
        derivs = [p.differentiate(v) for p in polys for v in vars]
        self._val = _CompiledBlock(polys, self.vars)
        self._jac = _CompiledBlock(derivs, self.vars)

    def values(self, x: np.ndarray) -> np.ndarray:
        return self._val(np.asarray(x, dtype=complex))

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self._jac(np.asarray(x, dtype=complex)).reshape(self.npolys, self.nvars)

    def values_and_jacobian(self, x):
        x = np.asarray(x, dtype=complex)
        return self._val(x), self._jac(x).reshape(self.npolys, self.nvars)


class _CompiledBlock:
    def __init__(self, polys: list[Polynomial], vars):
        nv = len(vars)
        exps, coeffs, bounds = [], [], [0]
        for p in polys:
            for e, c in p.sorted_terms():
                exps.append(e)
                coeffs.append(complex(c))
            bounds.append(len(coeffs))
        self.nterms = len(coeffs)
        self.npolys = len(polys)
        self.bounds = np.array(bounds, dtype=np.int64)
        if self.nterms == 0:
            self.E = np.zeros((0, nv), dtype=np.int64)
            self.coeffs = np.zeros(0, dtype=complex)
            self.emin = np.zeros(nv, dtype=np.int64)
            self.eidx = self.E
            self.espan = np.ones(nv, dtype=np.int64)
            return
        self.E = np.array(exps, dtype=np.int64)
        self.coeffs = np.array(coeffs, dtype=complex)
        self.emin = self.E.min(axis=0)
        self.emax = self.E.max(axis=0)
        self.eidx = self.E - self.emin
        self.espan = self.emax - self.emin + 1

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.nterms == 0:
            return np.zeros(self.npolys, dtype=complex)
        vals = self.coeffs.copy()
        with np.errstate(divide="ignore", invalid="ignore"):
            for v in range(len(x)):
                span = int(self.espan[v])
                lo = int(self.emin[v])
                powers = x[v] ** np.arange(lo, lo + span)
                vals *= powers[self.eidx[:, v]]
        out = np.add.reduceat(np.append(vals, 0j), self.bounds[:-1])
        out[self.bounds[:-1] == self.bounds[1:]] = 0
        return out[: self.npolys]
