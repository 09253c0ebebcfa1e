"""Path tracking on the gauge slice with branch-consistent peripheral logs,
Dehn-filling continuation, and fiber counting over boundary-trace points.

All deformation constraints are expressed through the per-cusp log-eigenvalue
coordinates u_i = log m_i, v_i = log l_i, continued along the path.  Filling
conditions use the sign-normalized logs u_i - u_i^0, v_i - v_i^0 measured
from the complete structure's lift, where the eigenvalue of a peripheral
element may be -1.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .manifold import ManifoldSpec
from .repvar import (CharacterPoint, GaugedSystem, SignTwist, TWO_PI_I,
                     enumerate_twists, make_character_point, on_V)

PI = cmath.pi


class ContinuationError(RuntimeError):
    pass


class SingularJacobianError(ContinuationError):
    pass


class DivergenceError(ContinuationError):
    pass


class TrackingError(ContinuationError):
    pass


class FillingError(ContinuationError):
    pass


# ---------------------------------------------------------------------------
# Newton correction
# ---------------------------------------------------------------------------

@dataclass
class NewtonResult:
    x: np.ndarray
    residual: float
    iterations: int
    quad_ratios: list[float]
    condition: float


def newton_correct(system, start, tol: float = 1e-12, maxiter: int = 50,
                   condition_limit: float = 1e8) -> NewtonResult:
    """Newton's method (least squares for non-square systems) to the given
    residual tolerance.  Requires a usable Jacobian near the start and raises
    on divergence; the per-step contraction ratios are recorded so quadratic
    convergence can be audited."""
    x = np.asarray(start, dtype=complex).copy()
    vals, J = system.values_and_jacobian(x)
    res = float(np.max(np.abs(vals))) if len(vals) else 0.0
    sv = np.linalg.svd(J, compute_uv=False) if J.size else np.array([1.0])
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if res < tol:
        return NewtonResult(x, res, 0, [], cond)
    if not np.isfinite(cond) or cond > condition_limit:
        raise SingularJacobianError(f"Jacobian condition {cond:.2e} exceeds {condition_limit:.0e}")
    ratios = []
    prev_norm = None
    bad = 0
    for it in range(1, maxiter + 1):
        dx, *_ = np.linalg.lstsq(J, -vals, rcond=None)
        if not np.all(np.isfinite(dx)):
            raise DivergenceError("non-finite Newton step")
        x = x + dx
        vals, J = system.values_and_jacobian(x)
        norm = float(np.linalg.norm(vals))
        res = float(np.max(np.abs(vals)))
        # contraction ratios are only meaningful above the roundoff floor
        if prev_norm is not None and prev_norm > 1e-8:
            ratios.append(norm / prev_norm ** 2)
        if prev_norm is not None and norm > 4 * prev_norm:
            bad += 1
            if bad >= 3:
                raise DivergenceError(f"residual diverging at iteration {it}")
        else:
            bad = 0
        prev_norm = norm
        if res < tol:
            return NewtonResult(x, res, it, ratios, cond)
    raise DivergenceError(f"no convergence in {maxiter} iterations (residual {res:.2e})")


def jacobian_check(system, point, step: float = 1e-6, tol: float = 1e-5) -> dict:
    """Analytic Jacobian against central finite differences; hard failure on mismatch."""
    x = np.asarray(point, dtype=complex)
    J = system.jacobian(x)
    n = len(x)
    Jfd = np.zeros_like(J)
    for k in range(n):
        xp, xm = x.copy(), x.copy()
        xp[k] += step
        xm[k] -= step
        Jfd[:, k] = (system.values(xp) - system.values(xm)) / (2 * step)
    scale = np.maximum(np.abs(J), 1.0)
    err = float(np.max(np.abs(J - Jfd) / scale))
    if err >= tol:
        raise ContinuationError(f"Jacobian mismatch {err:.2e} >= {tol:.0e}")
    return {"max_relative_error": err, "step": step, "tolerance": tol, "shape": list(J.shape)}


# ---------------------------------------------------------------------------
# constraints on the gauge slice
# ---------------------------------------------------------------------------

class LogConstraint:
    """p*(u_i - u_i^0) + q*(v_i - v_i^0) = target(tau), in tracked logs.

    With (p, q) = (1, 0) and target u-offsets this pins a meridian log;
    general coprime (p, q) with target 2*pi*i*tau is a filling equation.
    """

    def __init__(self, cusp_index: int, pcoef: float, qcoef: float,
                 target: Callable[[float], complex]):
        self.i = cusp_index
        self.p = pcoef
        self.q = qcoef
        self.target = target

    def value_and_grad(self, problem: "DeformationProblem", x, branch, tau, ml, Jml):
        i = self.i
        m, l = ml[2 * i], ml[2 * i + 1]
        bu, bv, bm, bl = branch[i]
        u = bu + cmath.log(m / bm)
        v = bv + cmath.log(l / bl)
        base_u, base_v = problem.base[i]
        val = self.p * (u - base_u) + self.q * (v - base_v) - self.target(tau)
        grad = self.p * Jml[2 * i] / m + self.q * Jml[2 * i + 1] / l
        return val, grad


def pin_log(cusp_index: int, target: Callable[[float], complex]) -> LogConstraint:
    return LogConstraint(cusp_index, 1.0, 0.0, target)


class DeformationProblem:
    """A gauged system together with the branch bookkeeping needed to impose
    log-coordinate constraints along paths."""

    def __init__(self, system: GaugedSystem, base_point: CharacterPoint):
        if system.compiled_ml is None:
            raise TrackingError("tracking needs eigenvalue slots on every cusp")
        self.system = system
        self.base = [(c.base_u, c.base_v) for c in base_point.cusps]

    def correct(self, x0, branch, constraints, tau, tol=1e-11, maxiter=30):
        x = np.asarray(x0, dtype=complex).copy()
        res = np.inf
        for it in range(maxiter):
            sys_vals, sys_jac = self.system.compiled.values_and_jacobian(x)
            ml, Jml = self.system.compiled_ml.values_and_jacobian(x)
            rows, vals = [sys_jac], [sys_vals]
            for con in constraints:
                v, g = con.value_and_grad(self, x, branch, tau, ml, Jml)
                vals.append(np.array([v]))
                rows.append(g[None, :])
            F = np.concatenate(vals)
            res = float(np.max(np.abs(F))) if len(F) else 0.0
            if not np.isfinite(res):
                return x, np.inf, False
            if res < tol:
                return x, res, True
            J = np.vstack(rows)
            dx, *_ = np.linalg.lstsq(J, -F, rcond=None)
            if not np.all(np.isfinite(dx)):
                return x, res, False
            x = x + dx
        return x, res, False

    def predict(self, x, branch, constraints, tau, dtau):
        """First-order predictor from the constraint targets' tau-motion."""
        h = 1e-6
        sys_jac = self.system.compiled.jacobian(x)
        ml, Jml = self.system.compiled_ml.values_and_jacobian(x)
        rows, rhs = [sys_jac], [np.zeros(sys_jac.shape[0], dtype=complex)]
        for con in constraints:
            _, g = con.value_and_grad(self, x, branch, tau, ml, Jml)
            dtarget = (con.target(tau + h) - con.target(tau - h)) / (2 * h)
            rows.append(g[None, :])
            rhs.append(np.array([dtarget]))
        J = np.vstack(rows)
        b = np.concatenate(rhs)
        dxdtau, *_ = np.linalg.lstsq(J, b, rcond=None)
        return x + dtau * dxdtau


# ---------------------------------------------------------------------------
# tracked paths
# ---------------------------------------------------------------------------

@dataclass
class TrackedPath:
    points: list[CharacterPoint]
    taus: list[float]
    description: str = ""
    start_on_V: bool = False
    end_on_V: bool = False
    steps_rejected: int = 0

    def endpoint(self) -> CharacterPoint:
        return self.points[-1]

    def reversed(self) -> "TrackedPath":
        return TrackedPath(points=list(reversed(self.points)),
                           taus=[self.taus[-1] - t for t in reversed(self.taus)],
                           description=f"reversal of: {self.description}",
                           start_on_V=self.end_on_V, end_on_V=self.start_on_V,
                           steps_rejected=self.steps_rejected)

    def __len__(self):
        return len(self.points)

    def to_json(self) -> dict:
        return {
            "description": self.description,
            "taus": list(self.taus),
            "start_on_V": self.start_on_V,
            "end_on_V": self.end_on_V,
            "points": [p.to_json() for p in self.points],
        }

    def export_csv(self, running_volume: Optional[Sequence[float]] = None) -> str:
        h = len(self.points[0].cusps)
        cols = ["t"]
        for i in range(1, h + 1):
            cols += [f"re_u{i}", f"im_u{i}", f"re_v{i}", f"im_v{i}"]
        cols.append("running_volume")
        lines = [",".join(cols)]
        for k, (tau, pt) in enumerate(zip(self.taus, self.points)):
            row = [repr(tau)]
            for c in pt.cusps:
                row += [repr(c.u.real), repr(c.u.imag), repr(c.v.real), repr(c.v.imag)]
            row.append(repr(float(running_volume[k])) if running_volume is not None else "")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _branch_of(pt: CharacterPoint):
    return [(c.u, c.v, c.m, c.l) for c in pt.cusps]


def track(problem: DeformationProblem, start: CharacterPoint,
          constraints: Sequence[LogConstraint],
          tau0: float = 0.0, tau1: float = 1.0,
          first_step: float = 0.02, max_step: float = 0.05,
          min_step: float = 1e-7, tol: float = 1e-11,
          max_samples: int = 20000, description: str = "",
          allow_V_interior: bool = False) -> TrackedPath:
    """Adaptive predictor-corrector tracking of the constraint family from
    tau0 to tau1.  Every accepted sample satisfies the residual tolerance;
    branch continuity is enforced by rejecting steps whose log increments
    reach pi/2 in imaginary part."""
    pt = start
    points = [start]
    taus = [tau0]
    rejected = 0
    dtau = min(first_step, abs(tau1 - tau0)) * (1 if tau1 >= tau0 else -1)
    tau = tau0
    while (tau1 - tau) * (1 if tau1 >= tau0 else -1) > 1e-14:
        if len(points) > max_samples:
            raise TrackingError("sample budget exceeded")
        step = dtau
        if (tau + step - tau1) * (1 if tau1 >= tau0 else -1) > 0:
            step = tau1 - tau
        branch = _branch_of(pt)
        xpred = problem.predict(pt.coords, branch, constraints, tau, step)
        x, res, ok = problem.correct(xpred, branch, constraints, tau + step, tol=tol)
        accept = ok
        if ok:
            new_pt = make_character_point(problem.system, x, prev=pt)
            for c_new, c_old in zip(new_pt.cusps, pt.cusps):
                if abs((c_new.u - c_old.u).imag) >= PI / 2 or \
                   abs((c_new.v - c_old.v).imag) >= PI / 2:
                    accept = False
                    break
        if not accept:
            rejected += 1
            dtau *= 0.5
            if abs(dtau) < min_step:
                raise TrackingError(
                    f"minimum step reached at tau={tau:.6f} (residual {res:.2e})")
            continue
        interior = abs(tau + step - tau1) > 1e-14
        if interior and not allow_V_interior and degenerating_cusp(new_pt, 1e-6):
            raise TrackingError(f"path crossed V at tau={tau + step:.6f}")
        pt = new_pt
        tau += step
        points.append(pt)
        taus.append(tau)
        if abs(dtau) < max_step:
            dtau *= 1.5
    path = TrackedPath(points=points, taus=taus, description=description,
                       start_on_V=on_V(points[0], 1e-6),
                       end_on_V=on_V(points[-1], 1e-6),
                       steps_rejected=rejected)
    return path


def refine_path(problem: DeformationProblem, path: TrackedPath,
                constraints, factor: int = 2, tol: float = 1e-11) -> TrackedPath:
    """Insert factor-1 corrected samples between consecutive path samples
    (used for quadrature-stability checks)."""
    points = [path.points[0]]
    taus = [path.taus[0]]
    for k in range(len(path.points) - 1):
        t0, t1 = path.taus[k], path.taus[k + 1]
        prev = points[-1]
        for j in range(1, factor):
            tm = t0 + (t1 - t0) * j / factor
            branch = _branch_of(prev)
            lam = (tm - t0) / (t1 - t0)
            xg = (1 - lam) * path.points[k].coords + lam * path.points[k + 1].coords
            x, res, ok = problem.correct(xg, branch, constraints, tm, tol=tol)
            if not ok:
                raise TrackingError(f"refinement failed at tau={tm}")
            prev = make_character_point(problem.system, x, prev=prev)
            points.append(prev)
            taus.append(tm)
        nxt = make_character_point(problem.system, path.points[k + 1].coords, prev=prev)
        points.append(nxt)
        taus.append(t1)
    return TrackedPath(points=points, taus=taus,
                       description=path.description + f" (refined x{factor})",
                       start_on_V=path.start_on_V, end_on_V=path.end_on_V)


# ---------------------------------------------------------------------------
# stepping off the complete structure
# ---------------------------------------------------------------------------

def step_off_complete(problem: DeformationProblem, complete: CharacterPoint,
                      du: Sequence[complex], tol: float = 1e-12) -> CharacterPoint:
    """Solve the gauge system with every cusp's normalized meridian log pinned
    to the given offsets, seeding the eigenvalue slots directly.  This is the
    transversal way past the branch point of the trace coordinates at the
    complete structure."""
    system = problem.system
    x0 = np.array(complete.coords, dtype=complex)
    for i, cf in enumerate(system.cusps):
        mp = cf.m_poly
        name = next(iter(mp.support_vars()))
        power = mp.degree(name) if mp.degree(name) != 0 else mp.min_degree(name)
        idx = system.vars.index(name)
        x0[idx] = x0[idx] * cmath.exp(du[i] / power)
    cons = [pin_log(i, (lambda val: (lambda tau: val))(du[i]))
            for i in range(len(system.cusps))]
    branch = _branch_of(complete)
    x, res, ok = problem.correct(x0, branch, cons, 0.0, tol=tol)
    if not ok:
        raise TrackingError(f"could not step off the complete structure (residual {res:.2e})")
    return make_character_point(system, x, prev=complete)


def track_from_complete(problem: DeformationProblem, complete: CharacterPoint,
                        du: Sequence[complex], max_step: float = 0.02,
                        tol: float = 1e-11) -> TrackedPath:
    """Finely tracked straight segment in normalized meridian logs from the
    complete structure to the given offsets.

    The first micro-step leaves the branch point by direct slot seeding; the
    rest is pinned-log tracking.  Integrating the volume form over a single
    long jump from the complete structure misses the cubic terms of the
    longitude log, so paths used for volumes must come through here."""
    scale = max(abs(d) for d in du)
    if scale == 0:
        return TrackedPath(points=[complete], taus=[0.0], start_on_V=True,
                           end_on_V=True, description="trivial segment")
    first = min(1e-2 / scale, 0.2)
    start = step_off_complete(problem, complete, [d * first for d in du], tol=tol)
    cons = [LogConstraint(i, 1.0, 0.0,
                          (lambda d: (lambda tau: tau * d))(du[i]))
            for i in range(len(du))]
    path = track(problem, start, cons, tau0=first, tau1=1.0,
                 first_step=min(max_step / scale, 0.05),
                 max_step=min(max_step / scale, 0.05), tol=tol,
                 description="segment from the complete structure",
                 allow_V_interior=False)
    return TrackedPath(points=[complete] + path.points, taus=[0.0] + path.taus,
                       description=path.description, start_on_V=True,
                       end_on_V=path.end_on_V,
                       steps_rejected=path.steps_rejected)


def cusp_shape_matrix(problem: DeformationProblem, complete: CharacterPoint,
                      delta: float = 1e-2) -> np.ndarray:
    """tau[i][j] ~ d v_i / d u_j at the complete structure, by one-sided
    differences of the pinned deformation."""
    h = len(problem.system.cusps)
    M = np.zeros((h, h), dtype=complex)
    for j in range(h):
        du = [0j] * h
        du[j] = delta
        pt = step_off_complete(problem, complete, du)
        for i in range(h):
            M[i, j] = (pt.cusps[i].v - complete.cusps[i].v) / delta
    return M


# ---------------------------------------------------------------------------
# Dehn filling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FillingCoefficients:
    """Per cusp: coprime (p, q) or None for an unfilled cusp."""
    slopes: tuple[Optional[tuple[int, int]], ...]

    def __post_init__(self):
        import math
        for s in self.slopes:
            if s is None:
                continue
            p, q = s
            if math.gcd(p, q) != 1:
                raise ValueError(f"filling coefficients {s} are not coprime")

    @staticmethod
    def parse(text: str, cusp_count: int) -> "FillingCoefficients":
        """'1,5' or '1,5;inf' style."""
        parts = [p.strip() for p in text.split(";")]
        if len(parts) != cusp_count:
            raise ValueError(f"expected {cusp_count} slope(s), got {len(parts)}")
        slopes = []
        for p in parts:
            if p in ("inf", "oo", "*"):
                slopes.append(None)
            else:
                a, b = p.split(",")
                slopes.append((int(a), int(b)))
        return FillingCoefficients(tuple(slopes))

    def label(self) -> str:
        return ";".join("inf" if s is None else f"{s[0]},{s[1]}" for s in self.slopes)


def solve_filling(problem: DeformationProblem, complete: CharacterPoint,
                  kappa: FillingCoefficients, tau_start: float = 0.01,
                  tol: float = 1e-11, max_step: float = 0.001
                  ) -> tuple[CharacterPoint, TrackedPath]:
    """Continue from the complete structure to the solution of the log-form
    filling equations p_i u_i + q_i v_i = 2 pi i at filled cusps, keeping
    unfilled cusps parabolic."""
    system = problem.system
    h = len(system.cusps)
    if len(kappa.slopes) != h:
        raise FillingError(f"kappa has {len(kappa.slopes)} entries for {h} cusps")
    filled = [i for i, s in enumerate(kappa.slopes) if s is not None]
    if not filled:
        path = TrackedPath(points=[complete], taus=[0.0],
                           description=f"trivial filling of {system.spec.name}",
                           start_on_V=True, end_on_V=True)
        return complete, path

    shapes = cusp_shape_matrix(problem, complete)
    # asymptotic first point: p_i u_i + q_i sum_j tau_ij u_j = 2 pi i tau_start
    A = np.zeros((len(filled), len(filled)), dtype=complex)
    rhs = np.full(len(filled), TWO_PI_I * tau_start, dtype=complex)
    for a, i in enumerate(filled):
        p, q = kappa.slopes[i]
        for b, j in enumerate(filled):
            A[a, b] = q * shapes[i, j] + (p if i == j else 0)
    du_f = np.linalg.solve(A, rhs)
    du = [0j] * h
    for a, i in enumerate(filled):
        du[i] = du_f[a]

    try:
        start_pt = step_off_complete(problem, complete, du)
    except TrackingError as e:
        raise FillingError(f"kappa={kappa.label()}: {e}") from e

    constraints = []
    for i in range(h):
        s = kappa.slopes[i]
        if s is None:
            constraints.append(pin_log(i, lambda tau: 0j))
        else:
            p, q = s
            constraints.append(LogConstraint(i, p, q, lambda tau: TWO_PI_I * tau))
    # settle the asymptotic seed exactly onto the constraint family at tau_start
    x, res, ok = problem.correct(start_pt.coords, _branch_of(start_pt),
                                 constraints, tau_start, tol=tol)
    if not ok:
        raise FillingError(f"kappa={kappa.label()}: start correction failed ({res:.2e})")
    start_pt = make_character_point(problem.system, x, prev=start_pt)
    try:
        path = track(problem, start_pt, constraints, tau0=tau_start, tau1=1.0,
                     tol=tol, first_step=max_step, max_step=max_step,
                     description=f"filling {kappa.label()} of {system.spec.name}")
    except TrackingError as e:
        raise FillingError(f"kappa={kappa.label()}: {e}") from e

    end = path.endpoint()
    for i in filled:
        p, q = kappa.slopes[i]
        c = end.cusps[i]
        resid = abs(p * (c.u - c.base_u) + q * (c.v - c.base_v) - TWO_PI_I)
        if resid >= 1e-9:
            raise FillingError(f"kappa={kappa.label()}: filling residual {resid:.2e}")
    for i, s in enumerate(kappa.slopes):
        if s is None and abs(end.cusps[i].u - end.cusps[i].base_u) >= 1e-9:
            raise FillingError(f"kappa={kappa.label()}: unfilled cusp {i + 1} drifted")

    full_path = TrackedPath(points=[complete] + path.points, taus=[0.0] + path.taus,
                            description=path.description,
                            start_on_V=True, end_on_V=path.end_on_V,
                            steps_rejected=path.steps_rejected)
    end.label = f"filled:{system.spec.name}:{kappa.label()}"
    return end, full_path


def make_filling_route_via_detour(problem: DeformationProblem,
                                  complete: CharacterPoint,
                                  slope: tuple[int, int], detour: complex,
                                  ) -> TrackedPath:
    """An alternative route from the complete structure to a one-cusp filled
    character: step off toward `detour` in the u-coordinate, then morph the
    combination p*u + q*v linearly onto the filling value 2 pi i.  Used by
    path-independence checks; the endpoint agrees with solve_filling's when
    the detour stays in the same tracking basin."""
    if len(problem.system.cusps) != 1:
        raise TrackingError("detour route helper supports one cusp")
    p, q = slope
    approach = track_from_complete(problem, complete, [detour], max_step=0.002)
    start = approach.endpoint()
    c = start.cusps[0]
    c0 = p * (c.u - c.base_u) + q * (c.v - c.base_v)
    cons = [LogConstraint(0, p, q,
                          lambda tau: c0 + tau * (TWO_PI_I - c0))]
    path = track(problem, start, cons, tau0=0.0, tau1=1.0,
                 first_step=0.002, max_step=0.002,
                 description=f"detour filling route ({p},{q})")
    return concatenate_paths(approach, path)


@dataclass
class FilledCharacter:
    kappa: FillingCoefficients
    point: Optional[CharacterPoint]
    path: Optional[TrackedPath]
    trace_point: Optional[np.ndarray]
    off_pU: bool
    error: Optional[str] = None


def sample_dense_set(problem: DeformationProblem, complete: CharacterPoint,
                     prime_list: Sequence[int],
                     per_cusp_choices: Optional[Sequence[Sequence[int]]] = None
                     ) -> list[FilledCharacter]:
    """Filled characters chi_kappa for kappa in the cartesian product of
    (1, q) slopes, q drawn from prime_list (or per-cusp overrides): a finite
    sample of the Zariski-dense filled set, with each trace point checked off
    the image of U."""
    h = len(problem.system.cusps)
    choices = per_cusp_choices or [list(prime_list)] * h
    out = []
    for qs in itertools.product(*choices):
        kappa = FillingCoefficients(tuple((1, int(q)) for q in qs))
        try:
            pt, path = solve_filling(problem, complete, kappa)
            z = pt.trace_vector()
            off = not _z_on_pU(z, 1e-3)
            out.append(FilledCharacter(kappa, pt, path, z, off))
        except (FillingError, TrackingError, ContinuationError) as e:
            out.append(FilledCharacter(kappa, None, None, None, False, error=str(e)))
    return out


def _z_on_pU(z: np.ndarray, tol: float) -> bool:
    h = len(z) // 3
    for i in range(h):
        if abs(z[3 * i] ** 2 - 4) < tol and abs(z[3 * i + 1] ** 2 - 4) < tol:
            return True
    return False


# ---------------------------------------------------------------------------
# fibers of the restriction map
# ---------------------------------------------------------------------------

class _FiberSystem:
    """Gauged system together with boundary-trace constraints traces(x) = z."""

    def __init__(self, system: GaugedSystem, z: np.ndarray):
        self.system = system
        self.z = np.asarray(z, dtype=complex)

    def values(self, x):
        return np.concatenate([self.system.compiled.values(x),
                               self.system.compiled_traces.values(x) - self.z])

    def jacobian(self, x):
        return np.vstack([self.system.compiled.jacobian(x),
                          self.system.compiled_traces.jacobian(x)])

    def values_and_jacobian(self, x):
        return self.values(x), self.jacobian(x)


@dataclass
class FiberReport:
    z: np.ndarray
    points: list[CharacterPoint]
    keys: list[np.ndarray]
    twist_pairs: list[tuple[int, int, tuple[int, ...]]]
    orbits: list[list[int]]
    sl2_count: int
    psl2_count: int
    inconclusive: bool
    excluded: bool
    excluded_reason: str
    branch_ok: list[bool]
    count_history: list[int]
    seed: int
    budget: int
    volumes: Optional[list[float]] = None

    def to_json(self) -> dict:
        c = lambda zz: [zz.real, zz.imag]
        return {
            "z": [c(v) for v in self.z],
            "sl2_count": self.sl2_count,
            "psl2_count": self.psl2_count,
            "inconclusive": self.inconclusive,
            "excluded": self.excluded,
            "excluded_reason": self.excluded_reason,
            "twist_pairs": [[i, j, list(e)] for i, j, e in self.twist_pairs],
            "orbits": self.orbits,
            "branch_full_rank": self.branch_ok,
            "count_history": self.count_history,
            "seed": self.seed,
            "budget": self.budget,
            "volumes": self.volumes,
            "points": [p.to_json() for p in self.points],
        }


def _char_distance(k1: np.ndarray, k2: np.ndarray) -> float:
    return float(np.max(np.abs(k1 - k2)))


def restriction_rank_ok(system: GaugedSystem, coords, threshold=1e-6) -> bool:
    """Full-rank test of the boundary-trace map on the slice tangent space."""
    T = system.tangent_basis(coords)
    Jt = system.compiled_traces.jacobian(coords)
    M = Jt @ T
    if M.size == 0:
        return False
    sv = np.linalg.svd(M, compute_uv=False)
    h = len(system.cusps)
    return len(sv) >= h and bool(sv[min(h, len(sv)) - 1] > threshold)


def fiber_over(system: GaugedSystem, z: np.ndarray,
               seeds: Sequence[CharacterPoint], budget: int = 64,
               seed: int = 0, monodromy_loops: int = 4,
               dedup_tol: float = 1e-6, newton_tol: float = 1e-10,
               spec: Optional[ManifoldSpec] = None) -> FiberReport:
    """All gauge-slice solutions with boundary traces z found within budget,
    deduplicated as characters and classified into sign-twist orbits.

    The count stability protocol records the running number of distinct
    characters; a count still moving in the last quarter of the budget marks
    the report inconclusive."""
    spec = spec or system.spec
    z = np.asarray(z, dtype=complex)
    rng = np.random.default_rng(seed)
    fsys = _FiberSystem(system, z)
    seed_coords = [np.asarray(s.coords, dtype=complex) for s in seeds]
    scale = max((float(np.max(np.abs(c))) for c in seed_coords), default=1.0)

    points: list[CharacterPoint] = []
    keys: list[np.ndarray] = []
    history: list[int] = []

    def register(x) -> bool:
        key = system.char_key(x)
        for k in keys:
            if _char_distance(key, k) < dedup_tol:
                return False
        pt = make_character_point(system, x, label="fiber")
        points.append(pt)
        keys.append(key)
        return True

    attempts = 0
    while attempts < budget:
        attempts += 1
        if seed_coords and attempts <= len(seed_coords):
            x0 = seed_coords[attempts - 1]
        elif seed_coords and rng.uniform() < 0.7:
            base = seed_coords[rng.integers(len(seed_coords))]
            sigma = 10.0 ** rng.uniform(-2, 0.3)
            x0 = base + sigma * (rng.normal(size=base.shape) + 1j * rng.normal(size=base.shape))
        else:
            n = len(system.vars)
            x0 = scale * (rng.normal(size=n) + 1j * rng.normal(size=n))
        try:
            result = newton_correct(fsys, x0, tol=newton_tol, maxiter=40,
                                    condition_limit=1e12)
            register(result.x)
        except ContinuationError:
            pass
        history.append(len(points))

    # monodromy loops around the meridian-log coordinates, filtered by z-return
    if monodromy_loops and points:
        try:
            base_pt = points[0]
            problem = DeformationProblem(system, base_pt)
            for _ in range(monodromy_loops):
                _monodromy_loop(problem, system, points, keys, z, rng, register)
                history.append(len(points))
        except (TrackingError, ContinuationError):
            pass

    quarter = max(1, len(history) // 4)
    inconclusive = (not points) or \
        (len(history) >= 4 and history[-1] != history[-quarter])
    excluded = False
    reason = ""
    if _z_on_pU(z, 1e-3):
        excluded = True
        reason = "z lies on the image of U (some cusp trace pair at +-2); degree claims do not apply"
    branch_ok = [restriction_rank_ok(system, p.coords) for p in points]
    if points and not all(branch_ok):
        excluded = True
        reason = (reason + "; " if reason else "") + \
            "restriction map rank-deficient at a fiber point (branch locus)"

    twists = enumerate_twists(spec)
    twist_pairs = []
    parent = list(range(len(points)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            for tw in twists:
                if tw.is_trivial():
                    continue
                twisted = _twist_key(system, keys[i], tw)
                if _char_distance(twisted, keys[j]) < dedup_tol:
                    twist_pairs.append((i, j, tw.epsilon))
                    parent[find(i)] = find(j)
                    break
    z_real = bool(np.max(np.abs(z.imag)) < 1e-9) if len(z) else True
    if z_real:
        for i in range(len(points)):
            for j in range(i + 1, len(points)):
                if _char_distance(np.conj(keys[i]), keys[j]) < dedup_tol:
                    parent[find(i)] = find(j)
    orbit_map: dict[int, list[int]] = {}
    for i in range(len(points)):
        orbit_map.setdefault(find(i), []).append(i)
    orbits = sorted(orbit_map.values())
    return FiberReport(
        z=z, points=points, keys=keys, twist_pairs=twist_pairs, orbits=orbits,
        sl2_count=len(points), psl2_count=len(orbits),
        inconclusive=inconclusive, excluded=excluded, excluded_reason=reason,
        branch_ok=branch_ok, count_history=history, seed=seed, budget=budget)


def _twist_key(system: GaugedSystem, key: np.ndarray, tw: SignTwist) -> np.ndarray:
    signs = np.array([tw.on_word(w) for w in system.key_words], dtype=complex)
    return key * signs


def point_on_U(pt: CharacterPoint, tol: float) -> bool:
    """Eigenvalue-level U test: some cusp with m^2 and l^2 both near 1."""
    for c in pt.cusps:
        if abs(c.m ** 2 - 1) < tol and abs(c.l ** 2 - 1) < tol:
            return True
    return False


def degenerating_cusp(pt: CharacterPoint, tol: float, move_tol: float = 1e-6) -> bool:
    """A cusp that has deformed away from its base lift yet returned to
    parabolic traces: the situation path tracking must avoid.  Cusps pinned
    at the complete structure (e.g. unfilled cusps) stay parabolic with zero
    volume-form contribution and are harmless."""
    for c in pt.cusps:
        moving = max(abs(c.u - c.base_u), abs(c.v - c.base_v)) > move_tol
        if moving and abs(c.trace_m ** 2 - 4) < tol and abs(c.trace_l ** 2 - 4) < tol:
            return True
    return False


def random_log_loop_targets(base: CharacterPoint, rng, radius=(0.05, 0.25)):
    """Per-cusp closed elliptical curves in normalized u-coordinates, passing
    through the base point's logs at tau = 0 and 1."""
    h = len(base.cusps)
    r1 = rng.uniform(*radius, size=h)
    r2 = rng.uniform(*radius, size=h)
    phase = rng.uniform(0, 2 * PI, size=h)

    def factory(i):
        c0 = base.cusps[i].u - base.cusps[i].base_u

        def target(tau):
            ang = 2 * PI * tau + phase[i]
            return c0 + r1[i] * (cmath.cos(ang) - cmath.cos(phase[i])) + \
                1j * r2[i] * (cmath.sin(ang) - cmath.sin(phase[i]))
        return target

    return [pin_log(i, factory(i)) for i in range(h)]


def concatenate_paths(a: TrackedPath, b: TrackedPath) -> TrackedPath:
    """Join two paths where b starts at a's endpoint."""
    shift = a.taus[-1]
    return TrackedPath(points=list(a.points) + list(b.points[1:]),
                       taus=list(a.taus) + [shift + t - b.taus[0] for t in b.taus[1:]],
                       description=a.description,
                       start_on_V=a.start_on_V, end_on_V=b.end_on_V,
                       steps_rejected=a.steps_rejected + b.steps_rejected)


def track_closed_loop(problem: DeformationProblem, base: CharacterPoint,
                      constraints, max_windings: int = 2,
                      closure_tol: float = 1e-9, **opts) -> TrackedPath:
    """Track the constraint loop until the eigenvalue coordinates close up.

    A loop in the meridian logs may permute the finitely many sheets of the
    eigenvalue variety over it; winding the same loop again closes any
    order-two monodromy.  Raises when the path refuses to close."""
    total = track(problem, base, constraints, tau0=0.0, tau1=1.0, **opts)
    for _ in range(max_windings):
        end = total.endpoint()
        gap = max(max(abs(ca.m - cb.m), abs(ca.l - cb.l))
                  for ca, cb in zip(base.cusps, end.cusps))
        if gap < closure_tol:
            return total
        nxt = track(problem, end, constraints, tau0=0.0, tau1=1.0, **opts)
        total = concatenate_paths(total, nxt)
    end = total.endpoint()
    gap = max(max(abs(ca.m - cb.m), abs(ca.l - cb.l))
              for ca, cb in zip(base.cusps, end.cusps))
    if gap < closure_tol:
        return total
    raise TrackingError(f"loop failed to close after {max_windings} windings "
                        f"(gap {gap:.2e})")


def _monodromy_loop(problem, system, points, keys, z, rng, register):
    """Track a random u-coordinate ellipse from a random known fiber point;
    keep the endpoint only if its full trace vector returns to z."""
    base = points[int(rng.integers(len(points)))]
    cons = random_log_loop_targets(base, rng)
    path = track(problem, base, cons, tau0=0.0, tau1=1.0, tol=1e-11,
                 first_step=0.05, max_step=0.08,
                 description="monodromy loop", allow_V_interior=True)
    if any(point_on_U(pt, 1e-3) for pt in path.points):
        return  # loop passed too close to U; not a legal monodromy loop
    end = path.endpoint()
    if np.max(np.abs(end.trace_vector() - z)) < 1e-7:
        register(end.coords)
