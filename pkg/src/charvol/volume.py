"""The volume differential on eigenvalue coordinates and anchored volumes.

The 1-form is, per cusp,

    -( log|l| d(arg m) - log|m| d(arg l) )
      = (-Re v) d(Im u) + (Re u) d(Im v)

in the branch-lifted logs u = log m, v = log l carried by tracked paths.  It
vanishes wherever every peripheral eigenvalue lies on the unit circle, and
for a left-handed peripheral basis it is the differential of the volume
function, so line integrals along tracked paths assign each endpoint an
absolute volume once the complete structure is anchored at the fixture's
reference volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .continuation import DeformationProblem, TrackedPath, refine_path
from .manifold import ManifoldSpec
from .repvar import CharacterPoint


def _moving_cusps(path: TrackedPath, move_tol: float = 1e-6) -> list[bool]:
    """Per cusp: does the normalized log ever leave the complete-structure
    lift along the path?  Cusps pinned there contribute nothing to the form
    and do not obstruct integration; moving cusps must stay off U."""
    h = len(path.points[0].cusps)
    moving = [False] * h
    for pt in path.points:
        for i, c in enumerate(pt.cusps):
            if max(abs(c.u - c.base_u), abs(c.v - c.base_v)) > move_tol:
                moving[i] = True
    return moving


def _on_U_moving(pt: CharacterPoint, moving: list[bool], tol: float) -> bool:
    for i, c in enumerate(pt.cusps):
        if moving[i] and abs(c.m ** 2 - 1) < tol and abs(c.l ** 2 - 1) < tol:
            return True
    return False


class VolumeError(RuntimeError):
    pass


@dataclass
class EtaValue:
    """Coefficients of the volume form at a point: per cusp the pair
    (d/d Im u, d/d Im v) = (-Re v, +Re u), sign-flipped for right-handed bases."""
    coefficients: list[tuple[float, float]]
    on_U: bool

    def max_abs(self) -> float:
        return max((max(abs(a), abs(b)) for a, b in self.coefficients), default=0.0)


def eta_at(x, handedness_sign: int = 1, u_tol: float = 1e-6) -> EtaValue:
    """Evaluate the form's coefficients from branch lifts.

    Accepts a CharacterPoint or an EigenvaluePoint carrying branch lifts;
    raises when lifts are missing.  Points on U are flagged, not rejected
    (the form extends by the same formula)."""
    lifts = _branch_lifts(x)
    if lifts is None:
        raise VolumeError("eta needs branch lifts (u_i, v_i); none present")
    coeffs = []
    onu = False
    for u, v in lifts:
        coeffs.append((handedness_sign * (-v.real), handedness_sign * (u.real)))
        m2 = abs(np.exp(2 * u) - 1)
        l2 = abs(np.exp(2 * v) - 1)
        if m2 < u_tol and l2 < u_tol:
            onu = True
    return EtaValue(coefficients=coeffs, on_U=onu)


def _branch_lifts(x):
    if hasattr(x, "cusps"):
        return [(c.u, c.v) for c in x.cusps]
    if getattr(x, "lifts", None) is not None:
        return list(x.lifts)
    return None


def _segment_increment(a: CharacterPoint, b: CharacterPoint, sign: int) -> float:
    total = 0.0
    for ca, cb in zip(a.cusps, b.cusps):
        du = (cb.u - ca.u).imag
        dv = (cb.v - ca.v).imag
        total += -0.5 * (ca.v.real + cb.v.real) * du + 0.5 * (ca.u.real + cb.u.real) * dv
    return sign * total


def running_integral(path: TrackedPath, handedness_sign: int = 1) -> np.ndarray:
    out = np.zeros(len(path.points))
    for k in range(len(path.points) - 1):
        out[k + 1] = out[k] + _segment_increment(path.points[k], path.points[k + 1],
                                                 handedness_sign)
    return out


@dataclass
class IntegralResult:
    value: float
    error_estimate: float
    samples: int

    def __float__(self):
        return self.value


def integrate_eta(path: TrackedPath, handedness_sign: int = 1,
                  u_tol: float = 1e-6) -> IntegralResult:
    """Composite trapezoid integral of the volume form along a tracked path.

    The coarse (every second sample) integral gives a Richardson error
    estimate; interior samples on U are rejected."""
    if len(path.points) < 1:
        raise VolumeError("empty path")
    moving = _moving_cusps(path)
    for pt in path.points[1:-1]:
        if _on_U_moving(pt, moving, u_tol):
            raise VolumeError("interior path sample lies on U")
    fine = running_integral(path, handedness_sign)
    value = float(fine[-1])
    pts = path.points
    coarse = 0.0
    idx = list(range(0, len(pts), 2))
    if idx[-1] != len(pts) - 1:
        idx.append(len(pts) - 1)
    for a, b in zip(idx, idx[1:]):
        coarse += _segment_increment(pts[a], pts[b], handedness_sign)
    err = abs(value - coarse) / 3.0
    return IntegralResult(value=value, error_estimate=err, samples=len(pts))


def loop_integral(loop: TrackedPath, handedness_sign: int = 1,
                  endpoint_tol: float = 1e-9) -> float:
    """Integral around a closed path (closure measured in the eigenvalue
    coordinates; the branch lifts may return shifted by multiples of 2 pi i).
    Exactness predicts a value near zero."""
    a, b = loop.points[0], loop.points[-1]
    for ca, cb in zip(a.cusps, b.cusps):
        if abs(ca.m - cb.m) >= endpoint_tol or abs(ca.l - cb.l) >= endpoint_tol:
            raise VolumeError(
                f"loop endpoints differ in eigenvalue coordinates: "
                f"|dm| = {abs(ca.m - cb.m):.2e}, |dl| = {abs(ca.l - cb.l):.2e}")
    moving = _moving_cusps(loop)
    for pt in loop.points:
        if _on_U_moving(pt, moving, 1e-6):
            raise VolumeError("loop touches U")
    return integrate_eta(loop, handedness_sign).value


@dataclass
class VolumeLabel:
    value: float
    anchor: str
    path_id: str
    quadrature_error: float

    def to_json(self):
        return {"value": self.value, "anchor": self.anchor,
                "path_id": self.path_id, "quadrature_error": self.quadrature_error}


def handedness_sign(spec: ManifoldSpec) -> int:
    return 1 if spec.basis_handedness == "left" else -1


def anchored_volume(spec: ManifoldSpec, path: TrackedPath) -> VolumeLabel:
    """reference volume (orientation-signed) plus the path integral from the
    complete structure."""
    start = path.points[0]
    sign = start.orientation if start.orientation != 0 else 1
    anchor_value = sign * spec.reference_volume.value
    if len(path.points) == 1:
        return VolumeLabel(value=anchor_value,
                           anchor=f"complete structure of {spec.name} "
                                  f"({'+' if sign > 0 else '-'}reference)",
                           path_id=path.description or "trivial path",
                           quadrature_error=0.0)
    integ = integrate_eta(path, handedness_sign(spec))
    return VolumeLabel(value=anchor_value + integ.value,
                       anchor=f"complete structure of {spec.name} "
                              f"({'+' if sign > 0 else '-'}reference)",
                       path_id=path.description or f"path[{len(path.points)}]",
                       quadrature_error=integ.error_estimate)


def quadrature_stability(problem: DeformationProblem, path: TrackedPath,
                         constraints, handedness_sign_: int = 1) -> float:
    """|integral(refined) - integral(path)| with doubled sampling."""
    fine = refine_path(problem, path, constraints, factor=2)
    return abs(integrate_eta(fine, handedness_sign_).value -
               integrate_eta(path, handedness_sign_).value)


# ---------------------------------------------------------------------------
# Lobachevsky function
# ---------------------------------------------------------------------------

def lobachevsky(theta: float) -> float:
    """The Lobachevsky function, the integral whose Fourier series is
    (1/2) sum sin(2 n theta) / n^2, via the accelerated zeta-series

        L(t) = t - t log|2t| + sum_{n>=1} zeta(2n) t^(2n+1) / (n (2n+1) pi^(2n))

    after odd pi-periodic reduction to |t| <= pi/2.  Absolute error well
    below 1e-12."""
    t = math.fmod(theta, math.pi)
    if t > math.pi / 2:
        t -= math.pi
    elif t < -math.pi / 2:
        t += math.pi
    if t == 0.0:
        return 0.0
    sign = 1.0
    if t < 0:
        t, sign = -t, -1.0
    total = t - t * math.log(2 * t)
    ratio = (t / math.pi) ** 2
    power = ratio
    n = 1
    while True:
        term = _zeta_2n(n) * t * power / (n * (2 * n + 1))
        total += term
        if abs(term) < 1e-17 or n > 200:
            break
        power *= ratio
        n += 1
    return sign * total


_ZETA_CACHE: dict[int, float] = {}


def _zeta_2n(n: int) -> float:
    """zeta(2n) by direct summation with an Euler-Maclaurin tail at K = 32:
    full double precision for all n >= 1."""
    if n not in _ZETA_CACHE:
        s = 2 * n
        K = 32
        total = sum(k ** (-s) for k in range(1, K))
        # tail: sum_{k >= K} k^-s
        total += K ** (1 - s) / (s - 1) + 0.5 * K ** (-s) + s * K ** (-s - 1) / 12 \
            - s * (s + 1) * (s + 2) * K ** (-s - 3) / 720
        _ZETA_CACHE[n] = total
    return _ZETA_CACHE[n]


def lobachevsky_series(theta: float, terms: int = 200000) -> float:
    """Direct Fourier partial sum (1/2) sum_{n<=N} sin(2 n theta)/n^2: the
    slow independent oracle used by tests."""
    total = 0.0
    for n in range(terms, 0, -1):
        total += math.sin(2 * n * theta) / (n * n)
    return total / 2


def reference_volume_from_formula(spec: ManifoldSpec) -> Optional[float]:
    lob = spec.reference_volume.lobachevsky
    if lob is None:
        return None
    coeff, num, den = lob
    return coeff * lobachevsky(math.pi * num / den)


# ---------------------------------------------------------------------------
# fiber volume equality
# ---------------------------------------------------------------------------

@dataclass
class FiberVolumeCheck:
    volumes: list[Optional[float]]
    max_difference: float
    passed: bool
    excluded: list[int]
    notes: list[str]


def fiber_volume_equality(spec: ManifoldSpec, report,
                          paths: Sequence[Optional[TrackedPath]],
                          tol: float = 1e-6) -> FiberVolumeCheck:
    """Anchored volumes across one fiber of the restriction map must agree.

    `paths` supplies a tracked path from the complete structure to each fiber
    point (None when no path could be constructed; such points are excluded
    with a note, as are points failing the branch full-rank test)."""
    volumes: list[Optional[float]] = []
    excluded: list[int] = []
    notes: list[str] = []
    for idx, (pt, ok) in enumerate(zip(report.points, report.branch_ok)):
        path = paths[idx] if idx < len(paths) else None
        if not ok:
            excluded.append(idx)
            notes.append(f"point {idx}: on the branch locus V'; excluded")
            volumes.append(None)
            continue
        if path is None:
            excluded.append(idx)
            notes.append(f"point {idx}: no tracked path from the complete structure")
            volumes.append(None)
            continue
        volumes.append(anchored_volume(spec, path).value)
    present = [v for v in volumes if v is not None]
    if len(present) <= 1:
        return FiberVolumeCheck(volumes, 0.0, True, excluded, notes)
    diff = max(present) - min(present)
    return FiberVolumeCheck(volumes, float(diff), bool(diff < tol), excluded, notes)
