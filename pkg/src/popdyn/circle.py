"""The circle map induced by alternating pops, its lift and its rotation number.

Inside the 0-pi double-rocker range the closure curve is a star-shaped
loop around the origin of the (theta1, theta2) square, so it is
parameterised by the polar angle ``phi = atan2(theta2, theta1)``.  The
two-pop map then becomes an orientation-preserving circle map ``f``.

Rotation numbers are measured clockwise in ``phi``: with ``F`` the lift,
``rho = lim (phi - F^n(phi)) / (2*pi*n)  (mod 1)``.  For equal bars the map
turns every point a third of a circle clockwise and ``rho = 1/3``.  The
counter-clockwise value is ``1 - rho``; rationality, and hence periodicity
versus density, does not depend on the choice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from .errors import BranchAmbiguity, OriginUndefined, OutsideLambda
from .linkage import (
    TWO_PI,
    AngleConfig,
    Lengths,
    in_lambda,
    lambda_interval,
    lbar,
    wrap,
)
from .pops import increment12, increment23
from .quadrature import adaptive_simpson

ORBIT_AVERAGE = "OrbitAverage"
MEASURE_INTEGRAL = "MeasureIntegral"

MAX_ROOT_STEPS = 200
# bisection shrinks the bracket to this fraction of the ray length before Newton takes over
BISECT_REL_WIDTH = 1e-6
# displacements this close to 0 or 2*pi leave the lift branch undetermined
BRANCH_MARGIN = 1e-9


@dataclass(frozen=True)
class PolarConfig:
    L: float
    phi: float


@dataclass(frozen=True)
class RotationEstimate:
    rho: float
    method: str
    error_bound: float
    iterations_or_nodes: int
    # mean lifted displacement per iterate, in radians
    raw_displacement: float = float("nan")


@dataclass(frozen=True)
class PeriodicityReport:
    rational: Optional[Tuple[int, int]]
    max_defect: float
    rho_estimate: float = float("nan")


def check_lambda(lengths: Lengths, L: float) -> None:
    lo, hi = lambda_interval(lengths)
    if not (lo < L < hi):
        if L >= hi:
            raise OutsideLambda(f"L < l1+l2+l3 violated: L={L:g} >= {hi:g}")
        l1, l2, l3 = lengths
        names = {
            -l1 + l2 + l3: "L > -l1+l2+l3",
            l1 - l2 + l3: "L > l1-l2+l3",
            l1 + l2 - l3: "L > l1+l2-l3",
        }
        raise OutsideLambda(f"{names[max(names)]} violated: L={L:g} <= {lo:g}")


def to_polar(angles, lengths: Lengths) -> PolarConfig:
    t1, t2 = _pair(angles)
    if t1 == 0.0 and t2 == 0.0:
        raise OriginUndefined("polar angle undefined at (0, 0)")
    return PolarConfig(lbar(lengths, (t1, t2)), wrap(math.atan2(t2, t1)))


def _closure_gap(l1, l2, l3, excess, c, s, g):
    """L^2 - Lbar^2 along the ray gamma*(c, s), written without cancellation.

    ``excess`` is (l1+l2+l3)^2 - L^2.  Also returns the gamma-derivative of Lbar^2.
    """
    a1, a2, a12 = g * c, g * s, g * (c + s)
    s1, s2, s12 = math.sin(0.5 * a1), math.sin(0.5 * a2), math.sin(0.5 * a12)
    drop = 4.0 * (l1 * l2 * s1 * s1 + l2 * l3 * s2 * s2 + l1 * l3 * s12 * s12)
    slope = -2.0 * (
        l1 * l2 * c * math.sin(a1)
        + l2 * l3 * s * math.sin(a2)
        + l1 * l3 * (c + s) * math.sin(a12)
    )
    # Lbar^2 - L^2 = excess - drop
    return excess - drop, slope


def from_polar_with_steps(lengths: Lengths, L: float, phi: float) -> Tuple[float, float, int]:
    """Solve Lbar = L on the ray at angle ``phi``; returns ``(theta1, theta2, steps)``.

    Lbar^2 decreases strictly along the ray while it stays inside the
    admissible range, so the root bracketed on [0, gamma_max] is unique.
    """
    check_lambda(lengths, L)
    l1, l2, l3 = lengths
    total = l1 + l2 + l3
    excess = (total - L) * (total + L)
    c, s = math.cos(phi), math.sin(phi)
    hi = math.pi / max(abs(c), abs(s))
    lo = 0.0
    h_hi, _ = _closure_gap(l1, l2, l3, excess, c, s, hi)
    if not h_hi < 0.0:
        raise OutsideLambda(f"ray at phi={phi!r} does not cross Lbar = {L!r}")
    steps = 0
    width = BISECT_REL_WIDTH * hi
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        h, _ = _closure_gap(l1, l2, l3, excess, c, s, mid)
        steps += 1
        if h > 0.0:
            lo = mid
        elif h < 0.0:
            hi = mid
        else:
            return mid * c, mid * s, steps
    g = 0.5 * (lo + hi)
    while steps < MAX_ROOT_STEPS:
        h, dh = _closure_gap(l1, l2, l3, excess, c, s, g)
        steps += 1
        if h == 0.0:
            break
        if h > 0.0:
            lo = g
        else:
            hi = g
        nxt = g - h / dh if dh != 0.0 else 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - g) <= 4e-16 * g:
            g = nxt
            break
        g = nxt
    else:
        raise OutsideLambda(f"root finding did not converge in {MAX_ROOT_STEPS} steps")
    return g * c, g * s, steps


def _closure_gap_array(l1, l2, l3, excess, c, s, g):
    a1, a2, a12 = g * c, g * s, g * (c + s)
    s1, s2, s12 = np.sin(0.5 * a1), np.sin(0.5 * a2), np.sin(0.5 * a12)
    drop = 4.0 * (l1 * l2 * s1 * s1 + l2 * l3 * s2 * s2 + l1 * l3 * s12 * s12)
    slope = -2.0 * (l1 * l2 * c * np.sin(a1) + l2 * l3 * s * np.sin(a2) + l1 * l3 * (c + s) * np.sin(a12))
    return excess - drop, slope


def from_polar_array(lengths: Lengths, L: float, phi) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised ray solve; same bracket and stopping rule as the scalar version."""
    check_lambda(lengths, L)
    l1, l2, l3 = lengths
    total = l1 + l2 + l3
    excess = (total - L) * (total + L)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    hi = np.pi / np.maximum(np.abs(c), np.abs(s))
    lo = np.zeros_like(hi)
    n_bisect = int(math.ceil(math.log2(1.0 / BISECT_REL_WIDTH)))
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        h, _ = _closure_gap_array(l1, l2, l3, excess, c, s, mid)
        pos = h > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    g = 0.5 * (lo + hi)
    active = np.ones(g.shape, dtype=bool)
    for _ in range(MAX_ROOT_STEPS - n_bisect):
        h, dh = _closure_gap_array(l1, l2, l3, excess, c, s, g)
        lo = np.where(active & (h > 0.0), g, lo)
        hi = np.where(active & (h < 0.0), g, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = g - h / dh
        bad = ~((lo < nxt) & (nxt < hi))
        nxt = np.where(bad, 0.5 * (lo + hi), nxt)
        nxt = np.where(active & (h != 0.0), nxt, g)
        active &= (h != 0.0) & (np.abs(nxt - g) > 4e-16 * g)
        g = nxt
        if not active.any():
            break
    else:
        raise OutsideLambda(f"root finding did not converge in {MAX_ROOT_STEPS} steps")
    return g * c, g * s


def measure_density_array(lengths: Lengths, L: float, phi) -> np.ndarray:
    t1, t2 = from_polar_array(lengths, L, phi)
    l1, l2, l3 = lengths
    num = l1 * l2 * t1 * np.sin(t1) + l2 * l3 * t2 * np.sin(t2) + l1 * l3 * (t1 + t2) * np.sin(t1 + t2)
    lb = np.sqrt(np.maximum(
        l1 * l1 + l2 * l2 + l3 * l3 + 2 * l1 * l2 * np.cos(t1) + 2 * l2 * l3 * np.cos(t2)
        + 2 * l1 * l3 * np.cos(t1 + t2), 0.0))
    return lb * (t1 * t1 + t2 * t2) / np.abs(num)


def from_polar(lengths: Lengths, L: float, phi: float) -> AngleConfig:
    t1, t2, _ = from_polar_with_steps(lengths, L, phi)
    return AngleConfig(t1, t2)


def det_jg(lengths: Lengths, angles) -> float:
    """Jacobian determinant of (theta1, theta2) -> (Lbar, phi)."""
    t1, t2 = _pair(angles)
    r2 = t1 * t1 + t2 * t2
    if r2 == 0.0:
        raise OriginUndefined("polar Jacobian undefined at (0, 0)")
    l1, l2, l3 = lengths
    num = (
        l1 * l2 * t1 * math.sin(t1)
        + l2 * l3 * t2 * math.sin(t2)
        + l1 * l3 * (t1 + t2) * math.sin(t1 + t2)
    )
    return -num / (lbar(lengths, (t1, t2)) * r2)


def _pops(lengths: Lengths, t1: float, t2: float) -> Tuple[float, float]:
    # one bars 1-2 pop then one bars 2-3 pop
    t1, t2 = -t1, wrap(t2 + increment12(lengths, t1))
    return wrap(t1 + increment23(lengths, t2)), -t2


def _phi(t1: float, t2: float) -> float:
    return wrap(math.atan2(t2, t1))


def f12(lengths: Lengths, L: float, phi: float) -> float:
    t1, t2, _ = from_polar_with_steps(lengths, L, phi)
    return _phi(-t1, wrap(t2 + increment12(lengths, t1)))


def f23(lengths: Lengths, L: float, phi: float) -> float:
    t1, t2, _ = from_polar_with_steps(lengths, L, phi)
    return _phi(wrap(t1 + increment23(lengths, t2)), -t2)


def f(lengths: Lengths, L: float, phi: float) -> float:
    """The two-pop circle map ``f23(L, f12(L, phi))``.

    The intermediate state is kept in angle coordinates, which skips the
    second root solve; ``f23(L, f12(L, phi))`` agrees to round-off.
    """
    t1, t2, _ = from_polar_with_steps(lengths, L, phi)
    return _phi(*_pops(lengths, t1, t2))


def displacement(phi_from: float, phi_to: float) -> float:
    """Counter-clockwise arc length from ``phi_from`` to ``phi_to``, in [0, 2*pi)."""
    return (phi_to - phi_from) % TWO_PI


def cw_displacement(phi: float, image: float) -> float:
    """Clockwise arc length from ``phi`` to ``image``, in [0, 2*pi)."""
    return (phi - image) % TWO_PI


def lift_step(lengths: Lengths, L: float, x: float) -> float:
    """Lift of ``f`` to the real line: ``x - D(x)`` with ``D`` the clockwise displacement.

    ``f`` has no fixed point, so its continuous displacement never crosses a
    multiple of 2*pi and the representative in (0, 2*pi) is that continuous
    branch, up to a global integer shift that leaves the rotation number
    mod 1 unchanged.  Steps longer than pi are therefore unambiguous; only
    displacements within ``BRANCH_MARGIN`` of a full turn are rejected.
    """
    phi = wrap(x)
    d = cw_displacement(phi, f(lengths, L, phi))
    if d < BRANCH_MARGIN or d > TWO_PI - BRANCH_MARGIN:
        raise BranchAmbiguity(
            f"displacement {d!r} at phi={phi!r} is within {BRANCH_MARGIN:g} of a full turn"
        )
    return x - d


def iterate_phi(lengths: Lengths, L: float, phi0: float, n: int) -> List[float]:
    """``[phi0, f(phi0), ..., f^n(phi0)]``, iterated in angle coordinates."""
    t1, t2, _ = from_polar_with_steps(lengths, L, phi0)
    out = [wrap(phi0)]
    for _ in range(n):
        t1, t2 = _pops(lengths, t1, t2)
        out.append(_phi(t1, t2))
    return out


def _lifted_displacement(lengths: Lengths, L: float, phi0: float, n: int) -> Tuple[float, float]:
    """Total clockwise displacement over ``n`` iterates and the final closure residual."""
    l1, l2, l3 = lengths
    t1, t2, _ = from_polar_with_steps(lengths, L, phi0)
    atan2, sin, cos, pi = math.atan2, math.sin, math.cos, math.pi
    phi = atan2(t2, t1)
    total = 0.0
    comp = 0.0
    for _ in range(n):
        # bars 1-2 pop
        s = sin(t1)
        inc = 2.0 * atan2(l1 * s, l2 + l1 * cos(t1)) if t1 != 0.0 else 0.0
        t1, t2 = -t1, pi - (pi - (t2 + inc)) % TWO_PI
        # bars 2-3 pop
        s = sin(t2)
        inc = 2.0 * atan2(l3 * s, l2 + l3 * cos(t2)) if t2 != 0.0 else 0.0
        t1, t2 = pi - (pi - (t1 + inc)) % TWO_PI, -t2
        nphi = atan2(t2, t1)
        d = (phi - nphi) % TWO_PI
        if d < BRANCH_MARGIN or d > TWO_PI - BRANCH_MARGIN:
            raise BranchAmbiguity(f"displacement {d!r} at phi={phi!r} is within {BRANCH_MARGIN:g} of a full turn")
        # Kahan summation keeps the running total exact to a few ulps
        y = d - comp
        tmp = total + y
        comp = (tmp - total) - y
        total = tmp
        phi = nphi
    residual = abs(lbar(lengths, (t1, t2)) - L)
    return total, residual


def rotation_number_orbit(lengths: Lengths, L: float, n: int, phi0: float = 0.0) -> RotationEstimate:
    """Orbit average of the clockwise displacement; within ``1/n`` of the rotation number."""
    if n < 1:
        raise ValueError("n must be at least 1")
    total, _ = _lifted_displacement(lengths, L, phi0, n)
    mean = total / n
    rho = (mean / TWO_PI) % 1.0
    return RotationEstimate(rho, ORBIT_AVERAGE, 1.0 / n, n, mean)


def measure_density(lengths: Lengths, L: float, phi: float) -> float:
    """Density ``|det J_g|^-1`` of the invariant measure at polar angle ``phi``."""
    t1, t2, _ = from_polar_with_steps(lengths, L, phi)
    return 1.0 / abs(det_jg(lengths, (t1, t2)))


def _measure_with_evals(lengths, L, phi_a, phi_b, tol, max_evals):
    check_lambda(lengths, L)
    span = displacement(phi_a, phi_b)
    return adaptive_simpson(
        lambda p: measure_density_array(lengths, L, p), phi_a, phi_a + span, tol, max_evals
    )


def invariant_measure(
    lengths: Lengths,
    L: float,
    phi_a: float,
    phi_b: float,
    tol: float = 1e-10,
    max_evals: int = 1_000_000,
) -> float:
    """Invariant measure of the ccw arc from ``phi_a`` to ``phi_b``."""
    value, _ = _measure_with_evals(lengths, L, phi_a, phi_b, tol, max_evals)
    return value


def total_measure(lengths: Lengths, L: float, tol: float = 1e-10, max_evals: int = 1_000_000) -> float:
    check_lambda(lengths, L)
    value, _ = adaptive_simpson(
        lambda p: measure_density_array(lengths, L, p), -math.pi, math.pi, tol, max_evals
    )
    return value


def rotation_number_integral(
    lengths: Lengths,
    L: float,
    phi: float = 0.0,
    tol: float = 1e-10,
    max_evals: int = 1_000_000,
) -> RotationEstimate:
    """Rotation number as the normalised invariant measure of the arc swept by one iterate.

    The arc runs clockwise from ``phi`` to ``f(phi)``, i.e. counter-clockwise
    from ``f(phi)`` back to ``phi``.
    """
    check_lambda(lengths, L)
    image = f(lengths, L, phi)
    arc, n_arc = _measure_with_evals(lengths, L, image, phi, tol, max_evals)
    whole, n_whole = adaptive_simpson(
        lambda p: measure_density_array(lengths, L, p), -math.pi, math.pi, tol, max_evals
    )
    rho = (arc / whole) % 1.0
    bound = tol * (1.0 + rho) / whole
    return RotationEstimate(rho, MEASURE_INTEGRAL, bound, n_arc + n_whole, cw_displacement(phi, image))


def convergents(x: float, q_max: int) -> List[Tuple[int, int]]:
    """Continued-fraction convergents ``p/q`` of ``x`` with ``q <= q_max``."""
    out: List[Tuple[int, int]] = []
    frac = Fraction(x)
    p0, q0, p1, q1 = 0, 1, 1, 0
    while True:
        a = frac.numerator // frac.denominator
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > q_max:
            break
        out.append((p1, q1))
        rem = frac - a
        if rem == 0:
            break
        frac = 1 / rem
    return out


def circular_distance(a: float, b: float) -> float:
    d = (a - b) % TWO_PI
    return min(d, TWO_PI - d)


def detect_periodicity(
    lengths: Lengths,
    L: float,
    q_max: int = 50,
    tol: float = 1e-9,
    n_samples: int = 16,
    rho_tol: float = 1e-10,
) -> PeriodicityReport:
    """Look for ``f^q = id`` at the convergent denominators of the estimated rotation number.

    A period is reported only when every sampled start returns within
    ``tol``: when the rotation number is rational all orbits share the
    period, so one failing sample rules the candidate out.
    """
    check_lambda(lengths, L)
    rho = rotation_number_integral(lengths, L, 0.0, rho_tol).rho
    samples = [-math.pi + TWO_PI * (k + 0.5) / n_samples for k in range(n_samples)]
    best = math.inf
    seen = set()
    for p, q in convergents(rho, q_max):
        if q in seen:
            continue
        seen.add(q)
        defect = 0.0
        for phi in samples:
            orbit = iterate_phi(lengths, L, phi, q)
            defect = max(defect, circular_distance(orbit[-1], orbit[0]))
            if defect > tol:
                break
        if defect <= tol:
            return PeriodicityReport((p % q, q), defect, rho)
        best = min(best, defect)
    return PeriodicityReport(None, best, rho)


def _pair(angles) -> Tuple[float, float]:
    if isinstance(angles, AngleConfig):
        return angles.theta1, angles.theta2
    t1, t2 = angles
    return float(t1), float(t2)


__all__ = [
    "PolarConfig",
    "RotationEstimate",
    "PeriodicityReport",
    "to_polar",
    "from_polar",
    "from_polar_with_steps",
    "det_jg",
    "f12",
    "f23",
    "f",
    "lift_step",
    "iterate_phi",
    "rotation_number_orbit",
    "rotation_number_integral",
    "invariant_measure",
    "total_measure",
    "measure_density",
    "detect_periodicity",
    "convergents",
    "in_lambda",
]
