"""Pop operations on the two mobile vertices, as angle maps and as reflections.

``pop12`` reflects the joint between bars 1 and 2 across the line through
its neighbours, ``pop23`` does the same for the joint between bars 2 and 3.
In angle coordinates::

    pop12: (t1, t2) -> (-t1, <t2 + sign(t1) * 2 * alpha(l1, l2, t1)>)
    pop23: (t1, t2) -> (<t1 + sign(t2) * 2 * alpha(l3, l2, t2)>, -t2)

where ``alpha(a, b, t)`` is the angle between bar ``b`` and the diagonal
spanned by bars ``a`` and ``b`` meeting at turning angle ``t``.

The bars 2-3 pop is also available in the ``"verbatim"`` reading, which
uses ``alpha(l1, l2, t2)``.  That form agrees with the reflection only when
``l1 == l3`` and does not preserve the closure length otherwise; see
``tests/test_pops.py::test_h23_readings``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .errors import CollinearNeighbors, DegenerateDiagonal, DriftExceeded, NotOnManifold
from .linkage import (
    AngleConfig,
    Lengths,
    Linkage,
    PlanarConfig,
    in_lambda,
    lbar,
    lbar_squared,
    wrap,
)

P12 = "P12"
P23 = "P23"

GEOMETRIC = "geometric"
VERBATIM = "verbatim"
H23_READINGS = (GEOMETRIC, VERBATIM)

# relative size below which the diagonal counts as collapsed
DIAGONAL_REL_TOL = 1e-12
# slack allowed on the arccos argument before it is treated as infeasible
ACOS_SLACK = 1e-12


def sign(x: float) -> float:
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def diagonal_sq(a: float, b: float, theta: float) -> float:
    """Squared diagonal of two bars meeting at turning angle ``theta``."""
    c = math.cos(0.5 * theta)
    return (a - b) ** 2 + 4.0 * a * b * c * c


def alpha(l1: float, l2: float, theta1: float) -> float:
    """Angle in [0, pi] between bar 2 and the diagonal from the start of bar 1 to the end of bar 2.

    Evaluated as ``atan2(l1*|sin t|, l2 + l1*cos t)``, which equals the
    arccos form but keeps full precision when the angle is small.
    """
    if diagonal_sq(l1, l2, theta1) <= (DIAGONAL_REL_TOL * (l1 + l2)) ** 2:
        raise DegenerateDiagonal(
            f"diagonal vanishes for l1={l1!r}, l2={l2!r}, theta1={theta1!r}"
        )
    return math.atan2(l1 * abs(math.sin(theta1)), l2 + l1 * math.cos(theta1))


def alpha_acos(l1: float, l2: float, theta1: float) -> float:
    """The arccos form of :func:`alpha`, with the argument clamped against round-off."""
    d2 = l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * math.cos(theta1)
    if d2 <= (DIAGONAL_REL_TOL * (l1 + l2)) ** 2:
        raise DegenerateDiagonal(
            f"diagonal vanishes for l1={l1!r}, l2={l2!r}, theta1={theta1!r}"
        )
    arg = (l2 + l1 * math.cos(theta1)) / math.sqrt(d2)
    if abs(arg) > 1.0 + ACOS_SLACK:
        raise DegenerateDiagonal(f"arccos argument {arg!r} outside [-1, 1]")
    return math.acos(min(1.0, max(-1.0, arg)))


def increment12(lengths: Lengths, theta1: float) -> float:
    l1, l2, _ = lengths
    return sign(theta1) * 2.0 * alpha(l1, l2, theta1)


def increment23(lengths: Lengths, theta2: float, reading: str = GEOMETRIC) -> float:
    l1, l2, l3 = lengths
    if reading == GEOMETRIC:
        return sign(theta2) * 2.0 * alpha(l3, l2, theta2)
    if reading == VERBATIM:
        return sign(theta2) * 2.0 * alpha(l1, l2, theta2)
    raise ValueError(f"unknown H23 reading {reading!r}; expected one of {H23_READINGS}")


def h12(lengths: Lengths, t1: float, t2: float) -> Tuple[float, float]:
    """Unwrapped bars 1-2 pop."""
    return -t1, t2 + increment12(lengths, t1)


def h23(lengths: Lengths, t1: float, t2: float, reading: str = GEOMETRIC) -> Tuple[float, float]:
    """Unwrapped bars 2-3 pop."""
    return t1 + increment23(lengths, t2, reading), -t2


def pop12_raw(lengths: Lengths, t1: float, t2: float) -> Tuple[float, float]:
    a, b = h12(lengths, t1, t2)
    return wrap(a), wrap(b)


def pop23_raw(lengths: Lengths, t1: float, t2: float, reading: str = GEOMETRIC) -> Tuple[float, float]:
    a, b = h23(lengths, t1, t2, reading)
    return wrap(a), wrap(b)


def pop12(lengths: Lengths, angles) -> AngleConfig:
    t1, t2 = _pair(angles)
    return AngleConfig(*pop12_raw(lengths, t1, t2))


def pop23(lengths: Lengths, angles, reading: str = GEOMETRIC) -> AngleConfig:
    t1, t2 = _pair(angles)
    return AngleConfig(*pop23_raw(lengths, t1, t2, reading))


def apply_pop(lengths: Lengths, label: str, t1: float, t2: float) -> Tuple[float, float]:
    if label == P12:
        return pop12_raw(lengths, t1, t2)
    if label == P23:
        return pop23_raw(lengths, t1, t2)
    raise ValueError(f"unknown pop label {label!r}")


def reflect_point(p: np.ndarray, q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """Mirror ``p`` across the line through ``q0`` and ``q1``."""
    u = q1 - q0
    n2 = float(u @ u)
    if n2 == 0.0:
        raise CollinearNeighbors("reflection line undefined: neighbouring joints coincide")
    w = p - q0
    foot = q0 + (float(w @ u) / n2) * u
    return 2.0 * foot - p


def pop_geometric(config: PlanarConfig, vertex: str) -> PlanarConfig:
    """Reflect joint ``B`` across line A-C, or joint ``C`` across line B-D."""
    v = vertex.upper()
    if v == "B":
        return PlanarConfig(config.a, reflect_point(config.b, config.a, config.c), config.c, config.d)
    if v == "C":
        return PlanarConfig(config.a, config.b, reflect_point(config.c, config.b, config.d), config.d)
    raise ValueError(f"vertex must be 'B' or 'C', got {vertex!r}")


@dataclass
class OrbitTrace:
    start: AngleConfig
    steps: List[Tuple[str, AngleConfig]] = field(default_factory=list)
    # residuals[0] belongs to the start, residuals[k] to steps[k-1]
    residuals: List[float] = field(default_factory=list)

    def states(self) -> List[AngleConfig]:
        return [self.start] + [s for _, s in self.steps]

    def labels(self) -> List[str]:
        return [lab for lab, _ in self.steps]

    @property
    def final(self) -> AngleConfig:
        return self.steps[-1][1] if self.steps else self.start

    def rows(self):
        yield 0, "start", self.start.theta1, self.start.theta2, self.residuals[0]
        for k, (lab, s) in enumerate(self.steps, start=1):
            yield k, lab, s.theta1, s.theta2, self.residuals[k]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "pop_label", "theta1", "theta2", "lbar_residual"])
        for step, lab, t1, t2, res in self.rows():
            w.writerow([step, lab, f"{t1:.17g}", f"{t2:.17g}", f"{res:.17g}"])
        return buf.getvalue()


def project_to_gamma(lengths: Lengths, L: float, t1: float, t2: float) -> Tuple[float, float]:
    """Pull a slightly drifted state back onto the closure curve.

    Inside the 0-pi double-rocker range the projection runs along the ray
    through the origin (unique by monotonicity); elsewhere a few Newton
    steps along the gradient of the squared closure length are used.
    """
    if in_lambda(lengths, L) and (t1 != 0.0 or t2 != 0.0):
        from .circle import from_polar

        back = from_polar(lengths, L, math.atan2(t2, t1))
        return back.theta1, back.theta2
    l1, l2, l3 = lengths
    for _ in range(4):
        r = lbar_squared(lengths, t1, t2) - L * L
        g1 = -2.0 * (l1 * l2 * math.sin(t1) + l1 * l3 * math.sin(t1 + t2))
        g2 = -2.0 * (l2 * l3 * math.sin(t2) + l1 * l3 * math.sin(t1 + t2))
        gg = g1 * g1 + g2 * g2
        if gg == 0.0:
            break
        t1 -= r * g1 / gg
        t2 -= r * g2 / gg
    return wrap(t1), wrap(t2)


def orbit(
    linkage: Linkage,
    start,
    n_pops: int,
    first: str = P12,
    drift_bound: float | None = None,
    start_tol: float = 1e-9,
    renormalize: bool = False,
) -> OrbitTrace:
    """Alternate the two pops ``n_pops`` times from ``start``, checking closure after each pop."""
    if n_pops < 0:
        raise ValueError("n_pops must be non-negative")
    if first not in (P12, P23):
        raise ValueError(f"first pop must be {P12} or {P23}, got {first!r}")
    lengths, L = linkage.lengths, linkage.L
    bound = 1e-8 * L if drift_bound is None else drift_bound
    start = start if isinstance(start, AngleConfig) else AngleConfig(*start)
    res0 = abs(lbar(lengths, start) - L)
    if res0 > start_tol:
        raise NotOnManifold(f"start is off the closure curve: |Lbar - L| = {res0:.3e}")
    trace = OrbitTrace(start=start, residuals=[res0])
    t1, t2 = start.theta1, start.theta2
    label = first
    for k in range(1, n_pops + 1):
        t1, t2 = apply_pop(lengths, label, t1, t2)
        if renormalize:
            t1, t2 = project_to_gamma(lengths, L, t1, t2)
        res = abs(math.sqrt(max(lbar_squared(lengths, t1, t2), 0.0)) - L)
        if res > bound:
            raise DriftExceeded(k, res, bound)
        trace.steps.append((label, AngleConfig(t1, t2)))
        trace.residuals.append(res)
        label = P23 if label == P12 else P12
    return trace


def _pair(angles) -> Tuple[float, float]:
    if isinstance(angles, AngleConfig):
        return angles.theta1, angles.theta2
    t1, t2 = angles
    return float(t1), float(t2)
