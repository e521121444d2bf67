"""Four-bar linkage description, motion classification and closure geometry.

A linkage is three mobile bars ``l1, l2, l3`` hanging off a fixed ground
bar of length ``L``.  A configuration is described by the two relative
turning angles ``theta1`` (bar 1 -> bar 2) and ``theta2`` (bar 2 -> bar 3),
both kept in the half-open interval (-pi, pi].
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import InfeasibleLinkage, NotOnManifold

Lengths = Tuple[float, float, float]

TWO_PI = 2.0 * math.pi
# |T_i| below this fraction of l1+l2+l3 counts as zero
DEGENERATE_REL_TOL = 1e-12


def wrap(x: float) -> float:
    """Map an angle into (-pi, pi]; both +pi and -pi map to +pi."""
    return math.pi - (math.pi - x) % TWO_PI


def wrap_array(x):
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), TWO_PI)


@dataclass(frozen=True)
class Linkage:
    l1: float
    l2: float
    l3: float
    L: float

    def __post_init__(self):
        for name in ("l1", "l2", "l3", "L"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InfeasibleLinkage(f"{name} must be a positive finite length, got {v!r}")
            object.__setattr__(self, name, float(v))

    @property
    def lengths(self) -> Lengths:
        return (self.l1, self.l2, self.l3)

    @classmethod
    def from_dict(cls, d: dict) -> "Linkage":
        try:
            return cls(d["l1"], d["l2"], d["l3"], d["L"])
        except KeyError as exc:
            raise InfeasibleLinkage(f"linkage JSON is missing field {exc}") from None

    def to_dict(self) -> dict:
        return {"l1": self.l1, "l2": self.l2, "l3": self.l3, "L": self.L}

    def feasibility_violation(self) -> str | None:
        """Describe the violated closure bound, or return None if the linkage closes."""
        l1, l2, l3, L = self.l1, self.l2, self.l3, self.L
        if L >= l1 + l2 + l3:
            return f"L < l1+l2+l3 violated: L={L:g} >= {l1 + l2 + l3:g}"
        lower = {
            "l1-l2-l3": l1 - l2 - l3,
            "-l1+l2-l3": -l1 + l2 - l3,
            "-l1-l2+l3": -l1 - l2 + l3,
        }
        for label, bound in lower.items():
            if L <= bound:
                return f"L > {label} violated: L={L:g} <= {bound:g}"
        return None

    def is_feasible(self) -> bool:
        return self.feasibility_violation() is None

    def check_feasible(self) -> "Linkage":
        msg = self.feasibility_violation()
        if msg is not None:
            raise InfeasibleLinkage(msg)
        return self


@dataclass(frozen=True)
class AngleConfig:
    theta1: float
    theta2: float

    def __post_init__(self):
        object.__setattr__(self, "theta1", wrap(float(self.theta1)))
        object.__setattr__(self, "theta2", wrap(float(self.theta2)))

    def as_tuple(self) -> Tuple[float, float]:
        return (self.theta1, self.theta2)

    def mirrored(self) -> "AngleConfig":
        return AngleConfig(-self.theta1, -self.theta2)

    def to_dict(self) -> dict:
        return {"theta1": self.theta1, "theta2": self.theta2}


@dataclass(frozen=True)
class PlanarConfig:
    """Joint positions ``a -> b -> c -> d`` as 2-vectors."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def points(self) -> np.ndarray:
        return np.vstack([self.a, self.b, self.c, self.d])

    def bar_lengths(self) -> Tuple[float, float, float]:
        return (
            float(np.hypot(*(self.b - self.a))),
            float(np.hypot(*(self.c - self.b))),
            float(np.hypot(*(self.d - self.c))),
        )


class MotionKind(str, enum.Enum):
    ZERO_PI_DOUBLE_ROCKER = "ZeroPiDoubleRocker"
    OTHER_NON_GRASHOF = "OtherNonGrashof"
    GRASHOF = "Grashof"
    DEGENERATE_BOUNDARY = "DegenerateBoundary"


@dataclass(frozen=True)
class MotionClass:
    t1: float
    t2: float
    t3: float
    grashof: bool
    kind: MotionKind


def t_terms(l1: float, l2: float, l3: float, L: float) -> Tuple[float, float, float]:
    return (-l1 + l2 - l3 + L, -l1 - l2 + l3 + L, -l1 + l2 + l3 - L)


def classify(linkage: Linkage) -> MotionClass:
    l1, l2, l3, L = linkage.l1, linkage.l2, linkage.l3, linkage.L
    t1, t2, t3 = t_terms(l1, l2, l3, L)
    zero = DEGENERATE_REL_TOL * (l1 + l2 + l3)
    if min(abs(t1), abs(t2), abs(t3)) < zero:
        kind = MotionKind.DEGENERATE_BOUNDARY
        grashof = False
    else:
        grashof = t1 * t2 * t3 > 0
        if t1 > 0 and t2 > 0 and t3 < 0:
            kind = MotionKind.ZERO_PI_DOUBLE_ROCKER
        elif grashof:
            kind = MotionKind.GRASHOF
        else:
            kind = MotionKind.OTHER_NON_GRASHOF
    return MotionClass(t1, t2, t3, grashof, kind)


def length_condition(l1: float, l2: float, l3: float) -> bool:
    """The middle bar is no longer than both neighbours, or no shorter than both."""
    return l2 <= min(l1, l3) or l2 >= max(l1, l3)


def theorem_conditions(linkage: Linkage) -> bool:
    """True when the density theorem applies: a 0-pi double rocker with the length condition."""
    mc = classify(linkage)
    return mc.kind is MotionKind.ZERO_PI_DOUBLE_ROCKER and length_condition(
        linkage.l1, linkage.l2, linkage.l3
    )


def lambda_interval(lengths: Lengths) -> Tuple[float, float]:
    """Open interval of ground lengths for which the T1>0, T2>0, T3<0 conditions hold."""
    l1, l2, l3 = lengths
    lo = max(-l1 + l2 + l3, l1 - l2 + l3, l1 + l2 - l3)
    return (max(lo, 0.0), l1 + l2 + l3)


def in_lambda(lengths: Lengths, L: float) -> bool:
    lo, hi = lambda_interval(lengths)
    return lo < L < hi


def lbar_squared(lengths: Lengths, theta1: float, theta2: float) -> float:
    l1, l2, l3 = lengths
    return (
        l1 * l1 + l2 * l2 + l3 * l3
        + 2.0 * l1 * l2 * math.cos(theta1)
        + 2.0 * l2 * l3 * math.cos(theta2)
        + 2.0 * l1 * l3 * math.cos(theta1 + theta2)
    )


def lbar(lengths: Lengths, angles) -> float:
    """Closure distance of the open three-bar chain for the given turning angles."""
    t1, t2 = _pair(angles)
    # squared chord length: negative only through round-off
    return math.sqrt(max(lbar_squared(lengths, t1, t2), 0.0))


def lbar_array(lengths: Lengths, theta1, theta2) -> np.ndarray:
    l1, l2, l3 = lengths
    t1 = np.asarray(theta1, dtype=float)
    t2 = np.asarray(theta2, dtype=float)
    r2 = (
        l1 * l1 + l2 * l2 + l3 * l3
        + 2.0 * l1 * l2 * np.cos(t1)
        + 2.0 * l2 * l3 * np.cos(t2)
        + 2.0 * l1 * l3 * np.cos(t1 + t2)
    )
    return np.sqrt(np.maximum(r2, 0.0))


def on_gamma(linkage: Linkage, angles, tol: float) -> bool:
    return abs(lbar(linkage.lengths, angles) - linkage.L) <= tol


def chain_points(lengths: Lengths, theta1: float, theta2: float, heading: float = 0.0) -> np.ndarray:
    """Open chain from the origin; each bar heading is the previous one plus its turning angle."""
    l1, l2, l3 = lengths
    h1 = heading
    h2 = h1 + theta1
    h3 = h2 + theta2
    a = np.zeros(2)
    b = a + l1 * np.array([math.cos(h1), math.sin(h1)])
    c = b + l2 * np.array([math.cos(h2), math.sin(h2)])
    d = c + l3 * np.array([math.cos(h3), math.sin(h3)])
    return np.vstack([a, b, c, d])


def forward_kinematics(linkage: Linkage, angles, tol: float = 1e-9) -> PlanarConfig:
    """Place the closed chain with ``a`` at the origin and ``d`` on the positive x axis."""
    t1, t2 = _pair(angles)
    residual = abs(lbar(linkage.lengths, (t1, t2)) - linkage.L)
    if residual > tol:
        raise NotOnManifold(
            f"chain does not close: |Lbar - L| = {residual:.3e} > {tol:.3e}"
        )
    pts = chain_points(linkage.lengths, t1, t2)
    # rotate the whole chain so the free end lies on the ground bar
    heading = math.atan2(pts[3, 1], pts[3, 0])
    pts = chain_points(linkage.lengths, t1, t2, heading=-heading)
    return PlanarConfig(pts[0], pts[1], pts[2], pts[3])


def angles_of(config: PlanarConfig) -> AngleConfig:
    """Recover the relative turning angles from joint positions."""
    u1 = config.b - config.a
    u2 = config.c - config.b
    u3 = config.d - config.c
    h1 = math.atan2(u1[1], u1[0])
    h2 = math.atan2(u2[1], u2[0])
    h3 = math.atan2(u3[1], u3[0])
    return AngleConfig(h2 - h1, h3 - h2)


def _pair(angles) -> Tuple[float, float]:
    if isinstance(angles, AngleConfig):
        return angles.theta1, angles.theta2
    t1, t2 = angles
    return float(t1), float(t2)
