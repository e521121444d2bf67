"""Experiments built on the pop dynamics: density, rotation scans, relabeling, topology."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .circle import (
    RotationEstimate,
    check_lambda,
    detect_periodicity,
    iterate_phi,
    rotation_number_integral,
    rotation_number_orbit,
)
from .contour import torus_level_set, torus_tree_data
from .errors import MonotonicityViolation, RelabelNotFound, ResolutionTooCoarse
from .linkage import (
    TWO_PI,
    AngleConfig,
    Lengths,
    Linkage,
    classify,
    length_condition,
    lbar,
    t_terms,
)
from .pops import P12, P23, apply_pop

log = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 1024
MAX_RESOLUTION = 8192


# --------------------------------------------------------------------------
# density of orbits


@dataclass
class DensityReport:
    n_iterates: int
    max_gap_phi: float
    gap_history: List[Tuple[int, float]] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["n,max_gap"]
        lines += [f"{n},{g:.17g}" for n, g in self.gap_history]
        return "\n".join(lines) + "\n"


def max_circular_gap(points: np.ndarray) -> float:
    """Largest empty arc between points on the circle."""
    p = np.sort(np.mod(np.asarray(points, dtype=float), TWO_PI))
    if len(p) == 0:
        return TWO_PI
    gaps = np.diff(p)
    wrap_gap = TWO_PI - (p[-1] - p[0])
    return float(max(gaps.max(initial=0.0), wrap_gap))


def default_checkpoints(n: int) -> List[int]:
    pts = []
    k = 10
    while k < n:
        pts.append(k)
        k *= 10
    pts.append(n)
    return pts


def density_report(
    linkage: Linkage, phi0: float, n: int, checkpoints: Optional[Sequence[int]] = None
) -> DensityReport:
    """Largest gap left by the first ``m`` orbit points of the circle map, for growing ``m``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    lengths, L = linkage.lengths, linkage.L
    check_lambda(lengths, L)
    phis = np.array(iterate_phi(lengths, L, phi0, n - 1))
    marks = sorted(set(int(m) for m in (checkpoints or default_checkpoints(n)) if 1 <= m <= n))
    if not marks or marks[-1] != n:
        marks.append(n)
    history = [(m, max_circular_gap(phis[:m])) for m in marks]
    return DensityReport(n, history[-1][1], history)


# --------------------------------------------------------------------------
# rotation-number scans

INTEGRAL = "integral"
ORBIT = "orbit"


@dataclass(frozen=True)
class ScanRow:
    L: float
    estimate: RotationEstimate
    periodic_q: Optional[int] = None


@dataclass
class ScanResult:
    rows: List[ScanRow]
    verdict: str
    violation: Optional[MonotonicityViolation] = None

    def to_csv(self) -> str:
        lines = ["L,rho,method,error_bound,periodic_q"]
        for r in self.rows:
            q = "" if r.periodic_q is None else str(r.periodic_q)
            e = r.estimate
            lines.append(f"{r.L:.17g},{e.rho:.17g},{e.method},{e.error_bound:.17g},{q}")
        return "\n".join(lines) + "\n"


def strict_monotonicity_expected(lengths: Lengths) -> bool:
    """Length condition on the bars, excluding the all-equal family whose rotation is constant."""
    l1, l2, l3 = lengths
    return length_condition(l1, l2, l3) and not (l1 == l2 == l3)


def worker_count(requested: Optional[int] = None) -> int:
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("POPDYN_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _scan_one(args) -> ScanRow:
    lengths, L, method, n, tol, qmax = args
    if method == INTEGRAL:
        est = rotation_number_integral(lengths, L, 0.0, tol)
    elif method == ORBIT:
        est = rotation_number_orbit(lengths, L, n, 0.0)
    else:
        raise ValueError(f"unknown scan method {method!r}")
    q = None
    if qmax:
        rep = detect_periodicity(lengths, L, qmax, 1e-9)
        q = rep.rational[1] if rep.rational else None
    return ScanRow(L, est, q)


def _unwrapped(rhos: Sequence[float]) -> List[float]:
    out = [rhos[0]]
    for r in rhos[1:]:
        out.append(r + round(out[-1] - r))
    return out


def check_monotone(rows: Sequence[ScanRow], margin_factor: float = 1.0) -> Tuple[str, Optional[MonotonicityViolation]]:
    """Check that consecutive rotation numbers move in one direction by more than their error bounds."""
    if len(rows) < 2:
        return "monotone", None
    rhos = _unwrapped([r.estimate.rho for r in rows])
    direction = 0
    for k in range(len(rows) - 1):
        step = rhos[k + 1] - rhos[k]
        margin = margin_factor * (rows[k].estimate.error_bound + rows[k + 1].estimate.error_bound)
        s = 1 if step > margin else (-1 if step < -margin else 0)
        if s == 0 or (direction and s != direction):
            return "violation", MonotonicityViolation(k, (rows[k], rows[k + 1]))
        direction = s
    return ("monotone increasing" if direction > 0 else "monotone decreasing"), None


def scan_rotation(
    lengths: Lengths,
    L_grid: Sequence[float],
    method: str = INTEGRAL,
    n: int = 100_000,
    tol: float = 1e-10,
    qmax: int = 0,
    workers: Optional[int] = None,
    raise_on_violation: bool = False,
) -> ScanResult:
    """Rotation number over a grid of ground lengths, with a monotonicity verdict.

    Grid points are evaluated in parallel and collected in grid order.  The
    verdict is ``"skipped"`` unless the length condition holds with unequal
    bars.
    """
    lengths = tuple(float(x) for x in lengths)
    grid = [float(L) for L in L_grid]
    for L in grid:
        check_lambda(lengths, L)
    jobs = [(lengths, L, method, n, tol, qmax) for L in grid]
    nw = min(worker_count(workers), len(jobs)) if jobs else 1
    if nw <= 1:
        rows = [_scan_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            rows = list(pool.map(_scan_one, jobs))
    if not strict_monotonicity_expected(lengths):
        return ScanResult(rows, "skipped (theorem conditions not met)")
    verdict, violation = check_monotone(rows)
    if violation is not None and raise_on_violation:
        raise violation
    return ScanResult(rows, verdict, violation)


# --------------------------------------------------------------------------
# relabeling


@dataclass(frozen=True)
class Relabeling:
    shift: int
    lengths: Tuple[float, float, float, float]
    ground_length_condition: bool
    theorem_length_condition: bool

    @property
    def condition_transfers(self) -> bool:
        return (not self.ground_length_condition) or self.theorem_length_condition


def ground_length_condition(l1: float, l2: float, l3: float, L: float) -> bool:
    """Middle bar and ground both no longer than the side bars, or both no shorter."""
    return max(l2, L) <= min(l1, l3) or min(l2, L) >= max(l1, l3)


def rotate_labels(v: Sequence[float], k: int) -> Tuple[float, float, float, float]:
    k %= 4
    return tuple(v[(k + i) % 4] for i in range(4))


def relabel_for_theorem(lengths_with_ground: Sequence[float]) -> Relabeling:
    """Find the cyclic relabeling of (l1, l2, l3, L) that turns a non-Grashof linkage into a 0-pi double rocker."""
    v = tuple(float(x) for x in lengths_with_ground)
    if len(v) != 4:
        raise ValueError("expected four lengths (l1, l2, l3, L)")
    for k in range(4):
        w = rotate_labels(v, k)
        t1, t2, t3 = t_terms(*w)
        if t1 > 0 and t2 > 0 and t3 < 0:
            return Relabeling(k, w, ground_length_condition(*v), length_condition(w[0], w[1], w[2]))
    t1, t2, t3 = t_terms(*v)
    raise RelabelNotFound(
        f"no cyclic relabeling gives T1>0, T2>0, T3<0 (T1*T2*T3 = {t1 * t2 * t3:g})"
    )


# --------------------------------------------------------------------------
# topology of the closure curve


@dataclass
class GammaGeometry:
    components: int
    polylines: List[np.ndarray]
    resolution: int
    max_residual: float
    component_counts: List[Tuple[int, int]] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["component_id,theta1,theta2"]
        for cid, pl in enumerate(self.polylines):
            lines += [f"{cid},{a:.17g},{b:.17g}" for a, b in pl]
        return "\n".join(lines) + "\n"


def _closure_field(lengths: Lengths, L: float):
    l1, l2, l3 = lengths

    def field_(t1, t2):
        return (
            l1 * l1 + l2 * l2 + l3 * l3
            + 2.0 * l1 * l2 * np.cos(t1)
            + 2.0 * l2 * l3 * np.cos(t2)
            + 2.0 * l1 * l3 * np.cos(t1 + t2)
            - L * L
        )

    return field_


def _polish(lengths: Lengths, L: float, pts: np.ndarray, steps: int = 3) -> np.ndarray:
    """Newton steps along the gradient of Lbar^2 to move contour vertices onto the curve."""
    l1, l2, l3 = lengths
    t1, t2 = pts[:, 0].copy(), pts[:, 1].copy()
    for _ in range(steps):
        r = (
            l1 * l1 + l2 * l2 + l3 * l3
            + 2 * l1 * l2 * np.cos(t1) + 2 * l2 * l3 * np.cos(t2)
            + 2 * l1 * l3 * np.cos(t1 + t2) - L * L
        )
        g1 = -2 * (l1 * l2 * np.sin(t1) + l1 * l3 * np.sin(t1 + t2))
        g2 = -2 * (l2 * l3 * np.sin(t2) + l1 * l3 * np.sin(t1 + t2))
        gg = g1 * g1 + g2 * g2
        ok = gg > 1e-20
        step = np.where(ok, r / np.where(ok, gg, 1.0), 0.0)
        t1 = t1 - step * g1
        t2 = t2 - step * g2
    out = np.column_stack([t1, t2])
    return np.pi - np.mod(np.pi - out, TWO_PI)


def _extract(linkage: Linkage, n: int) -> List[np.ndarray]:
    raw = torus_level_set(_closure_field(linkage.lengths, linkage.L), n)
    return [_polish(linkage.lengths, linkage.L, p) for p in raw]


def gamma_geometry(
    linkage: Linkage,
    resolution: int = DEFAULT_RESOLUTION,
    confirmations: int = 2,
    max_resolution: int = MAX_RESOLUTION,
) -> GammaGeometry:
    """Trace the closure curve on the angle torus and count its components.

    The count is accepted once ``confirmations`` successive grid doublings
    reproduce it; polylines come from the base grid.
    """
    linkage.check_feasible()
    polylines = _extract(linkage, resolution)
    counts = [(resolution, len(polylines))]
    n = resolution
    while True:
        recent = [c for _, c in counts[-(confirmations + 1):]]
        if len(recent) == confirmations + 1 and len(set(recent)) == 1:
            break
        n *= 2
        if n > max_resolution:
            raise ResolutionTooCoarse(
                f"component count did not stabilise up to grid {max_resolution}: {counts}"
            )
        counts.append((n, len(_extract(linkage, n))))
    if counts[-1][1] != len(polylines):
        # base grid disagreed with the stable count; use the finest grid instead
        polylines = _extract(linkage, counts[-1][0])
        resolution = counts[-1][0]
    resid = 0.0
    for pl in polylines:
        vals = np.sqrt(np.maximum(
            _closure_field(linkage.lengths, 0.0)(pl[:, 0], pl[:, 1]), 0.0))
        resid = max(resid, float(np.max(np.abs(vals - linkage.L))))
    return GammaGeometry(len(polylines), polylines, resolution, resid, counts)


class ComponentClassifier:
    """Nearest-polyline component labels on the torus."""

    def __init__(self, geometry: GammaGeometry):
        self.geometry = geometry
        self.trees = [cKDTree(torus_tree_data(p), boxsize=TWO_PI) for p in geometry.polylines]
        h = TWO_PI / geometry.resolution
        self.margin = 3.0 * math.sqrt(2.0) * h

    def distances(self, pts: np.ndarray) -> np.ndarray:
        q = torus_tree_data(np.atleast_2d(pts))
        return np.column_stack([t.query(q)[0] for t in self.trees])

    def classify(self, pts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Component index per point, and a flag for points too close to call."""
        d = self.distances(pts)
        labels = np.argmin(d, axis=1)
        if d.shape[1] < 2:
            return labels, np.zeros(len(labels), dtype=bool)
        part = np.sort(d, axis=1)
        ambiguous = part[:, 1] - part[:, 0] < self.margin
        return labels, ambiguous


def orbit_states(linkage: Linkage, start, n_pops: int, first: str = P12) -> np.ndarray:
    """All states of an alternating pop orbit as an ``(n_pops+1, 2)`` array."""
    lengths = linkage.lengths
    t1, t2 = start.as_tuple() if isinstance(start, AngleConfig) else (float(start[0]), float(start[1]))
    out = np.empty((n_pops + 1, 2))
    out[0] = (t1, t2)
    label = first
    for k in range(1, n_pops + 1):
        t1, t2 = apply_pop(lengths, label, t1, t2)
        out[k] = (t1, t2)
        label = P23 if label == P12 else P12
    return out


def confinement_check(
    linkage: Linkage,
    start,
    n_pops: int,
    resolution: int = 512,
    max_resolution: int = MAX_RESOLUTION,
    start_tol: float = 1e-9,
) -> bool:
    """True iff the pop orbit from ``start`` never leaves the component of the closure curve containing it."""
    mc = classify(linkage)
    if not (mc.t1 < 0 and mc.t2 > 0 and mc.t3 < 0):
        raise ValueError("confinement check applies to linkages with T1<0, T2>0, T3<0")
    start = start if isinstance(start, AngleConfig) else AngleConfig(*start)
    if abs(lbar(linkage.lengths, start) - linkage.L) > start_tol:
        raise ValueError("start is not on the closure curve")
    if n_pops == 0:
        return True
    states = orbit_states(linkage, start, n_pops)
    n = resolution
    while True:
        geom = gamma_geometry(linkage, n, confirmations=1, max_resolution=max(max_resolution, 2 * n))
        clf = ComponentClassifier(geom)
        labels, ambiguous = clf.classify(states)
        if not ambiguous.any():
            break
        n *= 2
        if n > max_resolution:
            raise ResolutionTooCoarse(
                f"{int(ambiguous.sum())} orbit states remain ambiguous at grid {max_resolution}"
            )
        log.info("refining component classifier to grid %d", n)
    return bool(np.all(labels == labels[0]))


__all__ = [
    "DensityReport",
    "density_report",
    "max_circular_gap",
    "ScanRow",
    "ScanResult",
    "scan_rotation",
    "check_monotone",
    "strict_monotonicity_expected",
    "Relabeling",
    "relabel_for_theorem",
    "ground_length_condition",
    "GammaGeometry",
    "gamma_geometry",
    "ComponentClassifier",
    "confinement_check",
    "orbit_states",
]
