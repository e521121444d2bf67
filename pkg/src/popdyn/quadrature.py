"""Adaptive Simpson quadrature with an evaluation budget."""
from __future__ import annotations

import math
from typing import Callable, Tuple

import numpy as np

from .errors import QuadratureFailure

MAX_DEPTH = 50
# panels wider than this are always split; guards against coincidental early
# agreement of the two Simpson estimates on symmetric or periodic integrands
MAX_ACCEPT_WIDTH = math.pi / 16


def adaptive_simpson(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_evals: int = 1_000_000,
) -> Tuple[float, int]:
    """Integrate a vectorised ``func`` over [a, b] to absolute tolerance ``tol``.

    Returns ``(value, n_evals)``.  A panel with tolerance share ``eps`` is
    accepted when its two-half Simpson estimate differs from the whole-panel
    one by at most ``15 * eps`` and its parent passed the same test; the
    accepted value carries the Richardson correction.  Requiring two
    consecutive levels to pass guards against the two estimates agreeing by
    cancellation.  Panels are refined level by level so that each level
    costs one call to ``func`` on an array of abscissae.
    """
    if a == b:
        return 0.0, 0
    if tol <= 0:
        raise ValueError("tol must be positive")
    f0 = np.asarray(func(np.array([a, 0.5 * (a + b), b])), dtype=float)
    evals = 3
    lo = np.array([a])
    hi = np.array([b])
    flo, fmid, fhi = f0[:1], f0[1:2], f0[2:]
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    eps = np.array([tol])
    armed = np.array([False])
    accepted_at = []
    accepted_val = []
    depth = 0
    while lo.size:
        mid = 0.5 * (lo + hi)
        x = np.concatenate([0.5 * (lo + mid), 0.5 * (mid + hi)])
        fx = np.asarray(func(x), dtype=float)
        evals += x.size
        flm, frm = fx[: lo.size], fx[lo.size:]
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        diff = left + right - whole
        passed = (np.abs(diff) <= 15.0 * eps) & (hi - lo <= MAX_ACCEPT_WIDTH)
        ok = passed & armed
        if not np.all(np.isfinite(diff)):
            raise QuadratureFailure("integrand returned a non-finite value")
        accepted_at.append(lo[ok])
        accepted_val.append((left + right + diff / 15.0)[ok])
        keep = ~ok
        if not keep.any():
            break
        depth += 1
        if depth > MAX_DEPTH:
            raise QuadratureFailure(f"panels did not converge within depth {MAX_DEPTH}")
        if evals + 4 * int(keep.sum()) > max_evals:
            raise QuadratureFailure(
                f"tolerance {tol:g} not reached within {max_evals} integrand evaluations"
            )
        lo_k, mid_k, hi_k = lo[keep], mid[keep], hi[keep]
        lo = np.concatenate([lo_k, mid_k])
        hi = np.concatenate([mid_k, hi_k])
        flo = np.concatenate([flo[keep], fmid[keep]])
        fhi = np.concatenate([fmid[keep], fhi[keep]])
        fmid = np.concatenate([flm[keep], frm[keep]])
        whole = np.concatenate([left[keep], right[keep]])
        eps = np.concatenate([0.5 * eps[keep], 0.5 * eps[keep]])
        armed = np.concatenate([passed[keep], passed[keep]])
    at = np.concatenate(accepted_at)
    val = np.concatenate(accepted_val)
    # sum in abscissa order so the result does not depend on refinement history
    return math.fsum(val[np.argsort(at, kind="stable")]), evals
