"""Plain SVG output for linkage chains and closure curves."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .contour import split_at_seams
from .linkage import AngleConfig, Linkage, forward_kinematics

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]


def _fmt(x: float) -> str:
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _points(pts) -> str:
    return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)


def chains_svg(linkage: Linkage, states: Sequence[AngleConfig], size: int = 600, tol: float = 1e-8) -> str:
    """Overlay the planar chains of ``states``: the first in black, the last in red, the rest grey."""
    R = linkage.l1 + linkage.l2 + linkage.l3
    pad = 0.05 * R
    x0, y0, w = -R - pad, -R - pad, 2 * (R + pad)
    stroke = _fmt(0.006 * R)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(w)}">',
        # flip y so angles read counter-clockwise
        '<g transform="scale(1,-1)">',
        f'<line class="ground" x1="0" y1="0" x2="{_fmt(linkage.L)}" y2="0" stroke="#888888" '
        f'stroke-width="{stroke}" stroke-dasharray="{_fmt(0.02 * R)}"/>',
    ]
    last = len(states) - 1
    for k, s in enumerate(states):
        pc = forward_kinematics(linkage, s, tol=tol)
        if k == 0:
            colour, opacity = "#000000", "1"
        elif k == last:
            colour, opacity = "#d62728", "1"
        else:
            colour, opacity = "#999999", "0.5"
        out.append(
            f'<polyline class="chain" data-step="{k}" points="{_points(pc.points())}" fill="none" '
            f'stroke="{colour}" stroke-opacity="{opacity}" stroke-width="{stroke}"/>'
        )
    out += ["</g>", "</svg>"]
    return "\n".join(out) + "\n"


def torus_svg(polylines: Sequence[np.ndarray], size: int = 600) -> str:
    """Closure-curve components on the (theta1, theta2) square, one colour per component."""
    pi = math.pi
    stroke = _fmt(0.01)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{_fmt(-pi - 0.1)} {_fmt(-pi - 0.1)} {_fmt(2 * pi + 0.2)} {_fmt(2 * pi + 0.2)}">',
        '<g transform="scale(1,-1)">',
        f'<rect x="{_fmt(-pi)}" y="{_fmt(-pi)}" width="{_fmt(2 * pi)}" height="{_fmt(2 * pi)}" '
        f'fill="none" stroke="#444444" stroke-width="{stroke}"/>',
    ]
    for cid, pl in enumerate(polylines):
        colour = PALETTE[cid % len(PALETTE)]
        for piece in split_at_seams(np.asarray(pl)):
            out.append(
                f'<polyline class="component" data-component="{cid}" points="{_points(piece)}" '
                f'fill="none" stroke="{colour}" stroke-width="{stroke}"/>'
            )
    out += ["</g>", "</svg>"]
    return "\n".join(out) + "\n"
