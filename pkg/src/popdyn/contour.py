"""Marching squares for a level set on the flat torus (-pi, pi]^2.

The grid wraps in both directions, so curves that leave through one side
of the square re-enter through the opposite side and stay a single
component.  Saddle cells are resolved by the sign of the field at the cell
centre.
"""
from __future__ import annotations

from typing import Callable, List

import numpy as np

from .linkage import TWO_PI


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def torus_level_set(
    field: Callable[[np.ndarray, np.ndarray], np.ndarray], n: int
) -> List[np.ndarray]:
    """Zero set of ``field(theta1, theta2)`` on an ``n x n`` periodic grid.

    Returns one closed polyline per connected component, each an ``(m, 2)``
    array of (theta1, theta2) points wrapped into (-pi, pi].  Components are
    ordered by their smallest edge index, which makes the output
    deterministic for a given grid.
    """
    h = TWO_PI / n
    t = -np.pi + h * np.arange(n)
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    F = field(T1, T2)
    pos = F >= 0.0
    # edge (i, j) -> (i+1, j) along theta1 and (i, j) -> (i, j+1) along theta2
    cross1 = pos != np.roll(pos, -1, axis=0)
    cross2 = pos != np.roll(pos, -1, axis=1)
    busy = cross1 | cross2 | np.roll(cross1, -1, axis=1) | np.roll(cross2, -1, axis=0)
    cells = np.argwhere(busy)
    if len(cells) == 0:
        return []

    nn = n * n

    def e1(i, j):
        return (i % n) * n + (j % n)

    def e2(i, j):
        return nn + (i % n) * n + (j % n)

    ci = cells[:, 0].astype(float)
    cj = cells[:, 1].astype(float)
    centre = field(-np.pi + h * (ci + 0.5), -np.pi + h * (cj + 0.5)) >= 0.0

    adj = {}
    uf = _UnionFind()

    def link(a, b):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
        uf.add(a)
        uf.add(b)
        uf.union(a, b)

    for (i, j), cpos in zip(cells, centre):
        ip, jp = (i + 1) % n, (j + 1) % n
        bottom, right = e1(i, j), e2(ip, j)
        top, left = e1(i, jp), e2(i, j)
        hits = [e for e, c in ((bottom, cross1[i, j]), (right, cross2[ip, j]),
                                (top, cross1[i, jp]), (left, cross2[i, j])) if c]
        if len(hits) == 2:
            link(hits[0], hits[1])
        elif len(hits) == 4:
            if cpos == pos[i, j]:
                # centre joins corners (i,j) and (i+1,j+1): cut off the other two
                link(bottom, right)
                link(top, left)
            else:
                link(bottom, left)
                link(right, top)

    def point(e):
        if e < nn:
            i, j = divmod(e, n)
            a, b = F[i, j], F[(i + 1) % n, j]
            s = a / (a - b)
            return t[i] + s * h, t[j]
        i, j = divmod(e - nn, n)
        a, b = F[i, j], F[i, (j + 1) % n]
        s = a / (a - b)
        return t[i], t[j] + s * h

    groups = {}
    for e in sorted(adj):
        groups.setdefault(uf.find(e), []).append(e)

    polylines = []
    for root in sorted(groups):
        start = groups[root][0]
        order = [start]
        prev, cur = None, start
        while True:
            nbrs = adj[cur]
            nxt = nbrs[0] if nbrs[0] != prev else nbrs[-1]
            if nxt == start:
                break
            order.append(nxt)
            prev, cur = cur, nxt
            if len(order) > len(groups[root]):
                break
        pts = np.array([point(e) for e in order])
        polylines.append(np.pi - np.mod(np.pi - pts, TWO_PI))
    return polylines


def unwrap_polyline(pts: np.ndarray) -> np.ndarray:
    """Undo torus wrapping along a polyline so consecutive points are close."""
    d = np.diff(pts, axis=0)
    d -= TWO_PI * np.round(d / TWO_PI)
    return np.vstack([pts[:1], pts[:1] + np.cumsum(d, axis=0)])


def split_at_seams(pts: np.ndarray, closed: bool = True) -> List[np.ndarray]:
    """Cut a wrapped polyline wherever it jumps across the square's edges, for drawing."""
    if closed:
        pts = np.vstack([pts, pts[:1]])
    jumps = np.where(np.any(np.abs(np.diff(pts, axis=0)) > np.pi, axis=1))[0]
    pieces = np.split(pts, jumps + 1)
    return [p for p in pieces if len(p) >= 2]


def torus_tree_data(pts: np.ndarray) -> np.ndarray:
    """Shift (-pi, pi] coordinates into [0, 2*pi) for periodic KD-trees."""
    out = np.mod(np.asarray(pts, dtype=float) + np.pi, TWO_PI)
    # mod can round up to exactly 2*pi
    out[out >= TWO_PI] = 0.0
    return out


__all__ = ["torus_level_set", "unwrap_polyline", "split_at_seams", "torus_tree_data"]
