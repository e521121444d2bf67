import math

import numpy as np
import pytest


def closed_form_gamma(lengths, L, theta1):
    """Both theta2 solutions of Lbar(theta1, theta2) = L for fixed theta1, or [] if none.

    Independent of the package's root finder: with theta1 fixed, Lbar^2 is
    A + P cos(theta2) + Q sin(theta2).
    """
    l1, l2, l3 = lengths
    c1, s1 = math.cos(theta1), math.sin(theta1)
    K = L * L - (l1 * l1 + l2 * l2 + l3 * l3 + 2 * l1 * l2 * c1)
    P = 2 * l3 * (l2 + l1 * c1)
    Q = -2 * l1 * l3 * s1
    R = math.hypot(P, Q)
    if R == 0 or abs(K) > R:
        return []
    base, spread = math.atan2(Q, P), math.acos(K / R)
    return [base + spread, base - spread]


def gamma_samples(lengths, L, n, rng):
    """``n`` points of the closure curve, spread by sampling theta1 uniformly."""
    out = []
    while len(out) < n:
        t1 = rng.uniform(-math.pi, math.pi)
        sols = closed_form_gamma(lengths, L, t1)
        if sols:
            t2 = sols[rng.integers(len(sols))]
            out.append((t1, math.pi - (math.pi - t2) % (2 * math.pi)))
    return np.array(out)


def circ_dist(a, b):
    d = np.mod(np.asarray(a) - np.asarray(b) + math.pi, 2 * math.pi) - math.pi
    return np.abs(d)


def random_theorem_linkage(rng, margin=0.05):
    """Random (l1, l2, l3, L) meeting the length condition, with L inside the admissible range."""
    while True:
        l1, l3 = rng.uniform(0.5, 3.0, size=2)
        if rng.random() < 0.5:
            l2 = rng.uniform(max(l1, l3), 4.0)
        else:
            l2 = rng.uniform(0.2, min(l1, l3))
        lo = max(-l1 + l2 + l3, l1 - l2 + l3, l1 + l2 - l3)
        hi = l1 + l2 + l3
        if abs(l1 - l2) + abs(l2 - l3) < 0.2:
            continue
        w = hi - lo
        return (l1, l2, l3), rng.uniform(lo + margin * w, hi - margin * w)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
