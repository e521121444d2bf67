import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from popdyn import circle
from popdyn.circle import (
    MAX_ROOT_STEPS,
    convergents,
    det_jg,
    detect_periodicity,
    f,
    f12,
    f23,
    from_polar,
    from_polar_array,
    from_polar_with_steps,
    invariant_measure,
    iterate_phi,
    lift_step,
    rotation_number_integral,
    rotation_number_orbit,
    to_polar,
    total_measure,
)
from popdyn.errors import OriginUndefined, OutsideLambda
from popdyn.linkage import lambda_interval, lbar, wrap
from popdyn.pops import pop12
from popdyn.quadrature import adaptive_simpson

from conftest import circ_dist, gamma_samples, random_theorem_linkage

LINK = (1.0, 3.0, 1.0)
L0 = 4.0


@pytest.mark.parametrize("angles, phi", [((1, 0), 0.0), ((0, 1), math.pi / 2), ((-1, -1), -0.75 * math.pi)])
def test_to_polar_examples(angles, phi):
    pc = to_polar(angles, LINK)
    assert pc.phi == pytest.approx(phi, abs=1e-15)
    assert pc.L == pytest.approx(lbar(LINK, angles), abs=1e-15)


def test_to_polar_origin_undefined():
    with pytest.raises(OriginUndefined):
        to_polar((0, 0), LINK)


def test_from_polar_closed_form():
    # theta1 = 0 reduces the closure equation to L^2 = (l1+l2)^2 + l3^2 + 2(l1+l2) l3 cos(theta2)
    t = from_polar(LINK, L0, math.pi / 2)
    assert t.theta1 == pytest.approx(0.0, abs=1e-15)
    assert t.theta2 == pytest.approx(math.acos(-1 / 8), abs=1e-12)


def test_from_polar_near_degenerate_point():
    for phi in np.linspace(-math.pi, math.pi, 37):
        t = from_polar(LINK, 5 - 1e-6, phi)
        assert math.hypot(*t.as_tuple()) < 1e-2


@pytest.mark.parametrize("L", [2.5, 3.0, 5.0, 6.0])
def test_from_polar_outside_lambda(L):
    with pytest.raises(OutsideLambda):
        from_polar(LINK, L, 0.3)


def test_round_trips(rng):
    for t in gamma_samples(LINK, L0, 200, rng):
        pc = to_polar(t, LINK)
        assert pc.L == pytest.approx(L0, abs=1e-12)
        back = from_polar(LINK, pc.L, pc.phi)
        assert circ_dist(back.as_tuple(), t).max() < 1e-10


@settings(max_examples=100)
@given(st.floats(0.01, 0.99), st.floats(-math.pi, math.pi))
def test_from_polar_solves_closure_across_lambda(frac, phi):
    for lengths in (LINK, (3.0, 1.0, 3.0), (1.0, 1.0, 1.0), (0.7, 2.0, 1.4)):
        lo, hi = lambda_interval(lengths)
        L = lo + frac * (hi - lo)
        t1, t2, steps = from_polar_with_steps(lengths, L, phi)
        assert steps <= MAX_ROOT_STEPS
        assert abs(lbar(lengths, (t1, t2)) - L) < 1e-12 * L
        assert to_polar((t1, t2), lengths).phi == pytest.approx(wrap(phi), abs=1e-12)


def test_from_polar_array_matches_scalar():
    phis = np.linspace(-math.pi, math.pi, 301)
    t1, t2 = from_polar_array(LINK, L0, phis)
    ref = np.array([from_polar(LINK, L0, p).as_tuple() for p in phis])
    np.testing.assert_allclose(t1, ref[:, 0], atol=1e-14)
    np.testing.assert_allclose(t2, ref[:, 1], atol=1e-14)


def _fd_det_g(lengths, t1, t2, h=1e-6):
    def g(a, b):
        return np.array([lbar(lengths, (a, b)), math.atan2(b, a)])
    c1 = (g(t1 + h, t2) - g(t1 - h, t2)) / (2 * h)
    c2 = (g(t1, t2 + h) - g(t1, t2 - h)) / (2 * h)
    return c1[0] * c2[1] - c1[1] * c2[0]


def test_det_jg_matches_finite_differences(rng):
    for _ in range(200):
        lengths = tuple(rng.uniform(0.3, 3, size=3))
        t1, t2 = rng.uniform(-3, 3, size=2)
        assert det_jg(lengths, (t1, t2)) == pytest.approx(_fd_det_g(lengths, t1, t2), abs=1e-6)


def test_det_jg_special_values():
    assert det_jg((1.3, 0.4, 2.0), (math.pi, 0.0)) == pytest.approx(0.0, abs=1e-15)
    assert det_jg(LINK, (0.5, 0.5)) < 0


def test_f12_is_involution(rng):
    for phi in rng.uniform(-math.pi, math.pi, 50):
        assert circ_dist(f12(LINK, L0, f12(LINK, L0, phi)), phi) < 1e-10
        assert circ_dist(f23(LINK, L0, f23(LINK, L0, phi)), phi) < 1e-10


def test_f12_commutes_with_pop(rng):
    for phi in rng.uniform(-math.pi, math.pi, 50):
        pc = to_polar(pop12(LINK, from_polar(LINK, L0, phi)), LINK)
        assert pc.L == pytest.approx(L0, abs=1e-10)
        assert circ_dist(pc.phi, f12(LINK, L0, phi)) < 1e-10


def test_f_in_range():
    v = f12(LINK, L0, 0.3)
    assert math.isfinite(v) and -math.pi < v <= math.pi


def _fd_f(lengths, L, phi, h=1e-5):
    d = f(lengths, L, phi + h) - f(lengths, L, phi - h)
    return (math.remainder(d, 2 * math.pi)) / (2 * h)


def _det_ratio(lengths, L, phi):
    t = from_polar(lengths, L, phi)
    image = from_polar(lengths, L, f(lengths, L, phi))
    return det_jg(lengths, image) / det_jg(lengths, t)


def test_f_orientation_and_derivative(rng):
    for phi in rng.uniform(-math.pi, math.pi, 100):
        fd = _fd_f(LINK, L0, phi)
        assert fd > 0
        assert fd == pytest.approx(_det_ratio(LINK, L0, phi), abs=1e-5)


def test_equal_lengths_period_three(rng):
    for phi in rng.uniform(-math.pi, math.pi, 20):
        orb = iterate_phi((1, 1, 1), 1.2, phi, 3)
        assert circ_dist(orb[-1], orb[0]) < 1e-10


def test_lift_degree_one_and_monotone(rng):
    xs = np.sort(rng.uniform(-10, 10, 100))
    lifted = [lift_step(LINK, L0, x) for x in xs]
    assert np.all(np.diff(lifted) > 0)
    for x in xs[:20]:
        assert lift_step(LINK, L0, x + 2 * math.pi) - lift_step(LINK, L0, x) == pytest.approx(2 * math.pi, abs=1e-12)


def test_lift_projects_to_iteration():
    x = 0.4
    orb = iterate_phi(LINK, L0, x, 25)
    for k in range(1, 26):
        x = lift_step(LINK, L0, x)
        assert circ_dist(x, orb[k]) < 1e-9


def test_orbit_rotation_equal_lengths():
    n = 30_000
    est = rotation_number_orbit((1, 1, 1), 1.2, n, 0.1)
    assert abs(est.rho - 1 / 3) <= 1 / n
    assert est.method == circle.ORBIT_AVERAGE


def test_orbit_rotation_start_independence():
    n = 20_000
    a = rotation_number_orbit(LINK, L0, n, 0.1).rho
    b = rotation_number_orbit(LINK, L0, n, 2.0).rho
    assert abs(a - b) < 2 / n


def test_rotation_methods_agree():
    orb = rotation_number_orbit(LINK, L0, 1_000_000)
    integ = rotation_number_integral(LINK, L0)
    assert abs(orb.rho - integ.rho) < 1e-6


def test_integral_rotation_start_independence():
    tol = 1e-10
    a = rotation_number_integral(LINK, L0, 0.3, tol)
    b = rotation_number_integral(LINK, L0, 1.7, tol)
    assert abs(a.rho - b.rho) < 2 * max(a.error_bound, tol)


def test_integral_rotation_equal_lengths():
    est = rotation_number_integral((1, 1, 1), 1.2, 0.0, 1e-10)
    assert est.rho == pytest.approx(1 / 3, abs=1e-10)


def test_measure_basics(rng):
    assert invariant_measure(LINK, L0, 0.4, 0.4) == 0.0
    total = total_measure(LINK, L0)
    assert math.isfinite(total) and total > 0
    a, b = sorted(rng.uniform(-math.pi, math.pi, 2))
    assert invariant_measure(LINK, L0, a, b) + invariant_measure(LINK, L0, b, a) == pytest.approx(total, abs=1e-9)


def test_measure_invariance(rng):
    tol = 1e-10
    for _ in range(10):
        a, b = rng.uniform(-math.pi, math.pi, 2)
        before = invariant_measure(LINK, L0, a, b, tol)
        after = invariant_measure(LINK, L0, f(LINK, L0, a), f(LINK, L0, b), tol)
        assert abs(before - after) < 10 * tol


def test_adaptive_simpson_known_integrals():
    v, n = adaptive_simpson(np.sin, 0, math.pi, 1e-12)
    assert v == pytest.approx(2.0, abs=1e-12) and n > 0
    v, _ = adaptive_simpson(lambda x: 1 + 0.5 * np.cos(5 * x), -math.pi, math.pi, 1e-12)
    assert v == pytest.approx(2 * math.pi, abs=1e-12)
    assert adaptive_simpson(np.sin, 1.0, 1.0) == (0.0, 0)


def test_adaptive_simpson_budget():
    from popdyn.errors import QuadratureFailure

    with pytest.raises(QuadratureFailure):
        adaptive_simpson(lambda x: np.sqrt(np.abs(x)), -1, 1, 1e-14, max_evals=200)


def test_convergents():
    assert convergents(1 / 3, 50)[-1] == (1, 3)
    cs = convergents(math.pi - 3, 200)
    assert (1, 7) in cs and (15, 106) in cs
    assert all(q <= 200 for _, q in cs)


def test_periodicity_equal_lengths():
    rep = detect_periodicity((1, 1, 1), 1.2, 50, 1e-9)
    assert rep.rational == (1, 3)
    assert rep.max_defect < 1e-10


def test_periodicity_irrational_regime():
    rep = detect_periodicity(LINK, L0, 50, 1e-9)
    assert rep.rational is None


def test_estimates_agree_on_random_linkages(rng):
    for _ in range(3):
        lengths, L = random_theorem_linkage(rng)
        orb = rotation_number_orbit(lengths, L, 200_000)
        integ = rotation_number_integral(lengths, L)
        assert abs(orb.rho - integ.rho) < 2e-5
