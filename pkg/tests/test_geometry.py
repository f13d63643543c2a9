import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bootperc.geometry import (
    UNIT_AREA_RADIUS,
    Space,
    UnsupportedDimensionError,
    big_disc_cap_M,
    big_disc_value,
    circle_cap_fraction,
    disc_intersection_area,
    h1_profile,
    lens_area_L,
    lens_lune_areas_2d,
    lens_value,
    radius_for,
    torus_distance,
)
from oracles import angular_cap, mc_two_disc, torus_dist

R = UNIT_AREA_RADIUS


# -- torus distance ----------------------------------------------------------------


def test_torus_distance_examples():
    s2, s1 = Space(2, 10.0), Space(1, 10.0)
    assert torus_distance(s2, (0, 0), (0, 0)) == 0
    assert torus_distance(s1, 1.0, 9.0) == pytest.approx(2.0)
    assert torus_distance(s2, (0, 0), (9, 9)) == pytest.approx(math.sqrt(2))


def test_torus_distance_rejects_outside():
    with pytest.raises(ValueError):
        torus_distance(Space(2, 10.0), (0, 0), (10.0, 1.0))
    with pytest.raises(ValueError):
        torus_distance(Space(1, 10.0), -0.5, 1.0)


coord = st.floats(0, 9.999999, allow_nan=False)


@given(st.lists(coord, min_size=6, max_size=6))
def test_torus_metric_axioms(c):
    sp = Space(2, 10.0)
    u, v, w = np.array(c[0:2]), np.array(c[2:4]), np.array(c[4:6])
    duv = torus_distance(sp, u, v)
    assert duv == pytest.approx(torus_distance(sp, v, u), abs=1e-12)
    assert torus_distance(sp, u, u) == 0
    assert duv <= torus_distance(sp, u, w) + torus_distance(sp, w, v) + 1e-12
    assert duv == pytest.approx(torus_dist(10.0, u, v), abs=1e-12)
    assert duv <= math.sqrt(2) * 5 + 1e-12


def test_space_checks():
    with pytest.raises(UnsupportedDimensionError):
        Space(3, 1.0)
    assert Space.for_volume(100.0, 2).side == pytest.approx(10.0)


# -- radius ---------------------------------------------------------------------------


def test_radius_for():
    assert radius_for(3.0, math.e, 1) == pytest.approx(1.5)
    assert radius_for(math.pi, math.e, 2) == pytest.approx(1.0)
    r = radius_for(2, 1e5, 2)
    # independent arithmetic: pi r^2 = 2 ln(1e5)
    assert math.pi * r * r == pytest.approx(2 * 5 * math.log(10))
    assert r == pytest.approx(2.707, abs=5e-4)
    with pytest.raises(UnsupportedDimensionError):
        radius_for(2, 10, 3)


# -- lens and big-disc areas --------------------------------------------------


def test_lens_endpoints():
    assert lens_area_L(0.0) == pytest.approx(math.pi, abs=1e-15)
    assert lens_area_L(2.0) == 0.0
    assert lens_area_L(3.0) == 0.0
    assert lens_value(0.0).angle == 0.0


def test_lens_monte_carlo_at_one():
    assert abs(lens_area_L(1.0) - mc_two_disc(1.0, 1.0, 1.0)) < 2e-3


def test_big_disc_endpoints():
    assert big_disc_cap_M(0.5) == pytest.approx(math.pi / 4, abs=1e-14)
    assert big_disc_cap_M(0.3) == pytest.approx(math.pi * 0.09, abs=1e-14)
    assert big_disc_value(0.5).angle == pytest.approx(0.0, abs=1e-7)
    assert abs(big_disc_cap_M(100.0) - (math.pi / 2 - 1 / 300)) < 1e-3


def test_big_disc_monte_carlo():
    d = 1.3
    assert abs(big_disc_cap_M(d) - mc_two_disc(d, 1.0, d)) < 2e-3


@given(st.floats(0, 2), st.floats(0, 2))
def test_lens_decreasing(d1, d2):
    lo, hi = sorted((d1, d2))
    assert lens_area_L(lo) >= lens_area_L(hi) - 1e-15
    assert 0 <= lens_area_L(hi) <= math.pi


@given(st.floats(0.5, 1e4), st.floats(0.5, 1e4))
def test_big_disc_monotone_and_bounded(d1, d2):
    lo, hi = sorted((d1, d2))
    assert big_disc_cap_M(lo) <= big_disc_cap_M(hi) + 1e-12
    assert math.pi / 4 - 1e-14 <= big_disc_cap_M(hi) < math.pi / 2


@given(st.floats(0, 2))
def test_lens_matches_two_disc_formula(d):
    # independent closed form: two circular segments
    assert lens_area_L(d) == pytest.approx(float(disc_intersection_area(1.0, 1.0, d)), abs=1e-12)


@given(st.floats(0.5, 50))
def test_big_disc_matches_two_disc_formula(d):
    assert big_disc_cap_M(d) == pytest.approx(float(disc_intersection_area(d, 1.0, d)), abs=1e-10)


# -- circle cap fraction ------------------------------------------------------------


def test_cap_fraction_examples():
    assert circle_cap_fraction(0.2, 0.1, 1.0) == 1.0
    assert circle_cap_fraction(3.0, 1.0, 1.0) == 0.0
    v = circle_cap_fraction(0.5, 0.8, 1.0)
    assert v == pytest.approx(0.5439, abs=1e-4)
    assert abs(v - angular_cap(0.5, 0.8, 1.0)) < 2e-3


def test_cap_fraction_degenerate_circle():
    assert circle_cap_fraction(0.0, 0.5, 1.0) == 1.0
    assert circle_cap_fraction(0.0, 1.5, 1.0) == 0.0


def test_cap_fraction_dense_grid():
    """10^4 triples against a stratified angular count (2^14 midpoints each)."""
    rng = np.random.default_rng(3)
    s = rng.uniform(0, 3, 10_000)
    t = rng.uniform(0, 3, 10_000)
    Rr = rng.uniform(0.05, 2, 10_000)
    ang = (np.arange(2**14) + 0.5) * (2 * math.pi / 2**14)
    c, sn = np.cos(ang), np.sin(ang)
    worst = 0.0
    for i in range(0, 10_000, 500):
        sl = slice(i, i + 500)
        x = s[sl, None] * c[None, :] - t[sl, None]
        y = s[sl, None] * sn[None, :]
        est = np.mean(x * x + y * y < Rr[sl, None] ** 2, axis=1)
        worst = max(worst, float(np.max(np.abs(est - circle_cap_fraction(s[sl], t[sl], Rr[sl])))))
    assert worst <= 2e-3


@given(st.floats(0, 5), st.floats(0, 5), st.floats(0.01, 5))
def test_cap_fraction_range(s, t, Rr):
    v = circle_cap_fraction(s, t, Rr)
    assert 0.0 <= v <= 1.0


def test_cap_fraction_corrected_middle_branch():
    # the interior formula uses (s^2 + t^2 - R^2) / (2 s t); the variant
    # (t^2 - tau^2 - 1)/(2 tau) agrees only at the ends of the interval
    tau = 0.5
    for t in (0.6, 0.9, 1.2, 1.4):
        good = math.acos((t * t + tau * tau - 1) / (2 * t * tau)) / math.pi
        assert circle_cap_fraction(t, tau, 1.0) == pytest.approx(good, abs=1e-14)
        assert abs(good - angular_cap(t, tau, 1.0, n=2**16)) < 2e-3
    bad = math.acos((0.9**2 - tau**2 - 1) / (2 * tau)) / math.pi
    assert abs(bad - circle_cap_fraction(0.9, tau, 1.0)) > 0.05


def test_h1_profile():
    assert h1_profile(0.3, 0.5) == 1.0
    assert h1_profile(0.8, 0.5) == 0.5
    assert h1_profile(2.0, 0.5) == 0.0
    assert h1_profile(1.5, 0.5) == 0.5


# -- two-disc areas and lens/lune -------------------------------------------------


def test_lens_lune_examples():
    lens, lune = lens_lune_areas_2d(0.0, 0.0)
    assert lens == 0.0 and lune == pytest.approx(1.0)
    lens, lune = lens_lune_areas_2d(1e4, 1e4)
    assert lens == pytest.approx(0.5, abs=1e-4)
    lens, _ = lens_lune_areas_2d(1.0, 1.0)
    assert abs(lens - mc_two_disc(1.0, R, 1.0)) < 2e-3


@given(st.floats(0, 4), st.floats(0, 4), st.floats(0.05, 2))
def test_lens_quadrature_matches_closed_form(t, ball, disc):
    lens, lune = lens_lune_areas_2d(t, ball, disc)
    assert lens + lune == pytest.approx(math.pi * disc * disc, abs=1e-12)
    assert lens == pytest.approx(float(disc_intersection_area(ball, disc, t)), abs=1e-9)


@given(st.floats(0, 5), st.floats(0, 5), st.floats(0, 8))
def test_disc_intersection_symmetric_and_bounded(r1, r2, d):
    a = float(disc_intersection_area(r1, r2, d))
    assert a == pytest.approx(float(disc_intersection_area(r2, r1, d)), abs=1e-12)
    assert -1e-15 <= a <= math.pi * min(r1, r2) ** 2 + 1e-12


def test_disc_intersection_tiny_overlap_keeps_precision():
    # nearly tangent discs: compare with a series in the overlap depth
    h = 1e-6
    a = float(disc_intersection_area(1.0, 1.0, 2 - h))
    # two equal segments of height h/2 each, area ~ (4/3) sqrt(r) (h/2)^{3/2} * ... per segment
    seg = 4 / 3 * math.sqrt(2) * (h / 2) ** 1.5
    assert a == pytest.approx(2 * seg, rel=1e-5)
