from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convoys.geometry import (
    INF,
    BoundingBox,
    Point2,
    TimedSegment,
    cpa_time,
    dist_bb,
    dist_pp,
    dist_ps,
    dist_ps_batch,
    dist_ss,
    dist_ss_batch,
    dist_star,
    dist_star_batch,
    location_at,
    mbb,
)

coord = st.floats(-100, 100, allow_nan=False, allow_infinity=False)
points = st.builds(Point2, coord, coord)


def seg(ax, ay, bx, by, t0=0, t1=1):
    return TimedSegment(Point2(ax, ay), Point2(bx, by), t0, t1)


def _random_segment(rng, lo=0.0, hi=1.0, t_lo=0, t_hi=10):
    t0 = float(rng.integers(t_lo, t_hi))
    t1 = t0 + float(rng.integers(1, 5))
    p = rng.uniform(lo, hi, 4)
    return seg(*p, t0, t1)


def _sample(s: TimedSegment, n: int) -> np.ndarray:
    u = np.linspace(0.0, 1.0, n)[:, None]
    a, b = np.array(s.start), np.array(s.end)
    return a + u * (b - a)


# -- dist_pp ---------------------------------------------------------------

def test_dist_pp_examples():
    assert dist_pp(Point2(0, 0), Point2(0, 0)) == 0
    assert dist_pp(Point2(0, 0), Point2(3, 4)) == 5


@given(points, points)
def test_dist_pp_matches_formula(a, b):
    assert dist_pp(a, b) == pytest.approx(math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2), rel=1e-12, abs=1e-12)


def test_metric_sanity_on_random_triples():
    rng = np.random.default_rng(0)
    a, b, c = (rng.uniform(-1e3, 1e3, (100_000, 2)) for _ in range(3))

    def d(p, q):
        return np.sqrt(((p - q) ** 2).sum(axis=1))

    assert np.all(d(a, b) >= 0)
    assert np.array_equal(d(a, b), d(b, a))
    assert np.all(d(a, c) <= d(a, b) + d(b, c) + 1e-9)
    # scalar path agrees with the vectorised one
    for i in range(200):
        assert dist_pp(Point2(*a[i]), Point2(*b[i])) == d(a[i:i + 1], b[i:i + 1])[0]


# -- dist_ps ---------------------------------------------------------------

def test_dist_ps_examples():
    l = seg(0, 0, 2, 0)
    assert dist_ps(Point2(1, 1), l) == 1
    assert dist_ps(Point2(3, 0), l) == 1
    assert dist_ps(Point2(1, 0), l) == 0
    # degenerate segment
    assert dist_ps(Point2(3, 4), seg(0, 0, 0, 0)) == 5


def test_dist_ps_dense_sampling_oracle():
    rng = np.random.default_rng(1)
    for _ in range(25):
        l = _random_segment(rng, -5, 5)
        p = rng.uniform(-8, 8, 2)
        samples = _sample(l, 100_001)
        oracle = np.sqrt(((samples - p) ** 2).sum(axis=1)).min()
        got = dist_ps(Point2(*p), l)
        assert got <= oracle + 1e-12
        assert oracle - got <= 1e-4


@given(points, points, points)
def test_dist_ps_bounded_by_endpoints(p, a, b):
    l = TimedSegment(a, b, 0, 1)
    d = dist_ps(p, l)
    assert 0 <= d <= min(dist_pp(p, a), dist_pp(p, b)) + 1e-9


# -- dist_ss ---------------------------------------------------------------

def test_dist_ss_examples():
    assert dist_ss(seg(0, 0, 2, 0), seg(1, 0, 3, 0)) == 0
    assert dist_ss(seg(0, 0, 1, 0), seg(0, 2, 1, 2)) == 2
    assert dist_ss(seg(0, 0, 2, 2), seg(0, 2, 2, 0)) == 0


def _ss_oracle(a: TimedSegment, b: TimedSegment) -> float:
    """Min distance over a parameter grid, refined once around the best cell."""
    def grid(ua, ub):
        pa = np.array(a.start) + ua[:, None] * (np.array(a.end) - np.array(a.start))
        pb = np.array(b.start) + ub[:, None] * (np.array(b.end) - np.array(b.start))
        d = np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2))
        i, j = np.unravel_index(np.argmin(d), d.shape)
        return d[i, j], ua[i], ub[j]

    best, ua, ub = grid(np.linspace(0, 1, 1001), np.linspace(0, 1, 1001))
    w = 2e-3
    fine, _, _ = grid(
        np.linspace(max(0, ua - w), min(1, ua + w), 1001),
        np.linspace(max(0, ub - w), min(1, ub + w), 1001),
    )
    return min(best, fine)


def test_dist_ss_dense_sampling_oracle():
    rng = np.random.default_rng(2)
    for _ in range(15):
        a, b = _random_segment(rng, -5, 5), _random_segment(rng, -5, 5)
        oracle = _ss_oracle(a, b)
        got = dist_ss(a, b)
        assert got <= oracle + 1e-12
        assert oracle - got <= 1e-4


@given(points, points, points, points)
def test_dist_ss_symmetric_and_batch_identical(a0, a1, b0, b1):
    a, b = TimedSegment(a0, a1, 0, 1), TimedSegment(b0, b1, 0, 1)
    assert dist_ss(a, b) == dist_ss(b, a)
    batch = dist_ss_batch(np.array([a0]), np.array([a1]), np.array([b0]), np.array([b1]))[0]
    assert dist_ss(a, b) == batch


@given(points, points, points)
def test_dist_ps_batch_identical(p, a, b):
    assert dist_ps(p, TimedSegment(a, b, 0, 1)) == dist_ps_batch(np.array([p]), np.array(a), np.array(b))[0]


# -- boxes -----------------------------------------------------------------

def test_mbb_examples():
    assert mbb([seg(1, 1, 1, 1)]) == BoundingBox(Point2(1, 1), Point2(1, 1))
    assert mbb([seg(0, 0, 1, 0), seg(0, 2, 3, 2)]) == BoundingBox(Point2(0, 0), Point2(3, 2))
    with pytest.raises(ValueError):
        mbb([])


def test_mbb_contains_sampled_points():
    rng = np.random.default_rng(3)
    for _ in range(50):
        segs = [_random_segment(rng, -10, 10) for _ in range(int(rng.integers(1, 6)))]
        box = mbb(segs)
        pts = np.concatenate([_sample(s, 101) for s in segs])
        assert np.all(pts >= np.array(box.lo) - 1e-12)
        assert np.all(pts <= np.array(box.hi) + 1e-12)


def test_dist_bb_examples():
    unit = BoundingBox(Point2(0, 0), Point2(1, 1))
    assert dist_bb(unit, BoundingBox(Point2(0.5, 0.5), Point2(2, 2))) == 0
    assert dist_bb(unit, BoundingBox(Point2(3, 3), Point2(4, 4))) == pytest.approx(2 * math.sqrt(2))


def test_dist_bb_lower_bounds_pairwise_segment_distance():
    rng = np.random.default_rng(4)
    for _ in range(200):
        s1 = [_random_segment(rng, 0, 10) for _ in range(int(rng.integers(1, 4)))]
        s2 = [_random_segment(rng, 5, 15) for _ in range(int(rng.integers(1, 4)))]
        lower = dist_bb(mbb(s1), mbb(s2))
        assert lower <= min(dist_ss(a, b) for a in s1 for b in s2) + 1e-12


# -- timed motion ----------------------------------------------------------

def test_location_at_examples():
    l = TimedSegment(Point2(0, 0), Point2(2, 2), 0, 10)
    assert location_at(l, 0) == Point2(0, 0)
    assert location_at(l, 10) == Point2(2, 2)
    assert location_at(l, 5) == Point2(1, 1)
    with pytest.raises(ValueError):
        location_at(l, 11)
    with pytest.raises(ValueError):
        location_at(l, -1)


def test_location_at_ratio_identity():
    rng = np.random.default_rng(5)
    for _ in range(200):
        l = _random_segment(rng, -5, 5)
        t = rng.uniform(l.t_start, l.t_end)
        p = location_at(l, t)
        length = dist_pp(l.start, l.end)
        assert dist_ps(p, l) <= 1e-12
        if length > 1e-6:
            assert dist_pp(l.start, p) / length == pytest.approx((t - l.t_start) / (l.t_end - l.t_start), abs=1e-9)


def test_cpa_time_examples():
    a = seg(0, 0, 2, 0, 0, 1)
    b = seg(2, 0, 0, 0, 0, 1)
    assert cpa_time(a, b) == pytest.approx(0.5)
    assert dist_star(a, b) == pytest.approx(0.0)
    # identical motion: distance constant, interval start returned
    assert cpa_time(a, a) == 0
    # parallel, same velocity
    assert cpa_time(seg(0, 0, 1, 0, 2, 6), seg(0, 1, 1, 1, 2, 6)) == 2
    with pytest.raises(ValueError):
        cpa_time(seg(0, 0, 1, 0, 0, 1), seg(0, 0, 1, 0, 2, 3))


def test_dist_star_disjoint_is_infinite():
    assert dist_star(seg(0, 0, 1, 0, 0, 1), seg(0, 0, 1, 0, 2, 3)) == INF
    d = dist_star_batch(
        np.array([[0.0, 0]]), np.array([[1.0, 0]]), np.array([0.0]), np.array([1.0]),
        np.array([[0.0, 0]]), np.array([[1.0, 0]]), np.array([2.0]), np.array([3.0]),
    )
    assert d[0] == INF


def test_dist_star_time_sampling_oracle():
    rng = np.random.default_rng(6)
    for _ in range(40):
        a, b = _random_segment(rng, 0, 1, 0, 4), _random_segment(rng, 0, 1, 0, 4)
        lo, hi = max(a.t_start, b.t_start), min(a.t_end, b.t_end)
        if lo > hi:
            continue
        ts = np.linspace(lo, hi, 1_000_001)

        def pos(s, t):
            r = (t - s.t_start) / (s.t_end - s.t_start)
            return np.array(s.start) + r[:, None] * (np.array(s.end) - np.array(s.start))

        oracle = np.sqrt(((pos(a, ts) - pos(b, ts)) ** 2).sum(axis=1)).min()
        got = dist_star(a, b)
        assert lo <= cpa_time(a, b) <= hi
        assert got <= oracle + 1e-12
        assert oracle - got <= 1e-4
        assert got >= dist_ss(a, b) - 1e-12


def test_lower_bound_chain_fuzz():
    """dist_bb <= dist_ss <= dist_star <= distance at any common time, on 1e5 random pairs."""
    rng = np.random.default_rng(7)
    n = 100_000
    a0, a1, b0, b1 = (rng.uniform(-10, 10, (n, 2)) for _ in range(4))
    ta0 = rng.integers(0, 10, n).astype(float)
    ta1 = ta0 + rng.integers(1, 6, n)
    tb0 = rng.integers(0, 10, n).astype(float)
    tb1 = tb0 + rng.integers(1, 6, n)
    overlap = np.maximum(ta0, tb0) <= np.minimum(ta1, tb1)
    a0, a1, b0, b1, ta0, ta1, tb0, tb1 = (v[overlap] for v in (a0, a1, b0, b1, ta0, ta1, tb0, tb1))
    lo_a, hi_a = np.minimum(a0, a1), np.maximum(a0, a1)
    lo_b, hi_b = np.minimum(b0, b1), np.maximum(b0, b1)
    gap = np.maximum(0, np.maximum(lo_b - hi_a, lo_a - hi_b))
    box = np.sqrt((gap ** 2).sum(axis=1))
    ss = dist_ss_batch(a0, a1, b0, b1)
    star = dist_star_batch(a0, a1, ta0, ta1, b0, b1, tb0, tb1)
    lo, hi = np.maximum(ta0, tb0), np.minimum(ta1, tb1)
    t = lo + rng.uniform(0, 1, len(lo)) * (hi - lo)
    pa = a0 + ((t - ta0) / (ta1 - ta0))[:, None] * (a1 - a0)
    pb = b0 + ((t - tb0) / (tb1 - tb0))[:, None] * (b1 - b0)
    at_t = np.sqrt(((pa - pb) ** 2).sum(axis=1))
    assert len(t) > 50_000
    assert np.all(box <= ss + 1e-12)
    assert np.all(ss <= star + 1e-9)
    assert np.all(star <= at_t + 1e-9)
    # the scalar functions agree with the batch ones
    for i in range(0, len(t), 997):
        sa = TimedSegment(Point2(*a0[i]), Point2(*a1[i]), ta0[i], ta1[i])
        sb = TimedSegment(Point2(*b0[i]), Point2(*b1[i]), tb0[i], tb1[i])
        assert dist_ss(sa, sb) == ss[i]
        assert dist_star(sa, sb) == pytest.approx(star[i], abs=1e-9)


@settings(max_examples=300)
@given(points, points, points, points, st.integers(0, 5), st.integers(1, 5), st.integers(0, 5), st.integers(1, 5))
def test_cpa_time_stays_inside_common_interval(a0, a1, b0, b1, s1, d1, s2, d2):
    a = TimedSegment(a0, a1, s1, s1 + d1)
    b = TimedSegment(b0, b1, s2, s2 + d2)
    lo, hi = max(s1, s2), min(s1 + d1, s2 + d2)
    if lo > hi:
        assert dist_star(a, b) == INF
        return
    t = cpa_time(a, b)
    assert lo <= t <= hi
    assert dist_star(a, b) >= dist_ss(a, b) - 1e-9
