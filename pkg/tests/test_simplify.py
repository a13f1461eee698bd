from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convoys.geometry import dist_pp, dist_ps, location_at
from convoys.simplify import (
    _pick_farthest,
    _pick_middle,
    deviations,
    dp,
    dp_plus,
    dp_star,
    reduction_ratio,
    simplify,
    simplify_many,
    tolerance_traces,
)
from convoys.trajectory import Trajectory

from conftest import random_walk, traj

# seven-point polyline: p4 and p6 both exceed the tolerance of 1 against the p1-p7 chord
SEVEN = [(0, 0), (1, 0.3), (2, 0.6), (3, 1.5), (4, 0.9), (5, 2), (6, 0)]


def seven():
    return traj("o", [(x, y, t) for t, (x, y) in enumerate(SEVEN, start=1)])


def test_dp_splits_at_largest_deviation():
    o = seven()
    dev = deviations(o, 0, 6, "dp")
    assert int(np.argmax(dev)) + 1 == 5  # p6
    assert dp(o, 1.0).vertex_indices() == [0, 5, 6]


def test_dp_plus_splits_nearest_middle():
    o = seven()
    dev = deviations(o, 0, 6, "dp")
    assert set(np.flatnonzero(dev > 1.0) + 1) == {3, 5}  # p4 and p6 exceed
    assert _pick_middle(dev, 1.0) + 1 == 3
    assert dp_plus(o, 1.0).vertex_indices() == [0, 3, 5, 6]


def test_no_point_exceeds_tolerance_single_chord():
    o = seven()
    for fn in (dp, dp_plus):
        s = fn(o, 10.0)
        assert s.vertex_indices() == [0, 6]
    assert dp(o, 10.0).segments[0].actual_tolerance == dp_plus(o, 10.0).segments[0].actual_tolerance


def test_dp_star_keeps_point_dp_drops():
    o = traj("o", [(0, 0, 1), (0.5, 0.3, 2), (4, 0, 3)])
    assert dp(o, 0.5).vertex_indices() == [0, 2]
    assert dp_star(o, 0.5).vertex_indices() == [0, 1, 2]


def test_dp_star_time_ratio_deviation():
    o = traj("o", [(0, 0, 0), (9, 0, 1), (10, 0, 10)])
    assert deviations(o, 0, 2, "dp")[0] == 0
    assert deviations(o, 0, 2, "dp*")[0] == pytest.approx(8.0)
    assert dp(o, 1.0).vertex_indices() == [0, 2]
    assert dp_star(o, 1.0).vertex_indices() == [0, 1, 2]


def test_dp_star_constant_speed_line():
    o = traj("o", [(2 * t, 3 * t, t) for t in range(10)])
    s = dp_star(o, 0.0)
    assert s.vertex_indices() == [0, 9]
    assert s.segments[0].actual_tolerance == pytest.approx(0.0, abs=1e-12)


def test_short_inputs():
    one = traj("a", [(1, 2, 5)])
    for fn in (dp, dp_plus, dp_star):
        s = fn(one, 1.0)
        assert len(s.segments) == 1
        g = s.segments[0].geometry
        assert g.start == g.end == (1, 2) and g.t_start == g.t_end == 5
        assert s.n_vertices == 1 and s.tau == (5, 5)
    two = traj("a", [(0, 0, 1), (1, 1, 2)])
    assert dp(two, 0.0).vertex_indices() == [0, 1]
    with pytest.raises(ValueError):
        dp(two, -1.0)


def test_ties_pick_lowest_index():
    dev = np.array([1.0, 3.0, 3.0, 0.5])
    assert _pick_farthest(dev, 0.0) == 1
    # middle offset of a 4-interior sub-polyline is 1.5; offsets 1 and 2 tie
    assert _pick_middle(np.array([2.0, 2.0, 2.0, 2.0]), 1.0) == 1


def _recomputed_max(o: Trajectory, seg, method: str) -> float:
    i, j = seg.span
    worst = 0.0
    for k in range(i + 1, j):
        p = o.point(k)
        if method == "dp*":
            d = dist_pp(p, location_at(seg.geometry, int(o.ticks[k])))
        else:
            d = dist_ps(p, seg.geometry)
        worst = max(worst, d)
    return worst


@settings(max_examples=80, deadline=None)
@given(
    st.integers(0, 2**31 - 1),
    st.integers(1, 60),
    st.floats(0.0, 5.0),
    st.sampled_from(["dp", "dp+", "dp*"]),
)
def test_deviation_bound_and_exact_tolerance(seed, n, delta, method):
    rng = np.random.default_rng(seed)
    ticks = np.sort(rng.choice(np.arange(3 * n), n, replace=False))
    o = Trajectory("o", ticks, np.cumsum(rng.normal(0, 1, (n, 2)), axis=0))
    s = simplify(o, delta, method)
    # endpoints survive, segments chain
    assert s.vertex_indices()[0] == 0 and s.vertex_indices()[-1] == n - 1
    for a, b in zip(s.segments, s.segments[1:]):
        assert a.span[1] == b.span[0]
    for seg in s.segments:
        assert seg.actual_tolerance == _recomputed_max(o, seg, method)
        assert seg.actual_tolerance <= delta


def test_dp_plus_split_is_never_worse_than_dp_split():
    rng = np.random.default_rng(3)
    for _ in range(300):
        o = random_walk(rng, int(rng.integers(3, 40)))
        dev = deviations(o, 0, len(o) - 1, "dp")
        delta = float(rng.uniform(0, dev.max()))
        if not (dev > delta).any():
            continue
        assert dev[_pick_middle(dev, delta)] <= dev[_pick_farthest(dev, delta)]
        assert dev[_pick_middle(dev, delta)] > delta


def test_trace_has_one_value_per_interior_point():
    rng = np.random.default_rng(4)
    for n in (1, 2, 3, 10, 50):
        trace: list[float] = []
        simplify(random_walk(rng, n), 0.0, "dp", trace=trace)
        assert len(trace) == max(0, n - 2)
        assert all(v >= 0 for v in trace)


def test_reduction_ratio():
    rng = np.random.default_rng(5)
    objs = [random_walk(rng, 20, f"o{i}") for i in range(3)]
    assert reduction_ratio(objs, [dp(o, 0.0) for o in objs]) == 0.0
    assert reduction_ratio(objs, [dp(o, 1e9) for o in objs]) == pytest.approx(1 - 6 / 60)
    assert reduction_ratio([], []) == 0.0


def _reference_vertices(o: Trajectory, delta: float, method: str) -> tuple[list[int], list[float]]:
    """Recursive split, one sub-polyline at a time."""
    pick = _pick_middle if method == "dp+" else _pick_farthest
    if len(o) == 1:
        return [0], [0.0]

    def split(i: int, j: int):
        dev = deviations(o, i, j, method)
        if not len(dev) or dev.max() <= delta:
            return [j], [float(dev.max()) if len(dev) else 0.0]
        mid = i + 1 + pick(dev, delta)
        v1, t1 = split(i, mid)
        v2, t2 = split(mid, j)
        return v1 + v2, t1 + t2

    vertices, tols = split(0, len(o) - 1)
    return [0] + vertices, tols


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 4.0), st.sampled_from(["dp", "dp+", "dp*"]))
def test_batched_simplification_matches_recursion(seed, delta, method):
    rng = np.random.default_rng(seed)
    objs = []
    for i in range(int(rng.integers(1, 8))):
        n = int(rng.integers(1, 40))
        ticks = np.sort(rng.choice(np.arange(3 * n), n, replace=False))
        objs.append(Trajectory(f"o{i}", ticks, np.cumsum(rng.normal(0, 1, (n, 2)), axis=0)))
    for o, s in zip(objs, simplify_many(objs, delta, method)):
        vertices, tols = _reference_vertices(o, delta, method)
        assert s.owner == o.obj_id
        assert s.vertex_indices() == vertices
        assert [seg.actual_tolerance for seg in s.segments] == tols
        arr = s.arrays()
        assert arr.tol.tolist() == tols
        assert arr.t0.tolist() == [seg.geometry.t_start for seg in s.segments]


def test_tolerance_traces_match_single_runs():
    rng = np.random.default_rng(5)
    objs = [random_walk(rng, int(rng.integers(1, 30)), f"o{i}") for i in range(12)]
    assert tolerance_traces(objs) == [tolerance_traces([o])[0] for o in objs]
