"""Planar distance primitives for points, timed segments and boxes.

Scalar functions work on :class:`Point2` / :class:`TimedSegment` values and are
used by the per-query code paths.  The ``*_batch`` functions take numpy arrays
of shape ``(n, 2)`` / ``(n,)`` and are used wherever whole partitions are
compared at once.
"""
from __future__ import annotations

import math
from typing import Iterable, NamedTuple

import numpy as np

INF = math.inf


class Point2(NamedTuple):
    x: float
    y: float


class TimedSegment(NamedTuple):
    """A straight movement from ``start`` at ``t_start`` to ``end`` at ``t_end``.

    ``t_start == t_end`` is allowed for the degenerate segment of a
    single-sample trajectory.
    """

    start: Point2
    end: Point2
    t_start: float
    t_end: float


class BoundingBox(NamedTuple):
    lo: Point2
    hi: Point2


def _norm(dx: float, dy: float) -> float:
    # sqrt of the sum of squares, spelled out so scalar and batch paths agree bitwise
    return math.sqrt(dx * dx + dy * dy)


def dist_pp(a: Point2, b: Point2) -> float:
    return _norm(a[0] - b[0], a[1] - b[1])


def _dist_point_seg(px: float, py: float, ax: float, ay: float, bx: float, by: float) -> float:
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    if den == 0.0:
        return _norm(px - ax, py - ay)
    u = ((px - ax) * dx + (py - ay) * dy) / den
    u = 0.0 if u < 0.0 else (1.0 if u > 1.0 else u)
    return _norm(px - (ax + u * dx), py - (ay + u * dy))


def dist_ps(p: Point2, seg: TimedSegment) -> float:
    """Shortest distance from ``p`` to any point of ``seg`` (time ignored)."""
    (ax, ay), (bx, by) = seg.start, seg.end
    return _dist_point_seg(p[0], p[1], ax, ay, bx, by)


def _orient(ax: float, ay: float, bx: float, by: float, cx: float, cy: float) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def dist_ss(a: TimedSegment, b: TimedSegment) -> float:
    """Shortest distance between any two points of ``a`` and ``b``."""
    (a0x, a0y), (a1x, a1y) = a.start, a.end
    (b0x, b0y), (b1x, b1y) = b.start, b.end
    o1 = _orient(a0x, a0y, a1x, a1y, b0x, b0y)
    o2 = _orient(a0x, a0y, a1x, a1y, b1x, b1y)
    o3 = _orient(b0x, b0y, b1x, b1y, a0x, a0y)
    o4 = _orient(b0x, b0y, b1x, b1y, a1x, a1y)
    if o1 * o2 < 0.0 and o3 * o4 < 0.0:
        return 0.0
    return min(
        _dist_point_seg(a0x, a0y, b0x, b0y, b1x, b1y),
        _dist_point_seg(a1x, a1y, b0x, b0y, b1x, b1y),
        _dist_point_seg(b0x, b0y, a0x, a0y, a1x, a1y),
        _dist_point_seg(b1x, b1y, a0x, a0y, a1x, a1y),
    )


def mbb(segments: Iterable[TimedSegment]) -> BoundingBox:
    xs: list[float] = []
    ys: list[float] = []
    for s in segments:
        xs += (s.start[0], s.end[0])
        ys += (s.start[1], s.end[1])
    if not xs:
        raise ValueError("bounding box of an empty segment set")
    return BoundingBox(Point2(min(xs), min(ys)), Point2(max(xs), max(ys)))


def dist_bb(u: BoundingBox, v: BoundingBox) -> float:
    dx = max(0.0, v.lo[0] - u.hi[0], u.lo[0] - v.hi[0])
    dy = max(0.0, v.lo[1] - u.hi[1], u.lo[1] - v.hi[1])
    return _norm(dx, dy)


def location_at(seg: TimedSegment, t: float) -> Point2:
    """Position on ``seg`` at time ``t`` under constant-velocity motion."""
    if t < seg.t_start or t > seg.t_end:
        raise ValueError(f"time {t} outside segment interval [{seg.t_start}, {seg.t_end}]")
    span = seg.t_end - seg.t_start
    if span == 0:
        return Point2(*seg.start)
    r = (t - seg.t_start) / span
    (ax, ay), (bx, by) = seg.start, seg.end
    return Point2(ax + r * (bx - ax), ay + r * (by - ay))


def _velocity(seg: TimedSegment) -> tuple[float, float]:
    span = seg.t_end - seg.t_start
    if span == 0:
        return 0.0, 0.0
    return (seg.end[0] - seg.start[0]) / span, (seg.end[1] - seg.start[1]) / span


def cpa_time(a: TimedSegment, b: TimedSegment) -> float:
    """Time of closest approach of two linearly moving points, clamped to their common interval."""
    lo = max(a.t_start, b.t_start)
    hi = min(a.t_end, b.t_end)
    if lo > hi:
        raise ValueError("segments have disjoint time intervals")
    pa, pb = location_at(a, lo), location_at(b, lo)
    va, vb = _velocity(a), _velocity(b)
    rx, ry = pa[0] - pb[0], pa[1] - pb[1]
    wx, wy = va[0] - vb[0], va[1] - vb[1]
    ww = wx * wx + wy * wy
    if ww == 0.0:
        return lo
    t = lo - (rx * wx + ry * wy) / ww
    return min(max(t, lo), hi)


def dist_star(a: TimedSegment, b: TimedSegment) -> float:
    """Distance between ``a`` and ``b`` at their CPA time; ``inf`` when time-disjoint."""
    if max(a.t_start, b.t_start) > min(a.t_end, b.t_end):
        return INF
    t = cpa_time(a, b)
    return dist_pp(location_at(a, t), location_at(b, t))


# --------------------------------------------------------------------------
# vectorised variants

def _norm_batch(dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return np.sqrt(dx * dx + dy * dy)


def dist_ps_batch(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Point-to-segment distances; ``a``/``b`` may be a single ``(2,)`` segment."""
    p = np.atleast_2d(p)
    a = np.broadcast_to(a, p.shape)
    b = np.broadcast_to(b, p.shape)
    dx, dy = b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]
    den = dx * dx + dy * dy
    num = (p[:, 0] - a[:, 0]) * dx + (p[:, 1] - a[:, 1]) * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
    u = np.clip(u, 0.0, 1.0)
    return _norm_batch(p[:, 0] - (a[:, 0] + u * dx), p[:, 1] - (a[:, 1] + u * dy))


def _orient_batch(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])


def dist_ss_batch(a0: np.ndarray, a1: np.ndarray, b0: np.ndarray, b1: np.ndarray) -> np.ndarray:
    d = np.minimum(
        np.minimum(dist_ps_batch(a0, b0, b1), dist_ps_batch(a1, b0, b1)),
        np.minimum(dist_ps_batch(b0, a0, a1), dist_ps_batch(b1, a0, a1)),
    )
    crosses = (_orient_batch(a0, a1, b0) * _orient_batch(a0, a1, b1) < 0.0) & (
        _orient_batch(b0, b1, a0) * _orient_batch(b0, b1, a1) < 0.0
    )
    d[crosses] = 0.0
    return d


def dist_star_batch(
    a0: np.ndarray, a1: np.ndarray, ta0: np.ndarray, ta1: np.ndarray,
    b0: np.ndarray, b1: np.ndarray, tb0: np.ndarray, tb1: np.ndarray,
) -> np.ndarray:
    """Vectorised :func:`dist_star`; time-disjoint pairs come back as ``inf``."""
    lo = np.maximum(ta0, tb0)
    hi = np.minimum(ta1, tb1)
    sa = ta1 - ta0
    sb = tb1 - tb0
    with np.errstate(invalid="ignore", divide="ignore"):
        ra = np.where(sa > 0, (lo - ta0) / np.where(sa > 0, sa, 1.0), 0.0)
        rb = np.where(sb > 0, (lo - tb0) / np.where(sb > 0, sb, 1.0), 0.0)
        va = np.where((sa > 0)[:, None], (a1 - a0) / np.where(sa > 0, sa, 1.0)[:, None], 0.0)
        vb = np.where((sb > 0)[:, None], (b1 - b0) / np.where(sb > 0, sb, 1.0)[:, None], 0.0)
    pa = a0 + ra[:, None] * (a1 - a0)
    pb = b0 + rb[:, None] * (b1 - b0)
    r = pa - pb
    w = va - vb
    ww = w[:, 0] * w[:, 0] + w[:, 1] * w[:, 1]
    rw = r[:, 0] * w[:, 0] + r[:, 1] * w[:, 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        dt = np.where(ww > 0.0, -rw / np.where(ww > 0.0, ww, 1.0), 0.0)
    dt = np.clip(dt, 0.0, np.maximum(hi - lo, 0.0))
    rel = r + dt[:, None] * w
    out = _norm_batch(rel[:, 0], rel[:, 1])
    out[lo > hi] = np.inf
    return out
