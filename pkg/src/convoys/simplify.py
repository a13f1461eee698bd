"""Douglas-Peucker style trajectory simplification with per-segment actual tolerances.

Three variants share one divide-and-conquer driver:

* ``dp``: split at the point farthest (point-to-segment distance) from the chord.
* ``dp+``: among points farther than the tolerance, split at the one whose
  index is nearest the middle of the sub-polyline.
* ``dp*``: deviation is measured against the time-synchronised position on
  the chord instead of the nearest point of the chord.

Every output segment records the largest deviation of the original samples
it replaced, measured with the variant's own metric.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .geometry import Point2, TimedSegment, dist_ps_batch
from .trajectory import Trajectory

Method = Literal["dp", "dp+", "dp*"]
METHODS: tuple[Method, ...] = ("dp", "dp+", "dp*")


@dataclass(frozen=True)
class Segment:
    geometry: TimedSegment
    owner: str
    actual_tolerance: float
    index: int
    # indices of the endpoints in the owner's original sample arrays
    span: tuple[int, int]


@dataclass(frozen=True)
class SegmentArrays:
    """Column form of a run of segments: endpoints, endpoint ticks and tolerances."""

    p0: np.ndarray
    p1: np.ndarray
    t0: np.ndarray
    t1: np.ndarray
    tol: np.ndarray


@dataclass(frozen=True)
class SimplifiedTrajectory:
    owner: str
    segments: tuple[Segment, ...]
    method: Method
    delta: float
    _arrays: SegmentArrays | None = field(default=None, compare=False, repr=False)

    def arrays(self) -> SegmentArrays:
        if self._arrays is None:
            segs = self.segments
            arr = SegmentArrays(
                np.array([s.geometry.start for s in segs], dtype=np.float64).reshape(-1, 2),
                np.array([s.geometry.end for s in segs], dtype=np.float64).reshape(-1, 2),
                np.array([s.geometry.t_start for s in segs], dtype=np.float64),
                np.array([s.geometry.t_end for s in segs], dtype=np.float64),
                np.array([s.actual_tolerance for s in segs], dtype=np.float64),
            )
            object.__setattr__(self, "_arrays", arr)
        return self._arrays

    @property
    def tau(self) -> tuple[int, int]:
        return int(self.segments[0].geometry.t_start), int(self.segments[-1].geometry.t_end)

    @property
    def actual_tolerance(self) -> float:
        return max(s.actual_tolerance for s in self.segments)

    @property
    def n_vertices(self) -> int:
        if len(self.segments) == 1 and self.segments[0].span[0] == self.segments[0].span[1]:
            return 1
        return len(self.segments) + 1

    def vertex_indices(self) -> list[int]:
        return [self.segments[0].span[0]] + [s.span[1] for s in self.segments if s.span[1] != s.span[0]]


def deviations(o: Trajectory, i: int, j: int, method: Method) -> np.ndarray:
    """Deviation of samples ``i+1 .. j-1`` from the chord ``i -> j``."""
    pts = o.xy[i + 1:j]
    if len(pts) == 0:
        return np.empty(0)
    a, b = o.xy[i], o.xy[j]
    if method == "dp*":
        t0, t1 = o.ticks[i], o.ticks[j]
        r = (o.ticks[i + 1:j] - t0) / (t1 - t0)
        cx = a[0] + r * (b[0] - a[0])
        cy = a[1] + r * (b[1] - a[1])
        dx, dy = pts[:, 0] - cx, pts[:, 1] - cy
        return np.sqrt(dx * dx + dy * dy)
    return dist_ps_batch(pts, a, b)


def _pick_farthest(dev: np.ndarray, delta: float) -> int:
    return int(np.argmax(dev))  # argmax keeps the lowest index on ties


def _pick_middle(dev: np.ndarray, delta: float) -> int:
    over = np.flatnonzero(dev > delta)
    # dev[k] belongs to sample i+1+k; the sub-polyline middle is at offset (j-i)/2 - 1
    mid = (len(dev) + 1) / 2.0 - 1.0
    return int(over[np.argmin(np.abs(over - mid))])


def _level_deviations(x, y, t, pt, lo, hi, inner, method: Method) -> np.ndarray:
    """Deviation of every interior sample ``pt`` of the chords ``lo -> hi``.

    ``pt`` lists each chord's interior samples in turn, ``inner`` counts them.
    Chord quantities are computed once and repeated per sample; the
    arithmetic matches :func:`deviations` operation for operation.
    """
    ax, ay = x[lo], y[lo]
    dx, dy = x[hi] - ax, y[hi] - ay
    px, py = x[pt], y[pt]
    rax, ray = np.repeat(ax, inner), np.repeat(ay, inner)
    rdx, rdy = np.repeat(dx, inner), np.repeat(dy, inner)
    if method == "dp*":
        t0 = t[lo]
        r = (t[pt] - np.repeat(t0, inner)) / np.repeat(t[hi] - t0, inner)
        ex = px - (rax + r * rdx)
        ey = py - (ray + r * rdy)
        return np.sqrt(ex * ex + ey * ey)
    den = dx * dx + dy * dy
    num = (px - rax) * rdx + (py - ray) * rdy
    rden = np.repeat(den, inner)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(rden > 0.0, num / np.where(rden > 0.0, rden, 1.0), 0.0)
    u = np.clip(u, 0.0, 1.0)
    ex = px - (rax + u * rdx)
    ey = py - (ray + u * rdy)
    return np.sqrt(ex * ex + ey * ey)


def _first_where(mask: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Flat position of the first true entry in each chord's run; runs end at ``ends``."""
    pos = np.flatnonzero(mask)
    chords, at = np.unique(np.searchsorted(ends, pos, side="right"), return_index=True)
    first = np.full(len(ends), -1, dtype=np.int64)
    first[chords] = pos[at]
    return first


def _check(delta: float, method: str) -> None:
    if delta < 0:
        raise ValueError("tolerance must be non-negative")
    if method not in METHODS:
        raise ValueError(f"unknown simplifier {method!r}")


def _divide(
    trajectories: Sequence[Trajectory], delta: float, method: Method, want_trace: bool
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, list[list[float]] | None]:
    """Level-synchronous divide-and-conquer over all trajectories.

    Returns the sample offsets of each trajectory, the accepted chords as
    global ``(lo, hi, tolerance)`` arrays sorted by ``lo``, the owner of each
    chord and, if asked, the per-trajectory traces.
    """
    n_traj = len(trajectories)
    sizes = np.array([len(o) for o in trajectories], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    xy = np.concatenate([o.xy for o in trajectories]).astype(float, copy=False)
    x, y = np.ascontiguousarray(xy[:, 0]), np.ascontiguousarray(xy[:, 1])
    ticks = np.concatenate([o.ticks for o in trajectories]).astype(float)

    multi = np.flatnonzero(sizes > 1)
    lo, hi = offsets[multi], offsets[multi] + sizes[multi] - 1
    done_lo: list[np.ndarray] = []
    done_hi: list[np.ndarray] = []
    done_tol: list[np.ndarray] = []
    trace_own: list[np.ndarray] = []
    trace_val: list[np.ndarray] = []
    point_owner = np.repeat(np.arange(n_traj), sizes)

    while len(lo):
        inner = hi - lo - 1
        bare = inner == 0
        if bare.any():
            done_lo.append(lo[bare])
            done_hi.append(hi[bare])
            done_tol.append(np.zeros(int(bare.sum())))
            lo, hi, inner = lo[~bare], hi[~bare], inner[~bare]
            if not len(lo):
                break
        ends = np.cumsum(inner)
        starts = ends - inner
        pt = np.repeat(lo + 1 - starts, inner) + np.arange(int(ends[-1]))
        dev = _level_deviations(x, y, ticks, pt, lo, hi, inner, method)
        worst = np.maximum.reduceat(dev, starts)
        accept = worst <= delta
        if accept.any():
            done_lo.append(lo[accept])
            done_hi.append(hi[accept])
            done_tol.append(worst[accept])
        split = ~accept
        if want_trace:
            kept_pts = np.repeat(accept, inner)
            trace_own.append(point_owner[pt[kept_pts]])
            trace_val.append(dev[kept_pts])
            trace_own.append(point_owner[lo[split]])
            trace_val.append(worst[split])
        if not split.any():
            break
        if method == "dp+":
            # dev[k] belongs to sample lo+1+k; the sub-polyline middle is at offset (hi-lo)/2 - 1
            mid = (inner + 1) / 2.0 - 1.0
            offset = pt - np.repeat(lo + 1, inner)
            key = np.where(dev > delta, np.abs(offset - np.repeat(mid, inner)), np.inf)
            best = np.minimum.reduceat(key, starts)
            first = _first_where(key == np.repeat(best, inner), ends)
        else:
            first = _first_where(dev == np.repeat(worst, inner), ends)
        k = pt[first[split]]
        lo, hi = np.concatenate([lo[split], k]), np.concatenate([k, hi[split]])

    all_lo = np.concatenate(done_lo) if done_lo else np.empty(0, dtype=np.int64)
    all_hi = np.concatenate(done_hi) if done_hi else np.empty(0, dtype=np.int64)
    all_tol = np.concatenate(done_tol) if done_tol else np.empty(0)
    order = np.argsort(all_lo, kind="stable")
    all_lo, all_hi, all_tol = all_lo[order], all_hi[order], all_tol[order]
    seg_owner = point_owner[all_lo]

    traces: list[list[float]] | None = None
    if want_trace:
        traces = [[] for _ in range(n_traj)]
        if trace_own:
            own = np.concatenate(trace_own)
            val = np.concatenate(trace_val)
            for i, v in zip(own.tolist(), val.tolist()):
                traces[i].append(v)
    return offsets, all_lo, all_hi, all_tol, seg_owner, traces


def simplify_many(
    trajectories: Sequence[Trajectory],
    delta: float,
    method: Method = "dp",
    traces: list[list[float]] | None = None,
) -> list[SimplifiedTrajectory]:
    """Simplify every trajectory with global tolerance ``delta``.

    All chords at the same recursion depth, across all trajectories, are
    evaluated in one vectorised pass; the result equals running the
    divide-and-conquer on each trajectory alone.  If ``traces`` is given it
    receives one list per trajectory: the maximum deviation seen at every
    division step, and the deviations of all interior samples of every
    accepted chord, so each interior sample contributes exactly one value.
    """
    _check(delta, method)
    if not trajectories:
        if traces is not None:
            traces[:] = []
        return []
    offsets, all_lo, all_hi, all_tol, seg_owner, got = _divide(trajectories, delta, method, traces is not None)
    if traces is not None:
        traces[:] = got
    bounds = np.searchsorted(seg_owner, np.arange(len(trajectories) + 1)).tolist()
    lo_l, hi_l, tol_l = all_lo.tolist(), all_hi.tolist(), all_tol.tolist()
    xy = np.concatenate([o.xy for o in trajectories]).astype(np.float64, copy=False)
    ticks_all = np.concatenate([o.ticks for o in trajectories]).astype(np.float64)
    cols = SegmentArrays(xy[all_lo], xy[all_hi], ticks_all[all_lo], ticks_all[all_hi], all_tol)
    out = []
    for i, o in enumerate(trajectories):
        if len(o) == 1:
            p = o.point(0)
            t = int(o.ticks[0])
            seg = Segment(TimedSegment(p, p, t, t), o.obj_id, 0.0, 0, (0, 0))
            out.append(SimplifiedTrajectory(o.obj_id, (seg,), method, delta))
            continue
        base = int(offsets[i])
        rows = range(bounds[i], bounds[i + 1])
        # chords tile the trajectory, so the vertices are every lo plus the final hi
        verts = [lo_l[r] - base for r in rows] + [hi_l[rows[-1]] - base]
        pts = [Point2(x, y) for x, y in o.xy[verts].tolist()]
        ticks = o.ticks[verts].tolist()
        segments = []
        for idx, r in enumerate(rows):
            geom = TimedSegment(pts[idx], pts[idx + 1], ticks[idx], ticks[idx + 1])
            segments.append(Segment(geom, o.obj_id, tol_l[r], idx, (verts[idx], verts[idx + 1])))
        cut = slice(bounds[i], bounds[i + 1])
        arr = SegmentArrays(cols.p0[cut], cols.p1[cut], cols.t0[cut], cols.t1[cut], cols.tol[cut])
        out.append(SimplifiedTrajectory(o.obj_id, tuple(segments), method, delta, arr))
    return out


def simplify(
    o: Trajectory,
    delta: float,
    method: Method = "dp",
    trace: list[float] | None = None,
) -> SimplifiedTrajectory:
    """Simplify ``o`` with global tolerance ``delta``; see :func:`simplify_many`."""
    traces: list[list[float]] | None = [] if trace is not None else None
    (result,) = simplify_many([o], delta, method, traces)
    if trace is not None:
        trace.extend(traces[0])
    return result


def tolerance_traces(trajectories: Sequence[Trajectory]) -> list[list[float]]:
    """Per-trajectory traces of a zero-tolerance ``dp`` run, without building segments."""
    if not trajectories:
        return []
    return _divide(trajectories, 0.0, "dp", True)[5]


def dp(o: Trajectory, delta: float) -> SimplifiedTrajectory:
    return simplify(o, delta, "dp")


def dp_plus(o: Trajectory, delta: float) -> SimplifiedTrajectory:
    return simplify(o, delta, "dp+")


def dp_star(o: Trajectory, delta: float) -> SimplifiedTrajectory:
    return simplify(o, delta, "dp*")


def reduction_ratio(originals: list[Trajectory], simplified: list[SimplifiedTrajectory]) -> float:
    total = sum(len(o) for o in originals)
    if total == 0:
        return 0.0
    kept = sum(s.n_vertices for s in simplified)
    return (total - kept) / total
