"""Trajectory data model, CSV ingest/export, interpolation and time partitioning."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence, TextIO

import numpy as np

from .geometry import Point2

if TYPE_CHECKING:
    from .simplify import Segment, SegmentArrays, SimplifiedTrajectory

HEADER = ("obj", "t", "x", "y")


class DataError(ValueError):
    """Malformed input data; ``line`` is the 1-based source line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered samples of one object.

    ``ticks`` holds strictly increasing integer timestamps and ``xy`` the
    matching ``(n, 2)`` coordinates.  Both arrays are read-only.
    """

    obj_id: str
    ticks: np.ndarray
    xy: np.ndarray

    def __post_init__(self) -> None:
        ticks = np.asarray(self.ticks, dtype=np.int64).reshape(-1)
        xy = np.asarray(self.xy, dtype=np.float64).reshape(-1, 2)
        if len(ticks) == 0:
            raise ValueError(f"trajectory {self.obj_id!r} has no samples")
        if len(ticks) != len(xy):
            raise ValueError("ticks and xy lengths differ")
        if np.any(np.diff(ticks) <= 0):
            raise ValueError(f"trajectory {self.obj_id!r}: timestamps not strictly increasing")
        if not np.all(np.isfinite(xy)):
            raise ValueError(f"trajectory {self.obj_id!r}: non-finite coordinate")
        ticks.setflags(write=False)
        xy.setflags(write=False)
        object.__setattr__(self, "ticks", ticks)
        object.__setattr__(self, "xy", xy)

    @classmethod
    def from_points(cls, obj_id: str, points: Iterable[tuple[float, float, int]]) -> "Trajectory":
        pts = sorted(points, key=lambda p: p[2])
        return cls(obj_id, np.array([p[2] for p in pts]), np.array([(p[0], p[1]) for p in pts]))

    def __len__(self) -> int:
        return len(self.ticks)

    @property
    def tau(self) -> tuple[int, int]:
        return int(self.ticks[0]), int(self.ticks[-1])

    @property
    def duration(self) -> int:
        """Number of ticks covered by the lifetime, endpoints inclusive."""
        return int(self.ticks[-1] - self.ticks[0]) + 1

    def point(self, i: int) -> Point2:
        return Point2(float(self.xy[i, 0]), float(self.xy[i, 1]))

    def same_as(self, other: "Trajectory") -> bool:
        return (
            self.obj_id == other.obj_id
            and np.array_equal(self.ticks, other.ticks)
            and np.array_equal(self.xy, other.xy)
        )


def sample_at(o: Trajectory, t: int) -> Point2 | None:
    """Stored sample at ``t``, a linearly interpolated virtual point inside the
    lifetime, or ``None`` outside it."""
    ticks = o.ticks
    if t < ticks[0] or t > ticks[-1]:
        return None
    j = int(np.searchsorted(ticks, t))
    if ticks[j] == t:
        return o.point(j)
    t0, t1 = int(ticks[j - 1]), int(ticks[j])
    x0, y0 = float(o.xy[j - 1, 0]), float(o.xy[j - 1, 1])
    x1, y1 = float(o.xy[j, 0]), float(o.xy[j, 1])
    r = (t - t0) / (t1 - t0)
    return Point2(x0 + r * (x1 - x0), y0 + r * (y1 - y0))


def positions_over(o: Trajectory, first: int, last: int) -> np.ndarray:
    """Positions of ``o`` at every tick of ``[first, last]``; NaN outside its lifetime.

    Uses the same arithmetic as :func:`sample_at`, so both agree bit for bit.
    """
    ticks = np.arange(first, last + 1, dtype=np.int64)
    out = np.full((len(ticks), 2), np.nan)
    inside = (ticks >= o.ticks[0]) & (ticks <= o.ticks[-1])
    if not inside.any():
        return out
    q = ticks[inside]
    j = np.searchsorted(o.ticks, q)
    exact = o.ticks[np.minimum(j, len(o.ticks) - 1)] == q
    res = np.empty((len(q), 2))
    res[exact] = o.xy[j[exact]]
    if not exact.all():
        jj = j[~exact]
        t0 = o.ticks[jj - 1]
        t1 = o.ticks[jj]
        r = (q[~exact] - t0) / (t1 - t0)
        p0 = o.xy[jj - 1]
        p1 = o.xy[jj]
        res[~exact] = p0 + r[:, None] * (p1 - p0)
    out[inside] = res
    return out


@dataclass(frozen=True)
class TimeDomain:
    """Every integer tick from the earliest to the latest sample of a dataset."""

    first: int
    last: int

    @classmethod
    def of(cls, trajectories: Iterable[Trajectory]) -> "TimeDomain":
        lo, hi = math.inf, -math.inf
        for o in trajectories:
            a, b = o.tau
            lo, hi = min(lo, a), max(hi, b)
        if lo > hi:
            raise ValueError("empty trajectory set has no time domain")
        return cls(int(lo), int(hi))

    def __len__(self) -> int:
        return self.last - self.first + 1

    def __iter__(self):
        return iter(range(self.first, self.last + 1))


@dataclass(frozen=True)
class SegmentTable:
    """Column form of the segments of several objects, grouped by object in id order."""

    owners: list[str]
    # index into ``owners`` for every segment
    owner: np.ndarray
    arrays: "SegmentArrays"


@dataclass
class Partition:
    """Segments of every object whose interval meets ``[t_start, t_end]``.

    When built by :func:`partition_domain`, ``rows`` indexes this
    partition's segments in the shared ``table``, in the same order as
    ``polylines`` lists them.
    """

    index: int
    t_start: int
    t_end: int
    polylines: dict[str, list["Segment"]] = field(default_factory=dict)
    table: SegmentTable | None = field(default=None, repr=False, compare=False)
    rows: np.ndarray | None = field(default=None, repr=False, compare=False)


def partition_bounds(domain: TimeDomain, lam: int) -> list[tuple[int, int]]:
    """Closed partition intervals of ``lam`` ticks; neighbours share a boundary tick."""
    if lam < 2:
        raise ValueError("partition length must be at least 2")
    bounds = []
    start = domain.first
    while True:
        end = min(start + lam - 1, domain.last)
        bounds.append((start, end))
        if end >= domain.last:
            return bounds
        start = end


def partition_domain(
    simplified: Iterable["SimplifiedTrajectory"],
    lam: int,
    domain: TimeDomain | None = None,
) -> list[Partition]:
    simplified = list(simplified)
    if domain is None:
        if not simplified:
            raise ValueError("cannot infer a time domain from no trajectories")
        domain = TimeDomain(min(s.tau[0] for s in simplified), max(s.tau[1] for s in simplified))
    bounds = partition_bounds(domain, lam)
    ordered = sorted(simplified, key=lambda s: s.owner)
    if not ordered:
        return [Partition(z, a, b) for z, (a, b) in enumerate(bounds)]
    from .simplify import SegmentArrays

    cols = [s.arrays() for s in ordered]
    arrays = SegmentArrays(*(np.concatenate([getattr(c, f) for c in cols]) for f in ("p0", "p1", "t0", "t1", "tol")))
    counts = np.array([len(s.segments) for s in ordered])
    owner = np.repeat(np.arange(len(ordered)), counts)
    table = SegmentTable([s.owner for s in ordered], owner, arrays)
    flat = [seg for s in ordered for seg in s.segments]

    # partition z spans [first + z*stride, first + z*stride + lam - 1]
    stride = lam - 1
    last = len(bounds) - 1
    a = arrays.t0.astype(np.int64) - domain.first
    b = arrays.t1.astype(np.int64) - domain.first
    z_lo = np.maximum(0, -((stride - a) // stride))  # ceil((a - stride) / stride)
    z_hi = np.minimum(last, b // stride)
    span = np.maximum(z_hi - z_lo + 1, 0)
    seg = np.repeat(np.arange(len(a)), span)
    z = z_lo[seg] + (np.arange(len(seg)) - np.repeat(np.cumsum(span) - span, span))
    starts = np.array([p[0] for p in bounds]) - domain.first
    ends = np.array([p[1] for p in bounds]) - domain.first
    keep = (starts[z] <= b[seg]) & (a[seg] <= ends[z])
    seg, z = seg[keep], z[keep]
    order = np.argsort(z, kind="stable")
    seg, z = seg[order], z[order]
    cuts = np.searchsorted(z, np.arange(len(bounds) + 1))

    owner_of = [table.owners[k] for k in owner.tolist()]
    parts = []
    for zi, (t_start, t_end) in enumerate(bounds):
        rows = seg[cuts[zi]:cuts[zi + 1]]
        polylines: dict[str, list[Segment]] = {}
        for r in rows.tolist():
            polylines.setdefault(owner_of[r], []).append(flat[r])
        parts.append(Partition(zi, t_start, t_end, polylines, table, rows))
    return parts


# --------------------------------------------------------------------------
# CSV

def _parse_row(row: Sequence[str], line: int) -> tuple[str, int, float, float]:
    if len(row) != 4:
        raise DataError(f"expected 4 fields (obj,t,x,y), got {len(row)}", line)
    obj = row[0].strip()
    if not obj:
        raise DataError("empty object id", line)
    try:
        t = int(row[1])
    except ValueError:
        raise DataError(f"timestamp {row[1]!r} is not an integer", line) from None
    if t < 0:
        raise DataError(f"negative timestamp {t}", line)
    try:
        x, y = float(row[2]), float(row[3])
    except ValueError:
        raise DataError(f"coordinate is not a number: {row[2]!r}, {row[3]!r}", line) from None
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DataError("non-finite coordinate", line)
    return obj, t, x, y


def load_trajectories(source: TextIO) -> dict[str, Trajectory]:
    """Read ``obj,t,x,y`` rows (header optional) into trajectories keyed by id."""
    rows: dict[str, dict[int, tuple[float, float]]] = defaultdict(dict)
    reader = csv.reader(source)
    for line, row in enumerate(reader, start=1):
        if not row or all(not f.strip() for f in row):
            continue
        if line == 1 and tuple(f.strip().lower() for f in row) == HEADER:
            continue
        obj, t, x, y = _parse_row(row, line)
        if t in rows[obj]:
            raise DataError(f"duplicate timestamp {t} for object {obj!r}", line)
        rows[obj][t] = (x, y)
    out = {}
    for obj in sorted(rows):
        samples = rows[obj]
        ticks = sorted(samples)
        out[obj] = Trajectory(obj, np.array(ticks), np.array([samples[t] for t in ticks]))
    return out


def write_trajectories(trajectories: Iterable[Trajectory], sink: TextIO) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(HEADER)
    for o in sorted(trajectories, key=lambda o: o.obj_id):
        for t, (x, y) in zip(o.ticks.tolist(), o.xy.tolist()):
            w.writerow((o.obj_id, t, repr(x), repr(y)))


def as_mapping(trajectories: Iterable[Trajectory] | Mapping[str, Trajectory]) -> dict[str, Trajectory]:
    if isinstance(trajectories, Mapping):
        return dict(trajectories)
    out: dict[str, Trajectory] = {}
    for o in trajectories:
        if o.obj_id in out:
            raise ValueError(f"duplicate object id {o.obj_id!r}")
        out[o.obj_id] = o
    return out
