"""Density-based clustering of snapshot points and of partition polylines.

Clusters follow the set definition of density-based clustering: a cluster is
a connected component of core objects plus every object directly reachable
from one of those cores.  A border object reachable from two components
therefore belongs to both clusters.  This keeps the output independent of
processing order and makes every core's neighbourhood part of its cluster,
which the filter and refinement steps depend on.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geometry import (
    INF,
    Point2,
    dist_bb,
    dist_ss,
    dist_ss_batch,
    dist_star,
    dist_star_batch,
    mbb,
)
from .simplify import Segment
from .trajectory import Partition

# Slack added to every bound-based range test.  It only widens the search,
# so it can cost precision but never correctness.
BOUND_SLACK = 1e-9


class RangeSearchMode(enum.Enum):
    LL = "LL"
    STAR = "STAR"


@dataclass(frozen=True)
class Cluster:
    members: frozenset[str]
    context: int

    def __len__(self) -> int:
        return len(self.members)


def _components(adj: np.ndarray, m: int) -> list[np.ndarray]:
    """Index sets of density-based clusters for a boolean adjacency matrix
    whose diagonal is set."""
    n = len(adj)
    core = adj.sum(axis=1) >= m
    seen = np.zeros(n, dtype=bool)
    out = []
    for start in np.flatnonzero(core):
        if seen[start]:
            continue
        comp = np.zeros(n, dtype=bool)
        comp[start] = True
        frontier = comp.copy()
        while frontier.any():
            reach = adj[frontier].any(axis=0) & core & ~comp
            comp |= reach
            frontier = reach
        seen |= comp
        members = adj[comp].any(axis=0)
        out.append(np.flatnonzero(members))
    return out


def neighbour_matrix(xy: np.ndarray, e: float) -> np.ndarray:
    dx = xy[:, None, 0] - xy[None, :, 0]
    dy = xy[:, None, 1] - xy[None, :, 1]
    return np.sqrt(dx * dx + dy * dy) <= e


def dbscan_xy(xy: np.ndarray, e: float, m: int) -> list[np.ndarray]:
    """Clusters of the rows of ``xy`` as sorted index arrays, ordered by first index."""
    if len(xy) == 0:
        return []
    return _components(neighbour_matrix(xy, e), m)


MASK_BITS = 64


def dbscan_stack(xy: np.ndarray, e: float, m: int) -> np.ndarray:
    """:func:`dbscan_xy` for every slice of an ``(L, s, 2)`` stack at once.

    NaN rows stand for absent objects.  Returns an ``(L, s)`` array whose
    entry ``[t, r]`` is the bitmask of the cluster whose lowest core index is
    ``r`` (bit ``j`` set for member ``j``) and zero when no cluster is rooted
    there.  Components come from min-label propagation over core-core
    edges, so the work grows with ``s**2`` per slice; ``s`` is at most 64.
    """
    n_slices, s = xy.shape[:2]
    if s > MASK_BITS:
        raise ValueError(f"at most {MASK_BITS} objects per stack")
    dx = xy[:, :, None, 0] - xy[:, None, :, 0]
    dy = xy[:, :, None, 1] - xy[:, None, :, 1]
    with np.errstate(invalid="ignore"):
        adj = np.sqrt(dx * dx + dy * dy) <= e
    core = adj.sum(axis=2) >= m
    out = np.zeros((n_slices, s), dtype=np.uint64)
    busy = np.flatnonzero(core.any(axis=1))
    if not len(busy):
        return out
    adj, core = adj[busy], core[busy]
    cc = adj & core[:, :, None] & core[:, None, :]
    label = np.where(core, np.arange(s), s)
    while True:
        nxt = np.where(cc, label[:, None, :], s).min(axis=2)
        nxt = np.where(core, nxt, s)
        if np.array_equal(nxt, label):
            break
        label = nxt
    weights = np.left_shift(np.uint64(1), np.arange(s, dtype=np.uint64))
    reach = np.bitwise_or.reduce(np.where(adj, weights, np.uint64(0)), axis=2)
    rows, cols = np.nonzero(core)
    masks = np.zeros((len(busy), s), dtype=np.uint64)
    np.bitwise_or.at(masks, (rows, label[rows, cols]), reach[rows, cols])
    out[busy] = masks
    return out


def mask_members(mask: int) -> list[int]:
    """Bit positions set in ``mask``, ascending."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def dbscan_points(points: Mapping[str, Point2], e: float, m: int, context: int = 0) -> list[Cluster]:
    """Cluster a snapshot of object positions.

    ``NH_e(p)`` includes ``p`` itself, so ``m`` is compared against the full
    neighbourhood size.
    """
    if e <= 0:
        raise ValueError("neighbourhood range must be positive")
    if m < 1:
        raise ValueError("m must be at least 1")
    ids = sorted(points)
    xy = np.array([points[i] for i in ids], dtype=np.float64).reshape(-1, 2)
    return [Cluster(frozenset(ids[j] for j in comp), context) for comp in dbscan_xy(xy, e, m)]


# --------------------------------------------------------------------------
# segment-level range search

def _overlaps(a: Segment, b: Segment) -> bool:
    return a.geometry.t_start <= b.geometry.t_end and b.geometry.t_start <= a.geometry.t_end


def _pair_distance(a: Segment, b: Segment, mode: RangeSearchMode) -> float:
    if mode is RangeSearchMode.STAR:
        return dist_star(a.geometry, b.geometry)
    return dist_ss(a.geometry, b.geometry)


def _limit(e: float, *tolerances: float) -> float:
    return e + sum(tolerances) + BOUND_SLACK * (1.0 + e)


def neighborhood_polylines(
    q: Sequence[Segment],
    partition: Partition,
    e: float,
    mode: RangeSearchMode = RangeSearchMode.LL,
) -> set[str]:
    """Objects of ``partition`` that may come within ``e`` of ``q``'s owner.

    For each segment of ``q``: keep the time-overlapping segments of every
    other object, drop the whole group when its bounding box is too far,
    then test each remaining pair against the tolerance-expanded radius.
    The owner of ``q`` is always part of its own neighbourhood.
    """
    if not q:
        return set()
    owner = q[0].owner
    found = {owner}
    for other, polyline in partition.polylines.items():
        if other == owner:
            continue
        if _polyline_near(q, polyline, e, mode):
            found.add(other)
    return found


def _polyline_near(q: Sequence[Segment], polyline: Sequence[Segment], e: float, mode: RangeSearchMode) -> bool:
    for lq in q:
        group = [li for li in polyline if _overlaps(lq, li)]
        if not group:
            continue
        box_gap = dist_bb(mbb([lq.geometry]), mbb(li.geometry for li in group))
        if box_gap > _limit(e, lq.actual_tolerance, max(li.actual_tolerance for li in group)):
            continue
        for li in group:
            if _pair_distance(lq, li, mode) <= _limit(e, lq.actual_tolerance, li.actual_tolerance):
                return True
    return False


def omega(
    a: Sequence[Segment],
    b: Sequence[Segment],
    mode: RangeSearchMode = RangeSearchMode.LL,
) -> float:
    """Smallest tolerance-corrected distance over time-overlapping segment pairs.

    ``inf`` when no pair shares time.  A value above ``e`` rules out any
    common timestamp at which the original objects are within ``e``.
    """
    if not a or not b:
        raise ValueError("omega needs two non-empty polylines")
    best = INF
    for la in a:
        for lb in b:
            if _overlaps(la, lb):
                d = _pair_distance(la, lb, mode) - la.actual_tolerance - lb.actual_tolerance
                best = min(best, d)
    return best


def _partition_arrays(partition: Partition, ids: list[str]):
    if partition.table is not None and partition.rows is not None:
        rows = partition.rows
        arr = partition.table.arrays
        # rows run object by object in id order, so dense ranks match ``ids``
        _, local = np.unique(partition.table.owner[rows], return_inverse=True)
        return local.astype(np.int64), arr.p0[rows], arr.p1[rows], arr.t0[rows], arr.t1[rows], arr.tol[rows]
    owner, p0, p1, t0, t1, tol = [], [], [], [], [], []
    for k, oid in enumerate(ids):
        for s in partition.polylines[oid]:
            g = s.geometry
            owner.append(k)
            p0.append(g.start)
            p1.append(g.end)
            t0.append(g.t_start)
            t1.append(g.t_end)
            tol.append(s.actual_tolerance)
    return (
        np.array(owner, dtype=np.int64),
        np.array(p0, dtype=np.float64).reshape(-1, 2),
        np.array(p1, dtype=np.float64).reshape(-1, 2),
        np.array(t0, dtype=np.float64),
        np.array(t1, dtype=np.float64),
        np.array(tol, dtype=np.float64),
    )


def polyline_adjacency(
    partition: Partition,
    e: float,
    mode: RangeSearchMode = RangeSearchMode.LL,
    block: int = 512,
) -> tuple[list[str], np.ndarray]:
    """Object-level neighbour matrix of a partition, diagonal set.

    Equivalent to calling :func:`neighborhood_polylines` for every object,
    computed in bulk: object-box prune, then segment-box prune, then the
    exact per-pair test on survivors.
    """
    ids = sorted(partition.polylines)
    n_obj = len(ids)
    adj = np.eye(n_obj, dtype=bool)
    if n_obj < 2:
        return ids, adj
    owner, p0, p1, t0, t1, tol = _partition_arrays(partition, ids)
    lo = np.minimum(p0, p1)
    hi = np.maximum(p0, p1)
    slack = BOUND_SLACK * (1.0 + e)

    # object level: box of the whole polyline and its largest tolerance
    olo = np.full((n_obj, 2), np.inf)
    ohi = np.full((n_obj, 2), -np.inf)
    np.minimum.at(olo, owner, lo)
    np.maximum.at(ohi, owner, hi)
    otol = np.zeros(n_obj)
    np.maximum.at(otol, owner, tol)
    gx = np.maximum(0.0, np.maximum(olo[None, :, 0] - ohi[:, None, 0], olo[:, None, 0] - ohi[None, :, 0]))
    gy = np.maximum(0.0, np.maximum(olo[None, :, 1] - ohi[:, None, 1], olo[:, None, 1] - ohi[None, :, 1]))
    obj_ok = np.sqrt(gx * gx + gy * gy) <= e + otol[:, None] + otol[None, :] + slack

    # segment pairs of surviving object pairs; segments are grouped by owner
    counts = np.bincount(owner, minlength=n_obj)
    first = np.concatenate([[0], np.cumsum(counts)[:-1]])
    pa, pb = np.nonzero(np.triu(obj_ok, 1))
    sizes = counts[pa] * counts[pb]
    ends = np.cumsum(sizes)
    budget = block * block
    c1 = 0
    while c1 < len(pa):
        c0 = c1
        # one object pair at least, then as many as fit in the segment-pair budget
        done = ends[c0 - 1] if c0 else 0
        c1 = max(c0 + 1, int(np.searchsorted(ends, done + budget, side="right")))
        sz = sizes[c0:c1]
        pair_of = np.repeat(np.arange(c0, c1), sz)
        local = np.arange(int(sz.sum())) - np.repeat(np.cumsum(sz) - sz, sz)
        nb = counts[pb[pair_of]]
        ii = first[pa[pair_of]] + local // nb
        jj = first[pb[pair_of]] + local % nb
        keep = (t0[ii] <= t1[jj]) & (t0[jj] <= t1[ii])
        ii, jj = ii[keep], jj[keep]
        limit = e + tol[ii] + tol[jj] + slack
        bx = np.maximum(0.0, np.maximum(lo[jj, 0] - hi[ii, 0], lo[ii, 0] - hi[jj, 0]))
        by = np.maximum(0.0, np.maximum(lo[jj, 1] - hi[ii, 1], lo[ii, 1] - hi[jj, 1]))
        keep = np.sqrt(bx * bx + by * by) <= limit
        ii, jj, limit = ii[keep], jj[keep], limit[keep]
        if not len(ii):
            continue
        # skip object pairs already known to be adjacent
        fresh = ~adj[owner[ii], owner[jj]]
        ii, jj, limit = ii[fresh], jj[fresh], limit[fresh]
        if not len(ii):
            continue
        if mode is RangeSearchMode.STAR:
            d = dist_star_batch(p0[ii], p1[ii], t0[ii], t1[ii], p0[jj], p1[jj], t0[jj], t1[jj])
        else:
            d = dist_ss_batch(p0[ii], p1[ii], p0[jj], p1[jj])
        hit = d <= limit
        adj[owner[ii[hit]], owner[jj[hit]]] = True
        adj[owner[jj[hit]], owner[ii[hit]]] = True
    return ids, adj


def traj_dbscan(
    partition: Partition,
    e: float,
    m: int,
    mode: RangeSearchMode = RangeSearchMode.LL,
) -> list[Cluster]:
    """Density-based clustering where each object's polyline in the partition is one point."""
    ids, adj = polyline_adjacency(partition, e, mode)
    if len(ids) < m:
        return []
    return [Cluster(frozenset(ids[j] for j in comp), partition.index) for comp in _components(adj, m)]


def cluster_sets(clusters: Iterable[Cluster]) -> set[frozenset[str]]:
    return {c.members for c in clusters}
