"""Convoy discovery: CMC, the CuTS family (filter + refinement), MC2 and a brute-force oracle.

A convoy is reported as ``(members, [start, end])`` and result sets are kept
in a canonical form: every reported pair is valid (the members sit inside one
snapshot cluster at every tick of the interval) and no reported pair is
dominated by another valid pair with a superset of members and a superset
interval.  All algorithms here produce that same canonical set, so their
outputs can be compared with plain set equality.
"""
from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Literal, Mapping, Sequence

import numpy as np

from .autoparam import compute_delta, compute_lambda
from .clustering import RangeSearchMode, dbscan_stack, dbscan_xy, mask_members, traj_dbscan
from .metrics import RunStats, refinement_unit
from .simplify import Method, SimplifiedTrajectory, reduction_ratio, simplify_many
from .trajectory import (
    TimeDomain,
    Trajectory,
    as_mapping,
    partition_domain,
    positions_over,
    sample_at,
)

Variant = Literal["cmc", "cuts", "cuts+", "cuts*"]


@dataclass(frozen=True)
class QueryParams:
    m: int
    k: int
    e: float

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not self.e > 0:
            raise ValueError("e must be positive")


@dataclass(frozen=True)
class Convoy:
    members: frozenset[str]
    start: int
    end: int

    @property
    def lifetime(self) -> int:
        return self.end - self.start + 1

    def sort_key(self) -> tuple:
        ids = sorted(self.members)
        return (self.start, ids[0], ids, self.end)

    def format(self) -> str:
        return f"{','.join(sorted(self.members))} {self.start} {self.end}"


@dataclass(frozen=True)
class Candidate:
    members: frozenset[str]
    start: int
    end: int
    lifetime: int
    # (first tick, last tick, objects) spans the refinement clusters over; None means all objects
    support: tuple[tuple[int, int, frozenset[str]], ...] | None = field(default=None, compare=False)

    def as_convoy(self) -> Convoy:
        return Convoy(self.members, self.start, self.end)


@dataclass(frozen=True)
class VariantConfig:
    simplifier: Method
    mode: RangeSearchMode
    delta: float
    lam: int

    def __post_init__(self) -> None:
        expected = RangeSearchMode.STAR if self.simplifier == "dp*" else RangeSearchMode.LL
        if self.mode is not expected:
            raise ValueError(f"{self.simplifier} segments must be searched in {expected.value} mode")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.lam < 2:
            raise ValueError("lambda must be at least 2")


VARIANT_PARTS: dict[str, tuple[Method, RangeSearchMode]] = {
    "cuts": ("dp", RangeSearchMode.LL),
    "cuts+": ("dp+", RangeSearchMode.LL),
    "cuts*": ("dp*", RangeSearchMode.STAR),
}


def variant_config(variant: str, delta: float, lam: int) -> VariantConfig:
    simplifier, mode = VARIANT_PARTS[variant]
    return VariantConfig(simplifier, mode, delta, lam)


# --------------------------------------------------------------------------
# canonical result sets

def _dominates(a: Convoy | Candidate, b: Convoy | Candidate) -> bool:
    return a.members >= b.members and a.start <= b.start and a.end >= b.end


def normalize(items: Iterable[Convoy]) -> list[Convoy]:
    """Drop duplicates and any convoy dominated by another; sorted output."""
    uniq = sorted(set(items), key=lambda c: (-len(c.members), -(c.end - c.start)))
    return sorted(_undominated(uniq), key=Convoy.sort_key)


def _undominated(ordered: Sequence) -> list:
    """Items no earlier item dominates; ``ordered`` runs from most members and longest interval down."""
    kept = []
    # a dominator holds every member, so checking holders of the rarest one suffices
    holders: dict[str, list] = {}
    for c in ordered:
        rare = min(c.members, key=lambda x: len(holders.get(x, ())))
        if not any(_dominates(o, c) for o in holders.get(rare, ())):
            kept.append(c)
            for x in c.members:
                holders.setdefault(x, []).append(c)
    return kept


# --------------------------------------------------------------------------
# candidate chaining shared by CMC, the filter and the refinement

@dataclass(frozen=True)
class Chain:
    members: frozenset[str]
    first: int
    last: int
    lifetime: int


class Chainer:
    """Joins per-step clusters into chains of intersections.

    Each step (a tick for CMC, a partition for the filter) receives that
    step's clusters.  Every chain is intersected with every cluster; results
    with at least ``m`` members continue, keeping the earliest start when
    two chains reach the same member set.  Every cluster also opens a chain
    of its own.  A chain is emitted when it does not continue unchanged
    and its lifetime has reached ``k``.
    """

    def __init__(self, m: int, k: int):
        self.m = m
        self.k = k
        self.chains: list[Chain] = []
        self._last_key: frozenset[frozenset[str]] | None = None
        self._last_index = 0
        self._stable = False

    def step(self, clusters: Sequence[frozenset[str]], index: int, inc: int = 1) -> list[Chain]:
        nxt: dict[frozenset[str], Chain] = {}

        def add(ch: Chain) -> None:
            old = nxt.get(ch.members)
            if old is None or ch.first < old.first:
                nxt[ch.members] = ch

        emitted = []
        for v in self.chains:
            unchanged = False
            for c in clusters:
                common = v.members & c
                if len(common) >= self.m:
                    add(Chain(common, v.first, index, v.lifetime + inc))
                    unchanged = unchanged or len(common) == len(v.members)
            if not unchanged and v.lifetime >= self.k:
                emitted.append(v)
        for c in clusters:
            if len(c) >= self.m:
                add(Chain(c, index, index, inc))
        self.chains = sorted(nxt.values(), key=lambda ch: (ch.first, sorted(ch.members)))
        return emitted

    def run(self, clusters: Sequence[frozenset[str]], first: int, last: int) -> list[Chain]:
        """Feed the same clusters at every tick of ``[first, last]``.

        Once a step leaves the chains (members and starts) as they were,
        every chain lies inside one of these clusters and later steps only
        extend them; the rest of the run is done in one go.  Unless two
        clusters share ``m`` members that happens right after the first
        step.  A call continuing the previous one with equal clusters picks
        up where it stopped.
        """
        key = frozenset(clusters)
        stable = self._stable and key == self._last_key and first == self._last_index + 1
        emitted = []
        if not stable:
            shared = any(len(a & b) >= self.m for a, b in itertools.combinations(clusters, 2))
            while first <= last and not stable:
                before = [(ch.members, ch.first) for ch in self.chains]
                emitted += self.step(clusters, first)
                first += 1
                stable = not shared or before == [(ch.members, ch.first) for ch in self.chains]
        if last >= first:
            n = last - first + 1
            self.chains = [Chain(ch.members, ch.first, last, ch.lifetime + n) for ch in self.chains]
        self._last_key, self._last_index, self._stable = key, last, stable
        return emitted

    def flush(self) -> list[Chain]:
        out = [v for v in self.chains if v.lifetime >= self.k]
        self.chains = []
        return out


# --------------------------------------------------------------------------
# snapshot positions

# pools up to this size are clustered a whole block of ticks at a time
STACK_POOL = 32
STACK_CELLS = 1 << 20
BLOCK_TICKS = 256


class PositionTable:
    """Per-object positions at every tick of the domain, computed on first use."""

    def __init__(self, trajectories: Mapping[str, Trajectory], domain: TimeDomain | None = None):
        self.trajectories = trajectories
        self.domain = domain or TimeDomain.of(trajectories.values())
        self._cache: dict[str, np.ndarray] = {}

    def of(self, obj_id: str) -> np.ndarray:
        arr = self._cache.get(obj_id)
        if arr is None:
            arr = positions_over(self.trajectories[obj_id], self.domain.first, self.domain.last)
            self._cache[obj_id] = arr
        return arr

    def snapshot(self, t: int, ids: Iterable[str]) -> tuple[list[str], np.ndarray]:
        """Ids alive at ``t`` (in the given order) and their positions."""
        row = t - self.domain.first
        alive, xy = [], []
        for oid in ids:
            o = self.trajectories[oid]
            if o.ticks[0] <= t <= o.ticks[-1]:
                alive.append(oid)
                xy.append(self.of(oid)[row])
        return alive, np.array(xy, dtype=np.float64).reshape(-1, 2)

    def clusters_at(self, t: int, ids: Iterable[str], e: float, m: int) -> list[frozenset[str]]:
        alive, xy = self.snapshot(t, ids)
        if len(alive) < m:
            return []
        return [frozenset(alive[j] for j in comp) for comp in dbscan_xy(xy, e, m)]

    def cluster_runs(
        self, ids: Sequence[str], first: int, last: int, e: float, m: int
    ) -> Iterator[tuple[int, int, list[frozenset[str]]]]:
        """Maximal runs ``(t0, t1, clusters)`` of ticks in ``[first, last]`` whose
        snapshot clusters over ``ids`` are the same.

        Positions are gathered a block of ticks at a time.  Small pools are
        clustered for the whole block in one pass; larger ones tick by tick.
        Runs may be split at block edges.
        """
        ids = list(ids)
        s = len(ids)
        first = max(first, self.domain.first)
        last = min(last, self.domain.last)
        if first > last:
            return
        if s < m:
            yield first, last, []
            return
        rows_per_block = max(1, min(STACK_CELLS // (s * s), BLOCK_TICKS))
        for b0 in range(first, last + 1, rows_per_block):
            b1 = min(b0 + rows_per_block - 1, last)
            r0, r1 = b0 - self.domain.first, b1 - self.domain.first + 1
            block = np.stack([self.of(oid)[r0:r1] for oid in ids], axis=1)
            if s <= STACK_POOL:
                masks = dbscan_stack(block, e, m)
                change = np.flatnonzero((masks[1:] != masks[:-1]).any(axis=1)) + 1
                starts = [0, *change.tolist()]
                ends = [*(change - 1).tolist(), len(masks) - 1]
                for a, b in zip(starts, ends):
                    clusters = [
                        frozenset(ids[j] for j in mask_members(int(mk))) for mk in masks[a].tolist() if mk
                    ]
                    yield b0 + a, b0 + b, clusters
                continue
            alive_mask = ~np.isnan(block[:, :, 0])
            counts = alive_mask.sum(axis=1)
            for i in range(len(block)):
                if counts[i] < m:
                    yield b0 + i, b0 + i, []
                    continue
                alive = np.flatnonzero(alive_mask[i])
                comps = dbscan_xy(block[i, alive], e, m)
                yield b0 + i, b0 + i, [frozenset(ids[j] for j in alive[comp].tolist()) for comp in comps]

    def iter_clusters(
        self, ids: Sequence[str], first: int, last: int, e: float, m: int
    ) -> Iterator[tuple[int, list[frozenset[str]]]]:
        """``(t, clusters)`` for every tick of ``[first, last]``."""
        for t0, t1, clusters in self.cluster_runs(ids, first, last, e, m):
            for t in range(t0, t1 + 1):
                yield t, clusters


# --------------------------------------------------------------------------
# CMC

StepHook = Callable[[int, list[frozenset[str]], list[Chain]], None]


def cmc(
    trajectories: Iterable[Trajectory] | Mapping[str, Trajectory],
    q: QueryParams,
    window: tuple[int, int] | None = None,
    on_step: StepHook | None = None,
    positions: PositionTable | None = None,
) -> list[Convoy]:
    """Coherent moving cluster discovery over every tick of the time domain.

    Missing samples inside an object's lifetime are filled by linear
    interpolation.  ``window`` restricts processing to ``[start, end]``;
    ``on_step`` is called after each tick with the tick, its clusters and the
    live chains (used to trace the algorithm).
    """
    objs = as_mapping(trajectories)
    if not objs:
        return []
    table = positions or PositionTable(objs)
    ids = sorted(objs)
    first, last = window or (table.domain.first, table.domain.last)
    chainer = Chainer(q.m, q.k)
    found: list[Chain] = []
    for t0, t1, clusters in table.cluster_runs(ids, first, last, q.e, q.m):
        if on_step is None:
            found += chainer.run(clusters, t0, t1)
            continue
        for t in range(t0, t1 + 1):
            found += chainer.step(clusters, t)
            on_step(t, clusters, list(chainer.chains))
    found += chainer.flush()
    return normalize(Convoy(ch.members, ch.first, ch.last) for ch in found)


# --------------------------------------------------------------------------
# CuTS filter

@dataclass
class FilterResult:
    candidates: list[Candidate]
    simplified: list[SimplifiedTrajectory]
    config: VariantConfig
    partition_bounds: list[tuple[int, int]]
    partition_clusters: list[list[frozenset[str]]]
    simplify_ms: float = 0.0
    filter_ms: float = 0.0


def simplify_all(
    objs: Mapping[str, Trajectory], delta: float, method: Method, threads: int = 1
) -> list[SimplifiedTrajectory]:
    ordered = [objs[k] for k in sorted(objs)]
    if threads > 1 and len(ordered) > 1:
        chunks = [ordered[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda c: simplify_many(c, delta, method), chunks))
        by_id = {s.owner: s for part in parts for s in part}
        return [by_id[o.obj_id] for o in ordered]
    return simplify_many(ordered, delta, method)


def _prune_dominated(cands: Iterable[Candidate]) -> list[Candidate]:
    uniq: dict[tuple, Candidate] = {}
    for c in cands:
        key = (c.members, c.start, c.end)
        old = uniq.get(key)
        if old is None or c.lifetime > old.lifetime:
            uniq[key] = c
    ordered = sorted(uniq.values(), key=lambda c: (-len(c.members), -(c.end - c.start)))
    return sorted(_undominated(ordered), key=lambda c: (c.start, sorted(c.members), c.end))


def cuts_filter(
    trajectories: Iterable[Trajectory] | Mapping[str, Trajectory],
    q: QueryParams,
    cfg: VariantConfig,
    simplified: list[SimplifiedTrajectory] | None = None,
    threads: int = 1,
) -> FilterResult:
    """Candidate convoys from clustering simplified polylines per time partition.

    Each candidate's member set is a superset of, and its interval covers,
    every true convoy it stands for.  Candidates dominated by another
    candidate are dropped since their refinement adds nothing.
    """
    objs = as_mapping(trajectories)
    t0 = time.perf_counter()
    if simplified is None:
        simplified = simplify_all(objs, cfg.delta, cfg.simplifier, threads)
    t1 = time.perf_counter()
    domain = TimeDomain.of(objs.values())
    parts = partition_domain(simplified, cfg.lam, domain)
    chainer = Chainer(q.m, q.k)
    history: list[list[frozenset[str]]] = []
    emitted: list[Chain] = []
    for part in parts:
        clusters = [c.members for c in traj_dbscan(part, q.e, q.m, cfg.mode)] if len(part.polylines) >= q.m else []
        history.append(clusters)
        emitted += chainer.step(clusters, part.index, cfg.lam)
    emitted += chainer.flush()

    # dominated candidates add nothing to refinement; the pools of a
    # dominating candidate cover every cluster the dominated one relied on
    kept = _prune_dominated(
        Candidate(ch.members, parts[ch.first].t_start, parts[ch.last].t_end, ch.lifetime) for ch in emitted
    )
    ids = sorted(objs)
    bit = {oid: 1 << i for i, oid in enumerate(ids)}

    def mask(members: Iterable[str]) -> int:
        return sum(bit[x] for x in members)

    history_masks = [[mask(c) for c in clusters] for clusters in history]
    first_part = {p.t_start: p.index for p in parts}
    last_part = {p.t_end: p.index for p in parts}
    as_set: dict[int, frozenset[str]] = {}
    cands = []
    for c in kept:
        # a snapshot cluster holding m members at a tick of partition z lies
        # inside one of z's clusters that shares m members with the candidate
        members = mask(c.members)
        spans: list[list] = []
        for z in range(first_part[c.start], last_part[c.end] + 1):
            pool = 0
            for cm in history_masks[z]:
                if (cm & members).bit_count() >= q.m:
                    pool |= cm
            if spans and spans[-1][2] == pool:
                spans[-1][1] = parts[z].t_end
            else:
                spans.append([parts[z].t_start, parts[z].t_end, pool])
        support = []
        for a, b, pool in spans:
            if pool not in as_set:
                as_set[pool] = frozenset(ids[i] for i in range(pool.bit_length()) if pool >> i & 1)
            support.append((a, b, as_set[pool]))
        cands.append(replace(c, support=tuple(support)))
    t2 = time.perf_counter()
    return FilterResult(
        cands,
        simplified,
        cfg,
        [(p.t_start, p.t_end) for p in parts],
        history,
        simplify_ms=(t1 - t0) * 1e3,
        filter_ms=(t2 - t1) * 1e3,
    )


# --------------------------------------------------------------------------
# CuTS refinement

def _refine_segments(
    cands: Sequence[Candidate], table: PositionTable
) -> list[tuple[int, int, frozenset[str], frozenset[str]]]:
    """Split the ticks covered by candidates into maximal segments over which
    the set of active candidate spans does not change.

    Each segment carries the union of the active pools and of the active
    candidates' members; ticks no candidate covers are left out.
    """
    everyone = frozenset(table.trajectories)
    pieces = []
    for c in cands:
        for first, last, pool in c.support if c.support is not None else ((c.start, c.end, everyone),):
            first = max(first, c.start, table.domain.first)
            last = min(last, c.end, table.domain.last)
            if first <= last:
                pieces.append((first, last, pool, c.members))
    events: dict[int, tuple[list[int], list[int]]] = {}
    for i, (first, last, _, _) in enumerate(pieces):
        events.setdefault(first, ([], []))[0].append(i)
        events.setdefault(last + 1, ([], []))[1].append(i)
    out: list[tuple[int, int, frozenset[str], frozenset[str]]] = []
    active: set[int] = set()
    ticks = sorted(events)
    for here, nxt in zip(ticks, ticks[1:]):
        opened, closed = events[here]
        active.difference_update(closed)
        active.update(opened)
        if not active:
            continue
        pool = frozenset().union(*(pieces[i][2] for i in active))
        members = frozenset().union(*(pieces[i][3] for i in active))
        if out and out[-1][1] == here - 1 and out[-1][2] == pool and out[-1][3] == members:
            out[-1] = (out[-1][0], nxt - 1, pool, members)
        else:
            out.append((here, nxt - 1, pool, members))
    return out


def cuts_refine(
    candidates: Iterable[Candidate],
    trajectories: Iterable[Trajectory] | Mapping[str, Trajectory],
    q: QueryParams,
    threads: int = 1,
    positions: PositionTable | None = None,
) -> list[Convoy]:
    """Verify candidates against the original trajectories.

    All candidates are verified in one CMC pass over the ticks they cover.
    At each tick, snapshot clusters are computed on the union of the support
    objects of the active candidates' partitions and restricted to the union
    of their members.  Every cluster over such a pool lies inside a true
    snapshot cluster, and the true cluster holding a convoy lies inside the
    pool of the candidate covering it, so chaining the restricted clusters
    and normalising gives the exact convoy set.  Each tick is clustered once
    however many candidates overlap it.
    """
    objs = as_mapping(trajectories)
    cands = list(candidates)
    if not objs or not cands:
        return []
    table = positions or PositionTable(objs)
    segments = _refine_segments(cands, table)

    def runs(seg):
        first, last, pool, _ = seg
        return list(table.cluster_runs(sorted(pool), first, last, q.e, q.m))

    if threads > 1:
        # warm per-object positions so worker threads only read the cache
        for oid in objs:
            table.of(oid)
        with ThreadPoolExecutor(threads) as ex:
            per_segment: Iterable = ex.map(runs, segments)
    else:
        per_segment = (table.cluster_runs(sorted(p), a, b, q.e, q.m) for a, b, p, _ in segments)

    chainer = Chainer(q.m, q.k)
    found: list[Chain] = []
    prev_last = None
    for (first, _, _, members), seg_runs in zip(segments, per_segment):
        if prev_last is not None and first > prev_last + 1:
            # uncovered ticks hold no convoy, so they break every chain
            found += chainer.run([], prev_last + 1, first - 1)
        for t0, t1, clusters in seg_runs:
            restricted = []
            for c in clusters:
                common = c & members
                if len(common) >= q.m:
                    restricted.append(common)
            found += chainer.run(restricted, t0, t1)
            prev_last = t1
    found += chainer.flush()
    return normalize(Convoy(ch.members, ch.first, ch.last) for ch in found)


# --------------------------------------------------------------------------
# pipeline

def discover(
    trajectories: Iterable[Trajectory] | Mapping[str, Trajectory],
    q: QueryParams,
    variant: Variant = "cuts*",
    delta: float | None = None,
    lam: int | None = None,
    threads: int = 1,
    on_candidates: Callable[[list[Candidate]], None] | None = None,
) -> tuple[list[Convoy], RunStats]:
    """Run one algorithm end to end and collect its statistics.

    CuTS variants choose ``delta`` and ``lam`` automatically when they are
    not given; ``cmc`` ignores both.  ``on_candidates`` receives the filter
    output before refinement.
    """
    objs = as_mapping(trajectories)
    stats = RunStats(algo=variant, m=q.m, k=q.k, e=q.e)
    start = time.perf_counter()
    if not objs:
        return [], stats
    if variant == "cmc":
        convoys = cmc(objs, q)
        stats.refine_ms = (time.perf_counter() - start) * 1e3
    elif variant in VARIANT_PARTS:
        method, mode = VARIANT_PARTS[variant]
        t0 = time.perf_counter()
        if delta is None:
            choice = compute_delta(objs.values(), q.e)
            delta, stats.delta_fallback = choice.delta, choice.fallback
        simplified = simplify_all(objs, delta, method, threads)
        domain = TimeDomain.of(objs.values())
        if lam is None:
            lam = compute_lambda(objs.values(), simplified, len(domain))
        stats.simplify_ms = (time.perf_counter() - t0) * 1e3
        cfg = VariantConfig(method, mode, delta, lam)
        filt = cuts_filter(objs, q, cfg, simplified=simplified)
        stats.filter_ms = filt.filter_ms
        if on_candidates is not None:
            on_candidates(list(filt.candidates))
        t1 = time.perf_counter()
        convoys = cuts_refine(filt.candidates, objs, q, threads=threads)
        stats.refine_ms = (time.perf_counter() - t1) * 1e3
        stats.delta, stats.lam = delta, lam
        stats.candidates = len(filt.candidates)
        stats.refinement_units = refinement_unit(filt.candidates)
        stats.reduction_ratio = reduction_ratio([objs[k] for k in sorted(objs)], simplified)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    stats.total_ms = (time.perf_counter() - start) * 1e3
    stats.convoys = len(convoys)
    return convoys, stats


# --------------------------------------------------------------------------
# baselines and oracles

def mc2(
    trajectories: Iterable[Trajectory] | Mapping[str, Trajectory],
    theta: float,
    e: float,
    m: int,
) -> list[Candidate]:
    """Moving clusters: chains of snapshot clusters whose consecutive Jaccard overlap is at least ``theta``.

    There is no lifetime constraint and members are never intersected; a
    chain is reported as the union of its clusters over its ticks.  Chains
    must span at least two consecutive ticks.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    objs = as_mapping(trajectories)
    if not objs:
        return []
    table = PositionTable(objs)
    ids = sorted(objs)
    # live chains: (last cluster, union of members, start tick)
    live: list[tuple[frozenset[str], frozenset[str], int]] = []
    out: set[Candidate] = set()

    def close(chain, end: int) -> None:
        _, union, start = chain
        if end > start:
            out.add(Candidate(union, start, end, end - start + 1))

    for t, clusters in table.iter_clusters(ids, table.domain.first, table.domain.last, e, m):
        nxt = []
        extended = [False] * len(clusters)
        for chain in live:
            last, union, start = chain
            grown = False
            for i, c in enumerate(clusters):
                if len(last & c) / len(last | c) >= theta:
                    nxt.append((c, union | c, start))
                    extended[i] = grown = True
            if not grown:
                close(chain, t - 1)
        for i, c in enumerate(clusters):
            if not extended[i]:
                nxt.append((c, c, t))
        live = list(dict.fromkeys(nxt))
    for chain in live:
        close(chain, table.domain.last)
    return sorted(out, key=lambda c: (c.start, sorted(c.members), c.end))


BRUTE_FORCE_MAX_OBJECTS = 30
BRUTE_FORCE_MAX_TICKS = 150


def brute_force(
    trajectories: Iterable[Trajectory] | Mapping[str, Trajectory],
    q: QueryParams,
) -> list[Convoy]:
    """Enumerate convoys directly from per-tick snapshot clusters.

    For every start tick, intersect one cluster per tick for as long as at
    least ``m`` objects remain, record every member set whose interval
    cannot be extended on either side, and normalise.  Desk scale only.
    """
    objs = as_mapping(trajectories)
    if not objs:
        return []
    domain = TimeDomain.of(objs.values())
    if len(objs) > BRUTE_FORCE_MAX_OBJECTS or len(domain) > BRUTE_FORCE_MAX_TICKS:
        raise ValueError(
            f"brute force limited to {BRUTE_FORCE_MAX_OBJECTS} objects and {BRUTE_FORCE_MAX_TICKS} ticks"
        )
    ids = sorted(objs)
    clusters: dict[int, list[frozenset[str]]] = {}
    for t in domain:
        pts = {}
        for oid in ids:
            p = sample_at(objs[oid], t)
            if p is not None:
                pts[oid] = p
        if len(pts) < q.m:
            clusters[t] = []
            continue
        names = sorted(pts)
        xy = np.array([pts[n] for n in names])
        clusters[t] = [frozenset(names[j] for j in comp) for comp in dbscan_xy(xy, q.e, q.m)]

    def inside(members: frozenset[str], t: int) -> bool:
        return any(members <= c for c in clusters.get(t, ()))

    found = set()
    for s in domain:
        sets = {c for c in clusters[s] if len(c) >= q.m}
        t = s
        while sets:
            if t - s + 1 >= q.k:
                for x in sets:
                    if not inside(x, s - 1) and not inside(x, t + 1):
                        found.add(Convoy(x, s, t))
            t += 1
            if t > domain.last:
                break
            sets = {x & c for x in sets for c in clusters[t] if len(x & c) >= q.m}
    return normalize(found)


def accuracy_report(reference: Iterable[Convoy], trial: Iterable[Convoy | Candidate]) -> tuple[float, float]:
    """False-positive and false-negative percentages of ``trial`` against ``reference``.

    Items match when their member sets and intervals are identical.  A
    percentage with an empty denominator set is reported as 0.
    """
    ref = {Convoy(c.members, c.start, c.end) for c in reference}
    got = {Convoy(c.members, c.start, c.end) for c in trial}
    fp = 100.0 * len(got - ref) / len(got) if got else 0.0
    fn = 100.0 * len(ref - got) / len(ref) if ref else 0.0
    return fp, fn


def verify_convoy(
    convoy: Convoy, trajectories: Mapping[str, Trajectory], q: QueryParams
) -> bool:
    """True when the members share one snapshot cluster at every tick of the interval."""
    table = PositionTable(trajectories)
    ids = sorted(trajectories)
    return all(
        any(convoy.members <= c for c in table.clusters_at(t, ids, q.e, q.m))
        for t in range(convoy.start, convoy.end + 1)
    )
