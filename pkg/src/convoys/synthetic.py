"""Seeded synthetic trajectory scenes with planted convoys."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convoy import Convoy
from .trajectory import Trajectory


@dataclass(frozen=True)
class PlantedConvoy:
    size: int
    start: int
    end: int
    # per-sample positional noise as a fraction of ``e``
    jitter: float = 0.05


@dataclass(frozen=True)
class SyntheticSpec:
    n_objects: int
    n_ticks: int
    e: float = 10.0
    convoys: tuple[PlantedConvoy, ...] = ()
    # side of the square area, in multiples of e
    area: float = 20.0
    # random-walk step scale, in multiples of e
    step: float = 0.3
    missing_prob: float = 0.0
    # noise objects get random sub-lifetimes instead of spanning the domain
    irregular: bool = False
    # number of shared routes; noise objects follow one of them at their own pace
    routes: int = 0
    # noise objects hover around grid anchors 3e apart, never within e of each other
    dispersed: bool = False
    first_tick: int = 0

    def check(self) -> None:
        if self.n_objects < 1 or self.n_ticks < 1:
            raise ValueError("need at least one object and one tick")
        if sum(c.size for c in self.convoys) > self.n_objects:
            raise ValueError("planted convoys need more objects than the scene has")
        for c in self.convoys:
            if c.size < 1:
                raise ValueError("planted convoy must have members")
            if not 0 <= c.start <= c.end < self.n_ticks:
                raise ValueError(f"planted interval [{c.start}, {c.end}] outside 0..{self.n_ticks - 1}")
        if not 0 <= self.missing_prob < 1:
            raise ValueError("missing-sample probability must lie in [0, 1)")


@dataclass
class Scene:
    trajectories: list[Trajectory]
    planted: list[Convoy] = field(default_factory=list)


def _walk(
    rng: np.random.Generator, start: np.ndarray, n: int, step: float, side: float, max_step: float = np.inf
) -> np.ndarray:
    out = np.empty((n, 2))
    p = start.astype(float).copy()
    for i in range(n):
        out[i] = p
        d = rng.normal(0.0, step, 2)
        norm = float(np.sqrt(d @ d))
        if norm > max_step:
            d *= max_step / norm
        p = p + d
        # reflect at the area border
        p = np.where(p < 0, -p, p)
        p = np.where(p > side, 2 * side - p, p)
    return out


def _route_path(rng: np.random.Generator, side: float, n_points: int = 6) -> np.ndarray:
    return rng.uniform(0.1 * side, 0.9 * side, size=(n_points, 2))


def _along_route(route: np.ndarray, s: np.ndarray) -> np.ndarray:
    seg = np.diff(route, axis=0)
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    s = np.mod(s, cum[-1])
    j = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    r = (s - cum[j]) / lengths[j]
    return route[j] + r[:, None] * seg[j]


def generate(spec: SyntheticSpec, seed: int) -> Scene:
    """Build a reproducible scene; planted convoys are returned alongside.

    Members of a planted convoy follow a common leader with fixed offsets
    inside a disc of radius ``e/4`` and a leader step of at most ``e/8`` per
    tick, so they stay pairwise within ``e`` even where a missing sample is
    replaced by interpolation.  Outside the planted interval they walk
    freely.
    """
    spec.check()
    rng = np.random.default_rng(seed)
    e = spec.e
    side = spec.area * e
    T = spec.n_ticks
    width = len(str(spec.n_objects - 1))
    ids = [f"o{i:0{width}d}" for i in range(spec.n_objects)]
    positions: dict[int, np.ndarray] = {}
    lifetimes: dict[int, tuple[int, int]] = {}
    planted: list[Convoy] = []
    # planted members never lose a sample inside their convoy interval
    protected: dict[int, tuple[int, int]] = {}

    routes = [_route_path(rng, side) for _ in range(spec.routes)]
    nxt = 0
    for pc in spec.convoys:
        members = list(range(nxt, nxt + pc.size))
        nxt += pc.size
        span = pc.end - pc.start + 1
        leader = _walk(
            rng, rng.uniform(0.2 * side, 0.8 * side, 2), span, min(spec.step * e, e / 8) / 2, side, e / 8
        )
        ang = rng.uniform(0, 2 * np.pi, pc.size)
        rad = (e / 4) * np.sqrt(rng.uniform(0, 1, pc.size))
        offsets = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
        for idx, off in zip(members, offsets):
            inside = leader + off + rng.uniform(-1, 1, (span, 2)) * pc.jitter * e / 2
            before = _walk(rng, inside[0], pc.start + 1, spec.step * e, side)[::-1][:-1]
            after = _walk(rng, inside[-1], T - pc.end, spec.step * e, side)[1:]
            positions[idx] = np.concatenate([before, inside, after])
            if spec.irregular:
                a = int(rng.integers(0, pc.start + 1))
                b = int(rng.integers(pc.end, T))
            else:
                a, b = 0, T - 1
            lifetimes[idx] = (a, b)
            protected[idx] = (pc.start, pc.end)
        planted.append(
            Convoy(frozenset(ids[i] for i in members), pc.start + spec.first_tick, pc.end + spec.first_tick)
        )

    cols = max(1, int(np.ceil(np.sqrt(spec.n_objects - nxt))))
    for idx in range(nxt, spec.n_objects):
        if spec.dispersed:
            slot = idx - nxt
            anchor = np.array([slot % cols, slot // cols], dtype=float) * 3 * e
            ang = rng.uniform(0, 2 * np.pi, T)
            rad = (e / 2) * np.sqrt(rng.uniform(0, 1, T))
            positions[idx] = anchor + np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
        elif routes:
            route = routes[int(rng.integers(len(routes)))]
            speed = rng.uniform(0.5, 1.5) * spec.step * e
            s0 = rng.uniform(0, 1000 * e)
            path = _along_route(route, s0 + speed * np.arange(T))
            positions[idx] = path + rng.normal(0, 0.02 * e, path.shape)
        else:
            positions[idx] = _walk(rng, rng.uniform(0, side, 2), T, spec.step * e, side)
        if spec.irregular and T > 1:
            a = int(rng.integers(0, T - 1))
            b = int(rng.integers(a + 1, T))
        else:
            a, b = 0, T - 1
        lifetimes[idx] = (a, b)

    trajectories = []
    for idx in range(spec.n_objects):
        a, b = lifetimes[idx]
        ticks = np.arange(a, b + 1)
        keep = np.ones(len(ticks), dtype=bool)
        if spec.missing_prob > 0 and len(ticks) > 2:
            keep[1:-1] = rng.uniform(0, 1, len(ticks) - 2) >= spec.missing_prob
            if idx in protected:
                lo, hi = protected[idx]
                keep[(ticks >= lo) & (ticks <= hi)] = True
        xy = positions[idx][a: b + 1][keep]
        trajectories.append(Trajectory(ids[idx], ticks[keep] + spec.first_tick, xy))
    return Scene(trajectories, planted)


def random_spec(rng: np.random.Generator, max_objects: int = 20, max_ticks: int = 50) -> SyntheticSpec:
    """A mixed small scene: a few planted convoys, noise walkers, gaps, ragged lifetimes."""
    n = int(rng.integers(4, max_objects + 1))
    T = int(rng.integers(10, max_ticks + 1))
    convoys = []
    free = n
    for _ in range(int(rng.integers(0, 4))):
        size = int(rng.integers(2, 6))
        if size > free:
            break
        start = int(rng.integers(0, T - 3))
        end = int(rng.integers(start + 2, T))
        convoys.append(PlantedConvoy(size, start, end, jitter=float(rng.uniform(0.0, 0.2))))
        free -= size
    return SyntheticSpec(
        n_objects=n,
        n_ticks=T,
        e=10.0,
        convoys=tuple(convoys),
        area=float(rng.uniform(4.0, 12.0)),
        step=float(rng.uniform(0.1, 0.6)),
        missing_prob=float(rng.choice([0.0, 0.1, 0.3])),
        irregular=bool(rng.integers(0, 2)),
        routes=int(rng.choice([0, 0, 2])),
    )
