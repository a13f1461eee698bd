"""Heuristic choice of the simplification tolerance and the partition length."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .simplify import SimplifiedTrajectory, simplify, tolerance_traces
from .trajectory import Trajectory

DEFAULT_SAMPLE_FRACTION = 0.10


@dataclass(frozen=True)
class DeltaChoice:
    delta: float
    fallback: bool
    sampled: int
    used: int


def tolerance_trace(o: Trajectory) -> list[float]:
    """Deviations seen by a zero-tolerance DP run, ascending."""
    trace: list[float] = []
    simplify(o, 0.0, "dp", trace=trace)
    return sorted(trace)


def select_from_trace(trace: Sequence[float], e: float) -> float | None:
    """Lower end of the widest gap between adjacent trace values below ``e``.

    Returns ``None`` when fewer than two values lie below ``e``.
    """
    usable = [v for v in trace if v < e]
    if len(usable) < 2:
        return None
    best = max(range(len(usable) - 1), key=lambda i: (usable[i + 1] - usable[i], -i))
    return usable[best]


def compute_delta(
    trajectories: Iterable[Trajectory],
    e: float,
    sample_fraction: float = DEFAULT_SAMPLE_FRACTION,
) -> DeltaChoice:
    """Average per-trajectory tolerance pick over a deterministic sample.

    The sample is the first ``ceil(fraction * N)`` trajectories in id order.
    When no sampled trajectory yields a pick the result falls back to ``e / 2``.
    """
    if e <= 0:
        raise ValueError("neighbourhood range must be positive")
    if not 0 < sample_fraction <= 1:
        raise ValueError("sample fraction must lie in (0, 1]")
    pool = sorted(trajectories, key=lambda o: o.obj_id)
    if not pool:
        return DeltaChoice(e / 2, True, 0, 0)
    sample = pool[: max(1, math.ceil(sample_fraction * len(pool)))]
    traces = tolerance_traces(sample)
    picks = [p for p in (select_from_trace(sorted(t), e) for t in traces) if p is not None]
    if not picks:
        return DeltaChoice(e / 2, True, len(sample), 0)
    return DeltaChoice(sum(picks) / len(picks), False, len(sample), len(picks))


def lambda_for_object(duration: int, ratio: float, n_ticks: int) -> float:
    """Per-object partition length from lifetime, kept-vertex ratio and domain size."""
    return duration * (ratio * (1.0 - duration / n_ticks) + 2.0 / n_ticks)


def compute_lambda(
    trajectories: Iterable[Trajectory],
    simplified: Iterable[SimplifiedTrajectory],
    n_ticks: int,
) -> int:
    """Mean per-object partition length, rounded half up and clamped to ``[2, T]``."""
    by_owner = {s.owner: s for s in simplified}
    values = []
    for o in trajectories:
        s = by_owner[o.obj_id]
        values.append(lambda_for_object(o.duration, s.n_vertices / len(o), n_ticks))
    if not values:
        return 2
    lam = math.floor(sum(values) / len(values) + 0.5)
    return int(min(max(lam, 2), max(n_ticks, 2)))
