"""Run statistics and the refinement-unit cost measure."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Protocol


class _Sized(Protocol):
    members: frozenset
    lifetime: int


def format_kv(values: dict) -> str:
    """Flat ``key=value`` lines; floats in short general form, ``-`` for missing values."""
    lines = []
    for key, value in values.items():
        if isinstance(value, bool):
            value = str(value).lower()
        elif isinstance(value, float):
            value = f"{value:.6g}"
        elif value is None:
            value = "-"
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def format_json(values: dict) -> str:
    return json.dumps(values, indent=2, sort_keys=True) + "\n"


def refinement_unit(candidates: Iterable[_Sized]) -> int:
    """Sum over candidates of ``|members|^2 * lifetime`` (index-free clustering cost)."""
    return sum(len(c.members) ** 2 * c.lifetime for c in candidates)


@dataclass
class RunStats:
    algo: str
    m: int
    k: int
    e: float
    delta: float | None = None
    lam: int | None = None
    delta_fallback: bool = False
    simplify_ms: float = 0.0
    filter_ms: float = 0.0
    refine_ms: float = 0.0
    total_ms: float = 0.0
    candidates: int = 0
    refinement_units: int = 0
    reduction_ratio: float = 0.0
    convoys: int = 0
    extra: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        extra = d.pop("extra")
        d.update(extra)
        return d

    def to_text(self) -> str:
        return format_kv(self.as_dict())

    def to_json(self) -> str:
        return format_json(self.as_dict())
