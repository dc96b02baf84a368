"""Corpus-level statistics: metric distributions and percentile risk thresholds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .classify import ConflictEvent

# Risk shares reported in the threshold table, most critical first.
RISK_SHARES = (1, 5, 10, 25, 50, 75, 90, 95, 99)

# Minimum corpus size below which percentile thresholds get a warning flag.
LOW_SAMPLE_THRESHOLD = 100


def percentile(values: Sequence[float], p: float) -> float:
    """Linear-interpolation percentile (rank r = p/100 * (n-1))."""
    if not values:
        raise ValueError("percentile of empty value list")
    if not 0 <= p <= 100:
        raise ValueError(f"percentile rank must be in [0, 100], got {p}")
    ordered = sorted(values)
    rank = p / 100 * (len(ordered) - 1)
    lo = math.floor(rank)
    hi = math.ceil(rank)
    if lo == hi:
        return ordered[lo]
    frac = rank - lo
    return ordered[lo] + frac * (ordered[hi] - ordered[lo])


@dataclass(frozen=True)
class ThresholdEntry:
    risk_share: int  # "Top N%" label
    percentile_rank: float
    value: float


@dataclass(frozen=True)
class ThresholdTable:
    """Percentile-ranked risk thresholds per metric.

    Larger mei_max means higher risk, so the Top 1% threshold is the 99th
    percentile; act_min and pet invert (lower value = higher risk).
    """

    mei_max: tuple[ThresholdEntry, ...]
    act_min: tuple[ThresholdEntry, ...]
    pet: tuple[ThresholdEntry, ...]
    counts: dict[str, int]
    low_sample: bool


def build_threshold_table(events: Sequence[ConflictEvent]) -> ThresholdTable:
    """Threshold table over the defined aggregates of a conflict corpus.

    Undefined values are excluded per metric, never imputed. Fewer than 100
    events still produce a table, flagged low_sample.
    """
    mei_values = [e.mei_max for e in events if e.mei_max is not None]
    act_values = [e.act_min for e in events if e.act_min is not None]
    pet_values = [e.pet for e in events if e.pet is not None]

    def column(values: list[float], invert: bool) -> tuple[ThresholdEntry, ...]:
        entries = []
        for share in RISK_SHARES:
            rank = share if invert else 100 - share
            value = percentile(values, rank) if values else math.nan
            entries.append(ThresholdEntry(risk_share=share, percentile_rank=rank, value=value))
        return tuple(entries)

    return ThresholdTable(
        mei_max=column(mei_values, invert=False),
        act_min=column(act_values, invert=True),
        pet=column(pet_values, invert=True),
        counts={
            "events": len(events),
            "mei_max": len(mei_values),
            "act_min": len(act_values),
            "pet": len(pet_values),
        },
        low_sample=len(events) < LOW_SAMPLE_THRESHOLD,
    )


def histogram(values: Sequence[float | None], bin_width: float) -> tuple[list[float], list[int]]:
    """Left-closed right-open histogram with edges aligned to multiples of
    bin_width; undefined values are skipped. Returns (edges, counts) with
    len(edges) == len(counts) + 1."""
    if bin_width <= 0:
        raise ValueError("bin_width must be > 0")
    defined = [v for v in values if v is not None]
    if not defined:
        return [], []
    start_idx = math.floor(min(defined) / bin_width)
    bins: dict[int, int] = {}
    for v in defined:
        bins[math.floor(v / bin_width)] = bins.get(math.floor(v / bin_width), 0) + 1
    end_idx = max(bins)
    counts = [bins.get(i, 0) for i in range(start_idx, end_idx + 1)]
    edges = [i * bin_width for i in range(start_idx, end_idx + 2)]
    return edges, counts


def threshold_table_csv(table: ThresholdTable) -> str:
    """Render the threshold table as comma-separated text (one row per risk
    share, value and percentile-rank columns per metric)."""
    lines = [
        "risk_share,mei_max,mei_max_rank,act_min,act_min_rank,pet,pet_rank",
    ]
    for m, a, p in zip(table.mei_max, table.act_min, table.pet):
        lines.append(
            f"Top {m.risk_share}%,{_fmt(m.value)},{m.percentile_rank:g},"
            f"{_fmt(a.value)},{a.percentile_rank:g},{_fmt(p.value)},{p.percentile_rank:g}"
        )
    return "\n".join(lines) + "\n"


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else repr(value)
