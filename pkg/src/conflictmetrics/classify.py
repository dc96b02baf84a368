"""Risk-level classification and per-event aggregation.

The four-level frame classification gates everything on the conflict
predicate Q: frames failing Q are Non-Conflict regardless of geometry, a
frame with footprint contact is a Crash, and the remaining frames split into
Critical (evasive time at most tem_star with non-negative intrusion depth)
versus Potential conflicts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Hashable, Sequence

from .metrics import FrameMetrics, MetricsConfig


class RiskLevel(IntEnum):
    NON_CONFLICT = 0
    POTENTIAL_CONFLICT = 1
    CRITICAL_CONFLICT = 2
    CRASH = 3

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    RiskLevel.NON_CONFLICT: "NonConflict",
    RiskLevel.POTENTIAL_CONFLICT: "PotentialConflict",
    RiskLevel.CRITICAL_CONFLICT: "CriticalConflict",
    RiskLevel.CRASH: "Crash",
}


def classify_frame(fm: FrameMetrics, cfg: MetricsConfig = MetricsConfig()) -> RiskLevel:
    """Risk level of one frame.

    Crash detection is geometric (footprint overlap) rather than the limit
    conditions tem -> 0 / mei -> inf, which are its analytic shadows.
    """
    if fm.overlap:
        return RiskLevel.CRASH
    if not fm.q_active:
        return RiskLevel.NON_CONFLICT
    if (
        fm.tem is not None
        and fm.tem <= cfg.tem_star
        and fm.in_depth is not None
        and fm.in_depth >= 0.0
    ):
        return RiskLevel.CRITICAL_CONFLICT
    return RiskLevel.POTENTIAL_CONFLICT


@dataclass(frozen=True)
class ConflictEvent:
    """Per-(scenario, agent-pair) aggregate of a frame stream."""

    scenario_id: str
    agent_pair: tuple[str, str]
    mei_max: float | None
    t_mei_max: float | None
    act_min: float | None
    t_act_min: float | None
    pet: float | None
    peak_level: RiskLevel
    frame_count: int


def extract_event(
    scenario_id: str,
    agent_pair: tuple[str, str],
    frames: Sequence[FrameMetrics],
    pet: float | None,
    cfg: MetricsConfig = MetricsConfig(),
) -> ConflictEvent:
    """Aggregate frame metrics into one event.

    Undefined per-frame values are skipped, not treated as zero; ties in the
    max/min are broken by the earliest timestamp. Raises on an empty stream.
    """
    if not frames:
        raise ValueError("cannot extract an event from an empty frame list")
    ordered = sorted(frames, key=lambda fm: fm.t)
    mei_max = t_mei_max = None
    act_min = t_act_min = None
    peak = RiskLevel.NON_CONFLICT
    for fm in ordered:
        if fm.mei is not None and (mei_max is None or fm.mei > mei_max):
            mei_max, t_mei_max = fm.mei, fm.t
        if fm.act is not None and (act_min is None or fm.act < act_min):
            act_min, t_act_min = fm.act, fm.t
        level = classify_frame(fm, cfg)
        if level > peak:
            peak = level
    return ConflictEvent(
        scenario_id=scenario_id,
        agent_pair=agent_pair,
        mei_max=mei_max,
        t_mei_max=t_mei_max,
        act_min=act_min,
        t_act_min=t_act_min,
        pet=pet,
        peak_level=peak,
        frame_count=len(ordered),
    )


@dataclass(frozen=True)
class CollisionRemoval:
    """One filtered event: the pair key and its first overlapping frame time."""

    key: Hashable
    first_overlap_t: float


def filter_collisions(
    frames_by_pair: dict,
) -> tuple[dict, list[CollisionRemoval]]:
    """Drop events containing any frame with footprint overlap.

    Returns the retained map (same keys, same frame lists) and the removal
    report. Grazing contact counts as overlap (closed-set semantics).
    """
    kept: dict = {}
    removed: list[CollisionRemoval] = []
    for key, frames in frames_by_pair.items():
        overlap_ts = [fm.t for fm in frames if fm.overlap]
        if overlap_ts:
            removed.append(CollisionRemoval(key=key, first_overlap_t=min(overlap_ts)))
        else:
            kept[key] = frames
    return kept, removed
