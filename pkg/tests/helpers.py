"""Shared test utilities: independent oracles and random-input generators.

The convex hull here is the test-side oracle for Minkowski sums (hull of all
pairwise vertex sums) and is deliberately a different algorithm from the
library's edge-angle merge.
"""

from __future__ import annotations

import math

import numpy as np

from conflictmetrics.geometry import ConvexPolygon, OrientedBox, Vec2
from conflictmetrics.metrics import AgentState


def hull(points: list[Vec2]) -> list[Vec2]:
    """Andrew monotone chain; returns the strictly convex CCW hull."""
    pts = sorted(set((p.x, p.y) for p in points))
    if len(pts) <= 2:
        return [Vec2(x, y) for x, y in pts]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return [Vec2(x, y) for x, y in lower[:-1] + upper[:-1]]


def hull_of_pairwise_sums(a: ConvexPolygon, b: ConvexPolygon) -> list[Vec2]:
    sums = [va + vb for va in a.vertices for vb in b.vertices]
    return hull(sums)


def same_vertex_set(got, expected, tol: float = 1e-9) -> bool:
    got = list(got)
    expected = list(expected)
    if len(got) != len(expected):
        return False
    remaining = list(expected)
    for g in got:
        match = next((e for e in remaining if (g - e).norm() <= tol), None)
        if match is None:
            return False
        remaining.remove(match)
    return True


def random_convex_polygon(rng: np.random.Generator, max_points: int = 8, scale: float = 5.0) -> ConvexPolygon:
    while True:
        n = rng.integers(3, max_points + 1)
        pts = [Vec2(rng.uniform(-scale, scale), rng.uniform(-scale, scale)) for _ in range(n)]
        h = hull(pts)
        if len(h) >= 3:
            return ConvexPolygon(tuple(h))


def random_box(rng: np.random.Generator, pos_range: float = 6.0) -> OrientedBox:
    return OrientedBox(
        Vec2(rng.uniform(-pos_range, pos_range), rng.uniform(-pos_range, pos_range)),
        rng.uniform(-math.pi, math.pi),
        rng.uniform(0.5, 6.0),
        rng.uniform(0.5, 6.0),
    )


def random_agent(rng: np.random.Generator, agent_id: str, pos_range: float = 50.0) -> AgentState:
    """Random CV configuration: speeds 0-20 m/s, footprints 0.5-6 m,
    positions within a 100 m field."""
    return AgentState(
        agent_id=agent_id,
        t=0.0,
        x=rng.uniform(-pos_range, pos_range),
        y=rng.uniform(-pos_range, pos_range),
        v=rng.uniform(0.0, 20.0),
        heading=rng.uniform(-math.pi, math.pi),
        length=rng.uniform(0.5, 6.0),
        width=rng.uniform(0.5, 6.0),
    )


def transformed_agent(state: AgentState, angle: float, dx: float, dy: float) -> AgentState:
    """Rigidly transform a state: rotate about the origin, then translate."""
    c, s = math.cos(angle), math.sin(angle)
    return AgentState(
        agent_id=state.agent_id,
        t=state.t,
        x=c * state.x - s * state.y + dx,
        y=s * state.x + c * state.y + dy,
        v=state.v,
        heading=state.heading + angle,
        length=state.length,
        width=state.width,
        agent_type=state.agent_type,
    )


def close(a: float, b: float, tol: float = 1e-9) -> bool:
    """Absolute-or-relative comparison: |a-b| <= tol * max(1, |a|, |b|)."""
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))
