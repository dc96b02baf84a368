"""Brute-force verifiers for the geometry and metric paths.

These are intentionally slow and simple: first contact is found by stepping
both boxes forward in time and bisecting the bracketing step, overlap by
sampling a dense point grid over one box. The test suite compares the exact
implementations against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import OrientedBox, Vec2, corners, sat_overlap
from .metrics import AgentState


@dataclass(frozen=True)
class OracleConfig:
    horizon: float = 30.0
    coarse_dt: float = 0.01
    refine_tol: float = 1e-4
    sample_grid: float = 0.01

    def __post_init__(self) -> None:
        if not self.coarse_dt > self.refine_tol > 0:
            raise ValueError("need coarse_dt > refine_tol > 0")
        if self.horizon <= 0:
            raise ValueError("horizon must be > 0")
        if self.sample_grid <= 0:
            raise ValueError("sample_grid must be > 0")


def _box_at(state: AgentState, tau: float) -> OrientedBox:
    return OrientedBox(
        Vec2(state.x + tau * state.velocity.x, state.y + tau * state.velocity.y),
        state.heading,
        state.length,
        state.width,
    )


def oracle_first_contact(
    a: AgentState, b: AgentState, cfg: OracleConfig = OracleConfig()
) -> float | None:
    """First footprint contact time under constant velocity, or None within
    the horizon.

    Steps both boxes on the coarse_dt grid running SAT at every step
    (vectorized over the grid), then bisects the bracketing interval down to
    refine_tol with the scalar SAT test.
    """
    steps = int(round(cfg.horizon / cfg.coarse_dt))
    taus = np.arange(steps + 1) * cfg.coarse_dt

    ca = np.array([(p.x, p.y) for p in corners(a.box)])  # (4, 2)
    cb = np.array([(p.x, p.y) for p in corners(b.box)])
    va = np.array([a.velocity.x, a.velocity.y])
    vb = np.array([b.velocity.x, b.velocity.y])
    ua, ub = a.box.axis(), b.box.axis()
    axes = np.array(
        [(ua.x, ua.y), (-ua.y, ua.x), (ub.x, ub.y), (-ub.y, ub.x)]
    )  # (4, 2)

    # Corner projections onto each axis across the whole grid: (steps+1, 4, 4).
    pa = ca @ axes.T + taus[:, None, None] * (va @ axes.T)
    pb = cb @ axes.T + taus[:, None, None] * (vb @ axes.T)
    amin, amax = pa.min(axis=1), pa.max(axis=1)
    bmin, bmax = pb.min(axis=1), pb.max(axis=1)
    hit = ((amin <= bmax) & (bmin <= amax)).all(axis=1)

    if not hit.any():
        return None
    k = int(np.argmax(hit))
    if k == 0:
        return 0.0

    def contact(tau: float) -> bool:
        return sat_overlap(_box_at(a, tau), _box_at(b, tau))

    # Guard against a one-ulp disagreement between the vectorized grid test
    # and the scalar SAT before bisecting.
    while not contact(taus[k]):
        k += 1
        if k >= len(taus):
            return None
    lo, hi = float(taus[k - 1]), float(taus[k])
    while hi - lo > cfg.refine_tol:
        mid = 0.5 * (lo + hi)
        if contact(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def oracle_overlap(a: OrientedBox, b: OrientedBox, cfg: OracleConfig = OracleConfig()) -> bool:
    """Point-sampling overlap test: a grid of spacing <= sample_grid over box
    a, true iff any sample lies inside b (closed test in b's local frame).

    Exact distance-based prunes (circumcircles, AABBs) are applied first;
    they cannot change the answer, only skip samples that cannot be inside b.
    """
    gap_centers = (a.center - b.center).norm()
    if gap_centers > a.circumradius() + b.circumradius():
        return False

    def axis_samples(extent: float) -> np.ndarray:
        if extent == 0.0:
            return np.array([0.0])
        n = int(math.ceil(extent / cfg.sample_grid)) + 1
        return np.linspace(-0.5 * extent, 0.5 * extent, n)

    us = axis_samples(a.length)
    vs = axis_samples(a.width)
    ca, sa = math.cos(a.heading), math.sin(a.heading)
    px = a.center.x + us[:, None] * ca - vs[None, :] * sa
    py = a.center.y + us[:, None] * sa + vs[None, :] * ca

    cb = corners(b)
    bminx, bmaxx = min(c.x for c in cb), max(c.x for c in cb)
    bminy, bmaxy = min(c.y for c in cb), max(c.y for c in cb)
    inside_aabb = (px >= bminx) & (px <= bmaxx) & (py >= bminy) & (py <= bmaxy)
    if not inside_aabb.any():
        return False
    qx = px[inside_aabb] - b.center.x
    qy = py[inside_aabb] - b.center.y
    cbh, sbh = math.cos(b.heading), math.sin(b.heading)
    u = qx * cbh + qy * sbh
    v = -qx * sbh + qy * cbh
    return bool(np.any((np.abs(u) <= 0.5 * b.length) & (np.abs(v) <= 0.5 * b.width)))


def overlap_depth(a: OrientedBox, b: OrientedBox) -> float:
    """Signed separation measure over the four SAT axes.

    Positive: exact penetration depth of overlapping boxes (the minimum
    translation distance in 2D lies along one of the edge normals).
    Negative: minus the largest axis gap, a lower bound on the true gap; use
    geometry.nearest_points for the exact separation of disjoint boxes.
    """
    ca = corners(a)
    cb = corners(b)
    ua, ub = a.axis(), b.axis()
    depth = math.inf
    for axis in (ua, ua.perp(), ub, ub.perp()):
        amin = min(p.dot(axis) for p in ca)
        amax = max(p.dot(axis) for p in ca)
        bmin = min(p.dot(axis) for p in cb)
        bmax = max(p.dot(axis) for p in cb)
        depth = min(depth, min(amax, bmax) - max(amin, bmin))
    return depth
