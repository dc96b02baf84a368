"""Per-frame conflict metrics for two-agent interactions.

Implements the interaction-depth / evasive-time family: InDepth (mutual
intrusion depth of the safety regions under straight-line extrapolation),
TEM realized as the exact first-contact time of the two footprints under
the constant-velocity model, their ratio MEI, plus the comparison metrics
ACT (nearest-point collision time) and PET (post-encroachment time over a
rasterized conflict zone).

Metrics that have no defined value for a frame (no relative motion, no
collision course) are reported as None, never as sentinel numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import (
    ConvexPolygon,
    OrientedBox,
    Vec2,
    corners,
    cross2,
    minkowski_sum,
    nearest_points,
    ray_polygon_entry,
    reflected,
    sat_overlap,
)

AGENT_TYPES = ("vehicle", "pedestrian", "cyclist", "other")

# Footprint assumed for pedestrians when the data source carries no dimensions.
PEDESTRIAN_DEFAULT_LENGTH = 0.6
PEDESTRIAN_DEFAULT_WIDTH = 0.6

# Below this relative speed the relative direction (and every metric built on
# it) is undefined for the frame.
ZERO_RELATIVE_SPEED = 1e-9

Q_PREDICATES = ("approach_distance", "always_true")


@dataclass(frozen=True)
class AgentState:
    """One agent's pose, speed and footprint at one timestamp."""

    agent_id: str
    t: float
    x: float
    y: float
    v: float
    heading: float
    length: float
    width: float
    agent_type: str = "vehicle"

    def __post_init__(self) -> None:
        for name in ("t", "x", "y", "v", "heading", "length", "width"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite for agent {self.agent_id!r}")
        if self.v < 0:
            raise ValueError(f"speed must be >= 0, got {self.v}")
        if self.length <= 0 or self.width <= 0:
            raise ValueError("footprint dimensions must be > 0")
        if self.agent_type not in AGENT_TYPES:
            raise ValueError(f"unknown agent_type {self.agent_type!r}")

    @property
    def t_dms(self) -> int:
        """Timestamp in integer tenths of a millisecond (exact clock key)."""
        return round(self.t * 1e4)

    @property
    def position(self) -> Vec2:
        return Vec2(self.x, self.y)

    @property
    def velocity(self) -> Vec2:
        return Vec2(self.v * math.cos(self.heading), self.v * math.sin(self.heading))

    @property
    def direction(self) -> Vec2:
        return Vec2(math.cos(self.heading), math.sin(self.heading))

    @property
    def box(self) -> OrientedBox:
        return OrientedBox(self.position, self.heading, self.length, self.width)

    @property
    def footprint(self) -> ConvexPolygon:
        return self.box.polygon()


@dataclass(frozen=True)
class MetricsConfig:
    """Analysis configuration; defaults reproduce the reference analysis
    (no safety buffer, 3 s evasive-time threshold)."""

    d_safe: float = 0.0
    tem_star: float = 3.0
    q_predicate: str = "approach_distance"
    mei_cap: float | None = None
    pet_grid: float = 0.1

    def __post_init__(self) -> None:
        if self.d_safe < 0:
            raise ValueError("d_safe must be >= 0")
        if self.tem_star <= 0:
            raise ValueError("tem_star must be > 0")
        if self.pet_grid <= 0:
            raise ValueError("pet_grid must be > 0")
        if self.q_predicate not in Q_PREDICATES:
            raise ValueError(f"unknown q_predicate {self.q_predicate!r}")


@dataclass(frozen=True)
class FrameMetrics:
    """All per-frame metric values for one agent pair at one timestep.

    Undefined values are None. mei is defined iff in_depth and tem are both
    defined with tem > 0; an overlapping frame has tem == 0 and undefined mei
    (the crash flag carries the information downstream).
    """

    t: float
    in_depth: float | None
    tem: float | None
    mei: float | None
    act: float | None
    q_active: bool
    overlap: bool
    d_ct: float | None
    d_a: float | None
    d_b: float | None


def relative_kinematics(a: AgentState, b: AgentState) -> tuple[Vec2, Vec2, Vec2 | None]:
    """Relative position p_ab = P_a - P_b, relative velocity v_ab = v_a - v_b,
    and the unit direction of v_ab (None when there is no relative motion)."""
    if a.t_dms != b.t_dms:
        raise ValueError(f"timestamps differ: {a.t} vs {b.t}")
    p_ab = a.position - b.position
    v_ab = a.velocity - b.velocity
    speed = v_ab.norm()
    if speed < ZERO_RELATIVE_SPEED:
        return p_ab, v_ab, None
    return p_ab, v_ab, Vec2(v_ab.x / speed, v_ab.y / speed)


def _projection_radius(state: AgentState, theta_ab: Vec2) -> float:
    """Largest distance from the agent's center to a footprint corner,
    measured orthogonally to the relative direction of motion."""
    center = state.position
    return max(abs(cross2(c - center, theta_ab)) for c in corners(state.box))


def in_depth(a: AgentState, b: AgentState, cfg: MetricsConfig = MetricsConfig()) -> float | None:
    """Mutual intrusion depth: d_a + d_b - d_ct + d_safe.

    d_a/d_b are the agents' projection radii orthogonal to the relative
    velocity and d_ct is the tangential center-to-center distance (the miss
    distance of the centers under constant-velocity motion). Positive means
    the bodies collide unless someone evades; None when there is no relative
    motion.
    """
    parts = in_depth_parts(a, b, cfg)
    return None if parts is None else parts[0]


def in_depth_parts(
    a: AgentState, b: AgentState, cfg: MetricsConfig = MetricsConfig()
) -> tuple[float, float, float, float] | None:
    """(in_depth, d_ct, d_a, d_b) or None when the relative direction is undefined."""
    p_ab, _, theta_ab = relative_kinematics(a, b)
    if theta_ab is None:
        return None
    d_ct = abs(cross2(p_ab, theta_ab))
    d_a = _projection_radius(a, theta_ab)
    d_b = _projection_radius(b, theta_ab)
    return d_a + d_b - d_ct + cfg.d_safe, d_ct, d_a, d_b


def _relative_contact_region(a: AgentState, b: AgentState) -> ConvexPolygon:
    """Set of relative positions p_ab at which the two footprints touch or
    overlap: the Minkowski sum of b's footprint with a's reflected footprint,
    both taken about their centers."""
    a0 = OrientedBox(Vec2(0.0, 0.0), a.heading, a.length, a.width).polygon()
    b0 = OrientedBox(Vec2(0.0, 0.0), b.heading, b.length, b.width).polygon()
    return minkowski_sum(b0, reflected(a0))


def _ray_circle_entry(origin: Vec2, direction: Vec2, center: Vec2, radius: float) -> float | None:
    oc = origin - center
    c0 = oc.dot(oc) - radius * radius
    if c0 <= 0.0:
        return 0.0
    qa = direction.dot(direction)
    qb = 2.0 * oc.dot(direction)
    disc = qb * qb - 4.0 * qa * c0
    if disc < 0.0:
        return None
    t = (-qb - math.sqrt(disc)) / (2.0 * qa)
    return t if t >= 0.0 else None


def _ray_rounded_polygon_entry(
    origin: Vec2, direction: Vec2, poly: ConvexPolygon, radius: float
) -> float | None:
    """Entry parameter of a ray into poly inflated by a disc of given radius
    (the union of the polygon, edge strips and vertex discs)."""
    best = ray_polygon_entry(origin, direction, poly)
    if best == 0.0:
        return 0.0
    verts = poly.vertices
    n = len(verts)
    for i in range(n):
        v1, v2 = verts[i], verts[(i + 1) % n]
        e = v2 - v1
        elen = e.norm()
        if elen > 0.0:
            nrm = Vec2(e.y / elen, -e.x / elen)
            strip = ConvexPolygon((v1, v1 + radius * nrm, v2 + radius * nrm, v2))
            t = ray_polygon_entry(origin, direction, strip)
            if t is not None and (best is None or t < best):
                best = t
        t = _ray_circle_entry(origin, direction, v1, radius)
        if t is not None and (best is None or t < best):
            best = t
    return best


def tem_ttc2d(a: AgentState, b: AgentState, cfg: MetricsConfig = MetricsConfig()) -> float | None:
    """Time for evasive maneuver: exact first-contact time of the two
    footprints under the constant-velocity model (headings frozen).

    Computed as the entry parameter of the relative-position ray (origin
    p_ab, direction v_ab) into the relative contact region; d_safe > 0
    inflates the region by a disc of that radius. Returns 0 for frames
    already in contact and None when the straight-line motion never collides.
    """
    if sat_overlap(a.box, b.box):
        return 0.0
    p_ab, v_ab, theta_ab = relative_kinematics(a, b)
    if theta_ab is None:
        return None
    region = _relative_contact_region(a, b)
    if cfg.d_safe > 0.0:
        return _ray_rounded_polygon_entry(p_ab, v_ab, region, cfg.d_safe)
    return ray_polygon_entry(p_ab, v_ab, region)


def mei(a: AgentState, b: AgentState, cfg: MetricsConfig = MetricsConfig()) -> float | None:
    """Required conflict-reduction rate: in_depth / tem.

    None when either part is undefined or at contact (tem == 0, where the
    ratio diverges; the overlap flag reports that case). cfg.mei_cap, when
    set, clamps the reported value for plotting-friendly output.
    """
    depth = in_depth(a, b, cfg)
    tem = tem_ttc2d(a, b, cfg)
    return _mei_from_parts(depth, tem, cfg)


def _mei_from_parts(depth: float | None, tem: float | None, cfg: MetricsConfig) -> float | None:
    if depth is None or tem is None or tem <= 0.0:
        return None
    value = depth / tem
    if cfg.mei_cap is not None and value > cfg.mei_cap:
        return cfg.mei_cap
    return value


def act(a: AgentState, b: AgentState) -> float | None:
    """Anticipated collision time from the nearest boundary point pair.

    The gap between the closest points divided by the closing rate along the
    line joining them, with the pair frozen at the current frame. 0 when the
    footprints already touch; None when the gap is not closing.
    """
    fa, fb = a.footprint, b.footprint
    qa, qb, gap = nearest_points(fa, fb)
    if gap == 0.0:
        return 0.0
    _, v_ab, _ = relative_kinematics(a, b)
    u = Vec2((qb.x - qa.x) / gap, (qb.y - qa.y) / gap)
    closing = v_ab.dot(u)  # > 0 when a gains on b along the joining line
    if closing <= ZERO_RELATIVE_SPEED:
        return None
    return gap / closing


def condition_q(a: AgentState, b: AgentState, cfg: MetricsConfig = MetricsConfig()) -> bool:
    """Conflict-detection gate.

    Default predicate: the center distance is strictly decreasing
    (p_ab . v_ab < 0). The always_true variant exists for sensitivity runs.
    """
    if cfg.q_predicate == "always_true":
        return True
    p_ab, v_ab, _ = relative_kinematics(a, b)
    return p_ab.dot(v_ab) < 0.0


def compute_frame(a: AgentState, b: AgentState, cfg: MetricsConfig = MetricsConfig()) -> FrameMetrics:
    """All per-frame metrics for one agent pair at one shared timestamp."""
    overlap = sat_overlap(a.box, b.box)
    parts = in_depth_parts(a, b, cfg)
    if parts is None:
        depth = d_ct = d_a = d_b = None
    else:
        depth, d_ct, d_a, d_b = parts
    tem = tem_ttc2d(a, b, cfg)
    return FrameMetrics(
        t=a.t,
        in_depth=depth,
        tem=tem,
        mei=_mei_from_parts(depth, tem, cfg),
        act=act(a, b),
        q_active=condition_q(a, b, cfg),
        overlap=overlap,
        d_ct=d_ct,
        d_a=d_a,
        d_b=d_b,
    )


def compute_pair_frames(
    track_a: Sequence[AgentState],
    track_b: Sequence[AgentState],
    cfg: MetricsConfig = MetricsConfig(),
) -> list[FrameMetrics]:
    """Frame metrics over the common clock of two time-sorted tracks."""
    by_t = {s.t_dms: s for s in track_b}
    out = []
    for sa in track_a:
        sb = by_t.get(sa.t_dms)
        if sb is not None:
            out.append(compute_frame(sa, sb, cfg))
    out.sort(key=lambda fm: fm.t)
    return out


def _cover_cells(
    box: OrientedBox,
    x0: float,
    y0: float,
    grid: float,
    nx: int,
    ny: int,
    mask: np.ndarray,
) -> None:
    """Mark grid cells whose center lies inside the box (closed test)."""
    cs = corners(box)
    bminx = min(c.x for c in cs)
    bmaxx = max(c.x for c in cs)
    bminy = min(c.y for c in cs)
    bmaxy = max(c.y for c in cs)
    i0 = max(0, int((bminx - x0) / grid) - 1)
    i1 = min(nx, int((bmaxx - x0) / grid) + 2)
    j0 = max(0, int((bminy - y0) / grid) - 1)
    j1 = min(ny, int((bmaxy - y0) / grid) + 2)
    if i0 >= i1 or j0 >= j1:
        return
    xs = x0 + (np.arange(i0, i1) + 0.5) * grid
    ys = y0 + (np.arange(j0, j1) + 0.5) * grid
    dx = xs[:, None] - box.center.x
    dy = ys[None, :] - box.center.y
    c, s = math.cos(box.heading), math.sin(box.heading)
    u = dx * c + dy * s
    v = -dx * s + dy * c
    mask[i0:i1, j0:j1] |= (np.abs(u) <= 0.5 * box.length) & (np.abs(v) <= 0.5 * box.width)


def _occupies(box: OrientedBox, zx: np.ndarray, zy: np.ndarray) -> bool:
    dx = zx - box.center.x
    dy = zy - box.center.y
    c, s = math.cos(box.heading), math.sin(box.heading)
    u = dx * c + dy * s
    v = -dx * s + dy * c
    return bool(np.any((np.abs(u) <= 0.5 * box.length) & (np.abs(v) <= 0.5 * box.width)))


def pet(
    track_a: Sequence[AgentState],
    track_b: Sequence[AgentState],
    cfg: MetricsConfig = MetricsConfig(),
) -> float | None:
    """Post-encroachment time over the shared conflict zone.

    The zone is the intersection of the two swept footprints, rasterized at
    cfg.pet_grid; the result is the gap between the earlier agent's last exit
    from the zone and the later agent's first entry. 0 when both agents
    occupy the zone at the same frame; None when the sweeps never intersect.
    """
    if len(track_a) < 2 or len(track_b) < 2:
        raise ValueError("PET needs at least 2 frames per track")
    grid = cfg.pet_grid

    boxes_a = [(s.t_dms, s.box) for s in track_a]
    boxes_b = [(s.t_dms, s.box) for s in track_b]

    def sweep_bounds(boxes: list[tuple[int, OrientedBox]]) -> tuple[float, float, float, float]:
        pts = [c for _, box in boxes for c in corners(box)]
        xs = [p.x for p in pts]
        ys = [p.y for p in pts]
        return min(xs), min(ys), max(xs), max(ys)

    aminx, aminy, amaxx, amaxy = sweep_bounds(boxes_a)
    bminx, bminy, bmaxx, bmaxy = sweep_bounds(boxes_b)
    minx, maxx = max(aminx, bminx), min(amaxx, bmaxx)
    miny, maxy = max(aminy, bminy), min(amaxy, bmaxy)
    if minx > maxx or miny > maxy:
        return None

    x0 = math.floor(minx / grid) * grid - grid
    y0 = math.floor(miny / grid) * grid - grid
    nx = int(math.ceil((maxx - x0) / grid)) + 2
    ny = int(math.ceil((maxy - y0) / grid)) + 2
    if nx * ny > 100_000_000:
        raise ValueError(
            f"pet_grid={grid} is too fine for a {maxx - minx:.0f} x {maxy - miny:.0f} m "
            "swept-footprint window; raise pet_grid"
        )

    swept_a = np.zeros((nx, ny), dtype=bool)
    swept_b = np.zeros((nx, ny), dtype=bool)
    for _, box in boxes_a:
        _cover_cells(box, x0, y0, grid, nx, ny, swept_a)
    for _, box in boxes_b:
        _cover_cells(box, x0, y0, grid, nx, ny, swept_b)
    zone = swept_a & swept_b
    if not zone.any():
        return None
    zi, zj = np.nonzero(zone)
    zx = x0 + (zi + 0.5) * grid
    zy = y0 + (zj + 0.5) * grid

    times_a = [t for t, box in boxes_a if _occupies(box, zx, zy)]
    times_b = [t for t, box in boxes_b if _occupies(box, zx, zy)]
    if not times_a or not times_b:
        return None
    if set(times_a) & set(times_b):
        return 0.0
    if min(times_a) < min(times_b):
        earlier, later = times_a, times_b
    else:
        earlier, later = times_b, times_a
    return (min(later) - max(earlier)) / 1e4
