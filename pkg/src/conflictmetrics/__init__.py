"""Criticality metrics and risk classification for two-agent traffic conflicts."""

__version__ = "0.1.0"

from .classify import ConflictEvent, RiskLevel, classify_frame, extract_event, filter_collisions
from .geometry import (
    ConvexPolygon,
    OrientedBox,
    Vec2,
    corners,
    cross2,
    minkowski_sum,
    nearest_points,
    ray_polygon_entry,
    sat_overlap,
)
from .metrics import (
    AgentState,
    FrameMetrics,
    MetricsConfig,
    act,
    compute_frame,
    compute_pair_frames,
    condition_q,
    in_depth,
    mei,
    pet,
    relative_kinematics,
    tem_ttc2d,
)
from .oracles import OracleConfig, oracle_first_contact, oracle_overlap
from .stats import ThresholdTable, build_threshold_table, histogram, percentile
from .trajio import Scenario, adapt_external, parse_canonical, resample, serialize_canonical

__all__ = [
    "__version__",
    "AgentState",
    "ConflictEvent",
    "ConvexPolygon",
    "FrameMetrics",
    "MetricsConfig",
    "OracleConfig",
    "OrientedBox",
    "RiskLevel",
    "Scenario",
    "ThresholdTable",
    "Vec2",
    "act",
    "adapt_external",
    "build_threshold_table",
    "classify_frame",
    "compute_frame",
    "compute_pair_frames",
    "condition_q",
    "corners",
    "cross2",
    "extract_event",
    "filter_collisions",
    "histogram",
    "in_depth",
    "mei",
    "minkowski_sum",
    "nearest_points",
    "oracle_first_contact",
    "oracle_overlap",
    "parse_canonical",
    "percentile",
    "pet",
    "ray_polygon_entry",
    "relative_kinematics",
    "resample",
    "sat_overlap",
    "serialize_canonical",
    "tem_ttc2d",
]
