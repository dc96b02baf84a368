"""Batch command-line front end.

Subcommands:
    frames             per-frame metric timeseries for one scenario/pair
    events             per-(scenario, pair) aggregates over a corpus
    thresholds         percentile risk thresholds from an event table
    filter-collisions  drop events containing footprint overlap

Every run writes its data tables plus a manifest.json echoing the full
configuration. Data tables are byte-deterministic for identical inputs and
flags (rows are sorted by scenario, agent ids and time; parallelism does not
change output bytes). The manifest records wall-clock timestamps and is the
only non-reproducible output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .classify import ConflictEvent, RiskLevel, classify_frame, extract_event
from .geometry import sat_overlap
from .metrics import FrameMetrics, MetricsConfig, compute_pair_frames, pet
from .stats import build_threshold_table, threshold_table_csv
from .trajio import (
    ParseResult,
    Scenario,
    SchemaError,
    UnsupportedFormatError,
    adapt_external,
    format_time,
    parse_canonical,
    serialize_canonical,
)

EXIT_OK = 0
EXIT_SCHEMA = 3
EXIT_NOT_FOUND = 4
EXIT_EMPTY = 5


class NotFoundError(ValueError):
    pass


class EmptyInputError(ValueError):
    pass


@dataclass
class RunManifest:
    tool: str
    version: str
    command: list[str]
    inputs: list[str]
    config: dict
    started_utc: str
    finished_utc: str
    counts: dict
    outputs: list[str]


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _config_from_args(args: argparse.Namespace) -> MetricsConfig:
    return MetricsConfig(
        d_safe=args.d_safe,
        tem_star=args.tem_star,
        q_predicate=args.q,
        mei_cap=args.mei_cap,
        pet_grid=args.pet_grid,
    )


def _load_scenarios(args: argparse.Namespace) -> tuple[list[Scenario], ParseResult]:
    if args.format == "canonical":
        merged = ParseResult(scenarios=[], issues=[])
        for path in args.input:
            with open(path, "r", encoding="utf-8") as fh:
                result = parse_canonical(fh)
            merged.scenarios.extend(result.scenarios)
            merged.issues.extend(result.issues)
        result = merged
    else:
        result = adapt_external(args.input)
    for issue in result.issues:
        print(f"warning: {issue.scenario_id or ''} line {issue.line}: {issue.message}", file=sys.stderr)
    return result.scenarios, result


def _fmt(value: float | None) -> str:
    """Undefined values serialize as empty fields, never sentinel numbers."""
    return "" if value is None else repr(value)


def _fmt_bool(value: bool) -> str:
    return "true" if value else "false"


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_manifest(
    out_dir: Path,
    args: argparse.Namespace,
    cfg: MetricsConfig,
    started: str,
    counts: dict,
    outputs: list[str],
) -> None:
    manifest = RunManifest(
        tool="conflictmetrics",
        version=__version__,
        command=list(getattr(args, "argv", sys.argv[1:])),
        inputs=[str(p) for p in args.input],
        config=asdict(cfg),
        started_utc=started,
        finished_utc=_utcnow(),
        counts=counts,
        outputs=outputs,
    )
    (out_dir / "manifest.json").write_text(
        json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _sorted_pairs(scenario: Scenario) -> list[tuple[str, str]]:
    ids = sorted(scenario.agents)
    return [(ids[i], ids[j]) for i in range(len(ids)) for j in range(i + 1, len(ids))]


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------

FRAME_COLUMNS = ["t", "in_depth", "tem", "mei", "act", "q_active", "overlap", "risk_level"]


def _frame_row(fm: FrameMetrics, cfg: MetricsConfig) -> list[str]:
    return [
        format_time(round(fm.t * 1e4)),
        _fmt(fm.in_depth),
        _fmt(fm.tem),
        _fmt(fm.mei),
        _fmt(fm.act),
        _fmt_bool(fm.q_active),
        _fmt_bool(fm.overlap),
        classify_frame(fm, cfg).label,
    ]


def cmd_frames(args: argparse.Namespace) -> int:
    started = _utcnow()
    cfg = _config_from_args(args)
    scenarios, _ = _load_scenarios(args)
    by_id = {s.scenario_id: s for s in scenarios}

    if args.scenario is not None:
        scenario = by_id.get(args.scenario)
        if scenario is None:
            raise NotFoundError(f"scenario {args.scenario!r} not found")
    elif len(by_id) == 1:
        scenario = next(iter(by_id.values()))
    else:
        raise NotFoundError("--scenario is required when the input holds several scenarios")

    if args.pair is not None:
        pair = tuple(args.pair.split(","))
        if len(pair) != 2:
            raise NotFoundError("--pair must be two agent ids separated by a comma")
        for agent_id in pair:
            if agent_id not in scenario.agents:
                raise NotFoundError(f"agent {agent_id!r} not in scenario {scenario.scenario_id!r}")
    else:
        pairs = _sorted_pairs(scenario)
        if len(pairs) != 1:
            raise NotFoundError(
                f"scenario {scenario.scenario_id!r} holds {len(scenario.agents)} agents; "
                "select one pair with --pair A,B"
            )
        pair = pairs[0]

    frames = compute_pair_frames(scenario.agents[pair[0]], scenario.agents[pair[1]], cfg)
    rows = [_frame_row(fm, cfg) for fm in frames]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "frames.csv", FRAME_COLUMNS, rows)
    _write_manifest(
        out_dir,
        args,
        cfg,
        started,
        counts={"scenarios": len(scenarios), "frames": len(rows)},
        outputs=["frames.csv"],
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------

EVENT_COLUMNS = [
    "scenario_id",
    "agent_a",
    "agent_b",
    "mei_max",
    "t_mei_max",
    "act_min",
    "t_act_min",
    "pet",
    "peak_level",
    "frame_count",
]


def _scenario_events(scenario: Scenario, cfg: MetricsConfig) -> list[ConflictEvent]:
    events = []
    for pair in _sorted_pairs(scenario):
        track_a = scenario.agents[pair[0]]
        track_b = scenario.agents[pair[1]]
        frames = compute_pair_frames(track_a, track_b, cfg)
        if not frames:
            continue
        pet_value = pet(track_a, track_b, cfg) if len(track_a) >= 2 and len(track_b) >= 2 else None
        events.append(extract_event(scenario.scenario_id, pair, frames, pet_value, cfg))
    return events


def _scenario_events_task(payload: tuple[Scenario, MetricsConfig]) -> list[ConflictEvent]:
    return _scenario_events(*payload)


def _collect_events(scenarios: list[Scenario], cfg: MetricsConfig, jobs: int) -> list[ConflictEvent]:
    jobs = max(1, jobs)
    if jobs > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = pool.map(_scenario_events_task, [(s, cfg) for s in scenarios])
            events = [event for chunk in chunks for event in chunk]
    else:
        events = [event for s in scenarios for event in _scenario_events(s, cfg)]
    events.sort(key=lambda e: (e.scenario_id, e.agent_pair))
    return events


def _event_row(event: ConflictEvent) -> list[str]:
    return [
        event.scenario_id,
        event.agent_pair[0],
        event.agent_pair[1],
        _fmt(event.mei_max),
        "" if event.t_mei_max is None else format_time(round(event.t_mei_max * 1e4)),
        _fmt(event.act_min),
        "" if event.t_act_min is None else format_time(round(event.t_act_min * 1e4)),
        _fmt(event.pet),
        event.peak_level.label,
        str(event.frame_count),
    ]


def cmd_events(args: argparse.Namespace) -> int:
    started = _utcnow()
    cfg = _config_from_args(args)
    scenarios, _ = _load_scenarios(args)
    if not scenarios:
        print("warning: no scenarios in input; writing an empty event table", file=sys.stderr)
    events = _collect_events(scenarios, cfg, args.jobs)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "events.csv", EVENT_COLUMNS, [_event_row(e) for e in events])
    _write_manifest(
        out_dir,
        args,
        cfg,
        started,
        counts={"scenarios": len(scenarios), "events": len(events)},
        outputs=["events.csv"],
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------


def _read_events_csv(path: str) -> list[ConflictEvent]:
    label_to_level = {level.label: level for level in RiskLevel}
    events = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty event table")
        for required in EVENT_COLUMNS[:9]:
            if required not in reader.fieldnames:
                raise SchemaError(f"{path}: missing required column: {required}")
        for rec in reader:
            events.append(
                ConflictEvent(
                    scenario_id=rec["scenario_id"],
                    agent_pair=(rec["agent_a"], rec["agent_b"]),
                    mei_max=float(rec["mei_max"]) if rec["mei_max"] else None,
                    t_mei_max=float(rec["t_mei_max"]) if rec["t_mei_max"] else None,
                    act_min=float(rec["act_min"]) if rec["act_min"] else None,
                    t_act_min=float(rec["t_act_min"]) if rec["t_act_min"] else None,
                    pet=float(rec["pet"]) if rec["pet"] else None,
                    peak_level=label_to_level[rec["peak_level"]],
                    frame_count=int(rec.get("frame_count") or 0),
                )
            )
    return events


def cmd_thresholds(args: argparse.Namespace) -> int:
    started = _utcnow()
    cfg = _config_from_args(args)
    all_events = []
    for path in args.input:
        all_events.extend(_read_events_csv(path))
    # The threshold corpus is the set of conflict events: maximum MEI > 0.
    corpus = [e for e in all_events if e.mei_max is not None and e.mei_max > 0]
    if not corpus:
        raise EmptyInputError("no events with mei_max > 0; nothing to rank")
    table = build_threshold_table(corpus)
    if table.low_sample:
        print(
            f"warning: only {table.counts['events']} events; percentile thresholds are low-confidence",
            file=sys.stderr,
        )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "thresholds.csv").write_text(threshold_table_csv(table), encoding="utf-8")
    report = {
        "counts": table.counts,
        "low_sample": table.low_sample,
        "risk_levels": {
            "critical": sum(1 for e in corpus if e.peak_level >= RiskLevel.CRITICAL_CONFLICT),
            "potential": sum(1 for e in corpus if e.peak_level == RiskLevel.POTENTIAL_CONFLICT),
            "crash": sum(1 for e in corpus if e.peak_level == RiskLevel.CRASH),
            "non_conflict": sum(1 for e in corpus if e.peak_level == RiskLevel.NON_CONFLICT),
        },
    }
    (out_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_manifest(
        out_dir,
        args,
        cfg,
        started,
        counts={"events_in": len(all_events), "conflict_corpus": len(corpus)},
        outputs=["thresholds.csv", "report.json"],
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# filter-collisions
# ---------------------------------------------------------------------------


def _scenario_overlaps(scenario: Scenario) -> list[tuple[str, str, str, float]]:
    """(scenario_id, agent_a, agent_b, first_overlap_t) per overlapping pair."""
    removals = []
    for pair in _sorted_pairs(scenario):
        by_t = {s.t_dms: s for s in scenario.agents[pair[1]]}
        first = None
        for sa in scenario.agents[pair[0]]:
            sb = by_t.get(sa.t_dms)
            if sb is not None and sat_overlap(sa.box, sb.box):
                first = sa.t if first is None or sa.t < first else first
        if first is not None:
            removals.append((scenario.scenario_id, pair[0], pair[1], first))
    return removals


def cmd_filter_collisions(args: argparse.Namespace) -> int:
    started = _utcnow()
    cfg = _config_from_args(args)
    scenarios, _ = _load_scenarios(args)
    if not scenarios:
        raise EmptyInputError("no scenarios in input")

    jobs = max(1, args.jobs)
    if jobs > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_scenario_overlaps, scenarios))
    else:
        chunks = [_scenario_overlaps(s) for s in scenarios]

    removals = sorted(r for chunk in chunks for r in chunk)
    removed_ids = {r[0] for r in removals}
    kept = sorted(
        (s for s in scenarios if s.scenario_id not in removed_ids),
        key=lambda s: s.scenario_id,
    )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "cleaned.csv").write_text(serialize_canonical(kept), encoding="utf-8")
    _write_csv(
        out_dir / "removals.csv",
        ["scenario_id", "agent_a", "agent_b", "first_overlap_t"],
        [[sid, a, b, format_time(round(t * 1e4))] for sid, a, b, t in removals],
    )
    _write_manifest(
        out_dir,
        args,
        cfg,
        started,
        counts={"scenarios": len(scenarios), "kept": len(kept), "removed": len(removals)},
        outputs=["cleaned.csv", "removals.csv"],
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing / entry point
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser, needs_pet_grid: bool = True) -> None:
    parser.add_argument("--input", action="append", required=True, metavar="PATH",
                        help="input file (repeatable)")
    parser.add_argument("--format", choices=["canonical", "dataset"], default="canonical")
    parser.add_argument("--d-safe", dest="d_safe", type=float, default=0.0,
                        help="safety-region corner radius in meters (default 0)")
    parser.add_argument("--tem-star", dest="tem_star", type=float, default=3.0,
                        help="critical-conflict TEM threshold in seconds (default 3)")
    parser.add_argument("--q", choices=["approach_distance", "always_true"],
                        default="approach_distance", help="conflict predicate")
    parser.add_argument("--mei-cap", dest="mei_cap", type=float, default=None,
                        help="optional clamp on reported MEI values")
    parser.add_argument("--pet-grid", dest="pet_grid", type=float, default=0.1,
                        help="conflict-zone raster resolution in meters (default 0.1)")
    parser.add_argument("--out", required=True, metavar="DIR", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel scenario workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conflictmetrics",
        description="Two-agent conflict criticality metrics and risk classification",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_frames = sub.add_parser("frames", help="per-frame metric timeseries for one pair")
    _add_common(p_frames)
    p_frames.add_argument("--scenario", default=None, metavar="ID")
    p_frames.add_argument("--pair", default=None, metavar="A,B")
    p_frames.set_defaults(func=cmd_frames)

    p_events = sub.add_parser("events", help="per-(scenario, pair) aggregates")
    _add_common(p_events)
    p_events.set_defaults(func=cmd_events)

    p_thresh = sub.add_parser("thresholds", help="percentile thresholds from an event table")
    _add_common(p_thresh)
    p_thresh.set_defaults(func=cmd_thresholds)

    p_filter = sub.add_parser("filter-collisions", help="drop events with footprint overlap")
    _add_common(p_filter)
    p_filter.set_defaults(func=cmd_filter_collisions)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = list(argv) if argv is not None else sys.argv[1:]
    try:
        return args.func(args)
    except (SchemaError, UnsupportedFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except EmptyInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND


if __name__ == "__main__":
    sys.exit(main())
