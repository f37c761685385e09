"""Interaction logging and session summaries.

Every session produces an append-only EventLog; all reported numbers derive
from it. Log files are line-delimited JSON with a leading meta record, and
per-session reports go to CSV, one row per session.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, fields

from .geometry import EYE_HEIGHT_BASE

LOG_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1

KIND_AIM = "aim"
KIND_MODE_SWITCH = "mode_switch"
KIND_RELOCATION = "relocation"
KIND_ARRIVAL = "arrival"
KIND_MOVE = "move"   # physical-input displacement, the real-walk stand-in

NEAR_LIMIT = 2.0     # room-scale reach
MEDIUM_LIMIT = 40.0  # practical single-arc ceiling


class EventLogParseError(ValueError):
    def __init__(self, index: int, message: str):
        super().__init__(f"record {index}: {message}")
        self.index = index


def distance_bucket(d: float) -> str:
    """near (<= 2 m), medium (2..40 m], or long (> 40 m)."""
    if d < 0.0 or not math.isfinite(d):
        raise ValueError(f"distance {d} must be a finite non-negative number")
    if d <= NEAR_LIMIT:
        return "near"
    if d <= MEDIUM_LIMIT:
        return "medium"
    return "long"


def normalized_flow(linear_speed: float, scale: float,
                    eye_height_base: float = EYE_HEIGHT_BASE) -> float:
    """Perceived ground flow in body heights per second.

    Dividing by the scaled body height is what makes equal self-relative
    motion score equally at any scale; a 10x giant moving 10x faster sees
    the same flow as the unscaled walker.
    """
    if scale < 1.0:
        raise ValueError("scale must be at least 1")
    return linear_speed / (scale * eye_height_base)


@dataclass(frozen=True)
class LogRecord:
    tick: int
    t: float
    kind: str
    mode: str                     # NM or TM (transitions count as destination)
    technique: str
    distance: float | None = None

    def to_dict(self) -> dict:
        d = {"v": LOG_SCHEMA_VERSION, "tick": self.tick, "t": self.t,
             "kind": self.kind, "mode": self.mode, "technique": self.technique}
        if self.distance is not None:
            d["distance"] = self.distance
        return d


class EventLog:
    """Ordered interaction records plus the session length they came from."""

    def __init__(self, tick_rate: float, technique: str):
        if tick_rate <= 0:
            raise ValueError("tick rate must be positive")
        self.tick_rate = float(tick_rate)
        self.technique = technique
        self.records: list[LogRecord] = []
        self.n_ticks = 0

    def append(self, tick: int, kind: str, mode: str, distance: float | None = None):
        if self.records and tick < self.records[-1].tick:
            raise ValueError("log ticks must be nondecreasing")
        if kind == KIND_AIM and (distance is None or distance < 0.0):
            raise ValueError("aim records need a non-negative distance")
        self.records.append(LogRecord(tick=tick, t=tick / self.tick_rate, kind=kind,
                                      mode=mode, technique=self.technique,
                                      distance=distance))

    def to_jsonl(self) -> str:
        meta = {"v": LOG_SCHEMA_VERSION, "kind": "meta", "tick_rate": self.tick_rate,
                "technique": self.technique, "n_ticks": self.n_ticks}
        lines = [json.dumps(meta, separators=(",", ":"))]
        lines += [json.dumps(r.to_dict(), separators=(",", ":")) for r in self.records]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())

    @staticmethod
    def from_jsonl(text: str) -> "EventLog":
        log = None
        for index, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as err:
                raise EventLogParseError(index, f"invalid JSON: {err}") from err
            if not isinstance(d, dict) or "kind" not in d:
                raise EventLogParseError(index, "record must be an object with a kind")
            if d["kind"] == "meta":
                log = EventLog(d["tick_rate"], d["technique"])
                log.n_ticks = int(d["n_ticks"])
                continue
            if log is None:
                raise EventLogParseError(index, "log must start with a meta record")
            try:
                log.append(int(d["tick"]), d["kind"], d["mode"], d.get("distance"))
            except (KeyError, TypeError, ValueError) as err:
                raise EventLogParseError(index, str(err)) from err
        if log is None:
            raise EventLogParseError(0, "empty log")
        return log

    @staticmethod
    def load(path) -> "EventLog":
        with open(path) as fh:
            return EventLog.from_jsonl(fh.read())


@dataclass
class SessionReport:
    playtime_s: float = 0.0
    nm_time_s: float = 0.0
    tm_time_s: float = 0.0
    aims_total: int = 0
    aims_near: int = 0
    aims_medium: int = 0
    aims_long: int = 0
    mode_switches: int = 0
    relocations: int = 0
    real_walk_total_m: float = 0.0
    real_walk_nm_m: float = 0.0
    real_walk_tm_m: float = 0.0
    avatar_virtual_m: float = 0.0
    comfort_peak_flow: float = 0.0

    @staticmethod
    def csv_columns() -> list[str]:
        return [f.name for f in fields(SessionReport)]

    def as_row(self) -> list:
        return [getattr(self, name) for name in self.csv_columns()]


def summarize(log: EventLog, tick_rate: float | None = None,
              avatar_virtual_m: float = 0.0,
              comfort_peak_flow: float = 0.0) -> SessionReport:
    """Deterministic aggregation of a log into a SessionReport.

    Mode residency comes from the switch records: time between a switch into
    TM and the next switch into NM counts as TM. Real-walk distances use each
    move record's own mode stamp, so reordering records within a tick cannot
    change any total.
    """
    rate = tick_rate if tick_rate is not None else log.tick_rate
    report = SessionReport(playtime_s=log.n_ticks / rate,
                           avatar_virtual_m=avatar_virtual_m,
                           comfort_peak_flow=comfort_peak_flow)

    switch_ticks: list[tuple[int, str]] = []
    for index, rec in enumerate(log.records):
        if rec.kind == KIND_AIM:
            if rec.distance is None:
                raise EventLogParseError(index, "aim record without distance")
            report.aims_total += 1
            bucket = distance_bucket(rec.distance)
            if bucket == "near":
                report.aims_near += 1
            elif bucket == "medium":
                report.aims_medium += 1
            else:
                report.aims_long += 1
        elif rec.kind == KIND_MODE_SWITCH:
            report.mode_switches += 1
            switch_ticks.append((rec.tick, rec.mode))
        elif rec.kind == KIND_RELOCATION:
            report.relocations += 1
        elif rec.kind == KIND_MOVE:
            d = rec.distance or 0.0
            report.real_walk_total_m += d
            if rec.mode == "TM":
                report.real_walk_tm_m += d
            else:
                report.real_walk_nm_m += d
        elif rec.kind != KIND_ARRIVAL:
            raise EventLogParseError(index, f"unknown record kind {rec.kind!r}")

    mode = "NM"
    prev_tick = 0
    tm_ticks = 0
    for tick, new_mode in sorted(switch_ticks):
        span = min(tick, log.n_ticks) - prev_tick
        if mode == "TM":
            tm_ticks += span
        prev_tick = min(tick, log.n_ticks)
        mode = new_mode
    if mode == "TM":
        tm_ticks += log.n_ticks - prev_tick
    report.tm_time_s = tm_ticks / rate
    report.nm_time_s = (log.n_ticks - tm_ticks) / rate
    return report


def write_session_csv(path, rows: list[dict]) -> None:
    """One row per session; leading columns identify it, the rest mirror
    SessionReport. Written deterministically (no timestamps, fixed order)."""
    head = ["v", "seed", "technique", "repetition", "status", "error"]
    columns = head + SessionReport.csv_columns()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(c, "") for c in columns])


def write_comparison_csv(path, rows: list[dict]) -> None:
    columns = ["v", "technique", "sessions", "failures", "mean_playtime_s",
               "mean_aims_total", "mean_aims_near", "mean_aims_medium",
               "mean_aims_long", "mean_mode_switches", "mean_real_walk_total_m",
               "mean_real_walk_tm_m", "mean_avatar_virtual_m"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(c, "") for c in columns])
