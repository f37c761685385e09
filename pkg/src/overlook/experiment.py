"""Experiment harness: run scripted agents over seeded worlds and compare.

Each (seed, technique, repetition) cell is one closed-loop session whose
input stream is recorded for replay. Outputs are deterministic: per-session
artifacts, a sessions CSV, a per-technique comparison CSV, and (optionally)
summary figures. Failed sessions are recorded and the run continues.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .engine import EngineConfig, InputEvent, Session, save_script
from .metrics import (REPORT_SCHEMA_VERSION, SessionReport, summarize,
                      write_comparison_csv, write_session_csv)
from .policies import (OutstandingTravelerParams, OutstandingTravelerPolicy,
                       TeleportChainParams, TeleportChainPolicy)
from .world import WorldModel, WorldSpec, generate_world

DEFAULT_SEEDS = list(range(1, 21))


class ExperimentError(ValueError):
    pass


def make_policy(technique: str, overrides: dict | None = None):
    overrides = overrides or {}
    if technique == "outstanding":
        return OutstandingTravelerPolicy(OutstandingTravelerParams(**overrides))
    if technique == "teleport":
        return TeleportChainPolicy(TeleportChainParams(**overrides))
    raise ExperimentError(f"no policy for technique {technique!r}")


@dataclass
class ExperimentConfig:
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    techniques: list[str] = field(default_factory=lambda: ["outstanding", "teleport"])
    repetitions: int = 1
    world_spec: WorldSpec = field(default_factory=WorldSpec)
    tick_rate: int = 30
    max_ticks: int = 200_000
    policy_overrides: dict = field(default_factory=dict)
    engine_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.seeds:
            raise ExperimentError("need at least one seed")
        if self.repetitions < 1:
            raise ExperimentError("repetitions must be at least 1")
        for t in self.techniques:
            if t not in ("outstanding", "teleport"):
                raise ExperimentError(f"unknown technique {t!r}")

    def engine_config(self, technique: str) -> EngineConfig:
        return EngineConfig(technique=technique, tick_rate=self.tick_rate,
                            **self.engine_overrides)

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "world_spec" in d:
            d["world_spec"] = WorldSpec(**d["world_spec"])
        return ExperimentConfig(**d)

    @staticmethod
    def load(path) -> "ExperimentConfig":
        with open(path) as fh:
            return ExperimentConfig.from_dict(json.load(fh))


@dataclass
class SessionResult:
    seed: int
    technique: str
    repetition: int
    ok: bool
    error: str | None
    report: SessionReport
    n_ticks: int
    events: list[InputEvent]
    comfort_series: list[float]

    def csv_row(self) -> dict:
        row = {"v": REPORT_SCHEMA_VERSION, "seed": self.seed,
               "technique": self.technique, "repetition": self.repetition,
               "status": "ok" if self.ok else "failed",
               "error": self.error or ""}
        for name in SessionReport.csv_columns():
            row[name] = getattr(self.report, name)
        return row


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    sessions: list[SessionResult]

    @property
    def all_ok(self) -> bool:
        return all(s.ok for s in self.sessions)

    def by_technique(self, technique: str) -> list[SessionResult]:
        return [s for s in self.sessions if s.technique == technique]

    def comparison_rows(self) -> list[dict]:
        rows = []
        for technique in self.config.techniques:
            cells = self.by_technique(technique)
            good = [c for c in cells if c.ok]
            def mean(getter):
                return sum(getter(c.report) for c in good) / len(good) if good else 0.0
            rows.append({
                "v": REPORT_SCHEMA_VERSION,
                "technique": technique,
                "sessions": len(cells),
                "failures": len(cells) - len(good),
                "mean_playtime_s": mean(lambda r: r.playtime_s),
                "mean_aims_total": mean(lambda r: r.aims_total),
                "mean_aims_near": mean(lambda r: r.aims_near),
                "mean_aims_medium": mean(lambda r: r.aims_medium),
                "mean_aims_long": mean(lambda r: r.aims_long),
                "mean_mode_switches": mean(lambda r: r.mode_switches),
                "mean_real_walk_total_m": mean(lambda r: r.real_walk_total_m),
                "mean_real_walk_tm_m": mean(lambda r: r.real_walk_tm_m),
                "mean_avatar_virtual_m": mean(lambda r: r.avatar_virtual_m),
            })
        return rows


def run_policy_session(world: WorldModel, config: EngineConfig, policy,
                       max_ticks: int = 200_000,
                       start=None) -> tuple[Session, list[InputEvent]]:
    """Drive one session closed-loop until the quest is done and the player
    is back in their body (or the policy fails / the tick budget runs out)."""
    session = Session(world, config, start=start)
    events: list[InputEvent] = []

    def settled() -> bool:
        return (session.quest_complete
                and session.technique.mode_label == "NM"
                and not session.technique.in_transition)

    while not settled() and not policy.failed and session.tick < max_ticks:
        tick_events = policy.events_for_tick(session)
        events.extend(tick_events)
        session.step(tick_events)
    return session, events


def run_experiment(config: ExperimentConfig, out_dir,
                   render_figures: bool = True) -> ExperimentResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sessions: list[SessionResult] = []

    for seed in config.seeds:
        world = generate_world(seed, config.world_spec)
        world_path = out / f"world_{seed}.json"
        world.save(world_path, include_heights=False)
        for technique in config.techniques:
            for rep in range(config.repetitions):
                engine_cfg = config.engine_config(technique)
                policy = make_policy(technique, config.policy_overrides.get(technique))
                session, events = run_policy_session(world, engine_cfg, policy,
                                                     max_ticks=config.max_ticks)
                ok = (not policy.failed) and session.quest_complete
                error = policy.failure_reason if policy.failed else (
                    None if ok else "tick budget exhausted before completion")
                report = summarize(session.log,
                                   avatar_virtual_m=session.avatar.distance_walked_virtual,
                                   comfort_peak_flow=session.comfort_peak)
                result = SessionResult(seed=seed, technique=technique, repetition=rep,
                                       ok=ok, error=error, report=report,
                                       n_ticks=session.tick, events=events,
                                       comfort_series=session.comfort_series)
                sessions.append(result)
                _write_session_artifacts(out, world_path.name, engine_cfg, result,
                                         session)

    result = ExperimentResult(config=config, sessions=sessions)
    write_session_csv(out / "sessions.csv", [s.csv_row() for s in result.sessions])
    write_comparison_csv(out / "comparison.csv", result.comparison_rows())
    if render_figures:
        from .report import render_experiment_figures
        render_experiment_figures(result, out)
    return result


def _write_session_artifacts(out: Path, world_file: str, engine_cfg: EngineConfig,
                             result: SessionResult, session: Session) -> None:
    cell = out / f"s{result.seed}_{result.technique}_r{result.repetition}"
    cell.mkdir(parents=True, exist_ok=True)
    save_script(cell / "script.jsonl", result.events)
    session.log.save(cell / "events.jsonl")
    manifest = {
        "v": REPORT_SCHEMA_VERSION,
        "world": world_file,
        "seed": result.seed,
        "technique": result.technique,
        "repetition": result.repetition,
        "n_ticks": result.n_ticks,
        "status": "ok" if result.ok else "failed",
        "engine": engine_cfg.to_dict(),
    }
    with open(cell / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(cell / "comfort.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tick", "flow_bodyheights_per_s"])
        for tick, flow in enumerate(result.comfort_series):
            if tick % 5 == 0:
                writer.writerow([tick, flow])
