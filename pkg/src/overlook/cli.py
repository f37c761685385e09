"""Command line interface.

Subcommands:
  gen-world   generate a deterministic course world and write it to JSON
  run         run one scripted-agent (or replayed-script) session
  compare     run the full technique comparison over seeded worlds
  replay      re-run a recorded session and verify its event log
  serve       host live interactive sessions over a WebSocket
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import EngineConfig, Session, load_script, run_script, save_script
from .experiment import (ExperimentConfig, make_policy, run_experiment,
                         run_policy_session)
from .metrics import REPORT_SCHEMA_VERSION, SessionReport, summarize, write_session_csv
from .world import WorldModel, WorldSpec, generate_world


def _add_world_spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--extent", type=float, default=800.0, help="world side length (m)")
    p.add_argument("--path-length", type=float, default=2160.0)
    p.add_argument("--targets", type=int, default=7)
    p.add_argument("--target-spacing", type=float, default=None,
                   help="meters between targets along the path (default: even)")
    p.add_argument("--cell-size", type=float, default=1.0)


def _spec_from_args(args) -> WorldSpec:
    return WorldSpec(extent_x=args.extent, extent_z=args.extent,
                     cell_size=args.cell_size, path_length=args.path_length,
                     target_count=args.targets, target_spacing=args.target_spacing)


def _load_world(args) -> WorldModel:
    if args.world:
        return WorldModel.load(args.world)
    return generate_world(args.seed, _spec_from_args(args))


def cmd_gen_world(args) -> int:
    world = generate_world(args.seed, _spec_from_args(args))
    world.save(args.out, include_heights=args.full)
    print(f"world seed={args.seed} targets={len(world.targets)} "
          f"path={args.path_length:.0f} m -> {args.out}")
    if args.preview:
        from .report import render_world_figure
        render_world_figure(world, args.preview)
        print(f"preview -> {args.preview}")
    return 0


def cmd_run(args) -> int:
    world = _load_world(args)
    config = EngineConfig(technique=args.technique, tick_rate=args.tick_rate)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.script:
        session = Session(world, config)
        events = load_script(args.script)
        run_script(session, events, n_ticks=args.ticks)
        ok = True
        error = ""
    else:
        policy = make_policy(args.technique)
        session, events = run_policy_session(world, config, policy)
        ok = (not policy.failed) and session.quest_complete
        error = policy.failure_reason or ""
        save_script(out / "script.jsonl", events)
    session.log.save(out / "events.jsonl")
    report = summarize(session.log,
                       avatar_virtual_m=session.avatar.distance_walked_virtual,
                       comfort_peak_flow=session.comfort_peak)
    row = {"v": REPORT_SCHEMA_VERSION, "seed": args.seed,
           "technique": args.technique, "repetition": 0,
           "status": "ok" if ok else "failed", "error": error}
    row.update({k: getattr(report, k) for k in SessionReport.csv_columns()})
    write_session_csv(out / "session.csv", [row])
    print(f"{args.technique}: playtime={report.playtime_s:.1f} s "
          f"aims={report.aims_total} switches={report.mode_switches} "
          f"status={'ok' if ok else 'FAILED'}")
    return 0 if ok else 1


def cmd_compare(args) -> int:
    if args.config:
        config = ExperimentConfig.load(args.config)
    else:
        seeds = [int(s) for s in args.seeds.split(",")] if "," in args.seeds \
            else list(range(1, int(args.seeds) + 1))
        config = ExperimentConfig(seeds=seeds,
                                  techniques=args.techniques.split(","),
                                  repetitions=args.repetitions,
                                  world_spec=_spec_from_args(args),
                                  tick_rate=args.tick_rate)
    result = run_experiment(config, args.out, render_figures=not args.no_figures)
    for row in result.comparison_rows():
        print(f"{row['technique']:12s} sessions={row['sessions']} "
              f"failures={row['failures']} "
              f"playtime={row['mean_playtime_s']:.1f} s "
              f"aims={row['mean_aims_total']:.1f}")
    print(f"outputs -> {args.out}")
    if not result.all_ok:
        print("some sessions failed; see sessions.csv", file=sys.stderr)
        return 1
    return 0


def cmd_replay(args) -> int:
    manifest_path = Path(args.manifest)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    base = manifest_path.parent
    world_path = base / manifest["world"]
    if not world_path.exists():
        world_path = base.parent / manifest["world"]
    world = WorldModel.load(world_path)
    config = EngineConfig.from_dict(manifest["engine"])
    events = load_script(base / "script.jsonl")
    session = Session(world, config)
    run_script(session, events, n_ticks=manifest["n_ticks"])
    replayed = session.log.to_jsonl()
    recorded = (base / "events.jsonl").read_text()
    if replayed == recorded:
        print(f"replay ok: {session.tick} ticks, log identical")
        return 0
    print("replay MISMATCH: event log differs from the recording", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(replayed)
        print(f"replayed log -> {args.out}", file=sys.stderr)
    return 1


def cmd_serve(args) -> int:
    from .service import serve
    world = WorldModel.load(args.world) if args.world else None
    serve(bind=args.bind, tick_rate=args.tick_rate, world=world,
          record_dir=args.record_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="overlook", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-world", help="generate a course world")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--full", action="store_true",
                   help="embed the full heightmap instead of seed+spec")
    p.add_argument("--preview", default=None, help="also render a map PNG here")
    _add_world_spec_args(p)
    p.set_defaults(fn=cmd_gen_world)

    p = sub.add_parser("run", help="run a single session")
    p.add_argument("--technique", choices=("outstanding", "teleport"),
                   default="outstanding")
    p.add_argument("--world", default=None, help="world JSON (default: generated)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--script", default=None, help="input script to replay")
    p.add_argument("--ticks", type=int, default=None)
    p.add_argument("--tick-rate", type=int, default=30)
    p.add_argument("--out", required=True)
    _add_world_spec_args(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("compare", help="run the technique comparison")
    p.add_argument("--config", default=None, help="experiment config JSON")
    p.add_argument("--seeds", default="20",
                   help="count (N -> seeds 1..N) or comma-separated list")
    p.add_argument("--techniques", default="outstanding,teleport")
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--tick-rate", type=int, default=30)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    _add_world_spec_args(p)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("replay", help="re-run a recorded session and verify")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None, help="write the replayed log here on mismatch")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("serve", help="host live sessions over a WebSocket")
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--tick-rate", type=int, default=30)
    p.add_argument("--world", default=None)
    p.add_argument("--record-dir", default=None)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
