"""Live session service: steps the engine in real time over a WebSocket.

One connection is one session. Client inputs are buffered to the next tick
boundary; the server never simulates ahead of or behind the engine, so a
recorded input stream replayed headlessly reproduces the live session's log
exactly. When the loop falls behind wall time it skips sending states, never
simulation ticks.

Protocol (JSON text frames, schema field "v"):
  client -> server: {"type": "start", "config": {...}} | {"type": "input",
                    "event": {...}} | {"type": "ping"}
  server -> client: {"type": "world", ...} | {"type": "state", ...} |
                    {"type": "error", "msg": ...}
"""

from __future__ import annotations

import asyncio
import json
import time
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .engine import EngineConfig, InputEvent, ScriptError, Session, save_script
from .world import WorldModel, WorldSpec, generate_world

WIRE_SCHEMA_VERSION = 1


class ServiceDefaults:
    def __init__(self, world: WorldModel | None = None, tick_rate: int = 30,
                 record_dir: str | None = None):
        self.world = world
        self.tick_rate = tick_rate
        self.record_dir = record_dir
        self._session_counter = 0

    def next_session_id(self) -> int:
        self._session_counter += 1
        return self._session_counter


def state_message(session: Session) -> dict:
    technique = session.technique
    rig = technique.rig
    preview = None
    if getattr(technique, "preview", None) is not None:
        preview = {"point": technique.preview.hit.point.to_tuple(),
                   "valid": technique.preview.valid}
    arc = [p.to_tuple() for p in getattr(technique, "last_arc", [])]
    report = {
        "aims_near": 0, "aims_medium": 0, "aims_long": 0,
        "aims_total": 0, "mode_switches": 0,
    }
    from .metrics import KIND_AIM, KIND_MODE_SWITCH, distance_bucket
    for rec in session.log.records:
        if rec.kind == KIND_AIM:
            report["aims_total"] += 1
            report[f"aims_{distance_bucket(rec.distance)}"] += 1
        elif rec.kind == KIND_MODE_SWITCH:
            report["mode_switches"] += 1
    return {
        "v": WIRE_SCHEMA_VERSION,
        "type": "state",
        "tick": session.tick,
        "t": session.sim_time(),
        "mode": technique.mode_label,
        "in_transition": technique.in_transition,
        "rig": {
            "position": rig.eye.position.to_tuple(),
            "yaw": rig.eye.yaw,
            "pitch": rig.eye.pitch,
            "scale": rig.scale,
            "eye_separation": rig.eye_separation,
        },
        "avatar": {
            "position": session.avatar.position.to_tuple(),
            "yaw": session.avatar.yaw,
            "running": session.avatar.running,
        },
        "path": [p.to_tuple() for p in session.avatar.path],
        "preview": preview,
        "arc": arc,
        "occluded": technique.occluded(),
        "targets_visited": session.targets_visited,
        "report": report,
    }


def world_message(world: WorldModel) -> dict:
    return {"v": WIRE_SCHEMA_VERSION, "type": "world",
            "world": world.to_dict(include_heights=True)}


def error_message(msg: str) -> dict:
    return {"v": WIRE_SCHEMA_VERSION, "type": "error", "msg": msg}


def create_app(defaults: ServiceDefaults | None = None) -> FastAPI:
    defaults = defaults or ServiceDefaults()
    app = FastAPI(title="overlook session service")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.websocket("/session")
    async def session_socket(ws: WebSocket):
        await ws.accept()
        inbox: asyncio.Queue = asyncio.Queue()

        async def reader():
            try:
                while True:
                    await inbox.put(await ws.receive_text())
            except WebSocketDisconnect:
                await inbox.put(None)
            except RuntimeError:
                await inbox.put(None)

        reader_task = asyncio.create_task(reader())
        session: Session | None = None
        recorded: list[InputEvent] = []
        stream_every = 1
        try:
            # wait for the start message
            while session is None:
                raw = await inbox.get()
                if raw is None:
                    return
                msg = _parse(raw)
                if msg.get("type") == "ping":
                    continue
                if msg.get("type") != "start":
                    await ws.send_json(error_message("expected a start message"))
                    return
                cfg_dict = dict(msg.get("config") or {})
                stream_every = max(int(cfg_dict.pop("stream_every", 1)), 1)
                cfg_dict.setdefault("tick_rate", defaults.tick_rate)
                config = EngineConfig.from_dict(cfg_dict)
                world = defaults.world or generate_world(
                    0, WorldSpec(extent_x=200.0, extent_z=200.0, path_length=500.0,
                                 target_count=3, tree_count=20, rock_count=6,
                                 hill_count=3))
                session = Session(world, config)
                await ws.send_json(world_message(world))

            dt = 1.0 / session.config.tick_rate
            next_deadline = time.monotonic() + dt
            while True:
                # drain inputs that arrived before this tick boundary
                pending: list[InputEvent] = []
                closed = False
                while True:
                    try:
                        raw = inbox.get_nowait()
                    except asyncio.QueueEmpty:
                        break
                    if raw is None:
                        closed = True
                        break
                    msg = _parse(raw)
                    if msg.get("type") == "ping":
                        continue
                    if msg.get("type") == "input":
                        ev = InputEvent.from_dict(
                            {**msg["event"], "tick": session.tick})
                        pending.append(ev)
                    elif msg.get("type") != "start":
                        raise ScriptError(f"unexpected message type {msg.get('type')!r}")
                if closed:
                    break
                recorded.extend(pending)
                session.step(pending)
                now = time.monotonic()
                late = now > next_deadline + dt
                if not late and (session.tick % stream_every == 0):
                    await ws.send_json(state_message(session))
                sleep_for = next_deadline - time.monotonic()
                next_deadline += dt
                if sleep_for > 0:
                    await asyncio.sleep(sleep_for)
        except (ScriptError, ValueError, KeyError, TypeError) as err:
            try:
                await ws.send_json(error_message(str(err)))
                await ws.close()
            except (RuntimeError, WebSocketDisconnect):
                pass
        except (WebSocketDisconnect, RuntimeError):
            # peer went away mid-send; the recording below still happens
            pass
        finally:
            reader_task.cancel()
            if session is not None and defaults.record_dir:
                _record(defaults, session, recorded)

    return app


def _parse(raw: str) -> dict:
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError as err:
        raise ScriptError(f"malformed message: {err}") from err
    if not isinstance(msg, dict):
        raise ScriptError("messages must be JSON objects")
    return msg


def _record(defaults: ServiceDefaults, session: Session,
            events: list[InputEvent]) -> None:
    out = Path(defaults.record_dir)
    out.mkdir(parents=True, exist_ok=True)
    sid = defaults.next_session_id()
    save_script(out / f"session_{sid}_script.jsonl", events)
    session.log.save(out / f"session_{sid}_events.jsonl")
    manifest = {"v": WIRE_SCHEMA_VERSION, "n_ticks": session.tick,
                "engine": session.config.to_dict()}
    with open(out / f"session_{sid}_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def serve(bind: str = "127.0.0.1:8000", tick_rate: int = 30,
          world: WorldModel | None = None, record_dir: str | None = None) -> None:
    """Run the service until interrupted."""
    import uvicorn
    host, _, port = bind.partition(":")
    app = create_app(ServiceDefaults(world=world, tick_rate=tick_rate,
                                     record_dir=record_dir))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000),
                log_level="warning")
