"""Deterministic fixed-tick session loop.

A Session binds one world, one technique, one avatar and one event log and
evolves only through step(). Each tick applies the tick's input events, steps
the technique state machine, advances the avatar, then records metrics.
Identical (world, config, script) always produce identical logs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

from .avatar import Avatar
from .geometry import EYE_HEIGHT_BASE, IPD_BASE, TransitionParams, Vec3
from .metrics import (EventLog, KIND_ARRIVAL, KIND_MOVE, KIND_RELOCATION,
                      normalized_flow)
from .outstanding import OutstandingTechnique
from .teleport import TeleportConfig, TeleportTechnique
from .world import WorldModel

TECHNIQUES = ("outstanding", "teleport")
DEFAULT_TICK_RATE = 30
MAX_SESSION_TICKS = 400_000


class ScriptError(ValueError):
    """Malformed or out-of-order input script."""


@dataclass(frozen=True)
class InputEvent:
    """One scripted input: room movement, look, trigger, switch or run."""

    tick: int
    kind: str
    dx: float = 0.0
    dz: float = 0.0
    dyaw: float = 0.0
    dpitch: float = 0.0

    KINDS = ("move", "look", "trigger_press", "trigger_release",
             "switch_button", "run_toggle")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ScriptError(f"unknown input kind {self.kind!r}")
        if self.tick < 0:
            raise ScriptError("event tick must be non-negative")

    def to_dict(self) -> dict:
        d = {"tick": self.tick, "kind": self.kind}
        if self.kind == "move":
            d["dx"] = self.dx
            d["dz"] = self.dz
        elif self.kind == "look":
            d["dyaw"] = self.dyaw
            d["dpitch"] = self.dpitch
        return d

    @staticmethod
    def from_dict(d: dict) -> "InputEvent":
        return InputEvent(tick=int(d["tick"]), kind=d["kind"],
                          dx=float(d.get("dx", 0.0)), dz=float(d.get("dz", 0.0)),
                          dyaw=float(d.get("dyaw", 0.0)),
                          dpitch=float(d.get("dpitch", 0.0)))


def save_script(path, events: list[InputEvent]) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(json.dumps(ev.to_dict(), separators=(",", ":")) + "\n")


def load_script(path) -> list[InputEvent]:
    events = []
    with open(path) as fh:
        for index, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                events.append(InputEvent.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as err:
                raise ScriptError(f"script line {index}: {err}") from err
    for a, b in zip(events, events[1:]):
        if b.tick < a.tick:
            raise ScriptError(f"script ticks decrease at tick {b.tick}")
    return events


@dataclass
class EngineConfig:
    technique: str = "outstanding"
    tick_rate: int = DEFAULT_TICK_RATE
    seed: int = 0
    ipd_base: float = IPD_BASE
    eye_height_base: float = EYE_HEIGHT_BASE
    walk_speed: float = 4.0
    run_speed: float = 9.0
    transition_duration: float = 0.5
    tm_scale: float = 10.0
    view_angle_deg: float = 45.0
    horizontal_share: float = 0.5
    launch_speed: float = 20.0
    gravity: float = 9.81
    visit_radius: float = 2.0
    catch_up_enabled: bool = False
    catch_up_distance: float = 150.0
    room_size: float | None = None   # side of the physical walking area clamp

    def __post_init__(self):
        if self.technique not in TECHNIQUES:
            raise ValueError(f"technique must be one of {TECHNIQUES}")
        if self.tick_rate <= 0:
            raise ValueError("tick rate must be positive")

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate

    def transition_params(self) -> TransitionParams:
        return TransitionParams(duration=self.transition_duration,
                                tm_scale=self.tm_scale,
                                view_angle=math.radians(self.view_angle_deg),
                                horizontal_share=self.horizontal_share)

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "EngineConfig":
        known = {f.name for f in EngineConfig.__dataclass_fields__.values()}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return EngineConfig(**d)

    @staticmethod
    def load(path) -> "EngineConfig":
        with open(path) as fh:
            return EngineConfig.from_dict(json.load(fh))


class Session:
    """One playthrough: all evolution happens in tick order through step()."""

    def __init__(self, world: WorldModel, config: EngineConfig,
                 start: Vec3 | None = None):
        self.world = world
        self.config = config
        if start is None:
            if world.course:
                start = world.course[0]
            else:
                start = world.ground_point(world.size_x / 2, world.size_z / 2)
        self.avatar = Avatar(position=start, walk_speed=config.walk_speed,
                             run_speed=config.run_speed)
        self.log = EventLog(tick_rate=config.tick_rate, technique=config.technique)
        if config.technique == "outstanding":
            self.technique = OutstandingTechnique(
                world, self.avatar, params=config.transition_params(),
                ipd_base=config.ipd_base, eye_height_base=config.eye_height_base,
                catch_up_enabled=config.catch_up_enabled,
                catch_up_distance=config.catch_up_distance, log=self.log)
        else:
            self.technique = TeleportTechnique(
                world, self.avatar,
                config=TeleportConfig(v0=config.launch_speed, gravity=config.gravity),
                ipd_base=config.ipd_base, eye_height_base=config.eye_height_base,
                log=self.log)
        self.tick = 0
        self.physical_pos = (0.0, 0.0)
        self.targets_visited = 0
        self.comfort_peak = 0.0
        self.comfort_series: list[float] = []
        self._last_rig_pos = self.technique.rig.eye.position

    @property
    def rig(self):
        return self.technique.rig

    @property
    def quest_complete(self) -> bool:
        return bool(self.world.targets) and self.targets_visited >= len(self.world.targets)

    def sim_time(self) -> float:
        return self.tick / self.config.tick_rate

    def _apply_event(self, ev: InputEvent) -> None:
        if ev.kind == "move":
            dx, dz = ev.dx, ev.dz
            if self.config.room_size is not None:
                half = self.config.room_size / 2.0
                px, pz = self.physical_pos
                nx = min(max(px + dx, -half), half)
                nz = min(max(pz + dz, -half), half)
                dx, dz = nx - px, nz - pz
                self.physical_pos = (nx, nz)
            else:
                self.physical_pos = (self.physical_pos[0] + dx,
                                     self.physical_pos[1] + dz)
            moved = math.hypot(dx, dz)
            if moved > 0.0:
                self.technique.handle_move(dx, dz)
                self.log.append(self.tick, KIND_MOVE, self.technique.mode_label,
                                distance=moved)
        elif ev.kind == "look":
            self.technique.handle_look(ev.dyaw, ev.dpitch)
        elif ev.kind == "trigger_press":
            self.technique.press_trigger()
        elif ev.kind == "trigger_release":
            self.technique.release_trigger()
        elif ev.kind == "switch_button":
            self.technique.press_switch()
        elif ev.kind == "run_toggle":
            self.technique.toggle_run()

    def step(self, events: list[InputEvent] | None = None) -> None:
        """Advance exactly one tick of dt = 1/tick_rate."""
        events = events or []
        for ev in events:
            if ev.tick != self.tick:
                raise ScriptError(
                    f"event for tick {ev.tick} delivered at tick {self.tick}")
            self._apply_event(ev)
        dt = self.config.dt
        self.technique.tick(dt, self.tick)
        arrived = self.avatar.advance(dt, self.world)
        if arrived:
            self.log.append(self.tick, KIND_ARRIVAL, self.technique.mode_label)
        self._check_targets()
        rig_pos = self.technique.rig.eye.position
        # relocations are visual cuts, not motion: they contribute no flow
        relocated = False
        for r in reversed(self.log.records):
            if r.tick != self.tick:
                break
            if r.kind == KIND_RELOCATION:
                relocated = True
                break
        speed = 0.0 if relocated else rig_pos.distance_to(self._last_rig_pos) / dt
        flow = normalized_flow(speed, self.technique.rig.scale,
                               self.config.eye_height_base)
        self.comfort_series.append(flow)
        self.comfort_peak = max(self.comfort_peak, flow)
        self._last_rig_pos = rig_pos
        self.tick += 1
        self.log.n_ticks = self.tick

    def _check_targets(self) -> None:
        while self.targets_visited < len(self.world.targets):
            target = self.world.targets[self.targets_visited]
            if self.avatar.position.distance_to(target) <= self.config.visit_radius:
                self.targets_visited += 1
            else:
                break


def run_script(session: Session, events: list[InputEvent],
               n_ticks: int | None = None, stop_on_completion: bool = False,
               max_ticks: int = MAX_SESSION_TICKS) -> EventLog:
    """Replay a recorded input script deterministically.

    Runs through every event (ticks with no events still elapse), then keeps
    ticking until n_ticks when given, or until quest completion when
    stop_on_completion is set. Propagates ScriptError with the tick index.
    """
    for a, b in zip(events, events[1:]):
        if b.tick < a.tick:
            raise ScriptError(f"script ticks decrease at tick {b.tick}")
    queue = list(events)
    idx = 0
    while True:
        pending = []
        while idx < len(queue) and queue[idx].tick == session.tick:
            pending.append(queue[idx])
            idx += 1
        if idx < len(queue) and queue[idx].tick < session.tick:
            raise ScriptError(f"event for past tick {queue[idx].tick}")
        session.step(pending)
        if session.tick >= max_ticks:
            break
        if stop_on_completion and session.quest_complete:
            break
        if idx >= len(queue):
            if n_ticks is not None:
                if session.tick >= n_ticks:
                    break
            elif not (stop_on_completion and not session.quest_complete):
                break
    return session.log
