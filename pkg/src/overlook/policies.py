"""Deterministic scripted agents that drive a session toward its targets.

Policies are closed-loop: each tick they read the session state and emit the
input events for that tick, exactly as a player at the controls would. The
emitted stream is recorded so any run can be replayed open-loop.

Both agents walk physically to targets within room reach (the near range);
beyond that the teleport agent greedily chains the farthest valid arc landing
toward the target, while the perspective-switching agent rises, commits one
long travel, waits out the ride, and drops back into the body.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .engine import InputEvent, Session
from .geometry import Vec3, wrap_angle
from .teleport import invert_ballistics
from .world import WorldModel

PHYSICAL_WALK_SPEED = 1.4   # m/s of scripted room walking


def _look_toward(session: Session, direction: Vec3) -> InputEvent:
    """Look event rotating the rig onto the given unit view direction."""
    eye = session.technique.rig.eye
    yaw = math.atan2(direction.x, direction.z)
    pitch = -math.asin(min(max(direction.y, -1.0), 1.0))
    return InputEvent(tick=session.tick, kind="look",
                      dyaw=wrap_angle(yaw - eye.yaw), dpitch=pitch - eye.pitch)


def _walk_step(session: Session, target: Vec3, speed: float) -> InputEvent | None:
    """One tick of room walking toward the target; None when already there."""
    pos = session.avatar.position
    dx, dz = target.x - pos.x, target.z - pos.z
    d = math.hypot(dx, dz)
    if d < 1e-6:
        return None
    step = min(speed * session.config.dt, d)
    return InputEvent(tick=session.tick, kind="move",
                      dx=dx / d * step, dz=dz / d * step)


class PolicyBase:
    def __init__(self):
        self.failed = False
        self.failure_reason: str | None = None

    def _fail(self, reason: str) -> list[InputEvent]:
        self.failed = True
        self.failure_reason = reason
        return []

    def _current_target(self, session: Session) -> Vec3 | None:
        if session.targets_visited >= len(session.world.targets):
            return None
        return session.world.targets[session.targets_visited]

    def params_dict(self) -> dict:
        return asdict(self.params)


@dataclass
class TeleportChainParams:
    walk_threshold: float = 2.0        # room reach; closer targets are walked
    decision_interval: int = 15        # ticks between commits
    backoff_factor: float = 0.85
    min_progress: float = 0.25         # m of required horizontal gain per hop
    phys_speed: float = PHYSICAL_WALK_SPEED


class TeleportChainPolicy(PolicyBase):
    """Greedy arc chaining: commit the farthest valid landing toward the
    current target each decision step."""

    kind = "teleport_chain"

    def __init__(self, params: TeleportChainParams | None = None):
        super().__init__()
        self.params = params or TeleportChainParams()
        self._pressed = False
        self._cooldown = 0

    def _pick_landing(self, session: Session, target: Vec3) -> Vec3 | None:
        """Synthesize the aim direction for the farthest reachable landing.
        Works in desired-landing space and lets the engine's own arc decide
        where the projectile really strikes."""
        world: WorldModel = session.world
        avatar = session.avatar.position
        eye = Vec3(avatar.x, avatar.y + session.config.eye_height_base, avatar.z)
        v0 = session.config.launch_speed
        g = session.config.gravity
        flat_range = v0 * v0 / g
        dx, dz = target.x - avatar.x, target.z - avatar.z
        dist = math.hypot(dx, dz)
        if dist < 1e-9:
            return None
        ux, uz = dx / dist, dz / dist
        s = min(flat_range, dist)
        while s > 0.05:
            lx, lz = avatar.x + ux * s, avatar.z + uz * s
            if world.in_bounds(lx, lz):
                landing = world.ground_point(lx, lz)
                direction = invert_ballistics(eye, landing, v0, g)
                if direction is not None:
                    _, hit = world.parabolic_arc(eye, direction, v0=v0, g=g)
                    if hit is not None and hit.on_terrain and hit.navigable:
                        gain = ((hit.point.x - avatar.x) * ux
                                + (hit.point.z - avatar.z) * uz)
                        if gain >= min(self.params.min_progress, dist * 0.5):
                            return direction
            s *= self.params.backoff_factor
        return None

    def events_for_tick(self, session: Session) -> list[InputEvent]:
        if self.failed:
            return []
        target = self._current_target(session)
        if target is None:
            return []
        if self._pressed:
            self._pressed = False
            self._cooldown = self.params.decision_interval
            return [InputEvent(tick=session.tick, kind="trigger_release")]
        if self._cooldown > 0:
            self._cooldown -= 1
            return []
        d = session.avatar.position.distance_to(target)
        if d <= self.params.walk_threshold:
            ev = _walk_step(session, target, self.params.phys_speed)
            return [ev] if ev else []
        direction = self._pick_landing(session, target)
        if direction is None:
            return self._fail(
                f"no valid arc landing toward target {session.targets_visited}")
        self._pressed = True
        return [_look_toward(session, direction),
                InputEvent(tick=session.tick, kind="trigger_press")]


@dataclass
class OutstandingTravelerParams:
    switch_threshold: float = 40.0     # beyond this, rise and command the avatar
    use_run: bool = True
    decision_interval: int = 15
    phys_speed: float = PHYSICAL_WALK_SPEED


class OutstandingTravelerPolicy(PolicyBase):
    """Rise to travel mode for far targets, command a single long travel,
    wait for the avatar, then re-embody; walk for near targets."""

    kind = "outstanding_traveler"

    _IDLE, _ASCEND, _AIM, _RELEASE, _RIDE, _DESCEND = range(6)

    def __init__(self, params: OutstandingTravelerParams | None = None):
        super().__init__()
        self.params = params or OutstandingTravelerParams()
        self._state = self._IDLE
        self._run_sent = False
        self._wait = 0
        self._stalls = 0
        self._last_aim_pos: Vec3 | None = None

    def _aim_direction(self, session: Session, target: Vec3) -> Vec3 | None:
        """View direction whose ground hit is a valid travel commit.

        Aiming straight at the target can strike an occluding obstacle; in
        that case fall back to visible waypoints partway along the line, the
        way a player would stage a long travel."""
        world = session.world
        eye = session.technique.rig.eye.position
        avatar = session.avatar.position
        comp = world.nav_component(avatar.x, avatar.z)
        for f in (1.0, 0.7, 0.5, 0.35, 0.2):
            cx = avatar.x + (target.x - avatar.x) * f
            cz = avatar.z + (target.z - avatar.z) * f
            if not world.in_bounds(cx, cz):
                continue
            candidate = world.ground_point(cx, cz)
            direction = candidate - eye
            if direction.norm() < 1e-9:
                continue
            direction = direction.normalized()
            hit = world.ray_ground_intersect(eye, direction)
            if hit is None or not (hit.on_terrain and hit.navigable):
                continue
            if world.nav_component(hit.point.x, hit.point.z) != comp or comp == 0:
                continue
            gain = hit.point.distance_to(avatar)
            if gain >= 1.0 or f == 1.0:
                return direction
        return None

    def events_for_tick(self, session: Session) -> list[InputEvent]:
        if self.failed:
            return []
        technique = session.technique
        target = self._current_target(session)
        if target is None:
            if technique.mode_label == "TM" and not technique.in_transition:
                self._state = self._DESCEND
                return [InputEvent(tick=session.tick, kind="switch_button")]
            return []

        if not self._run_sent and self.params.use_run:
            self._run_sent = True
            return [InputEvent(tick=session.tick, kind="run_toggle")]

        if self._state == self._IDLE:
            d = session.avatar.position.distance_to(target)
            if d <= self.params.switch_threshold:
                ev = _walk_step(session, target, self.params.phys_speed)
                return [ev] if ev else []
            self._state = self._ASCEND
            return [InputEvent(tick=session.tick, kind="switch_button")]

        if self._state == self._ASCEND:
            if not technique.in_transition:
                self._state = self._AIM
            return []

        if self._state == self._AIM:
            pos = session.avatar.position
            if self._last_aim_pos is not None and pos.distance_to(self._last_aim_pos) < 0.5:
                self._stalls += 1
                if self._stalls > 8:
                    return self._fail(
                        f"no progress toward target {session.targets_visited}")
            else:
                self._stalls = 0
            self._last_aim_pos = pos
            direction = self._aim_direction(session, target)
            if direction is None:
                return self._fail(
                    f"no valid travel aim toward target {session.targets_visited}")
            self._state = self._RELEASE
            return [_look_toward(session, direction),
                    InputEvent(tick=session.tick, kind="trigger_press")]

        if self._state == self._RELEASE:
            self._state = self._RIDE
            self._wait = self.params.decision_interval
            return [InputEvent(tick=session.tick, kind="trigger_release")]

        if self._state == self._RIDE:
            if session.avatar.has_path():
                return []
            if self._wait > 0:
                self._wait -= 1
                return []
            # ride over: either the target is reached and we descend, or the
            # commit fell short (ray clipped a ridge) and we aim again
            if self._current_target(session) is not target:
                self._state = self._DESCEND
                return [InputEvent(tick=session.tick, kind="switch_button")]
            if technique.mode_label != "TM":
                return self._fail("lost travel mode while riding")
            d = session.avatar.position.distance_to(target)
            if d <= self.params.switch_threshold:
                self._state = self._DESCEND
                return [InputEvent(tick=session.tick, kind="switch_button")]
            self._state = self._AIM
            return []

        if self._state == self._DESCEND:
            if technique.in_transition:
                return []
            self._state = self._IDLE
            return []

        return []
