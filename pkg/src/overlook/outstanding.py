"""State machine for the perspective-switching travel technique.

Four phases: NM (first person, scale 1, rig locked to the avatar's head),
an uninterruptible upward transition, TM (scaled bird's-eye rig, decoupled
from the avatar), and the downward transition back into the body. In TM the
player aims travel targets with a straight ray and the avatar walks there on
its own; physical room motion moves the scaled viewpoint by tm_scale.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .avatar import Avatar, plan_path
from .geometry import (EYE_HEIGHT_BASE, Pose, RigState, TransitionParams, Vec3,
                       tm_pose_from_nm, transition_sample, wrap_angle)
from .metrics import EventLog, KIND_AIM, KIND_MODE_SWITCH, KIND_RELOCATION
from .world import GroundHit, WorldModel


class TechniqueStateError(RuntimeError):
    """Operation attempted in the wrong mode; the state is left unchanged."""


class Phase(enum.Enum):
    NM = "NM"
    TRANSITION_UP = "up"
    TM = "TM"
    TRANSITION_DOWN = "down"


@dataclass
class AimPreview:
    hit: GroundHit
    valid: bool


class OutstandingTechnique:
    """Owns the rig and the NM/TM mode graph for one session."""

    name = "outstanding"

    def __init__(self, world: WorldModel, avatar: Avatar,
                 params: TransitionParams | None = None,
                 ipd_base: float = 0.064,
                 eye_height_base: float = EYE_HEIGHT_BASE,
                 catch_up_enabled: bool = False,
                 catch_up_distance: float = 150.0,
                 log: EventLog | None = None):
        self.world = world
        self.avatar = avatar
        self.params = params or TransitionParams()
        self.ipd_base = ipd_base
        self.eye_height_base = eye_height_base
        self.catch_up_enabled = catch_up_enabled
        self.catch_up_distance = catch_up_distance
        self.log = log
        self.phase = Phase.NM
        self.rig = self._first_person_rig()
        self.nm_anchor: Pose | None = None
        self.tm_anchor: RigState | None = None
        self.transition_from: RigState | None = None
        self.transition_ticks = 0
        self.elapsed_dt = 0.0
        self.aiming = False
        self.preview: AimPreview | None = None
        self.diagnostics: list[str] = []
        self._tick = 0

    # -- helpers --------------------------------------------------------------

    def _first_person_rig(self, yaw: float | None = None, pitch: float = 0.0) -> RigState:
        eye = Vec3(self.avatar.position.x,
                   self.avatar.position.y + self.eye_height_base,
                   self.avatar.position.z)
        return RigState.first_person(eye, yaw=self.avatar.yaw if yaw is None else yaw,
                                     pitch=pitch, ipd_base=self.ipd_base)

    @property
    def mode_label(self) -> str:
        """NM or TM; transitions report their destination."""
        return "TM" if self.phase in (Phase.TM, Phase.TRANSITION_UP) else "NM"

    @property
    def in_transition(self) -> bool:
        return self.phase in (Phase.TRANSITION_UP, Phase.TRANSITION_DOWN)

    def _log(self, kind: str, distance: float | None = None) -> None:
        if self.log is not None:
            self.log.append(self._tick, kind, self.mode_label, distance)

    def _reject(self, message: str) -> None:
        self.diagnostics.append(message)
        raise TechniqueStateError(message)

    # -- inputs ---------------------------------------------------------------

    def handle_look(self, dyaw: float, dpitch: float) -> None:
        if self.in_transition:
            return
        eye = self.rig.eye
        pitch = min(max(eye.pitch + dpitch, -math.pi / 2), math.pi / 2)
        self.rig = self.rig.with_eye(Pose(eye.position, wrap_angle(eye.yaw + dyaw), pitch))
        if self.phase is Phase.NM:
            self.avatar.yaw = self.rig.eye.yaw

    def handle_move(self, dx: float, dz: float) -> None:
        """Physical room displacement. 1:1 in NM (and moves the avatar with
        the rig); multiplied by tm_scale in TM."""
        if self.in_transition:
            return
        if self.phase is Phase.NM:
            self.avatar.move_physically(dx, dz, self.world)
            self.rig = self._first_person_rig(yaw=self.rig.eye.yaw,
                                              pitch=self.rig.eye.pitch)
        else:
            k = self.params.tm_scale
            eye = self.rig.eye
            nx = min(max(eye.position.x + dx * k, 0.0), self.world.size_x)
            nz = min(max(eye.position.z + dz * k, 0.0), self.world.size_z)
            pos = Vec3(nx, eye.position.y, nz)
            self.rig = self.rig.with_eye(Pose(pos, eye.yaw, eye.pitch))

    def begin_switch_up(self) -> None:
        if self.phase is not Phase.NM:
            self._reject(f"switch up requires NM, not {self.phase.value}")
        self.nm_anchor = self.rig.eye
        self.tm_anchor = tm_pose_from_nm(self.rig, self.avatar.position,
                                         self.params, self.eye_height_base)
        self.transition_from = self.rig
        self.transition_ticks = 0
        self.elapsed_dt = 0.0
        self.phase = Phase.TRANSITION_UP
        self.aiming = False
        self.preview = None
        self._log(KIND_MODE_SWITCH)

    def begin_switch_down(self) -> None:
        if self.phase is not Phase.TM:
            self._reject(f"switch down requires TM, not {self.phase.value}")
        self.transition_from = self.rig
        self.transition_ticks = 0
        self.elapsed_dt = 0.0
        self.phase = Phase.TRANSITION_DOWN
        self.aiming = False
        self.preview = None
        self._log(KIND_MODE_SWITCH)

    def press_switch(self) -> None:
        """Switch button: up from NM, down from TM; ignored mid-transition."""
        if self.phase is Phase.NM:
            self.begin_switch_up()
        elif self.phase is Phase.TM:
            self.begin_switch_down()
        else:
            self.diagnostics.append("switch pressed mid-transition; ignored")

    def press_trigger(self) -> None:
        if self.phase is Phase.TM:
            self.aiming = True

    def release_trigger(self) -> None:
        if self.phase is not Phase.TM:
            self.aiming = False
            return
        if self.preview is not None and self.preview.valid:
            try:
                self.commit_travel_target()
            except TechniqueStateError:
                pass
        self.aiming = False
        self.preview = None

    def set_speed_mode(self, run: bool) -> None:
        self.avatar.running = run

    def toggle_run(self) -> None:
        self.avatar.running = not self.avatar.running

    # -- aiming ---------------------------------------------------------------

    def aim_travel_target(self) -> AimPreview | None:
        """Straight-ray ground pick from the rig eye; valid only when the hit
        is walkable and connected to the avatar's navigable region."""
        if self.phase is not Phase.TM:
            self._reject("travel aiming requires TM")
        hit = self.world.ray_ground_intersect(self.rig.eye.position,
                                              self.rig.eye.forward())
        if hit is None:
            self.preview = None
            return None
        valid = (hit.on_terrain and hit.navigable
                 and self.world.nav_component(hit.point.x, hit.point.z)
                 == self.world.nav_component(self.avatar.position.x,
                                             self.avatar.position.z) != 0)
        self.preview = AimPreview(hit=hit, valid=valid)
        return self.preview

    def commit_travel_target(self) -> list[Vec3]:
        """Send the avatar to the previewed point; exactly one aim op is
        logged per commit and the rig does not move."""
        if self.phase is not Phase.TM:
            self._reject("travel commit requires TM")
        if self.preview is None or not self.preview.valid:
            self._reject("no valid travel target aimed")
        target = self.preview.hit.point
        path = plan_path(self.world, self.avatar.position, target)
        if path is None:
            self._reject("aimed target is unreachable")
        self.avatar.set_path(path)
        self._log(KIND_AIM, distance=self.avatar.position.distance_to(target))
        return path

    # -- per-tick update -------------------------------------------------------

    def tick(self, dt: float, tick_index: int) -> None:
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        self._tick = tick_index
        if self.phase is Phase.NM:
            # stay locked to the (possibly walking) avatar's head
            self.rig = self._first_person_rig(yaw=self.rig.eye.yaw,
                                              pitch=self.rig.eye.pitch)
            return
        if self.phase is Phase.TM:
            if self.aiming:
                self.aim_travel_target()
            if self.catch_up_enabled:
                horiz = math.hypot(self.rig.eye.position.x - self.avatar.position.x,
                                   self.rig.eye.position.z - self.avatar.position.z)
                if horiz > self.catch_up_distance:
                    self.catch_up()
            return

        self.transition_ticks += 1
        self.elapsed_dt = dt
        t_raw = self.transition_ticks * dt
        done = t_raw >= self.params.duration - 1e-9
        t = min(t_raw / self.params.duration, 1.0)
        if self.phase is Phase.TRANSITION_UP:
            target = self.tm_anchor
        else:
            # the avatar keeps walking during the descent, so re-aim the
            # landing at its live head pose every tick
            target = self._first_person_rig(yaw=self.transition_from.eye.yaw,
                                            pitch=0.0)
        if done:
            self.rig = target
            self.phase = Phase.TM if self.phase is Phase.TRANSITION_UP else Phase.NM
            if self.phase is Phase.NM:
                self.avatar.clear_path()
                self.avatar.yaw = self.rig.eye.yaw
            self.transition_from = None
            self.transition_ticks = 0
        else:
            self.rig = transition_sample(self.transition_from, target, t, self.params)

    def transition_progress(self) -> float | None:
        if not self.in_transition:
            return None
        return min(self.transition_ticks * self.elapsed_dt / self.params.duration, 1.0)

    def catch_up(self) -> None:
        """Optional instant TM hop to the standard viewpoint above the avatar.
        Off by default; rapid artificial relocations are exactly what the
        smooth transition exists to avoid, so use sparingly."""
        if self.phase is not Phase.TM:
            self._reject("catch up requires TM")
        before = self.rig.eye.position
        nm_like = RigState.first_person(
            Vec3(self.avatar.position.x,
                 self.avatar.position.y + self.eye_height_base,
                 self.avatar.position.z),
            yaw=self.rig.eye.yaw, ipd_base=self.ipd_base)
        self.rig = tm_pose_from_nm(nm_like, self.avatar.position, self.params,
                                   self.eye_height_base)
        self._log(KIND_RELOCATION, distance=before.distance_to(self.rig.eye.position))

    def occluded(self) -> bool:
        """Avatar-visibility check for HUD warnings (detection only)."""
        if self.phase is not Phase.TM:
            return False
        head = Vec3(self.avatar.position.x,
                    self.avatar.position.y + self.eye_height_base,
                    self.avatar.position.z)
        eye = self.rig.eye.position
        if not self.world.in_bounds(eye.x, eye.z):
            return False
        return self.world.occlusion_test(eye, head)
